"""Configurable-program-analysis engine: components, reached-set algorithm,
ARG bookkeeping, and the refinement loop."""

from minicpa.engine.algorithm import (
    Exhausted, Exploration, Limits, LimitHit, TargetReached, cpa_algorithm,
)
from minicpa.engine.arg import (
    Arg, ArgNode, ErrorPath, export_arg_dot, extract_error_path,
)
from minicpa.engine.assemble import assemble_composite
from minicpa.engine.cegar import (
    Feasible, PrecisionIncrement, Pruned, Unconfirmed, Verdict, cegar_loop,
)
from minicpa.engine.core import (
    BREAK, CONTINUE, CallstackCpa, CompositeCpa, CompositeState, Cpa,
    LocationCpa, SpecCpa,
)

__all__ = [
    "Arg", "ArgNode", "BREAK", "CONTINUE", "CallstackCpa", "CompositeCpa",
    "CompositeState", "Cpa", "ErrorPath", "Exhausted", "Exploration",
    "Feasible", "Limits", "LimitHit", "LocationCpa", "PrecisionIncrement",
    "SpecCpa", "TargetReached", "Verdict", "assemble_composite",
    "Pruned", "Unconfirmed",
    "cegar_loop", "cpa_algorithm", "export_arg_dot", "extract_error_path",
]

"""Control-flow automata: construction, instrumentation, interpretation."""

from minicpa.cfa.model import (
    AssignEdge, AssumeEdge, CallEdge, Cfa, DeclEdge, Edge, ExternalCallEdge,
    FunctionReturnEdge, LabelEdge, Location, NondetEdge, NoopEdge, ReturnEdge,
)
from minicpa.cfa.build import build_cfa
from minicpa.cfa.instrument import instrument_overflow, instrument_termination
from minicpa.cfa.interpret import (
    InputExhausted, ReachedTarget, StepLimitExceeded, Terminated,
    concrete_execute,
)
from minicpa.cfa.dot import export_dot

__all__ = [
    "AssignEdge", "AssumeEdge", "CallEdge", "Cfa", "DeclEdge", "Edge",
    "ExternalCallEdge", "FunctionReturnEdge", "LabelEdge", "Location",
    "NondetEdge", "NoopEdge", "ReturnEdge", "build_cfa",
    "instrument_overflow", "instrument_termination", "concrete_execute",
    "ReachedTarget", "Terminated", "StepLimitExceeded", "InputExhausted",
    "export_dot",
]

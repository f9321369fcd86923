"""Build a composite CPA from the `CompositeCPA.cpas` configuration key."""

from __future__ import annotations

from minicpa.cfa.model import Cfa
from minicpa.engine.core import CallstackCpa, CompositeCpa, LocationCpa, SpecCpa
from minicpa.errors import UnknownCpaName
from minicpa.specs import SpecAutomaton


def _domain_factory(name: str):
    if name == "value":
        from minicpa.value import make_cpa
        return make_cpa
    if name == "intervals":
        from minicpa.intervals import make_cpa
        return make_cpa
    if name == "symbolic":
        from minicpa.symexec import make_cpa
        return make_cpa
    if name == "predicate":
        from minicpa.predicate import make_cpa
        return make_cpa
    if name == "loopbound":
        from minicpa.bmc import make_loopbound_cpa
        return make_loopbound_cpa
    return None


def assemble_composite(config, cfa: Cfa, spec: SpecAutomaton) -> CompositeCpa:
    """Instantiate the component list named by `CompositeCPA.cpas`.

    The first three entries are conventionally location, callstack, spec;
    domain components follow in the configured order.
    """
    raw = config.get("CompositeCPA.cpas", "")
    names = [n.strip() for n in str(raw).split(",") if n.strip()]
    if not names:
        raise UnknownCpaName("CompositeCPA.cpas names no components")
    components = []
    for name in names:
        if name == "location":
            components.append(LocationCpa())
        elif name == "callstack":
            components.append(CallstackCpa())
        elif name == "spec":
            components.append(SpecCpa(spec))
        else:
            factory = _domain_factory(name)
            if factory is None:
                raise UnknownCpaName(f"unknown CPA component: {name}")
            components.append(factory(config))
    stop_enabled = str(config.get("analysis.stopOperator", "sep")) != "never"
    return CompositeCpa(components, stop_enabled=stop_enabled)

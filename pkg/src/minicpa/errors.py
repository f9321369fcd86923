"""Exception types shared across the verifier."""

from __future__ import annotations


class VerifierError(Exception):
    """Base class for all errors raised by minicpa."""


class FrontendError(VerifierError):
    """Base class for lexing/parsing/type errors. Carries a source position."""

    def __init__(self, message: str, position=None):
        self.position = position
        if position is not None:
            message = f"{position}: {message}"
        super().__init__(message)


class MiniCSyntaxError(FrontendError):
    """Malformed input that is recognizably C but not parseable."""


class UnsupportedFeature(FrontendError):
    """Input uses a C feature outside the supported subset."""

    def __init__(self, feature: str, position=None):
        self.feature = feature
        super().__init__(f"unsupported feature: {feature}", position)


class TypeCheckError(FrontendError):
    """Static semantics violation (bad operand types, arity, ...)."""


class UndeclaredVariable(TypeCheckError):
    def __init__(self, name: str, position=None):
        self.name = name
        super().__init__(f"use of undeclared variable '{name}'", position)


class ConfigError(VerifierError):
    """Invalid configuration file, key, or value."""


class UnknownConfiguration(ConfigError):
    """Requested analysis configuration does not exist or is out of scope."""


class UnknownCpaName(ConfigError):
    """`CompositeCPA.cpas` names a component that is not registered."""


class SpecSyntaxError(VerifierError):
    """Malformed specification automaton."""

    def __init__(self, message: str, position=None):
        self.position = position
        if position is not None:
            message = f"{position}: {message}"
        super().__init__(message)


class NoLoops(VerifierError):
    """Termination instrumentation requested for a program without loops."""


class InputExhausted(VerifierError):
    """Concrete execution ran out of nondet input values."""


class UnknownSpecification(VerifierError):
    """Specification name/property not recognized."""


class SolverFailure(VerifierError):
    """SMT solver subprocess died, answered garbage, or cannot start."""


class EncodingError(VerifierError):
    """CFA edge/expression cannot be encoded as an SMT formula."""


class RefinementStall(VerifierError):
    """CEGAR refinement made no progress; analysis must give up."""


class WitnessError(VerifierError):
    """Base class for witness import/export problems."""


class WitnessFormatError(WitnessError):
    """Witness file does not parse / misses required fields."""


class MetadataMismatch(WitnessError):
    """Witness metadata (file hash, ...) contradicts the verification task."""


class UnresolvedLocation(WitnessError):
    """Witness references a source location with no matching CFA node."""


class InvariantParseError(WitnessError):
    """Witness invariant/assumption is not a valid mini-C expression."""

"""Exception hierarchy shared by every circfuzz subsystem."""

from __future__ import annotations


class CircfuzzError(Exception):
    """Base class for all errors raised by circfuzz."""


class ConfigError(CircfuzzError):
    """Invalid configuration: bad modulus, mismatched fields, missing paths."""


class InversionOfZeroError(CircfuzzError, ZeroDivisionError):
    pass


class InputError(CircfuzzError):
    """Public inputs do not match the circuit's declared inputs."""


class CircuitError(CircfuzzError):
    """Ill-formed circuit or witness program."""


class RankError(CircuitError):
    """An expression used in a constraint cannot be lowered to rank-1 form."""


class ParseError(CircfuzzError):
    """Syntax error; ``offset`` is a byte offset or a document path."""

    def __init__(self, message: str, offset: int | str | None = None):
        self.offset = offset
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"{message}{where}")


class UnsupportedFeatureError(ParseError):
    def __init__(self, construct: str, offset: int | None = None):
        self.construct = construct
        super().__init__(f"unsupported regex construct: {construct}", offset)


class ResourceError(CircfuzzError):
    """A configured size cap (DFA states, input length) was exceeded."""


class GrammarError(CircfuzzError):
    """BNF grammar failed to load or validate."""


class PlanError(CircfuzzError):
    """A witness mutation plan is not applicable to the circuit."""


class EvaluatorError(CircfuzzError):
    """An observation lacks the fields its pipeline requires."""


class MergeError(CircfuzzError):
    """Coverage maps with incompatible key spaces were merged."""


class ReferenceMatcherError(CircfuzzError):
    """External reference matcher failed or timed out."""

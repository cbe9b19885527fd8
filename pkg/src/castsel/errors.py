"""Typed error hierarchy.

Every externally observable failure mode gets its own class so callers and
tests can match on the condition rather than on message text.
"""


class CastselError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(CastselError):
    """A feature file violates the binary format contract."""


class BadMagic(FormatError):
    """File does not start with the expected magic bytes."""


class BadVersion(FormatError):
    """File declares an unsupported format version."""


class Truncated(FormatError):
    """File ends before the declared header/id-table/payload is complete."""


class NonFiniteEntry(FormatError):
    """Payload contains NaN or infinity."""


class SampleCountMismatch(CastselError):
    """Two feature matrices that must be paired have different row counts."""


class IdMismatch(CastselError):
    """Two feature matrices disagree on sample ids at some position."""


class TooFewSamples(CastselError):
    """Not enough samples for the requested neighbor count."""


class ShapeMismatch(CastselError):
    """Array arguments have incompatible shapes."""


class KOutOfRange(CastselError):
    """Requested coreset size is outside [1, n_samples]."""


class Infeasible(CastselError):
    """Assignment problem has more proxies than candidate samples."""


class EmptySet(CastselError):
    """A point-set argument that must be nonempty is empty."""


class ConfigError(CastselError):
    """Configuration file or override cannot be parsed or validated."""


class NonFiniteLoss(CastselError):
    """Optimization produced NaN/inf; aborted at the offending step."""

    def __init__(self, step: int, detail: str = ""):
        self.step = step
        msg = f"non-finite loss at step {step}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class InternalError(CastselError):
    """Invariant violation that indicates a bug, not bad input."""

"""Exception hierarchy shared by all modules."""


class SemepredError(Exception):
    """Base class for every error raised by this package."""


class ParseError(SemepredError):
    """An input file violates its format; message carries the line number."""


class ValidationError(SemepredError):
    """Data is well-formed but violates a structural invariant."""


class ConfigError(SemepredError):
    """A configuration value is unknown, malformed, or out of range."""


class ContractError(SemepredError):
    """A caller violated a documented precondition."""


class UnknownIdError(SemepredError, KeyError):
    """A node or relation id is absent from the queried structure."""


class CoverageError(SemepredError):
    """A target synset is not covered by the model being asked to score it."""


class SamplingError(SemepredError):
    """Negative sampling exhausted its resample budget."""


class TrainingError(SemepredError):
    """Optimization diverged or otherwise failed at runtime."""

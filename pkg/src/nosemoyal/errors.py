"""Exception hierarchy shared by all modules."""


class PhaseSpaceError(Exception):
    """Base class for every error raised by :mod:`nosemoyal`."""


class GridError(PhaseSpaceError, ValueError):
    """Incompatible, malformed or unknown grid / axis."""


class NormalizationError(PhaseSpaceError, ValueError):
    """Input state is not normalized."""


class DegenerateFieldError(PhaseSpaceError, ValueError):
    """A field whose integral vanishes cannot be renormalized."""


class HbarMismatch(PhaseSpaceError, ValueError):
    """A Wigner function built with one hbar was used with another."""


class TensorGridMismatch(PhaseSpaceError, ValueError):
    """Structure tensor dimension does not fit the grid axes."""


class UnsupportedMode(PhaseSpaceError, NotImplementedError):
    """Requested evaluation mode is not available for these inputs."""


class IntegratorBlowup(PhaseSpaceError, FloatingPointError):
    """Time stepping produced non-finite or runaway values."""


class ConfigError(PhaseSpaceError, ValueError):
    """Scenario configuration failed to parse or validate."""

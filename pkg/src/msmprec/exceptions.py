"""Exception types shared across the package."""


class MsmprecError(Exception):
    """Base class for all package-specific errors."""


class DimensionMismatch(MsmprecError, ValueError):
    """Array arguments have inconsistent or unexpected shapes."""


class InvalidBounds(MsmprecError, ValueError):
    """Variable bounds are inconsistent (l > u) or leave a variable fully free."""


class InvalidOrder(MsmprecError, ValueError):
    """Constellation or quantizer order is not a supported power of two."""


class LengthMismatch(MsmprecError, ValueError):
    """Bit-stream length is not a multiple of the symbol width."""


class NumericalBreakdown(MsmprecError, RuntimeError):
    """The simplex basis became numerically unusable beyond recovery."""


class SolverFailure(MsmprecError, RuntimeError):
    """An embedded LP solve did not reach an optimal vertex."""


class SingularChannel(MsmprecError, ValueError):
    """Channel Gram matrix is singular or non-finite; linear filter undefined."""


class DegenerateBlock(MsmprecError, ValueError):
    """A blind-gain block has zero received energy for some user."""


class ConfigError(MsmprecError, ValueError):
    """Invalid simulation or CLI configuration."""

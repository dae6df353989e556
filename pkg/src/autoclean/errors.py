"""Exception types shared across the package."""


class AutocleanError(Exception):
    """Base class for all package-specific errors."""


class ContractError(AutocleanError):
    """A documented precondition was violated by the caller."""


class FormatError(AutocleanError):
    """A file does not follow the expected on-disk format."""


class TruncationError(FormatError):
    """A file header declares more payload bytes than are present."""


class DataError(AutocleanError):
    """Payload values violate a data invariant (NaN, Inf, bad shape)."""


class LayoutError(AutocleanError):
    """Sensor layout is inconsistent (duplicate names, bad geometry)."""


class IoError(AutocleanError):
    """Reading or writing a file failed at the OS level."""


class GeometryError(AutocleanError):
    """Too few or degenerate sensor positions for interpolation."""


class NumericalError(AutocleanError):
    """A linear system could not be solved reliably."""


class RepairError(AutocleanError):
    """A trial cannot be repaired (too few good sensors)."""


class ObjectiveError(AutocleanError):
    """An objective function returned a non-finite value."""


class ModelMismatchError(AutocleanError):
    """A fitted model does not match the data it is applied to."""


class OverrideError(AutocleanError):
    """A human override entry refers to an unknown target."""


class ResampleError(AutocleanError):
    """RANSAC could not draw a usable sensor subset."""

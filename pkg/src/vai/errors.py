"""Exception types shared across the package."""


class VaiError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(VaiError):
    """Input bytes are not a supported image format (PNG or JPEG)."""


class DecodeError(VaiError):
    """Image stream is recognized but cannot be decoded."""


class DimensionError(VaiError):
    """Image too small for the requested operation."""


class EmptyInputError(VaiError):
    """Operation received no data to work on."""


class ContractError(VaiError):
    """A documented precondition was violated (e.g. unnormalized histogram)."""


class DegeneratePoolError(VaiError):
    """Pool statistics make the index formula undefined for some metric."""


class DegenerateScalingError(VaiError):
    """Score scaling is undefined (fewer than two distinct cohort scores)."""


class ManifestError(VaiError):
    """A manifest or prediction file is malformed; message carries the line."""


class CoverageError(VaiError):
    """Requested evaluation cells are missing from the prediction records."""

"""Exception types shared across the package.

The CLI maps these onto exit codes: data problems exit 3, numerical
failures exit 4. Plain ValueError is used for ordinary argument
validation and surfaces as a usage error.
"""


class RateblurError(Exception):
    """Base class for package-specific errors."""


class DataFormatError(RateblurError):
    """A file or record does not match the documented format."""


class IndexMismatchError(DataFormatError):
    """Two indexed collections do not cover the same (user, item) pairs."""


class DegenerateDistributionError(RateblurError):
    """An operation requires probability mass that the distribution lacks."""


class NumericalError(RateblurError):
    """An iterative numerical procedure failed to converge or bracket."""

"""Exception taxonomy shared across the toolkit.

The CLI maps these onto exit codes: ContractError -> 2, FormatError -> 3.
"""


class SeleneNoiseError(Exception):
    """Base class for all toolkit errors."""


class ContractError(SeleneNoiseError, ValueError):
    """A precondition or invariant of an operation was violated."""


class FormatError(SeleneNoiseError, RuntimeError):
    """A file does not conform to its declared on-disk format."""


class SampleRangeError(FormatError):
    """A raster sample lies outside the range allowed by its bit depth."""

"""Shared exception base.

Every data-level failure in this package derives from CadkitError so callers
(and the CLI exit-code mapping) can distinguish bad data from bad usage.
"""


class CadkitError(Exception):
    """Base class for all data and processing errors raised by cadkit."""

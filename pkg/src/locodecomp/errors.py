"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so anything user-facing should
raise one of them rather than a bare ValueError.
"""


class ConfigError(Exception):
    """Invalid or incomplete run configuration."""


class DataError(Exception):
    """Unusable input data: missing files, malformed cells, degenerate columns."""


class NumericError(Exception):
    """A computation produced non-finite values or violated an internal identity."""

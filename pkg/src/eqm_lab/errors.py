class EqmError(Exception):
    """Base class for errors raised by eqm_lab."""


class DegenerateError(EqmError, ValueError):
    """A distribution is undefined because every amplitude vanishes."""


class ShapeMismatchError(EqmError, ValueError):
    """Operands disagree on grid, dimension or table layout."""

class InputError(ValueError):
    """Raised when an operation's preconditions are violated (bad dimension,
    non-integrable tail, out-of-range parameter, mismatched grids)."""


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver exhausts its retry budget."""

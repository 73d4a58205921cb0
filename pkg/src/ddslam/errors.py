"""Exception types raised by the solver stack."""


class DDSlamError(Exception):
    """Base class for all package errors."""


class NotPositiveDefiniteError(DDSlamError, ValueError):
    """Cholesky met a non-positive pivot.

    ``pivot`` is the zero-based scalar index of the failing pivot and
    ``subdomain`` is set when the matrix came from a Schwarz subdomain.
    """

    def __init__(self, pivot, subdomain=None):
        self.pivot = pivot
        self.subdomain = subdomain
        where = f" in subdomain {subdomain}" if subdomain is not None else ""
        super().__init__(f"matrix not positive definite: non-positive pivot at index {pivot}{where}")


class CGBreakdownError(DDSlamError, ArithmeticError):
    def __init__(self, iteration, quantity, value):
        self.iteration = iteration
        self.quantity = quantity
        self.value = value
        super().__init__(
            f"CG breakdown at iteration {iteration}: {quantity} = {value!r} <= 0 (operator not SPD)"
        )


class ConvergenceError(DDSlamError, RuntimeError):
    """An iteration hit its cap without meeting the tolerance."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class PartitionError(DDSlamError, ValueError):
    pass


class G2oFormatError(DDSlamError, ValueError):
    def __init__(self, lineno, message):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")

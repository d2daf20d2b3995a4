class RdhError(Exception):
    """Base class for solver errors."""


class InverseError(RdhError, ValueError):
    pass


class ShootingOverflow(RdhError, OverflowError):
    """The shooting recursion produced a non-finite node value."""

    def __init__(self, index, u1):
        self.index = index
        self.u1 = u1
        super().__init__(f"shooting recursion overflowed at node k={index} (u1={u1!r})")


class BoundsError(RdhError, ArithmeticError):
    """A bounds constant is not representable in double precision."""

    def __init__(self, formula, value):
        self.formula = formula
        self.value = value
        super().__init__(f"{formula} is not finite and positive ({value!r})")


class MeshGateError(RdhError, ValueError):
    def __init__(self, n, n_min, alpha):
        self.n = n
        self.n_min = n_min
        self.alpha = alpha
        super().__init__(f"n={n} is below the uniqueness gate n_min={n_min} for alpha={alpha!r}")


class OracleError(RdhError, RuntimeError):
    pass


class SingularPivot(RdhError, ZeroDivisionError):
    def __init__(self, index, pivot):
        self.index = index
        self.pivot = pivot
        super().__init__(f"pivot {pivot!r} at row {index} (matrix singular or indefinite)")


class SolverDivergence(RdhError, RuntimeError):
    def __init__(self, message, step=None, alpha=None, u=None):
        self.step = step
        self.alpha = alpha
        self.u = u
        super().__init__(message)

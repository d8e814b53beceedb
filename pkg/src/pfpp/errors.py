"""Exception hierarchy shared by all modules."""


class PfppError(Exception):
    """Base class for numerical failures raised by this package."""


class ShapeError(PfppError, ValueError):
    pass


class NotSkewError(PfppError, ValueError):
    pass


class SingularPivotError(PfppError):
    pass


class NoLKernelError(PfppError):
    """Raised when ``J + L`` or ``J - K`` cannot be inverted."""


class ConditioningError(PfppError):
    """The conditioning event has probability 0 or 1."""


class InvalidKernelError(PfppError):
    def __init__(self, step, value, msg=None):
        self.step = step
        self.value = value
        super().__init__(msg or f"conditional probability {value!r} out of range at step {step}")


class BreakdownError(PfppError):
    """Krylov breakdown during symplectic Gram-Schmidt."""


class RangeError(PfppError, ValueError):
    pass


class NumericalFailure(PfppError):
    pass


class GibbsStateError(PfppError):
    pass

"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Operands have incompatible dimensions."""


class InsufficientParticlesError(ValueError):
    """An operation needs more particles than the ensemble provides."""


class DegenerateEnsembleError(ValueError):
    """All pairwise distances are zero, so no bandwidth can be inferred."""


class NotSPDError(ValueError):
    """A matrix expected to be symmetric positive definite is not.

    `index` is the pivot (0-based) at which the Cholesky factorization failed.
    """

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"matrix is not positive definite (pivot {index})")


class MaxIterExceededError(RuntimeError):
    """Iterative solver hit its iteration cap before reaching tolerance.

    `residual` is the worst relative residual over right-hand-side columns.
    """

    def __init__(self, residual: float, max_iter: int):
        self.residual = residual
        self.max_iter = max_iter
        super().__init__(
            f"conjugate gradient did not converge in {max_iter} iterations "
            f"(relative residual {residual:.3e})"
        )


class StepTooLargeError(RuntimeError):
    """A covariance-flow step destroyed positive definiteness."""


class DegenerateScheduleError(ValueError):
    """Schedule parameters are undefined because the flow is at its fixed point."""


class ScheduleInvalidError(ValueError):
    """A step-size/regularization schedule produced a non-contractive factor."""


class UnsupportedKernelError(ValueError):
    """The requested operation is not defined for this kernel family."""


class UnsupportedTargetError(ValueError):
    """The requested operation needs a closed-form target."""


class EvaluationError(ValueError):
    """A density or score evaluation returned a non-finite value."""


class ConfigError(ValueError):
    """An experiment configuration document is invalid.

    `key` names the offending entry as "section.key" where applicable.
    """

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")

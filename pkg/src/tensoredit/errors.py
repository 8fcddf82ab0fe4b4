"""Exception hierarchy shared by every module."""


class TensorEditError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(TensorEditError, ValueError):
    """Shapes or extents do not conform."""


class ModeError(DimensionError, IndexError):
    """A mode index is outside ``1..order``."""


class ContractError(TensorEditError, ValueError):
    """A precondition on the arguments was violated."""


class NormalisationError(TensorEditError, ArithmeticError):
    """Column normalisation is undefined (zero-sum column)."""


class TrainingDiverged(TensorEditError, FloatingPointError):
    """The regression loss became NaN or infinite."""

    def __init__(self, step, value):
        super().__init__(f"training diverged at step {step} (loss={value!r})")
        self.step = step
        self.value = value


class NpyFormatError(TensorEditError, ValueError):
    """An NPY file is malformed or uses an unsupported feature."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field

"""Exception hierarchy shared across the package."""


class CodedShuffleError(Exception):
    """Base class for all package errors."""


class DivisionByZero(CodedShuffleError, ZeroDivisionError):
    pass


class ShapeError(CodedShuffleError, ValueError):
    pass


class DegenerateNodes(CodedShuffleError, ValueError):
    """Evaluation nodes collide (duplicate x values or overlapping node sets)."""


class InsufficientIVs(CodedShuffleError, ValueError):
    """Fewer intermediate values than the recovery threshold."""


class InfeasibleBatching(CodedShuffleError, ValueError):
    pass


class InfeasibleShuffle(CodedShuffleError, RuntimeError):
    pass


class InfeasibleConfig(CodedShuffleError, ValueError):
    pass


class ResourceLimit(CodedShuffleError, RuntimeError):
    pass


class ScheduleError(CodedShuffleError, RuntimeError):
    pass

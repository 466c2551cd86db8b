"""Exception types raised across the package."""


class HoroflowError(Exception):
    """Base class for every error raised by horoflow."""


class NotHyperbolicError(HoroflowError, ValueError):
    pass


class NonpositiveScaleError(HoroflowError, ValueError):
    pass


class DegenerateError(HoroflowError, ValueError):
    pass


class DegenerateXiError(DegenerateError):
    pass


class BudgetExceededError(HoroflowError, RuntimeError):
    pass


class NoConvergenceError(HoroflowError, RuntimeError):
    pass


class NoClusterError(HoroflowError, RuntimeError):
    """Busemann values do not accumulate (inconclusive, not wrong)."""


class EscapeFailError(HoroflowError, RuntimeError):
    """No crossing element pushes infinity far enough (horizon too small)."""


class BaseOffCircleError(HoroflowError, ValueError):
    pass


class NotAPathError(HoroflowError, ValueError):
    pass


class GroupSpecError(HoroflowError, ValueError):
    pass

"""Exception hierarchy shared by all modules."""


class EgkcapError(Exception):
    """Base class for every error raised by the package."""


class DomainError(EgkcapError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class PoleError(DomainError):
    """Argument sits on a pole (or logarithmic singularity)."""


class ConvergenceError(EgkcapError, ArithmeticError):
    """An iterative or series evaluation did not meet its tolerance."""


class DivergentIntegralError(EgkcapError, ArithmeticError):
    """The requested integral does not converge for these parameters."""


class FoxHValidationError(DomainError):
    """A Fox H parameter set failed validation."""


class CoincidentPolesError(FoxHValidationError):
    """A left pole and a right pole of the Mellin-Barnes kernel coincide."""


class NoConvergentSectorError(FoxHValidationError):
    """No contour exists along which the Mellin-Barnes integral converges."""


class TruncationBudgetError(ConvergenceError):
    """Contour tail could not be brought under tolerance within the extent cap."""


class InputContractError(DomainError):
    """A user-supplied callable violated its documented contract."""

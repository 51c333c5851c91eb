"""Exception hierarchy shared by every module of the package."""


class ObslaeError(Exception):
    """Base class for all errors raised by obslae."""


class DimensionError(ObslaeError, ValueError):
    """Operand shapes are incompatible."""


class NonFiniteError(ObslaeError, ValueError):
    """A NaN or infinity appeared in an input or an iterate."""


class ZeroMatrixError(ObslaeError, ValueError):
    """Every entry of a matrix is below the rank threshold."""


class SingularMatrixError(ObslaeError, ArithmeticError):
    """Elimination met a pivot below the singularity threshold."""


class NumericalError(ObslaeError, ArithmeticError):
    """An internal consistency check failed (bad conditioning, lost rank)."""


class SigmaOutOfRangeError(ObslaeError, ValueError):
    """The step size of a transpose gain lies outside (0, 2/trace(G G^T))."""


class PropertyPViolatedError(ObslaeError, ValueError):
    """Some row of the gain leaves the column space of G."""


class NoCertificateError(ObslaeError, ValueError):
    """The gain carries no proof of convergence."""


class ZeroTransferError(ObslaeError, ValueError):
    """Every Markov parameter of the plant vanishes."""


class IllConditionedError(ObslaeError, ArithmeticError):
    """The ridge ladder of the oracle disagrees with itself."""

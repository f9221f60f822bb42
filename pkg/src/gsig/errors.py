"""Exception and warning types raised across the package."""


class GsigError(Exception):
    """Base class for all package errors."""


class InputError(GsigError, ValueError):
    """Invalid user input (bad shapes, out-of-range values, malformed files)."""


class IndexOutOfRange(InputError, IndexError):
    pass


class NonPositiveWeight(InputError):
    pass


class SelfLoop(InputError):
    pass


class DuplicateEdge(InputError):
    pass


class DegenerateFeatures(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class TooLarge(InputError):
    pass


class TooFewRealizations(InputError):
    pass


class EmptyEnsemble(InputError):
    pass


class NegativeDiagonal(InputError):
    pass


class ZeroMatrix(InputError):
    pass


class AsymmetricInput(InputError):
    pass


class NonzeroDiagonal(InputError):
    pass


class OperatorNotAFilter(InputError):
    pass


class ZeroVarianceReference(InputError):
    pass


class NumericalError(GsigError, ArithmeticError):
    """A well-posed request that has no numerical solution."""


class SingularSystem(NumericalError):
    pass


class Infeasible(NumericalError):
    pass


class NonconvergedWarning(RuntimeWarning):
    """An iterative solver hit its iteration cap before its tolerance."""

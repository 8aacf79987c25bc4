"""Exception and warning types raised across the package."""


class ScsarError(ValueError):
    """Base class for all input and estimation errors."""


# weights
class UnknownUnitId(ScsarError):
    pass


class SelfLoop(ScsarError):
    pass


class KTooLarge(ScsarError):
    pass


class EmptySubset(ScsarError):
    pass


# likelihoods
class SpatialParamOutOfRange(ScsarError):
    pass


class RankDeficientDesign(ScsarError):
    pass


class TooFewUnits(ScsarError):
    pass


class MinVariance(ScsarError):
    """Residual variance collapsed below the numerical floor (perfect fit)."""


class IndexOutOfRange(ScsarError, IndexError):
    pass


class NotApplicable(ScsarError):
    pass


# clustering
class KExceedsN(ScsarError):
    pass


class ClusterTooSmall(ScsarError):
    pass


class InvalidConfig(ScsarError):
    pass


# concentration
class TooFewFarms(ScsarError):
    pass


class ZeroTotalOutput(ScsarError):
    pass


# recovery scoring
class LengthMismatch(ScsarError):
    pass


# io
class MissingColumn(ScsarError):
    pass


class NonNumericCell(ScsarError):
    def __init__(self, row, column, value):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"non-numeric cell at row {row}, column {column!r}: {value!r}")


class DuplicateUnitId(ScsarError):
    pass


class DegenerateCoordinates(UserWarning):
    """Coincident coordinates made a nearest-neighbour ranking ambiguous."""


class SingularHessian(UserWarning):
    """Numerical Hessian could not be inverted; standard errors are NaN."""


class ClusterRepair(UserWarning):
    """Units were moved between clusters to respect the minimum cluster size."""

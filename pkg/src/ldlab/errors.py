"""Exception types shared across the package."""


class BudgetExceeded(RuntimeError):
    """A configured size or work budget would be exceeded."""


class DimensionMismatch(ValueError):
    """A point's dimension does not match the object it is paired with."""


class DimensionUnsupported(ValueError):
    """The operation is not implemented for this ambient dimension."""


class OriginNotInSet(ValueError):
    """The gauge requires the origin to lie in the closure of the set."""


class NeedMonteCarlo(RuntimeError):
    """No exact evaluation path exists and no Monte Carlo spec was given."""


class MonteCarloCensored(RuntimeError):
    """A Monte Carlo run produced zero hits.

    Zero hits bound the mass from above but do not witness zero mass, so the
    estimate is censored rather than reported as -inf.
    """


class SubadditivityViolated(ValueError):
    """A sequence fed to the subadditive-limit routine is not subadditive."""

    def __init__(self, m: int, n: int, gap: float):
        self.m = m
        self.n = n
        self.gap = gap
        super().__init__(
            f"u({m + n}) exceeds u({m}) + u({n}) by {gap:.6g}"
        )

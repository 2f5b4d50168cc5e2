"""Desk-scale large-deviations laboratory for empirical means of i.i.d. vectors."""

from . import convex, entropy, extmath, grids, legendre, measures, pressure, verify
from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    DimensionUnsupported,
    MonteCarloCensored,
    NeedMonteCarlo,
    OriginNotInSet,
    SubadditivityViolated,
)

__version__ = "0.1.0"

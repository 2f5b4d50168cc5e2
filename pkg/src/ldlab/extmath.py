"""Extended-real arithmetic with explicit infinity conventions.

Two extensions of addition to [-inf, +inf] coexist in large-deviations
calculus: a lower one, where -inf absorbs (used under infima and lower
bounds), and an upper one, where +inf absorbs (used under suprema and upper
bounds).  Plain float addition raises the ambiguous -inf + inf as NaN, so
both conventions are spelled out here.  Scalar multiplication uses the
convention 0 * (+-inf) = 0.
"""

from __future__ import annotations

import math
from typing import Iterable

NEG_INF = float("-inf")
POS_INF = float("inf")


def ensure_ext(value: float) -> float:
    """Coerce to float and reject NaN (extended reals are totally ordered)."""
    x = float(value)
    if math.isnan(x):
        raise ValueError("NaN is not an extended real")
    return x


def add_lower(a: float, b: float) -> float:
    """Extended addition where -inf absorbs: (-inf) + (+inf) = -inf."""
    a = ensure_ext(a)
    b = ensure_ext(b)
    if a == NEG_INF or b == NEG_INF:
        return NEG_INF
    return a + b


def add_upper(a: float, b: float) -> float:
    """Extended addition where +inf absorbs: (-inf) + (+inf) = +inf."""
    a = ensure_ext(a)
    b = ensure_ext(b)
    if a == POS_INF or b == POS_INF:
        return POS_INF
    return a + b


def scale(alpha: float, a: float) -> float:
    """Scalar multiple of an extended real with 0 * (+-inf) = 0."""
    alpha = float(alpha)
    if math.isnan(alpha):
        raise ValueError("NaN scalar")
    a = ensure_ext(a)
    if alpha == 0.0:
        return 0.0
    if math.isinf(a):
        return a if alpha > 0 else -a
    return alpha * a


def log_sum_exp(terms: Iterable[float]) -> float:
    """Stable log(sum(exp(t))) over extended reals.

    -inf terms contribute zero mass; an empty collection sums to zero mass,
    hence -inf; any +inf term dominates.
    """
    vals = [ensure_ext(t) for t in terms]
    if not vals:
        return NEG_INF
    m = max(vals)
    if math.isinf(m):
        return m
    return m + math.log(math.fsum(math.exp(v - m) for v in vals))


def to_json_value(x: float) -> float | str:
    """Finite values stay numbers; infinities become "+inf" / "-inf"."""
    x = ensure_ext(x)
    if x == POS_INF:
        return "+inf"
    if x == NEG_INF:
        return "-inf"
    return x


def from_json_value(v: float | str) -> float:
    if v == "+inf":
        return POS_INF
    if v == "-inf":
        return NEG_INF
    return ensure_ext(float(v))

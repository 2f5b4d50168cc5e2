"""Discrete Fenchel-Legendre conjugation and the rate function.

The 1-d conjugate runs in O(N + M) by sweeping the lower convex hull of the
sampled epigraph against the sorted dual lattice; it matches the brute-force
maximum at every dual point.  Higher dimensions use the brute-force supremum
over the primal lattice as reference semantics.  The rate function is the
negated conjugate of the tabulated pressure.

Conventions for infinite values: +inf samples never achieve the supremum and
are dropped; a function that is +inf everywhere conjugates to the constant
-inf; any -inf sample makes the conjugate the constant +inf.  Ties in the
argmax resolve to the smallest primal index.
"""

from __future__ import annotations

import numpy as np

from .errors import BudgetExceeded
from .extmath import NEG_INF, POS_INF
from .grids import GridFunction, GridSpec
from .pressure import pressure_grid

DEFAULT_PAIR_BUDGET = 500_000_000
_CHUNK_ELEMENTS = 4_000_000


def _lower_hull(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull vertices of (x, v), x strictly increasing.

    Collinear middle points are dropped; the interpolated value there equals
    the sampled value, so conjugation is unaffected.
    """
    idx: list[int] = []
    for i in range(x.shape[0]):
        while len(idx) >= 2:
            a, b = idx[-2], idx[-1]
            s_ab = (v[b] - v[a]) / (x[b] - x[a])
            s_bi = (v[i] - v[b]) / (x[i] - x[b])
            if s_ab >= s_bi:
                idx.pop()
            else:
                break
        idx.append(i)
    return np.asarray(idx, dtype=np.intp)


def conjugate_1d_fast(f: GridFunction, dual_grid: GridSpec) -> GridFunction:
    """Linear-time 1-d conjugate: lam -> max_i (lam * x_i - f(x_i))."""
    if f.grid.dim != 1 or dual_grid.dim != 1:
        raise ValueError("conjugate_1d_fast handles 1-d grids only")
    x = f.grid.axis_points(0)
    v = f.flat
    lam = dual_grid.axis_points(0)
    if np.any(v == NEG_INF):
        return GridFunction(dual_grid, np.full(dual_grid.shape, POS_INF))
    finite = v < POS_INF
    if not finite.any():
        return GridFunction(dual_grid, np.full(dual_grid.shape, NEG_INF))
    xs, vs = x[finite], v[finite]
    hull = _lower_hull(xs, vs)
    hx, hv = xs[hull], vs[hull]
    slopes = np.diff(hv) / np.diff(hx)
    out = np.empty(lam.shape[0])
    j = 0
    for k in range(lam.shape[0]):
        lk = lam[k]
        while j < slopes.shape[0] and slopes[j] < lk:
            j += 1
        out[k] = lk * hx[j] - hv[j]
    return GridFunction(dual_grid, out)


def conjugate(f: GridFunction, dual_grid: GridSpec, pair_budget: int = DEFAULT_PAIR_BUDGET) -> GridFunction:
    """Discrete conjugate on any dimension.

    1-d delegates to the fast path; d >= 2 computes the exact discrete
    supremum by brute force over the primal lattice.
    """
    if f.grid.dim != dual_grid.dim:
        raise ValueError("primal and dual grids must share a dimension")
    if f.grid.dim == 1:
        return conjugate_1d_fast(f, dual_grid)
    if f.grid.size * dual_grid.size > pair_budget:
        raise BudgetExceeded(
            f"conjugation would score {f.grid.size * dual_grid.size} primal-dual pairs"
        )
    vals = f.flat
    if np.any(vals == NEG_INF):
        return GridFunction(dual_grid, np.full(dual_grid.shape, POS_INF))
    finite = vals < POS_INF
    if not finite.any():
        return GridFunction(dual_grid, np.full(dual_grid.shape, NEG_INF))
    pts = f.grid.points()[finite]
    vf = vals[finite]
    lams = dual_grid.points()
    out = np.empty(lams.shape[0])
    step = max(1, _CHUNK_ELEMENTS // pts.shape[0])
    for start in range(0, lams.shape[0], step):
        block = lams[start : start + step]
        scores = block @ pts.T - vf[None, :]
        out[start : start + block.shape[0]] = scores.max(axis=1)
    return GridFunction(dual_grid, out.reshape(dual_grid.shape))


def biconjugate(f: GridFunction, dual_grid: GridSpec, pair_budget: int = DEFAULT_PAIR_BUDGET) -> GridFunction:
    """Conjugate twice, landing back on the primal grid.

    The result never exceeds f (up to float slack) and recovers f, within a
    grid-resolution tolerance, exactly when f is convex.
    """
    star = conjugate(f, dual_grid, pair_budget)
    return conjugate(star, f.grid, pair_budget)


def rate_function(
    spec,
    primal_grid: GridSpec,
    dual_grid: GridSpec,
    pair_budget: int = DEFAULT_PAIR_BUDGET,
) -> GridFunction:
    """Tabulated rate s(x) = -sup_lam(<lam, x> - p(lam)) on the primal grid.

    The dual grid is the caller's choice: the conjugate truncation error
    decays like the primal boundary slope, so wide rate functions need wide
    dual windows (the CLI defaults to [-40, 40] per axis).
    """
    p = pressure_grid(spec, dual_grid)
    p_star = conjugate(p, primal_grid, pair_budget)
    return GridFunction(primal_grid, -p_star.values)

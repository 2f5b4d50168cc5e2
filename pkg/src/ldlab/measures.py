"""Input laws and the exact law of the empirical mean.

An atomic measure is a finitely supported probability on R^d.  The law of
the empirical mean of n i.i.d. copies is the n-fold convolution rescaled by
1/n; it is computed exactly, with weights accumulated in log-space so that
binomial-like cases survive n up to a few thousand.  Coinciding points are
merged with absolute tolerance 1e-9, far below any inter-atom spacing in the
test corpora.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .errors import BudgetExceeded, DimensionMismatch, DimensionUnsupported

MERGE_TOL = 1e-9
DEFAULT_CONVOLUTION_BUDGET = 10_000_000

_HULL_RESIDUAL_TOL = 1e-9


def _merge_atoms(points: np.ndarray, log_weights: np.ndarray, tol: float = MERGE_TOL):
    """Merge atoms whose coordinates agree within tol, log-adding weights.

    Returns (points, log_weights) sorted lexicographically by coordinates,
    which fixes a deterministic output ordering.
    """
    keys = np.round(points / tol).astype(np.int64)
    order = np.lexsort(keys.T[::-1])
    keys = keys[order]
    pts = points[order]
    lw = log_weights[order]
    if len(pts) == 0:
        return pts, lw
    changed = np.any(keys[1:] != keys[:-1], axis=1)
    starts = np.flatnonzero(np.concatenate(([True], changed)))
    merged_lw = np.logaddexp.reduceat(lw, starts)
    return pts[starts], merged_lw


class AtomicMeasure:
    """Finitely supported probability on R^d: distinct points, positive weights."""

    def __init__(self, points, weights=None, log_weights=None, mass_tol: float = 1e-12):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("points must be a nonempty (k, dim) array")
        if not np.isfinite(pts).all():
            raise ValueError("atom coordinates must be finite")
        if (weights is None) == (log_weights is None):
            raise ValueError("give exactly one of weights, log_weights")
        if weights is not None:
            w = np.asarray(weights, dtype=np.float64)
            if w.shape != (pts.shape[0],):
                raise ValueError("weights shape must match point count")
            if not (w > 0).all():
                raise ValueError("weights must be strictly positive")
            lw = np.log(w)
        else:
            lw = np.asarray(log_weights, dtype=np.float64)
            if lw.shape != (pts.shape[0],):
                raise ValueError("log_weights shape must match point count")
            if not (lw < np.inf).all() or np.isnan(lw).any():
                raise ValueError("log weights must be < +inf and not NaN")
        pts, lw = _merge_atoms(pts, lw)
        total = np.exp(_lse(lw))
        if abs(total - 1.0) > mass_tol:
            raise ValueError(f"weights sum to {total!r}, not 1 within {mass_tol}")
        pts.setflags(write=False)
        lw.setflags(write=False)
        self.points = pts
        self.log_weights = lw

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def atom_count(self) -> int:
        return self.points.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def __eq__(self, other) -> bool:
        if not isinstance(other, AtomicMeasure):
            return NotImplemented
        return (
            self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.log_weights, other.log_weights)
        )

    def __repr__(self) -> str:
        return f"AtomicMeasure(dim={self.dim}, atoms={self.atom_count})"


def _lse(log_values: np.ndarray) -> float:
    """log-sum-exp of an array, tolerating -inf entries and empty input."""
    a = np.asarray(log_values, dtype=np.float64)
    if a.size == 0:
        return float("-inf")
    m = a.max()
    if np.isinf(m):
        return float(m)
    return float(m + np.log(np.exp(a - m).sum()))


@dataclass(frozen=True)
class Gaussian:
    """Gaussian with diagonal covariance: mean vector and per-axis variances."""

    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        var = np.atleast_1d(np.asarray(self.var, dtype=np.float64))
        if mean.shape != var.shape or mean.ndim != 1:
            raise ValueError("mean and var must be 1-d arrays of equal length")
        if not (var > 0).all():
            raise ValueError("variances must be strictly positive")
        mean.setflags(write=False)
        var.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class Atomic:
    measure: AtomicMeasure

    @property
    def dim(self) -> int:
        return self.measure.dim


@dataclass(frozen=True)
class FiniteAlphabet:
    """Law on k letters, embedded as atoms at the standard basis vectors of R^k."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.shape[0] < 1:
            raise ValueError("weights must be a nonempty vector")
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be a probability vector")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class Product:
    """Product of independent 1-d laws, one per coordinate."""

    factors: tuple

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise ValueError("product needs at least one factor")
        for f in factors:
            if spec_dim(f) != 1:
                raise ValueError("product factors must be 1-dimensional")
        object.__setattr__(self, "factors", factors)

    @property
    def dim(self) -> int:
        return len(self.factors)


DistributionSpec = Atomic | Gaussian | Product | FiniteAlphabet


def spec_dim(spec) -> int:
    if isinstance(spec, AtomicMeasure):
        return spec.dim
    return spec.dim


def exact_atomic(spec, budget: int = DEFAULT_CONVOLUTION_BUDGET) -> AtomicMeasure | None:
    """The exact atomic form of a spec, or None when there is none (Gaussian)."""
    if isinstance(spec, AtomicMeasure):
        return spec
    if isinstance(spec, Atomic):
        return spec.measure
    if isinstance(spec, FiniteAlphabet):
        keep = spec.weights > 0
        points = np.eye(spec.dim)[keep]
        return AtomicMeasure(points, weights=spec.weights[keep])
    if isinstance(spec, Product):
        factors = [exact_atomic(f, budget) for f in spec.factors]
        if any(f is None for f in factors):
            return None
        pts = factors[0].points
        lw = factors[0].log_weights
        for f in factors[1:]:
            if pts.shape[0] * f.atom_count > budget:
                raise BudgetExceeded("product support exceeds the atom budget")
            pts = np.concatenate(
                (
                    np.repeat(pts, f.atom_count, axis=0),
                    np.tile(f.points, (pts.shape[0], 1)),
                ),
                axis=1,
            )
            lw = (lw[:, None] + f.log_weights[None, :]).ravel()
        return AtomicMeasure(pts, log_weights=lw)
    if isinstance(spec, Gaussian):
        return None
    raise TypeError(f"not a distribution spec: {spec!r}")


def _convolve_sum(a_pts, a_lw, b_pts, b_lw, budget: int):
    pairs = a_pts.shape[0] * b_pts.shape[0]
    if pairs > budget:
        raise BudgetExceeded(
            f"convolution support would hold {pairs} points before merging, "
            f"budget is {budget}"
        )
    d = a_pts.shape[1]
    pts = (a_pts[:, None, :] + b_pts[None, :, :]).reshape(-1, d)
    lw = (a_lw[:, None] + b_lw[None, :]).ravel()
    return _merge_atoms(pts, lw)


def sum_law_sequence(mu: AtomicMeasure, n_max: int, budget: int = DEFAULT_CONVOLUTION_BUDGET):
    """Yield (n, points, log_weights) of the law of X_1 + ... + X_n, n = 1..n_max.

    Points come out lexicographically sorted; divide by n for the mean law.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    pts, lw = mu.points, mu.log_weights
    yield 1, pts, lw
    for n in range(2, n_max + 1):
        pts, lw = _convolve_sum(pts, lw, mu.points, mu.log_weights, budget)
        yield n, pts, lw


def mean_law(mu: AtomicMeasure, n: int, budget: int = DEFAULT_CONVOLUTION_BUDGET) -> AtomicMeasure:
    """Exact law of (X_1 + ... + X_n) / n for X_i i.i.d. with law mu."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return mu
    # exponentiation by squaring on the sum law
    acc = None
    base = (mu.points, mu.log_weights)
    k = n
    while k > 0:
        if k & 1:
            acc = base if acc is None else _convolve_sum(*acc, *base, budget)
        k >>= 1
        if k > 0:
            base = _convolve_sum(*base, *base, budget)
    pts, lw = acc
    return AtomicMeasure(pts / n, log_weights=lw, mass_tol=1e-10)


def gaussian_mean_law(spec: Gaussian, n: int) -> Gaussian:
    """Averaging n i.i.d. Gaussians divides the covariance by n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return Gaussian(spec.mean, spec.var / n)


def cramer_support(mu: AtomicMeasure, n: int, budget: int = DEFAULT_CONVOLUTION_BUDGET) -> np.ndarray:
    """Support points of the empirical-mean law at sample size n."""
    return mean_law(mu, n, budget=budget).points.copy()


def support(mu: AtomicMeasure) -> np.ndarray:
    """The atom points (the support of the measure)."""
    return mu.points.copy()


@dataclass(frozen=True)
class SupportPolytope:
    """Convex hull of finitely many points, stored by its vertices."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]


def in_convex_hull(points: np.ndarray, x: np.ndarray, tol: float = _HULL_RESIDUAL_TOL) -> bool:
    """Whether x is a convex combination of the given points (NNLS residual test)."""
    points = np.asarray(points, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if points.shape[0] == 0:
        return False
    scale = max(1.0, np.abs(points).max())
    a = np.vstack([points.T / scale, np.ones((1, points.shape[0]))])
    b = np.concatenate([x / scale, [1.0]])
    _, residual = nnls(a, b)
    return residual < tol


def cosupport(mu: AtomicMeasure) -> SupportPolytope:
    """Vertices of the closed convex hull of the support (dimensions 1 to 3)."""
    if mu.dim > 3:
        raise DimensionUnsupported("convex hulls are supported for dim <= 3 only")
    pts = mu.points
    if pts.shape[0] == 1:
        return SupportPolytope(pts.copy())
    keep = []
    for i in range(pts.shape[0]):
        others = np.delete(pts, i, axis=0)
        if not in_convex_hull(others, pts[i]):
            keep.append(i)
    return SupportPolytope(pts[keep].copy())


def sample(spec, count: int, seed: int) -> np.ndarray:
    """Draw count i.i.d. points, deterministically in (spec, seed).

    Atomic laws sample by inverse CDF over the cumulative weights; Gaussians
    scale a standard normal per component.  Product factors use independent
    streams derived by spawning SeedSequence((seed, factor_index)).
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    if isinstance(spec, Product):
        cols = [
            sample(f, count, np.random.SeedSequence((seed, i)))
            for i, f in enumerate(spec.factors)
        ]
        return np.concatenate(cols, axis=1)
    rng = np.random.default_rng(seed)
    if isinstance(spec, Gaussian):
        z = rng.standard_normal((count, spec.dim))
        return spec.mean[None, :] + np.sqrt(spec.var)[None, :] * z
    mu = exact_atomic(spec)
    if mu is None:
        raise TypeError(f"cannot sample from {spec!r}")
    cum = np.cumsum(mu.weights)
    idx = np.searchsorted(cum, rng.random(count), side="right")
    idx = np.minimum(idx, mu.atom_count - 1)
    return mu.points[idx].copy()


def spec_to_json(spec) -> dict:
    if isinstance(spec, (Atomic, AtomicMeasure)):
        mu = spec if isinstance(spec, AtomicMeasure) else spec.measure
        return {
            "type": "atomic",
            "atoms": [
                {"point": [float(c) for c in p], "weight": float(w)}
                for p, w in zip(mu.points, mu.weights)
            ],
        }
    if isinstance(spec, Gaussian):
        return {
            "type": "gaussian",
            "mean": [float(c) for c in spec.mean],
            "var": [float(c) for c in spec.var],
        }
    if isinstance(spec, FiniteAlphabet):
        return {"type": "alphabet", "weights": [float(w) for w in spec.weights]}
    raise TypeError(f"no JSON form for {spec!r}")


def spec_from_json(obj: dict):
    kind = obj.get("type")
    if kind == "atomic":
        points = [a["point"] for a in obj["atoms"]]
        weights = [a["weight"] for a in obj["atoms"]]
        return Atomic(AtomicMeasure(np.array(points), weights=np.array(weights)))
    if kind == "gaussian":
        return Gaussian(np.array(obj["mean"]), np.array(obj["var"]))
    if kind == "alphabet":
        return FiniteAlphabet(np.array(obj["weights"]))
    raise ValueError(f"unknown distribution type {kind!r}")


def check_dim(spec, x: np.ndarray) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape[-1] != spec_dim(spec):
        raise DimensionMismatch(
            f"point has dimension {x.shape[-1]}, law has dimension {spec_dim(spec)}"
        )
    return x

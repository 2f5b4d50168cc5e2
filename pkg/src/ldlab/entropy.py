"""Direct entropy estimation from the laws of empirical means.

The entropy at x is inf over convex neighborhoods of the decay rate of
P(mean in C).  For convex sets the limsup equals the sup over n, so the
estimator replaces the liminf by sup_{n <= n_max} over shrinking balls; the
residual error is the gap between the sup over a finite prefix and the true
limit, which is reported rather than hidden.

Exact evaluation paths: atomic laws (exact convolutions), finite alphabets
(closed-form multinomial type masses, equal to the convolution by direct
computation), and Gaussian laws on intervals or sup-norm boxes (normal CDF).
Everything else needs a Monte Carlo spec with optional exponential tilting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln
from scipy.stats import norm as _normal

from . import convex
from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    MonteCarloCensored,
    NeedMonteCarlo,
    SubadditivityViolated,
)
from .extmath import NEG_INF, POS_INF, ensure_ext, to_json_value
from .measures import (
    DEFAULT_CONVOLUTION_BUDGET,
    Atomic,
    AtomicMeasure,
    FiniteAlphabet,
    Gaussian,
    Product,
    _lse,
    exact_atomic,
    gaussian_mean_law,
    mean_law,
    sample,
    spec_dim,
    sum_law_sequence,
)
from .pressure import pressure

_TYPE_ENUM_BUDGET = 2_000_000


@dataclass(frozen=True)
class MonteCarloSpec:
    """Sampling budget for laws without an exact path.

    An optional tilt vector theta turns the draw into importance sampling
    from the exponentially tilted law, with per-sample log-weight
    -<theta, sum x_i> + n p(theta); rare-event masses under Gaussians are
    otherwise unreachable at moderate n.
    """

    count: int
    seed: int
    tilt: np.ndarray | None = None

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("Monte Carlo count must be >= 1")
        if self.tilt is not None:
            t = np.atleast_1d(np.asarray(self.tilt, dtype=np.float64))
            t.setflags(write=False)
            object.__setattr__(self, "tilt", t)


@dataclass
class MCLogMass:
    """Monte Carlo estimate of (1/n) log mass with a linear-space stderr."""

    value: float
    stderr: float
    hits: int
    count: int


@dataclass
class EntropyEstimate:
    """Per-radius sup values and their minimum, the entropy estimate."""

    point: np.ndarray
    radii: tuple[float, ...]
    sup_values: tuple[float, ...]
    estimate: float

    @property
    def table(self) -> list[tuple[float, float]]:
        return list(zip(self.radii, self.sup_values))


@dataclass
class DecayReport:
    """Per-n decay values of a convex set, their sup, and the period.

    The period divides every n with finite value and is None when no n up to
    n_max carries mass (the period is then infinite: all values are -inf).
    """

    values_per_n: list[tuple[int, float]]
    sup_value: float
    period: int | None
    converged: bool
    last_gap: float
    warning: str | None = None

    def csv_rows(self) -> list[str]:
        return [f"{n},{to_json_value(v)}" for n, v in self.values_per_n]

    def summary_json(self) -> dict:
        return {
            "sup": to_json_value(self.sup_value),
            "k_C": self.period if self.period is not None else "inf",
            "converged_gap": self.last_gap,
        }


@dataclass
class FeketeReport:
    inf_rate: float
    controlled: bool
    tail_rate: float | None


@dataclass(frozen=True)
class TestFunction:
    """Affine function <lam, x> + c, optionally -inf outside a convex domain."""

    linear: np.ndarray
    constant: float = 0.0
    domain: object | None = None

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.linear, dtype=np.float64))
        lam.setflags(write=False)
        object.__setattr__(self, "linear", lam)
        object.__setattr__(self, "constant", float(self.constant))
        if self.domain is not None and self.domain.dim != lam.shape[0]:
            raise DimensionMismatch("domain dimension does not match the linear part")

    @property
    def dim(self) -> int:
        return self.linear.shape[0]

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        if points.ndim == 1:
            points = points[:, None]
        vals = points @ self.linear + self.constant
        if self.domain is not None:
            inside = convex.contains_batch(self.domain, points)
            vals = np.where(inside, vals, NEG_INF)
        return vals


def _std_interval_log_prob(z_lo, z_hi) -> np.ndarray:
    """log P(z_lo < Z < z_hi) for standard normal Z, stable in both tails."""
    z_lo, z_hi = np.broadcast_arrays(np.asarray(z_lo, float), np.asarray(z_hi, float))
    out = np.full(z_lo.shape, NEG_INF)
    ok = z_hi > z_lo
    with np.errstate(divide="ignore", invalid="ignore"):
        use_sf = (z_lo + z_hi) >= 0
        a_sf = _normal.logsf(z_lo)
        b_sf = _normal.logsf(z_hi)
        val_sf = a_sf + np.log1p(-np.exp(b_sf - a_sf))
        a_cdf = _normal.logcdf(z_hi)
        b_cdf = _normal.logcdf(z_lo)
        val_cdf = a_cdf + np.log1p(-np.exp(b_cdf - a_cdf))
        vals = np.where(use_sf, val_sf, val_cdf)
    out[ok] = vals[ok]
    return out


def _gaussian_box_log_mass(spec: Gaussian, n_values: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """log P(mean of n in the box [lo, hi]) per n, exact for diagonal Gaussians."""
    scale = np.sqrt(n_values)[:, None] / np.sqrt(spec.var)[None, :]
    z_lo = (lo[None, :] - spec.mean[None, :]) * scale
    z_hi = (hi[None, :] - spec.mean[None, :]) * scale
    return _std_interval_log_prob(z_lo, z_hi).sum(axis=1)


def _tilted(spec, theta: np.ndarray):
    """The exponentially tilted law dmu_theta = exp(<theta, x> - p(theta)) dmu."""
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    if theta.shape[0] != spec_dim(spec):
        raise DimensionMismatch("tilt dimension does not match the law")
    if isinstance(spec, Gaussian):
        return Gaussian(spec.mean + spec.var * theta, spec.var)
    if isinstance(spec, Product):
        return Product(tuple(_tilted(f, theta[i : i + 1]) for i, f in enumerate(spec.factors)))
    mu = exact_atomic(spec)
    if mu is None:
        raise TypeError(f"cannot tilt {spec!r}")
    logw = mu.log_weights + mu.points @ theta - pressure(mu, theta)
    return Atomic(AtomicMeasure(mu.points, log_weights=logw, mass_tol=1e-10))


def monte_carlo_log_mass(spec, n: int, c, mc: MonteCarloSpec) -> MCLogMass:
    """Estimate (1/n) log P(mean of n in C) by (optionally tilted) sampling."""
    d = spec_dim(spec)
    base = spec if mc.tilt is None else _tilted(spec, mc.tilt)
    log_p_theta = 0.0 if mc.tilt is None else pressure(spec, mc.tilt)
    block = max(1, min(mc.count, 2_000_000 // max(1, n)))
    log_w_hits: list[np.ndarray] = []
    hits = 0
    done = 0
    while done < mc.count:
        m = min(block, mc.count - done)
        draws = sample(base, m * n, np.random.SeedSequence((mc.seed, done))).reshape(m, n, d)
        sums = draws.sum(axis=1)
        inside = convex.contains_batch(c, sums / n)
        hits += int(inside.sum())
        if mc.tilt is None:
            log_w_hits.append(np.zeros(int(inside.sum())))
        else:
            lw = -(sums[inside] @ mc.tilt) + n * log_p_theta
            log_w_hits.append(lw)
        done += m
    if hits == 0:
        raise MonteCarloCensored(
            f"0 of {mc.count} samples hit the set at n={n}; the mass is below "
            f"about {3.0 / mc.count:.2e} but not witnessed to be zero"
        )
    lw = np.concatenate(log_w_hits)
    log_total = _lse(lw)
    log_mean = log_total - math.log(mc.count)
    mean = math.exp(log_mean)
    second = math.exp(_lse(2 * lw) - math.log(mc.count))
    var = max(0.0, second - mean * mean)
    stderr = math.sqrt(var / mc.count)
    return MCLogMass(value=log_mean / n, stderr=stderr, hits=hits, count=mc.count)


def log_mass(spec, n: int, c, mc: MonteCarloSpec | None = None,
             budget: int = DEFAULT_CONVOLUTION_BUDGET) -> float:
    """(1/n) log P(mean of n i.i.d. draws lies in C); -inf when no mass.

    Exact for atomic laws and for Gaussian laws on 1-d interval-like sets;
    everything else requires a Monte Carlo spec.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if c.dim != spec_dim(spec):
        raise DimensionMismatch("set and law dimensions disagree")
    mu = exact_atomic(spec, budget)
    if mu is not None:
        law = mean_law(mu, n, budget=budget)
        inside = convex.contains_batch(c, law.points)
        return _lse(law.log_weights[inside]) / n
    if isinstance(spec, Gaussian) and spec.dim == 1:
        bounds = convex.interval_bounds(c)
        if bounds is not None:
            law = gaussian_mean_law(spec, n)
            z = (np.array(bounds) - law.mean[0]) / math.sqrt(law.var[0])
            return float(_std_interval_log_prob(z[0], z[1])) / n
    if mc is None:
        raise NeedMonteCarlo(
            "no exact path for this (law, set) pair; pass a MonteCarloSpec"
        )
    return monte_carlo_log_mass(spec, n, c, mc).value


def _validate_radii(radii) -> tuple[float, ...]:
    radii = tuple(float(r) for r in radii)
    if not radii:
        raise ValueError("radii must be nonempty")
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    if any(radii[i + 1] >= radii[i] for i in range(len(radii) - 1)):
        raise ValueError("radii must be strictly decreasing")
    return radii


def _finish_profile(points, radii, sup) -> list[EntropyEstimate]:
    out = []
    for j in range(points.shape[0]):
        vals = sup[j]
        for i in range(len(radii) - 1):
            if vals[i + 1] > vals[i] + 1e-12:
                raise RuntimeError(
                    "ball masses increased as the radius shrank; this breaks "
                    "set inclusion and indicates a numerical fault"
                )
        out.append(
            EntropyEstimate(
                point=points[j].copy(),
                radii=radii,
                sup_values=tuple(float(v) for v in vals),
                estimate=float(vals.min()),
            )
        )
    return out


def _atomic_profile(mu: AtomicMeasure, points, radii, n_max, norm, budget):
    m, r_count = points.shape[0], len(radii)
    sup = np.full((m, r_count), NEG_INF)
    one_d = mu.dim == 1
    for n, spts, slw in sum_law_sequence(mu, n_max, budget):
        if one_d:
            flat = spts[:, 0]
            for j in range(m):
                x = points[j, 0]
                for i, r in enumerate(radii):
                    i0 = np.searchsorted(flat, (x - r) * n, side="right")
                    i1 = np.searchsorted(flat, (x + r) * n, side="left")
                    if i1 > i0:
                        v = _lse(slw[i0:i1]) / n
                        if v > sup[j, i]:
                            sup[j, i] = v
        else:
            means = spts / n
            for j in range(m):
                dist = convex._norm(means - points[j], norm)
                for i, r in enumerate(radii):
                    mask = dist < r
                    if mask.any():
                        v = _lse(slw[mask]) / n
                        if v > sup[j, i]:
                            sup[j, i] = v
    return sup


def _gaussian_profile(spec: Gaussian, points, radii, n_max, norm):
    if spec.dim > 1 and norm != "linf":
        raise NeedMonteCarlo(
            "exact Gaussian ball masses exist for intervals and sup-norm boxes "
            "only; pass a MonteCarloSpec for other norms"
        )
    ns = np.arange(1, n_max + 1, dtype=np.float64)
    m, r_count = points.shape[0], len(radii)
    sup = np.full((m, r_count), NEG_INF)
    for j in range(m):
        for i, r in enumerate(radii):
            lo = points[j] - r
            hi = points[j] + r
            vals = _gaussian_box_log_mass(spec, ns, lo, hi) / ns
            sup[j, i] = vals.max()
    return sup


def _alphabet_profile(spec: FiniteAlphabet, points, radii, n_max, norm):
    k = spec.dim
    logw = np.log(spec.weights)
    lgamma = gammaln(np.arange(n_max + 2, dtype=np.float64))
    m, r_count = points.shape[0], len(radii)
    sup = np.full((m, r_count), NEG_INF)
    r_max = radii[0]
    for n in range(1, n_max + 1):
        for j in range(m):
            nu = points[j]
            ranges = []
            for i in range(k - 1):
                lo = max(0, math.ceil((nu[i] - r_max) * n))
                hi = min(n, math.floor((nu[i] + r_max) * n))
                if hi < lo:
                    ranges = None
                    break
                ranges.append(np.arange(lo, hi + 1))
            if ranges is None:
                continue
            total = 1
            for rg in ranges:
                total *= rg.shape[0]
            if total > _TYPE_ENUM_BUDGET:
                raise BudgetExceeded("type enumeration exceeds the budget")
            if total == 0:
                continue
            mesh = np.meshgrid(*ranges, indexing="ij") if ranges else []
            counts = np.stack([g.ravel() for g in mesh], axis=-1) if ranges else np.zeros((1, 0))
            last = n - counts.sum(axis=1)
            ok = last >= 0
            counts = np.concatenate([counts[ok], last[ok, None]], axis=1)
            if counts.shape[0] == 0:
                continue
            types = counts / n
            dist = convex._norm(types - nu, norm)
            logpmf = lgamma[n + 1] - lgamma[counts + 1].sum(axis=1) + counts @ logw
            for i, r in enumerate(radii):
                mask = dist < r
                if mask.any():
                    v = _lse(logpmf[mask]) / n
                    if v > sup[j, i]:
                        sup[j, i] = v
    return sup


def entropy_profile(spec, points, radii, n_max: int, norm: str = "l2",
                    mc: MonteCarloSpec | None = None,
                    budget: int = DEFAULT_CONVOLUTION_BUDGET) -> list[EntropyEstimate]:
    """Entropy estimates at several points sharing one sweep over n.

    For each radius r the profile records sup_{n <= n_max} (1/n) log P(mean
    in the open ball B(x, r)); the estimate at x is the minimum over radii.
    """
    radii = _validate_radii(radii)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None] if spec_dim(spec) == 1 else points[None, :]
    if points.shape[1] != spec_dim(spec):
        raise DimensionMismatch("points and law dimensions disagree")
    if isinstance(spec, FiniteAlphabet) and (spec.weights > 0).all():
        sup = _alphabet_profile(spec, points, radii, n_max, norm)
    elif isinstance(spec, Gaussian):
        if spec.dim > 1 and norm != "linf" and mc is not None:
            sup = _mc_profile(spec, points, radii, n_max, norm, mc)
        else:
            sup = _gaussian_profile(spec, points, radii, n_max, norm)
    else:
        mu = exact_atomic(spec, budget)
        if mu is not None:
            sup = _atomic_profile(mu, points, radii, n_max, norm, budget)
        elif mc is not None:
            sup = _mc_profile(spec, points, radii, n_max, norm, mc)
        else:
            raise NeedMonteCarlo("no exact path for this law; pass a MonteCarloSpec")
    return _finish_profile(points, radii, sup)


def _mc_profile(spec, points, radii, n_max, norm, mc):
    m, r_count = points.shape[0], len(radii)
    sup = np.full((m, r_count), NEG_INF)
    for n in range(1, n_max + 1):
        for j in range(m):
            for i, r in enumerate(radii):
                ball = convex.Ball(points[j], r, norm=norm, open=True)
                try:
                    v = monte_carlo_log_mass(spec, n, ball, mc).value
                except MonteCarloCensored:
                    continue
                if v > sup[j, i]:
                    sup[j, i] = v
    return sup


def entropy_at(spec, x, radii, n_max: int, norm: str = "l2",
               mc: MonteCarloSpec | None = None,
               budget: int = DEFAULT_CONVOLUTION_BUDGET) -> EntropyEstimate:
    """Entropy estimate at a single point; see entropy_profile."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    return entropy_profile(spec, x[None, :], radii, n_max, norm=norm, mc=mc, budget=budget)[0]


def decay_analysis(spec, c, n_max: int, convergence_tol: float = 0.05,
                   budget: int = DEFAULT_CONVOLUTION_BUDGET) -> DecayReport:
    """Tabulate (1/n) log P(mean in C) for n = 1..n_max and extract the period.

    The period is the gcd of the n with finite value; values converge toward
    their sup along multiples of the period, and are -inf off them.
    """
    if c.dim != spec_dim(spec):
        raise DimensionMismatch("set and law dimensions disagree")
    values: list[float] = []
    mu = exact_atomic(spec, budget)
    if mu is not None:
        for n, spts, slw in sum_law_sequence(mu, n_max, budget):
            inside = convex.contains_batch(c, spts / n)
            values.append(_lse(slw[inside]) / n)
    elif isinstance(spec, Gaussian) and spec.dim == 1:
        bounds = convex.interval_bounds(c)
        if bounds is None:
            raise NeedMonteCarlo("decay analysis needs an interval-like set for Gaussians")
        ns = np.arange(1, n_max + 1, dtype=np.float64)
        lo = np.array([bounds[0]])
        hi = np.array([bounds[1]])
        values = list(_gaussian_box_log_mass(spec, ns, lo, hi) / ns)
    else:
        raise NeedMonteCarlo("decay analysis has exact paths only")
    finite_ns = [n for n, v in enumerate(values, start=1) if v > NEG_INF]
    if not finite_ns:
        return DecayReport(
            values_per_n=[(n, v) for n, v in enumerate(values, start=1)],
            sup_value=NEG_INF,
            period=None,
            converged=True,
            last_gap=0.0,
        )
    period = 0
    for n in finite_ns:
        period = math.gcd(period, n)
    sup_value = max(values)
    last_finite = finite_ns[-1]
    last_gap = float(sup_value - values[last_finite - 1])
    warning = None
    if n_max < 4 * period:
        warning = (
            f"n_max={n_max} is below 4 * period={period}; the gcd may not have "
            f"stabilized"
        )
    return DecayReport(
        values_per_n=[(n, float(v)) for n, v in enumerate(values, start=1)],
        sup_value=float(sup_value),
        period=period,
        converged=last_gap <= convergence_tol,
        last_gap=last_gap,
        warning=warning,
    )


def fekete_limit(u, slack: float = 1e-12) -> FeketeReport:
    """inf_n u(n)/n for a nonnegative subadditive sequence (u indexed from 1).

    Subadditivity of the provided prefix is verified first; a violation
    raises SubadditivityViolated with the witness (m, n, gap).  The sequence
    counts as controlled when its second half is free of infinite values, in
    which case u(n)/n converges to the inf and the tail value u(n_max)/n_max
    is reported as the convergence proxy.
    """
    vals = [ensure_ext(v) for v in u]
    if not vals:
        raise ValueError("the sequence must be nonempty")
    if any(v < 0 for v in vals):
        raise ValueError("values must lie in [0, +inf]")
    n_len = len(vals)
    for total in range(2, n_len + 1):
        for m in range(1, total // 2 + 1):
            bound = vals[m - 1] + vals[total - m - 1]
            if vals[total - 1] > bound + slack:
                raise SubadditivityViolated(m, total - m, vals[total - 1] - bound)
    rates = [v / n for n, v in enumerate(vals, start=1)]
    inf_rate = min(rates)
    half_start = n_len // 2
    controlled = all(v < POS_INF for v in vals[half_start:])
    tail_rate = rates[-1] if controlled else None
    return FeketeReport(inf_rate=float(inf_rate), controlled=controlled, tail_rate=tail_rate)


def varadhan_functional(spec, f: TestFunction, n: int,
                        budget: int = DEFAULT_CONVOLUTION_BUDGET) -> float:
    """(1/n) log E exp(n f(mean of n)), exact for atomic laws.

    Admissible f are affine, possibly restricted to a convex set (value -inf
    outside).  With f linear this equals the pressure at the linear part for
    every n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    mu = exact_atomic(spec, budget)
    if mu is None:
        raise NeedMonteCarlo("the Varadhan functional has an exact path for atomic laws only")
    if f.dim != mu.dim:
        raise DimensionMismatch("test function and law dimensions disagree")
    law = mean_law(mu, n, budget=budget)
    fv = f.evaluate(law.points)
    with np.errstate(invalid="ignore"):
        terms = np.where(fv == NEG_INF, NEG_INF, n * fv + law.log_weights)
    return _lse(terms) / n

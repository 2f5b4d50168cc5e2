"""Theorem harness: each check pairs an identity or inequality with a
numerical experiment and reports pass/fail with the achieved margin.

Lattice suprema stand in for true suprema throughout; every check declares a
tolerance and reports its worst margin, so tightening grids demonstrably
shrinks margins.  A value counts as -inf only when the exact mass is zero;
Monte Carlo zeros are censored, never -inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import convex
from .entropy import (
    DecayReport,
    EntropyEstimate,
    TestFunction,
    decay_analysis,
    entropy_profile,
    varadhan_functional,
)
from .errors import DimensionUnsupported
from .extmath import NEG_INF, POS_INF, to_json_value
from .grids import GridFunction, GridSpec
from .legendre import biconjugate, rate_function
from .measures import (
    Atomic,
    AtomicMeasure,
    FiniteAlphabet,
    Gaussian,
    cosupport,
    exact_atomic,
    spec_dim,
)
from .pressure import pressure, pressure_grid


@dataclass
class CheckReport:
    """Outcome of one check; passed holds exactly when worst_margin <= tolerance."""

    check_name: str
    passed: bool
    tolerance: float
    worst_margin: float
    worst_witness: dict | None
    details: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "check_name": self.check_name,
            "passed": self.passed,
            "tolerance": self.tolerance,
            "worst_margin": to_json_value(self.worst_margin),
            "worst_witness": self.worst_witness,
            "details": [
                {k: to_json_value(v) if isinstance(v, float) else v for k, v in row.items()}
                for row in self.details
            ],
        }


def _finish(name: str, tolerance: float, details: list[dict]) -> CheckReport:
    worst = NEG_INF
    witness = None
    for row in details:
        if row["margin"] > worst:
            worst = row["margin"]
            witness = row
    if not details:
        worst = NEG_INF
    return CheckReport(
        check_name=name,
        passed=bool(worst <= tolerance),
        tolerance=tolerance,
        worst_margin=float(worst),
        worst_witness=witness,
        details=details,
    )


def _abs_diff(a: float, b: float) -> float:
    if a == NEG_INF and b == NEG_INF:
        return 0.0
    if math.isinf(a) or math.isinf(b):
        return POS_INF
    return abs(a - b)


def _hull_interior_mask(spec, points: np.ndarray, margin: float = 0.0) -> np.ndarray:
    """Points strictly inside the convex support hull (all points for Gaussians).

    A one-vertex hull has the vertex itself as its relative interior.
    """
    if isinstance(spec, Gaussian):
        return np.ones(points.shape[0], dtype=bool)
    mu = exact_atomic(spec)
    verts = cosupport(mu).vertices
    if verts.shape[0] == 1:
        return np.all(np.abs(points - verts[0]) <= 1e-9, axis=1)
    d = verts.shape[1]
    if d == 1:
        lo, hi = verts.min(), verts.max()
        x = points[:, 0]
        return (x > lo + margin) & (x < hi - margin)
    from scipy.spatial import ConvexHull, QhullError

    try:
        hull = ConvexHull(verts)
    except QhullError as exc:
        raise DimensionUnsupported(f"degenerate support hull: {exc}") from exc
    eqs = hull.equations
    norms = np.linalg.norm(eqs[:, :-1], axis=1)
    slack = -(points @ eqs[:, :-1].T + eqs[:, -1][None, :]) / norms[None, :]
    return (slack > margin).all(axis=1)


def _hull_outside_mask(spec, points: np.ndarray) -> np.ndarray:
    """Points strictly outside the closed convex support hull."""
    if isinstance(spec, Gaussian):
        return np.zeros(points.shape[0], dtype=bool)
    mu = exact_atomic(spec)
    verts = cosupport(mu).vertices
    if verts.shape[0] == 1:
        return np.any(np.abs(points - verts[0]) > 1e-9, axis=1)
    d = verts.shape[1]
    if d == 1:
        lo, hi = verts.min(), verts.max()
        x = points[:, 0]
        return (x < lo) | (x > hi)
    from scipy.spatial import ConvexHull, QhullError

    try:
        hull = ConvexHull(verts)
    except QhullError as exc:
        raise DimensionUnsupported(f"degenerate support hull: {exc}") from exc
    eqs = hull.equations
    norms = np.linalg.norm(eqs[:, :-1], axis=1)
    slack = -(points @ eqs[:, :-1].T + eqs[:, -1][None, :]) / norms[None, :]
    return (slack < 0).any(axis=1)


def check_duality(spec, primal_grid: GridSpec, dual_grid: GridSpec, n_max: int,
                  radii, tol: float = 0.05, norm: str = "l2", mc=None,
                  interior_margin: float = 0.0) -> CheckReport:
    """Direct entropy estimates against the conjugate route s = -p*.

    Compared on the lattice points interior to the convex support hull,
    where both sides are finite.
    """
    s = rate_function(spec, primal_grid, dual_grid)
    points = primal_grid.points()
    mask = _hull_interior_mask(spec, points, margin=interior_margin)
    estimates = entropy_profile(spec, points[mask], radii, n_max, norm=norm, mc=mc)
    s_vals = s.flat[mask]
    details = []
    for est, sv in zip(estimates, s_vals):
        diff = _abs_diff(est.estimate, float(sv))
        details.append(
            {
                "x": [float(v) for v in est.point],
                "entropy_estimate": est.estimate,
                "rate_value": float(sv),
                "margin": diff,
            }
        )
    return _finish("duality", tol, details)


def check_young(spec, lambda_grid: GridSpec, x_grid: GridSpec, tol: float = 1e-6) -> CheckReport:
    """p(lambda) - s(x) >= <lambda, x> on the product lattice (s = -p*)."""
    p = pressure_grid(spec, lambda_grid)
    s = rate_function(spec, x_grid, lambda_grid)
    lams = lambda_grid.points()
    xs = x_grid.points()
    inner = lams @ xs.T
    violation = inner - p.flat[:, None] + s.flat[None, :]
    idx = np.unravel_index(np.argmax(violation), violation.shape)
    details = [
        {
            "lambda": [float(v) for v in lams[idx[0]]],
            "x": [float(v) for v in xs[idx[1]]],
            "margin": float(violation[idx]),
        }
    ]
    return _finish("young", tol, details)


def check_chebyshev(spec, lam, x, eps: float, n_max: int, tol: float = 1e-9) -> CheckReport:
    """Exponential Chebyshev bound on the open half-space above <lam, x> - eps."""
    lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    level = float(lam @ x) - eps
    half = convex.HalfSpace(-lam, -level, open=True)
    bound = pressure(spec, lam) - float(lam @ x) + eps
    rep = decay_analysis(spec, half, n_max)
    details = []
    for n, v in rep.values_per_n:
        margin = NEG_INF if v == NEG_INF else v - bound
        details.append({"n": n, "value": v, "bound": bound, "margin": margin})
    return _finish("chebyshev", tol, details)


def check_pressure_recovery(spec, lambdas, primal_grid: GridSpec, dual_grid: GridSpec,
                            tol: float = 0.05) -> CheckReport:
    """p(lambda) against the lattice sup of <lambda, x> + s(x), s = -p*."""
    s = rate_function(spec, primal_grid, dual_grid)
    xs = primal_grid.points()
    details = []
    for lam in lambdas:
        lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
        recovered = float(np.max(xs @ lam + s.flat))
        p = pressure(spec, lam)
        details.append(
            {
                "lambda": [float(v) for v in lam],
                "pressure": p,
                "recovered": recovered,
                "margin": _abs_diff(p, recovered),
            }
        )
    return _finish("pressure_recovery", tol, details)


def _is_open_set(c) -> bool:
    if isinstance(c, (convex.Ball, convex.HalfSpace)):
        return c.open
    if isinstance(c, convex.Intersection):
        return all(_is_open_set(m) for m in c.members)
    if isinstance(c, (convex.Translate, convex.Dilate)):
        return _is_open_set(c.inner)
    return False


def check_convex_upper_bound(spec, sets, n_max: int, primal_grid: GridSpec,
                             dual_grid: GridSpec, slack: float = 0.02,
                             limit_tol: float = 0.05) -> CheckReport:
    """Non-asymptotic bound (1/n) log mass(C) <= sup over the closure of s.

    For open sets with mass, additionally checks convergence toward the sup
    along multiples of the period and agreement with the lattice sup of s
    over the open set itself.
    """
    s = rate_function(spec, primal_grid, dual_grid)
    xs = primal_grid.points()
    details = []
    for k, c in enumerate(sets):
        rep = decay_analysis(spec, c, n_max)
        closure_mask = convex.contains_batch(c, xs, closure=True)
        sup_closure = float(s.flat[closure_mask].max()) if closure_mask.any() else NEG_INF
        worst_n, worst_v = None, NEG_INF
        for n, v in rep.values_per_n:
            if v > worst_v:
                worst_n, worst_v = n, v
        bound_margin = (
            NEG_INF if worst_v == NEG_INF else worst_v - sup_closure - slack
        )
        details.append(
            {
                "set": k,
                "kind": "upper_bound",
                "worst_n": worst_n,
                "worst_value": worst_v,
                "lattice_sup_closure": sup_closure,
                "margin": bound_margin,
            }
        )
        if _is_open_set(c) and rep.period is not None:
            open_mask = convex.contains_batch(c, xs)
            sup_open = float(s.flat[open_mask].max()) if open_mask.any() else NEG_INF
            limit_margin = max(
                rep.last_gap - limit_tol,
                _abs_diff(rep.sup_value, sup_open) - limit_tol,
            )
            details.append(
                {
                    "set": k,
                    "kind": "open_limit",
                    "sup_over_n": rep.sup_value,
                    "lattice_sup_open": sup_open,
                    "tail_gap": rep.last_gap,
                    "margin": limit_margin,
                }
            )
    return _finish("convex_upper_bound", 0.0, details)


def check_dom_cosupp(spec, primal_grid: GridSpec, n_max: int, radii,
                     boundary_margin: float | None = None, norm: str = "l2") -> CheckReport:
    """Closure of the entropy domain against the convex support hull.

    Lattice points strictly inside the hull (by at least the boundary margin)
    must report finite entropy at the largest radius; points outside the
    closed hull must report exact -inf at some radius.  The margin counts
    exceptions, so the tolerance is zero.
    """
    if boundary_margin is None:
        boundary_margin = max(primal_grid.spacing(i) for i in range(primal_grid.dim))
    points = primal_grid.points()
    inside = _hull_interior_mask(spec, points, margin=boundary_margin)
    outside = _hull_outside_mask(spec, points)
    take = inside | outside
    estimates = entropy_profile(spec, points[take], radii, n_max, norm=norm)
    details = []
    for flag_inside, est in zip(inside[take], estimates):
        if flag_inside:
            ok = est.sup_values[0] > NEG_INF
            kind = "interior_finite"
        else:
            ok = any(v == NEG_INF for v in est.sup_values)
            kind = "outside_minus_inf"
        details.append(
            {
                "x": [float(v) for v in est.point],
                "kind": kind,
                "sup_values": list(est.sup_values),
                "margin": 0.0 if ok else 1.0,
            }
        )
    return _finish("dom_cosupp", 0.0, details)


def check_varadhan(spec, f: TestFunction, n_max: int, primal_grid: GridSpec,
                   dual_grid: GridSpec, tol_upper: float = 0.02,
                   tol_lower: float = 0.05) -> CheckReport:
    """Varadhan bounds for a concave admissible test function.

    Non-asymptotic upper bound at every n against the lattice sup of f + s,
    and the lower bound as a limit proxy: the value at the largest n with
    mass must sit within tol_lower of that sup.
    """
    s = rate_function(spec, primal_grid, dual_grid)
    xs = primal_grid.points()
    fv = f.evaluate(xs)
    target = float(np.max(fv + s.flat))
    details = []
    last_n, last_v = None, NEG_INF
    for n in range(1, n_max + 1):
        v = varadhan_functional(spec, f, n)
        if v > NEG_INF:
            last_n, last_v = n, v
        margin = NEG_INF if v == NEG_INF else v - target - tol_upper
        details.append({"n": n, "kind": "upper", "value": v, "sup": target, "margin": margin})
    if last_n is not None:
        details.append(
            {
                "n": last_n,
                "kind": "lower_limit_proxy",
                "value": last_v,
                "sup": target,
                "margin": _abs_diff(last_v, target) - tol_lower,
            }
        )
    return _finish("varadhan", 0.0, details)


def _is_convex_1d(values: np.ndarray, tol: float = 1e-9) -> bool:
    v = values
    mids = v[1:-1]
    avg = 0.5 * (v[:-2] + v[2:])
    with np.errstate(invalid="ignore"):
        bad = mids > avg + tol
    return not bool(np.any(bad & np.isfinite(mids)))


def check_biconjugation(samples, upper_slack: float = 1e-9,
                        nonconvex_factor: float = 10.0) -> CheckReport:
    """Double conjugation recovers convex samples and strictly drops below
    non-convex ones.

    Each sample is a (grid function, dual grid, grid tolerance) triple; the
    tolerance states how closely the biconjugate must match a convex sample
    on its lattice.
    """
    details = []
    for k, (f, dual_grid, grid_tol) in enumerate(samples):
        g = biconjugate(f, dual_grid)
        over = float(np.max(g.flat - f.flat))
        details.append({"sample": k, "kind": "never_above", "margin": over - upper_slack})
        if f.grid.dim == 1 and _is_convex_1d(f.flat):
            err = float(np.max(np.abs(g.flat - f.flat)))
            details.append(
                {"sample": k, "kind": "convex_equality", "max_abs_err": err, "margin": err - grid_tol}
            )
        else:
            drop = float(np.max(f.flat - g.flat))
            details.append(
                {
                    "sample": k,
                    "kind": "nonconvex_strict_drop",
                    "max_drop": drop,
                    "margin": nonconvex_factor * grid_tol - drop,
                }
            )
    return _finish("biconjugation", 0.0, details)


def simplex_type_grid(k: int, denominator: int) -> np.ndarray:
    """Interior probability vectors with all entries positive multiples of
    1/denominator."""
    if k < 2:
        raise ValueError("need an alphabet of size >= 2")
    out = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            if remaining >= 1:
                out.append(prefix + [remaining])
            return
        for v in range(1, remaining - slots + 2):
            rec(prefix + [v], remaining - v, slots - 1)

    rec([], denominator, k)
    return np.array(out, dtype=np.float64) / denominator


def check_sanov(alphabet_weights, type_grid=None, n_max: int = 600,
                radius: float = 0.02, tol: float = 0.05,
                denominator: int = 10) -> CheckReport:
    """Entropy of empirical types against the negated relative entropy.

    The alphabet law is embedded as atoms on the simplex vertices; for each
    type-grid point nu the entropy estimate from exact multinomial masses of
    type-class balls is compared with -sum nu_i log(nu_i / mu_i).
    """
    w = np.asarray(alphabet_weights, dtype=np.float64)
    spec = FiniteAlphabet(w)
    if not (w > 0).all():
        raise ValueError("the Sanov check needs strictly positive letter weights")
    if type_grid is None:
        type_grid = simplex_type_grid(w.shape[0], denominator)
    nus = np.asarray(type_grid, dtype=np.float64)
    estimates = entropy_profile(spec, nus, [radius], n_max, norm="linf")
    details = []
    for est in estimates:
        nu = est.point
        kl = float(np.sum(nu * np.log(nu / w), where=nu > 0))
        details.append(
            {
                "nu": [float(v) for v in nu],
                "entropy_estimate": est.estimate,
                "neg_relative_entropy": -kl,
                "margin": _abs_diff(est.estimate, -kl),
            }
        )
    return _finish("sanov", tol, details)


def check_hyperplane_convergence(spec: Gaussian, sets, n_max: int,
                                 tol: float = 0.06) -> CheckReport:
    """Full convergence (period 1, monotone, correct limit) for Gaussian laws.

    A law that does not charge affine hyperplanes has a convergent decay
    sequence for every convex set with interior; for 1-d Gaussians and
    interval-like sets the limit is the analytic sup of s over the closure.
    """
    if not isinstance(spec, Gaussian) or spec.dim != 1:
        raise DimensionUnsupported("this check covers 1-d Gaussian laws")
    details = []
    for k, c in enumerate(sets):
        bounds = convex.interval_bounds(c)
        if bounds is None:
            raise ValueError("sets must be interval-like")
        rep = decay_analysis(spec, c, n_max)
        vals = np.array([v for _, v in rep.values_per_n])
        mono = float(np.max(vals[:-1] - vals[1:])) if len(vals) > 1 else NEG_INF
        details.append({"set": k, "kind": "monotone", "margin": mono - 1e-12})
        details.append(
            {"set": k, "kind": "period_one", "period": rep.period,
             "margin": 0.0 if rep.period == 1 else POS_INF}
        )
        m, var = float(spec.mean[0]), float(spec.var[0])
        clamped = min(max(bounds[0], m), bounds[1])
        limit = -((clamped - m) ** 2) / (2 * var)
        details.append(
            {
                "set": k,
                "kind": "limit",
                "value_at_n_max": float(vals[-1]),
                "analytic_limit": limit,
                "margin": _abs_diff(float(vals[-1]), limit) - tol,
            }
        )
    return _finish("hyperplane_convergence", 0.0, details)


def _standard_biconjugation_samples() -> list[tuple[GridFunction, GridSpec, float]]:
    convex_grid = GridSpec(((-2.0, 2.0, 801),))
    x = convex_grid.axis_points(0)
    exp_f = GridFunction(convex_grid, np.exp(x))
    well_grid = GridSpec(((-2.0, 2.0, 1601),))
    xw = well_grid.axis_points(0)
    well_f = GridFunction(well_grid, (xw * xw - 1.0) ** 2)
    const_grid = GridSpec(((-1.0, 1.0, 101),))
    const_f = GridFunction(const_grid, np.full(101, 3.0))
    return [
        (exp_f, GridSpec(((-10.0, 10.0, 2001),)), 4e-4),
        (well_f, GridSpec(((-25.0, 25.0, 2001),)), 1e-2),
        (const_f, GridSpec(((-5.0, 5.0, 201),)), 1e-9),
    ]


def _default_1d_frames(spec) -> tuple[GridSpec, GridSpec, GridSpec, float, float]:
    """(wide primal, duality primal, dom grid, span, radius scale) for the law."""
    if isinstance(spec, Gaussian):
        m, sd = float(spec.mean[0]), math.sqrt(float(spec.var[0]))
        wide = GridSpec(((m - 6 * sd, m + 6 * sd, 601),))
        duality = GridSpec(((m - 2.5 * sd, m + 2.5 * sd, 11),))
        dom = GridSpec(((m - 6 * sd, m + 6 * sd, 121),))
        return wide, duality, dom, 4 * sd, sd
    mu = exact_atomic(spec)
    lo, hi = float(mu.points.min()), float(mu.points.max())
    span = max(hi - lo, 1.0)
    wide = GridSpec(((lo - 0.3 * span, hi + 0.3 * span, 481),))
    duality = GridSpec(((lo + 0.1 * span, hi - 0.1 * span, 13),)) if hi > lo else None
    step = span / 80.0
    dom = GridSpec(((lo - 10 * step, hi + 10 * step, 101),))
    return wide, duality, dom, span, span


def default_suite(spec, n_max: int = 1000) -> list[CheckReport]:
    """A standard battery of checks sized for a quick pass on 1-d laws.

    Alphabet laws swap the duality check for the Sanov comparison; Gaussian
    laws add the hyperplane-convergence check.  Laws in dimension 2 or more
    run the conjugation-side checks only.
    """
    reports = [check_biconjugation(_standard_biconjugation_samples())]
    dual = GridSpec(((-40.0, 40.0, 2001),))
    if isinstance(spec, FiniteAlphabet):
        reports.append(check_sanov(spec.weights, denominator=5, n_max=min(n_max, 300)))
        return reports
    if spec_dim(spec) != 1:
        return reports
    wide, duality_grid, dom_grid, span, radius_scale = _default_1d_frames(spec)
    reports.append(check_young(spec, GridSpec(((-3.0, 3.0, 61),)), wide))
    reports.append(
        check_pressure_recovery(spec, [np.array([v]) for v in np.arange(-3.0, 3.01, 0.25)], wide, dual)
    )
    mu = exact_atomic(spec)
    mean = (
        float(spec.mean[0])
        if isinstance(spec, Gaussian)
        else float(mu.weights @ mu.points[:, 0])
    )
    if duality_grid is not None:
        radii = (0.05 * radius_scale, 0.01 * radius_scale)
        reports.append(
            check_duality(spec, duality_grid, dual, n_max=n_max, radii=radii, tol=0.05)
        )
    reports.append(
        check_chebyshev(spec, np.array([1.0]), np.array([mean + 0.25 * span]), eps=0.05,
                        n_max=min(n_max, 200))
    )
    sets = [
        convex.interval(mean - 0.25 * span, mean + 0.25 * span),
        convex.Ball(np.array([mean]), 0.2 * span, norm="l2", open=True),
        convex.interval(mean + 0.3 * span, POS_INF),
    ]
    reports.append(
        check_convex_upper_bound(spec, sets, n_max=min(n_max, 200), primal_grid=wide, dual_grid=dual)
    )
    if mu is not None:
        step = dom_grid.spacing(0)
        reports.append(
            check_dom_cosupp(spec, dom_grid, n_max=min(n_max, 400),
                             radii=(0.1 * span + 0.05, 0.45 * step))
        )
    if isinstance(spec, Gaussian):
        half = convex.interval(mean + 0.5 * math.sqrt(float(spec.var[0])), POS_INF)
        reports.append(check_hyperplane_convergence(spec, [half], n_max=min(n_max, 2000)))
    return reports


def reports_to_json(reports) -> list[dict]:
    return [r.to_json() for r in sorted(reports, key=lambda r: r.check_name)]

"""Symbolic convex sets: membership, closure membership, Minkowski gauge.

Sets are immutable constructor trees (half-spaces, norm balls, H-polytopes,
intersections, translates, dilates).  Membership is evaluated literally;
closure membership relaxes every strict inequality in the tree.  The gauge
inf{t >= 0 : x in tC} is computed in closed form for origin-centered balls
and half-spaces, and by bisection on t for everything else, exploiting the
monotonicity of t -> [x in tC] for sets whose closure contains the origin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, OriginNotInSet
from .extmath import POS_INF

GAUGE_REL_TOL = 1e-10
GAUGE_MAX = 1e12

_NORMS = ("l1", "l2", "linf")


def _norm(diffs: np.ndarray, kind: str) -> np.ndarray:
    if kind == "l1":
        return np.abs(diffs).sum(axis=-1)
    if kind == "l2":
        return np.sqrt((diffs * diffs).sum(axis=-1))
    if kind == "linf":
        return np.abs(diffs).max(axis=-1)
    raise ValueError(f"unknown norm {kind!r}")


@dataclass(frozen=True)
class HalfSpace:
    """Points x with <normal, x> < offset (open) or <= offset (closed)."""

    normal: np.ndarray
    offset: float
    open: bool = False

    def __post_init__(self):
        n = np.atleast_1d(np.asarray(self.normal, dtype=np.float64))
        if n.ndim != 1 or not np.any(n != 0):
            raise ValueError("half-space normal must be a nonzero vector")
        n = n.copy()
        n.setflags(write=False)
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.normal.shape[0]

    def contains_batch(self, points: np.ndarray, closure: bool = False) -> np.ndarray:
        s = points @ self.normal
        if self.open and not closure:
            return s < self.offset
        return s <= self.offset


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float
    norm: str = "l2"
    open: bool = False

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=np.float64))
        if float(self.radius) <= 0:
            raise ValueError("ball radius must be > 0")
        if self.norm not in _NORMS:
            raise ValueError(f"norm must be one of {_NORMS}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def contains_batch(self, points: np.ndarray, closure: bool = False) -> np.ndarray:
        d = _norm(points - self.center, self.norm)
        if self.open and not closure:
            return d < self.radius
        return d <= self.radius


@dataclass(frozen=True)
class HPolytope:
    """Intersection of closed half-spaces; an empty list means the whole space."""

    halfspaces: tuple[HalfSpace, ...]
    space_dim: int | None = None

    def __post_init__(self):
        hs = tuple(self.halfspaces)
        for h in hs:
            if h.open:
                raise ValueError("H-polytope faces must be closed half-spaces")
        if hs:
            d = hs[0].dim
            if any(h.dim != d for h in hs):
                raise ValueError("half-space dimensions disagree")
        elif self.space_dim is None:
            raise ValueError("an empty H-polytope needs an explicit space_dim")
        object.__setattr__(self, "halfspaces", hs)

    @property
    def dim(self) -> int:
        return self.halfspaces[0].dim if self.halfspaces else self.space_dim

    def contains_batch(self, points: np.ndarray, closure: bool = False) -> np.ndarray:
        out = np.ones(points.shape[0], dtype=bool)
        for h in self.halfspaces:
            out &= h.contains_batch(points, closure=closure)
        return out

    def margin(self, x: np.ndarray) -> float:
        """Euclidean distance from x to the nearest face hyperplane (inf if none)."""
        if not self.halfspaces:
            return POS_INF
        slacks = [
            (h.offset - float(np.dot(h.normal, x))) / float(np.linalg.norm(h.normal))
            for h in self.halfspaces
        ]
        return min(slacks)


@dataclass(frozen=True)
class Intersection:
    members: tuple

    def __post_init__(self):
        ms = tuple(self.members)
        if not ms:
            raise ValueError("intersection needs at least one member")
        d = ms[0].dim
        if any(m.dim != d for m in ms):
            raise ValueError("member dimensions disagree")
        object.__setattr__(self, "members", ms)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def contains_batch(self, points: np.ndarray, closure: bool = False) -> np.ndarray:
        out = np.ones(points.shape[0], dtype=bool)
        for m in self.members:
            out &= m.contains_batch(points, closure=closure)
        return out


@dataclass(frozen=True)
class Translate:
    inner: object
    shift: np.ndarray

    def __post_init__(self):
        s = np.atleast_1d(np.asarray(self.shift, dtype=np.float64))
        if s.shape[0] != self.inner.dim:
            raise DimensionMismatch("shift dimension does not match the inner set")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "shift", s)

    @property
    def dim(self) -> int:
        return self.inner.dim

    def contains_batch(self, points: np.ndarray, closure: bool = False) -> np.ndarray:
        return self.inner.contains_batch(points - self.shift, closure=closure)


@dataclass(frozen=True)
class Dilate:
    inner: object
    factor: float

    def __post_init__(self):
        if float(self.factor) == 0.0:
            raise ValueError("dilation factor must be nonzero")
        object.__setattr__(self, "factor", float(self.factor))

    @property
    def dim(self) -> int:
        return self.inner.dim

    def contains_batch(self, points: np.ndarray, closure: bool = False) -> np.ndarray:
        return self.inner.contains_batch(points / self.factor, closure=closure)


ConvexSet = HalfSpace | Ball | HPolytope | Intersection | Translate | Dilate


def _as_points(c, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != c.dim:
        raise DimensionMismatch(
            f"point has dimension {x.shape[1]}, set has dimension {c.dim}"
        )
    return x


def contains(c, x) -> bool:
    """Literal membership of a single point."""
    return bool(c.contains_batch(_as_points(c, x))[0])


def contains_closure(c, x) -> bool:
    """Membership in the closed variant (strict inequalities relaxed)."""
    return bool(c.contains_batch(_as_points(c, x), closure=True)[0])


def contains_batch(c, points: np.ndarray, closure: bool = False) -> np.ndarray:
    """Vectorized membership for an (m, dim) array of points."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[1] != c.dim:
        raise DimensionMismatch(
            f"points have dimension {points.shape[1]}, set has dimension {c.dim}"
        )
    return c.contains_batch(points, closure=closure)


def _halfspace_gauge(h: HalfSpace, x: np.ndarray) -> float:
    s = float(np.dot(h.normal, x))
    c = h.offset
    if c > 0:
        return max(0.0, s / c)
    # c == 0: tC is scaling invariant for t > 0
    if s < 0 or (s == 0 and not h.open):
        return 0.0
    return POS_INF


def gauge(c, x, rel_tol: float = GAUGE_REL_TOL) -> float:
    """Minkowski gauge inf{t >= 0 : x in tC}; requires 0 in the closure of C."""
    pts = _as_points(c, x)
    origin = np.zeros((1, c.dim))
    if not bool(c.contains_batch(origin, closure=True)[0]):
        raise OriginNotInSet("the gauge needs the origin in the closure of the set")
    x = pts[0]
    if not np.any(x != 0):
        return 0.0
    if isinstance(c, Ball) and not np.any(c.center != 0):
        return float(_norm(x, c.norm) / c.radius)
    if isinstance(c, HalfSpace):
        return _halfspace_gauge(c, x)

    def member(t: float) -> bool:
        return bool(c.contains_batch((x / t)[None, :])[0])

    hi = 1.0
    while not member(hi):
        hi *= 2.0
        if hi > GAUGE_MAX:
            return POS_INF
    lo = 0.0 if hi == 1.0 else hi / 2.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= 0:
            break
        if member(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def is_internal_point(c, x) -> bool:
    """Whether the gauge of C - x is finite in every direction.

    Probes the 2 dim signed basis directions; by convexity a finite gauge on
    all of them is finite everywhere.  For the supported constructors this
    coincides with topological interior membership in R^d, so degenerate flat
    sets report no internal points.
    """
    pts = _as_points(c, x)
    if not bool(c.contains_batch(pts, closure=True)[0]):
        raise ValueError("is_internal_point requires a point of the closure")
    shifted = Translate(c, -pts[0])
    for i in range(c.dim):
        for sign in (1.0, -1.0):
            e = np.zeros(c.dim)
            e[i] = sign
            if gauge(shifted, e) == POS_INF:
                return False
    return True


def set_to_json(c) -> dict:
    if isinstance(c, HalfSpace):
        return {
            "type": "halfspace",
            "normal": [float(v) for v in c.normal],
            "offset": c.offset,
            "open": c.open,
        }
    if isinstance(c, Ball):
        return {
            "type": "ball",
            "norm": c.norm,
            "center": [float(v) for v in c.center],
            "radius": c.radius,
            "open": c.open,
        }
    if isinstance(c, HPolytope):
        return {
            "type": "polytope",
            "halfspaces": [set_to_json(h) for h in c.halfspaces],
            **({"dim": c.space_dim} if not c.halfspaces else {}),
        }
    if isinstance(c, Intersection):
        return {"type": "intersection", "members": [set_to_json(m) for m in c.members]}
    if isinstance(c, Translate):
        return {
            "type": "translate",
            "inner": set_to_json(c.inner),
            "shift": [float(v) for v in c.shift],
        }
    if isinstance(c, Dilate):
        return {"type": "dilate", "inner": set_to_json(c.inner), "factor": c.factor}
    raise TypeError(f"not a convex set: {c!r}")


def set_from_json(obj: dict):
    kind = obj.get("type")
    if kind == "halfspace":
        return HalfSpace(np.array(obj["normal"]), obj["offset"], obj.get("open", False))
    if kind == "ball":
        return Ball(
            np.array(obj["center"]), obj["radius"], obj.get("norm", "l2"), obj.get("open", False)
        )
    if kind == "polytope":
        faces = tuple(set_from_json(h) for h in obj["halfspaces"])
        return HPolytope(faces, space_dim=obj.get("dim"))
    if kind == "intersection":
        return Intersection(tuple(set_from_json(m) for m in obj["members"]))
    if kind == "translate":
        return Translate(set_from_json(obj["inner"]), np.array(obj["shift"]))
    if kind == "dilate":
        return Dilate(set_from_json(obj["inner"]), obj["factor"])
    raise ValueError(f"unknown set type {kind!r}")


def interval(lo: float, hi: float, lo_open: bool = False, hi_open: bool = False) -> ConvexSet:
    """The 1-d set between lo and hi; infinite bounds drop the constraint."""
    faces = []
    if lo > -POS_INF:
        faces.append(HalfSpace(np.array([-1.0]), -lo, open=lo_open))
    if hi < POS_INF:
        faces.append(HalfSpace(np.array([1.0]), hi, open=hi_open))
    if not faces:
        return HPolytope((), space_dim=1)
    if any(f.open for f in faces):
        return Intersection(tuple(faces))
    return HPolytope(tuple(faces))


def interval_bounds(c) -> tuple[float, float] | None:
    """(lo, hi) bounds of a 1-d interval-like set, or None if not recognized.

    Openness of the endpoints is not reported; the exact-Gaussian path that
    uses this does not distinguish it.
    """
    if c.dim != 1:
        return None
    if isinstance(c, HalfSpace):
        a = float(c.normal[0])
        b = c.offset / a
        return (-POS_INF, b) if a > 0 else (b, POS_INF)
    if isinstance(c, Ball):
        m = float(c.center[0])
        return (m - c.radius, m + c.radius)
    if isinstance(c, (HPolytope, Intersection)):
        members = c.halfspaces if isinstance(c, HPolytope) else c.members
        lo, hi = -POS_INF, POS_INF
        for m in members:
            b = interval_bounds(m)
            if b is None:
                return None
            lo, hi = max(lo, b[0]), min(hi, b[1])
        return (lo, hi)
    if isinstance(c, Translate):
        b = interval_bounds(c.inner)
        if b is None:
            return None
        s = float(c.shift[0])
        return (b[0] + s, b[1] + s)
    if isinstance(c, Dilate):
        b = interval_bounds(c.inner)
        if b is None:
            return None
        t = c.factor
        lo, hi = b[0] * t, b[1] * t
        return (lo, hi) if t > 0 else (hi, lo)
    return None

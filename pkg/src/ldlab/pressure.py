"""The pressure (log moment generating function) of the input laws.

Atomic laws are evaluated exactly by log-space accumulation, Gaussians and
products in closed form.  All built-in laws have an everywhere-finite
pressure; the extended-real codomain is kept so that heavy-tailed laws can
be added without changing the interface.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch
from .grids import GridFunction, GridSpec
from .measures import Atomic, AtomicMeasure, FiniteAlphabet, Gaussian, Product, exact_atomic, spec_dim

_CHUNK_ELEMENTS = 4_000_000


def pressure(spec, lam) -> float:
    """log E exp(<lam, X>) for a single dual vector lam."""
    lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    if lam.shape[0] != spec_dim(spec):
        raise DimensionMismatch(
            f"lambda has dimension {lam.shape[0]}, law has dimension {spec_dim(spec)}"
        )
    if isinstance(spec, Gaussian):
        return float(lam @ spec.mean + 0.5 * (spec.var * lam * lam).sum())
    if isinstance(spec, Product):
        return float(sum(pressure(f, lam[i : i + 1]) for i, f in enumerate(spec.factors)))
    mu = exact_atomic(spec)
    scores = mu.points @ lam + mu.log_weights
    m = scores.max()
    return float(m + np.log(np.exp(scores - m).sum()))


def pressure_grid(spec, grid: GridSpec) -> GridFunction:
    """Tabulate the pressure at every lattice point of the dual grid."""
    if grid.dim != spec_dim(spec):
        raise DimensionMismatch(
            f"grid has dimension {grid.dim}, law has dimension {spec_dim(spec)}"
        )
    if isinstance(spec, Gaussian):
        lams = grid.points()
        vals = lams @ spec.mean + 0.5 * (lams * lams) @ spec.var
        return GridFunction(grid, vals)
    if isinstance(spec, Product):
        # separable: tabulate each factor on its own axis and broadcast-add
        vals = np.zeros(grid.shape)
        for i, f in enumerate(spec.factors):
            axis = GridSpec((grid.axes[i],))
            contrib = pressure_grid(f, axis).values
            shape = [1] * grid.dim
            shape[i] = grid.shape[i]
            vals = vals + contrib.reshape(shape)
        return GridFunction(grid, vals)
    mu = exact_atomic(spec)
    lams = grid.points()
    out = np.empty(lams.shape[0])
    step = max(1, _CHUNK_ELEMENTS // max(1, mu.atom_count))
    for start in range(0, lams.shape[0], step):
        block = lams[start : start + step]
        scores = block @ mu.points.T + mu.log_weights[None, :]
        m = scores.max(axis=1)
        out[start : start + block.shape[0]] = m + np.log(
            np.exp(scores - m[:, None]).sum(axis=1)
        )
    return GridFunction(grid, out.reshape(grid.shape))

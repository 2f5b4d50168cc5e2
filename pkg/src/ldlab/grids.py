"""Rectangular grids and extended-real-valued grid functions.

Grids carry the tabulated pressure, its conjugate, the rate function and
test functions.  A grid function serializes as a JSON header describing the
lattice plus a row-major CSV of values, with infinities written as the
tokens "+inf" / "-inf".
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded
from .extmath import NEG_INF, POS_INF

DEFAULT_GRID_BUDGET = 2_000_000

_AXIS_RE = re.compile(r"^\[([^,\]]+),([^,\]]+)\]x(\d+)$")


@dataclass(frozen=True)
class GridSpec:
    """Uniform rectangular lattice, one (lo, hi, count) triple per axis."""

    axes: tuple[tuple[float, float, int], ...]
    budget: int = DEFAULT_GRID_BUDGET

    def __post_init__(self):
        axes = tuple((float(lo), float(hi), int(count)) for lo, hi, count in self.axes)
        if not axes:
            raise ValueError("grid needs at least one axis")
        for lo, hi, count in axes:
            if not lo < hi:
                raise ValueError(f"axis bounds must satisfy lo < hi, got [{lo}, {hi}]")
            if count < 2:
                raise ValueError(f"axis needs at least 2 points, got {count}")
        object.__setattr__(self, "axes", axes)
        if self.size > self.budget:
            raise BudgetExceeded(
                f"grid has {self.size} points, budget is {self.budget}"
            )

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(count for _, _, count in self.axes)

    @property
    def size(self) -> int:
        n = 1
        for _, _, count in self.axes:
            n *= count
        return n

    def axis_points(self, i: int) -> np.ndarray:
        lo, hi, count = self.axes[i]
        return np.linspace(lo, hi, count)

    def spacing(self, i: int) -> float:
        lo, hi, count = self.axes[i]
        return (hi - lo) / (count - 1)

    def points(self) -> np.ndarray:
        """All lattice points, row-major, as an (size, dim) array."""
        mesh = np.meshgrid(*(self.axis_points(i) for i in range(self.dim)), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @classmethod
    def parse(cls, text: str, budget: int = DEFAULT_GRID_BUDGET) -> "GridSpec":
        """Parse "[lo,hi]xN" per axis, axes joined with the multiplication sign."""
        axes = []
        for part in text.replace("×", "\n").splitlines():
            part = part.strip()
            m = _AXIS_RE.match(part)
            if m is None:
                raise ValueError(f"cannot parse grid axis {part!r}")
            axes.append((float(m.group(1)), float(m.group(2)), int(m.group(3))))
        return cls(tuple(axes), budget=budget)

    def to_string(self) -> str:
        return "×".join(f"[{lo:g},{hi:g}]x{count}" for lo, hi, count in self.axes)

    def to_json(self) -> dict:
        return {"axes": [{"lo": lo, "hi": hi, "count": count} for lo, hi, count in self.axes]}

    @classmethod
    def from_json(cls, obj: dict) -> "GridSpec":
        return cls(tuple((a["lo"], a["hi"], a["count"]) for a in obj["axes"]))


def _format_value(x: float) -> str:
    if x == POS_INF:
        return "+inf"
    if x == NEG_INF:
        return "-inf"
    return repr(float(x))


def _parse_value(tok: str) -> float:
    tok = tok.strip()
    if tok == "+inf":
        return POS_INF
    if tok == "-inf":
        return NEG_INF
    return float(tok)


@dataclass(frozen=True)
class GridFunction:
    """Extended-real values tabulated on a GridSpec, stored in grid shape."""

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            vals = vals.reshape(self.grid.shape)
        if np.isnan(vals).any():
            raise ValueError("grid function values must not contain NaN")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def flat(self) -> np.ndarray:
        """Row-major view of the values."""
        return self.values.ravel()

    def save(self, base_path: str) -> tuple[str, str]:
        """Write <base>.grid.json and <base>.csv atomically; return the paths."""
        header_path = base_path + ".grid.json"
        csv_path = base_path + ".csv"
        _atomic_write(header_path, json.dumps(self.grid.to_json(), indent=2, sort_keys=True) + "\n")
        rows = self.values.reshape(-1, self.grid.shape[-1])
        lines = [",".join(_format_value(v) for v in row) for row in rows]
        _atomic_write(csv_path, "\n".join(lines) + "\n")
        return header_path, csv_path

    @classmethod
    def load(cls, base_path: str) -> "GridFunction":
        with open(base_path + ".grid.json") as fh:
            grid = GridSpec.from_json(json.load(fh))
        values = []
        with open(base_path + ".csv") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    values.extend(_parse_value(tok) for tok in line.split(","))
        return cls(grid, np.array(values).reshape(grid.shape))


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

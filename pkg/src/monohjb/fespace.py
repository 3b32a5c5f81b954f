"""Discrete function space: nodal values over (mesh vertices) x (control levels).

A grid function is piecewise linear in space at each control level; control
levels are always handled by index, never by floating value, so admissible-set
membership is exact.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionMismatchError
from .mesh import Triangulation, locate

_INV_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ControlGrid:
    h: float
    m: int                 # 1/h
    levels: np.ndarray     # (m+1,), 0 = a_0 < ... < a_m = 1

    @property
    def n_levels(self) -> int:
        return self.m + 1


def control_grid(h: float) -> ControlGrid:
    """Equispaced control levels {i*h}; requires 1/h to be an integer."""
    if h <= 0:
        raise ConfigurationError(f"control step must be positive, got {h}")
    inv = 1.0 / h
    m = int(round(inv))
    if m < 1 or abs(inv - m) > _INV_TOL:
        raise ConfigurationError(f"1/h must be an integer, got 1/{h} = {inv}")
    return ControlGrid(h=float(h), m=m, levels=np.linspace(0.0, 1.0, m + 1))


def admissible(grid: ControlGrid, a_index: int) -> range:
    """Indices of control levels at or above level a_index (never decrease)."""
    if not 0 <= a_index <= grid.m:
        raise ConfigurationError(f"control index {a_index} outside 0..{grid.m}")
    return range(a_index, grid.m + 1)


def level_index(grid: ControlGrid, a: float) -> int:
    """Map a control value to its grid index; the value must sit on the grid."""
    idx = int(round(a / grid.h))
    if not 0 <= idx <= grid.m or abs(a - idx * grid.h) > _INV_TOL:
        raise ConfigurationError(f"control value {a} is not a grid level (h={grid.h})")
    return idx


@dataclass(eq=False)
class GridFunction:
    values: np.ndarray  # (n_vertices, n_levels)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise DimensionMismatchError("grid function values must be 2-d")
        if not np.all(np.isfinite(self.values)):
            raise DimensionMismatchError("grid function values must be finite")

    @classmethod
    def zeros(cls, tri: Triangulation, grid: ControlGrid) -> "GridFunction":
        return cls(np.zeros((tri.n_vertices, grid.n_levels)))

    @classmethod
    def from_callable(cls, tri: Triangulation, grid: ControlGrid, fn) -> "GridFunction":
        vals = np.array(
            [[fn(x, float(a)) for a in grid.levels] for x in tri.vertices]
        )
        return cls(vals)

    def copy(self) -> "GridFunction":
        return GridFunction(self.values.copy())


def evaluate(gf: GridFunction, tri: Triangulation, p, level_idx: int) -> float:
    """Barycentric interpolation of the nodal values at one control level."""
    bc = locate(tri, p)
    return float(bc.weights @ gf.values[bc.vertex_indices, level_idx])


def sup_norm(gf: GridFunction) -> float:
    return float(np.abs(gf.values).max())


def sup_norm_diff(gf1: GridFunction, gf2: GridFunction) -> float:
    if gf1.values.shape != gf2.values.shape:
        raise DimensionMismatchError(
            f"shape mismatch: {gf1.values.shape} vs {gf2.values.shape}"
        )
    return float(np.abs(gf1.values - gf2.values).max())


def nodal_csv(gf: GridFunction, tri: Triangulation, grid: ControlGrid) -> str:
    """Dump nodal values as CSV: node,x1,...,a,value (17 significant digits)."""
    coord_names = ",".join(f"x{i + 1}" for i in range(tri.dim))
    out = io.StringIO()
    out.write(f"node,{coord_names},a,value\n")
    for i, x in enumerate(tri.vertices):
        coords = ",".join(f"{c:.17g}" for c in x)
        for j, a in enumerate(grid.levels):
            out.write(f"{i},{coords},{a:.17g},{gf.values[i, j]:.17g}\n")
    return out.getvalue()

"""Uniform simplicial triangulation of a box domain.

The mesh covers the inner box obtained by shrinking the domain by one cell
width k per side.  Each grid cell is split into nu! simplices by the
Kuhn/Freudenthal rule, which in 2-D is the main-diagonal split of every
square.  Simplex diameters are measured in the max norm, so every simplex of
the uniform grid has diameter exactly k.

Point location is O(1): cell arithmetic plus a coordinate sort that
identifies the Kuhn simplex and yields the barycentric weights directly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import MeshConstructionError, OutOfDomainError
from .problem import ProblemSpec

_COMMENSURATE_TOL = 1e-9


@dataclass(eq=False)
class Triangulation:
    k: float
    domain: tuple[np.ndarray, np.ndarray]
    lower: np.ndarray          # corner of the inner box omega_k
    upper: np.ndarray
    cells_per_axis: np.ndarray  # int, shape (nu,)
    vertices: np.ndarray        # (N, nu), lexicographic by grid index
    simplices: np.ndarray       # (S, nu+1) vertex indices

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def nodes_per_axis(self) -> tuple:
        return tuple(int(c) + 1 for c in self.cells_per_axis)

    @property
    def snap_tolerance(self) -> float:
        return 1e-9 * self.k


@dataclass
class BarycentricCoords:
    simplex: int
    vertex_indices: np.ndarray  # (nu+1,) int
    weights: np.ndarray         # (nu+1,) float, nonnegative, summing to 1


@dataclass
class MeshReport:
    hip1_ok: bool
    hip2_ok: bool
    h: float
    control_levels: np.ndarray
    hip3_margin: float
    chi1: float
    k_over_d_max: float


def snap_mesh_size(domain, k: float) -> float:
    """Round k to the nearest value commensurate with the domain widths."""
    lower = np.asarray(domain[0], dtype=float)
    upper = np.asarray(domain[1], dtype=float)
    widths = upper - lower
    n = max(3, int(round(float(np.min(widths)) / k)))
    return float(np.min(widths)) / n


def build_uniform(domain, k: float) -> Triangulation:
    """Uniform Kuhn triangulation of the inner box [lower+k, upper-k]."""
    lower = np.asarray(domain[0], dtype=float)
    upper = np.asarray(domain[1], dtype=float)
    if k <= 0:
        raise MeshConstructionError(f"mesh size must be positive, got {k}")
    widths = upper - lower
    nu = lower.shape[0]
    cells = np.empty(nu, dtype=int)
    for ax in range(nu):
        inner = widths[ax] - 2.0 * k
        if inner <= 0:
            raise MeshConstructionError(
                f"mesh size k={k} leaves an empty inner box on axis {ax}"
            )
        ratio = inner / k
        n = int(round(ratio))
        if n < 1 or abs(ratio - n) > _COMMENSURATE_TOL * max(1.0, ratio):
            raise MeshConstructionError(
                f"k={k} is not commensurate with axis {ax} width {widths[ax]}"
                " (use the snap-k option to round it)"
            )
        cells[ax] = n

    axes = [lower[ax] + k * np.arange(1, cells[ax] + 2) for ax in range(nu)]
    om_lower = np.array([a[0] for a in axes])
    om_upper = np.array([a[-1] for a in axes])

    grids = np.meshgrid(*axes, indexing="ij")
    vertices = np.stack([g.ravel(order="C") for g in grids], axis=1)

    nodes_shape = tuple(int(c) + 1 for c in cells)
    perms = list(itertools.permutations(range(nu)))
    simplices = []
    for cell in np.ndindex(*[int(c) for c in cells]):
        base = np.array(cell, dtype=int)
        for perm in perms:
            verts = [base.copy()]
            v = base.copy()
            for ax in perm:
                v = v.copy()
                v[ax] += 1
                verts.append(v)
            simplices.append(
                [int(np.ravel_multi_index(tuple(v), nodes_shape)) for v in verts]
            )

    return Triangulation(
        k=float(k),
        domain=(lower, upper),
        lower=om_lower,
        upper=om_upper,
        cells_per_axis=cells,
        vertices=vertices,
        simplices=np.asarray(simplices, dtype=int),
    )


def locate_many(tri: Triangulation, points: np.ndarray):
    """Vectorized point location.

    Returns (vertex index array (M, nu+1), weight array (M, nu+1),
    simplex id array (M,)).  Points within the snap tolerance outside the
    inner box are clamped; anything farther raises OutOfDomainError naming
    the offending coordinate.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    nu = tri.dim
    eps = tri.snap_tolerance
    below = tri.lower - P
    above = P - tri.upper
    bad = (below > eps) | (above > eps)
    if bad.any():
        row, ax = np.argwhere(bad)[0]
        raise OutOfDomainError(
            f"point {P[row]} lies outside the mesh box on axis {ax}: "
            f"coordinate {P[row, ax]!r} not in "
            f"[{tri.lower[ax]!r}, {tri.upper[ax]!r}]",
            point=P[row].copy(),
            axis=int(ax),
            context=int(row),
        )
    Pc = np.clip(P, tri.lower, tri.upper)
    q = (Pc - tri.lower) / tri.k
    cell = np.floor(q).astype(int)
    np.clip(cell, 0, tri.cells_per_axis - 1, out=cell)
    s = q - cell

    order = np.argsort(-s, axis=1, kind="stable")
    s_sorted = np.take_along_axis(s, order, axis=1)

    M = P.shape[0]
    W = np.empty((M, nu + 1))
    W[:, 0] = 1.0 - s_sorted[:, 0]
    if nu > 1:
        W[:, 1:nu] = s_sorted[:, :-1] - s_sorted[:, 1:]
    W[:, nu] = s_sorted[:, -1]
    np.clip(W, 0.0, None, out=W)

    V = np.empty((M, nu + 1, nu), dtype=int)
    V[:, 0] = cell
    rows = np.arange(M)
    for j in range(nu):
        V[:, j + 1] = V[:, j]
        V[rows, j + 1, order[:, j]] += 1
    idx = np.ravel_multi_index(tuple(np.moveaxis(V, 2, 0)), tri.nodes_per_axis)

    perm_rank = _perm_ranks(nu)
    ranks = np.array([perm_rank[tuple(o)] for o in order], dtype=int)
    cell_flat = np.ravel_multi_index(
        tuple(cell.T), tuple(int(c) for c in tri.cells_per_axis)
    )
    simplex_ids = cell_flat * math.factorial(nu) + ranks
    return idx, W, simplex_ids


def _perm_ranks(nu: int) -> dict:
    return {p: r for r, p in enumerate(itertools.permutations(range(nu)))}


def locate(tri: Triangulation, p) -> BarycentricCoords:
    idx, w, sid = locate_many(tri, np.asarray(p, dtype=float)[None, :])
    return BarycentricCoords(simplex=int(sid[0]), vertex_indices=idx[0], weights=w[0])


def _max_norm_diameters(tri: Triangulation) -> np.ndarray:
    verts = tri.vertices[tri.simplices]  # (S, nu+1, nu)
    d = np.zeros(verts.shape[0])
    n = verts.shape[1]
    for i in range(n):
        for j in range(i + 1, n):
            d = np.maximum(d, np.abs(verts[:, i] - verts[:, j]).max(axis=1))
    return d


def _euclidean_inradius(verts: np.ndarray) -> float:
    """Inradius of a single simplex given its (nu+1, nu) vertex array."""
    nu = verts.shape[1]
    if nu == 1:
        return abs(verts[1, 0] - verts[0, 0]) / 2.0
    edges = verts[1:] - verts[0]
    vol = abs(np.linalg.det(edges)) / math.factorial(nu)
    facet_area = 0.0
    for drop in range(nu + 1):
        f = np.delete(verts, drop, axis=0)
        e = f[1:] - f[0]
        gram = e @ e.T
        facet_area += math.sqrt(max(np.linalg.det(gram), 0.0)) / math.factorial(nu - 1)
    return nu * vol / facet_area


def check_hypotheses(
    tri: Triangulation,
    spec: ProblemSpec,
    h: float,
    control_levels: np.ndarray,
    compact: Optional[tuple] = None,
) -> MeshReport:
    """Validate the triangulation against the scheme's mesh hypotheses.

    hip2_ok tests exactly the points the Bellman operator evaluates: every
    vertex pushed one Euler step under every control level must stay inside
    the inner box.  hip3_margin is the distance from a user-supplied compact
    box to the inner-box boundary (by default the domain shrunk by the mesh
    inset, giving margin 0 at the limit; with no compact given we report the
    inset k itself, the distance from the inner box to the domain boundary).
    """
    if h <= 0:
        raise MeshConstructionError(f"time step must be positive, got {h}")
    diam = _max_norm_diameters(tri)
    hip1_ok = bool(abs(diam.max() - tri.k) <= 1e-12 * tri.k and np.all(diam <= tri.k * (1 + 1e-12)))

    eps = tri.snap_tolerance
    hip2_ok = True
    for a in np.asarray(control_levels, dtype=float):
        images = np.array(
            [tri.vertices[i] + h * np.asarray(spec.dynamics(tri.vertices[i], float(a)), dtype=float)
             for i in range(tri.n_vertices)]
        )
        if np.any(images < tri.lower - eps) or np.any(images > tri.upper + eps):
            hip2_ok = False
            break

    if compact is not None:
        c_lo = np.asarray(compact[0], dtype=float)
        c_hi = np.asarray(compact[1], dtype=float)
        hip3_margin = float(min(np.min(c_lo - tri.lower), np.min(tri.upper - c_hi)))
    else:
        hip3_margin = tri.k

    n_first = math.factorial(tri.dim)
    inradii = [_euclidean_inradius(tri.vertices[s]) for s in tri.simplices[:n_first]]
    chi1 = float(min(inradii) / tri.k)
    k_over_d_max = float((tri.k / diam).max())

    return MeshReport(
        hip1_ok=hip1_ok,
        hip2_ok=hip2_ok,
        h=h,
        control_levels=np.asarray(control_levels, dtype=float),
        hip3_margin=hip3_margin,
        chi1=chi1,
        k_over_d_max=k_over_d_max,
    )


def dump(tri: Triangulation) -> str:
    """Debug dump: one vertex per line 'i x1 x2', one simplex per line 'j v0 v1 v2'."""
    lines = []
    for i, v in enumerate(tri.vertices):
        lines.append(f"{i} " + " ".join(repr(float(c)) for c in v))
    for j, s in enumerate(tri.simplices):
        lines.append(f"{j} " + " ".join(str(int(v)) for v in s))
    return "\n".join(lines) + "\n"

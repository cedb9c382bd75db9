"""Model-error measurement between the reduced and the full solution.

The reduced model squeezes the physical strips onto the fault line, so its
matrix pressure field covers the whole rectangle except a measure-zero
line.  Injecting that piecewise-constant field onto the cells of the
layered reference mesh and taking an L2 difference against the reference
pressure gives the model error estimate; the difference between two
injections at consecutive mixed resolutions brackets the discretization
part, turning the estimate into a two-sided bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import MeshError, SimplicialMesh

__all__ = [
    "locate_cells",
    "inject_p0",
    "l2_norm",
    "ErrorBounds",
    "error_bounds",
]

_BARY_TOL = 1e-12


class _CellLocator:
    """Bin-accelerated point location in a simplicial mesh."""

    def __init__(self, mesh: SimplicialMesh):
        self.mesh = mesh
        self.dim = mesh.dim
        verts = mesh.vertices[:, : self.dim]
        cells = verts[mesh.cells]
        self.lo = cells.min(axis=1)
        self.hi = cells.max(axis=1)
        span = verts.max(axis=0) - verts.min(axis=0)
        span[span == 0] = 1.0
        n_bins = max(1, int(round(mesh.n_cells ** (1.0 / self.dim) / 2)))
        self.origin = verts.min(axis=0)
        self.width = span / n_bins
        self.n_bins = n_bins
        self.bins: dict[tuple, list[int]] = {}
        lo_idx = self._bin_index(self.lo)
        hi_idx = self._bin_index(self.hi)
        for c in range(mesh.n_cells):
            ranges = [
                range(lo_idx[c, d], hi_idx[c, d] + 1)
                for d in range(self.dim)
            ]
            grids = np.meshgrid(*ranges, indexing="ij")
            for key in zip(*(g.ravel() for g in grids)):
                self.bins.setdefault(key, []).append(c)

    def _bin_index(self, points):
        idx = np.floor((points - self.origin) / self.width).astype(int)
        return np.clip(idx, 0, self.n_bins - 1)

    def barycentric(self, cell: int, point: np.ndarray) -> np.ndarray:
        verts = self.mesh.vertices[self.mesh.cells[cell], : self.dim]
        T = (verts[1:] - verts[0]).T
        lam = np.linalg.solve(T, point - verts[0])
        return np.concatenate([[1.0 - lam.sum()], lam])

    def locate(self, point: np.ndarray) -> int:
        key = tuple(self._bin_index(point[None, :])[0])
        best = -1
        for c in self.bins.get(key, ()):
            if np.any(point < self.lo[c] - 1e-12):
                continue
            if np.any(point > self.hi[c] + 1e-12):
                continue
            if np.all(self.barycentric(c, point) >= -_BARY_TOL):
                if best < 0 or c < best:
                    best = c
        if best < 0:
            raise MeshError(
                f"point {tuple(point)} lies in no cell of the mesh"
            )
        return best


def locate_cells(mesh: SimplicialMesh, points) -> np.ndarray:
    """Containing cell of each point; points on shared faces resolve to
    the lowest adjacent cell index."""
    pts = np.asarray(points, dtype=float)[:, : mesh.dim]
    locator = _CellLocator(mesh)
    return np.array([locator.locate(p) for p in pts], dtype=np.int64)


def inject_p0(
    source_mesh: SimplicialMesh, values: np.ndarray, target_points
) -> np.ndarray:
    """Evaluate a piecewise-constant field at the given points."""
    values = np.asarray(values, dtype=float)
    if values.shape != (source_mesh.n_cells,):
        raise MeshError(
            f"field has shape {values.shape}, expected "
            f"({source_mesh.n_cells},)"
        )
    return values[locate_cells(source_mesh, target_points)]


def l2_norm(mesh: SimplicialMesh, cell_values) -> float:
    """L2 norm of a piecewise-constant field."""
    v = np.asarray(cell_values, dtype=float)
    return float(np.sqrt(np.sum(v * v * mesh.cell_measures)))


@dataclass
class ErrorBounds:
    """Model-error estimate with its discretization bracket.

    ``estimate`` is the distance between the injected reduced pressure and
    the reference pressure; ``gap`` the distance between two consecutive
    mixed resolutions after injection.  The true model error lies within
    [lower, upper] up to the reference discretization error.
    """

    estimate: float
    gap: float

    @property
    def lower(self) -> float:
        return max(self.estimate - self.gap, 0.0)

    @property
    def upper(self) -> float:
        return self.estimate + self.gap


def error_bounds(
    reference_mesh: SimplicialMesh,
    reference_pressure: np.ndarray,
    mixed_mesh: SimplicialMesh,
    mixed_pressure: np.ndarray,
    finer_mesh: SimplicialMesh,
    finer_pressure: np.ndarray,
) -> ErrorBounds:
    """Bracket the model error of one reduced solution.

    All three pressures are piecewise constant; the mixed ones live on
    (possibly different) matrix meshes and are compared on the cells of
    the reference mesh.
    """
    targets = reference_mesh.cell_centroids()
    injected = inject_p0(mixed_mesh, mixed_pressure, targets)
    injected_fine = inject_p0(finer_mesh, finer_pressure, targets)
    estimate = l2_norm(reference_mesh, injected - reference_pressure)
    gap = l2_norm(reference_mesh, injected_fine - injected)
    return ErrorBounds(estimate=estimate, gap=gap)

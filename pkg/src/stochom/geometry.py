"""Periodic fissure/matrix cell decomposition and its fine-scale embedding.

The unit cell Y = [0,1]^N is split into a fissure phase (1) and a matrix
phase (2) by a grid-resolved indicator.  The decomposition tiles the
macroscopic box Q with period eps^2, so a point x belongs to the phase of
(x / eps^2) mod 1 in the reference cell.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GeometryError(ValueError):
    pass


class CellDecomposition:
    """Grid-resolved indicator of the fissure phase on a K^N cell grid.

    ``indicator[idx]`` is True where the fissure phase (phase 1) occupies the
    half-open cell ``[i/K, (i+1)/K) x ...``.
    """

    def __init__(self, indicator: np.ndarray):
        indicator = np.asarray(indicator, dtype=bool)
        if indicator.ndim < 1:
            raise GeometryError("indicator must be an N-dimensional grid")
        if len(set(indicator.shape)) != 1:
            raise GeometryError("indicator grid must be cubic")
        self.indicator = indicator
        self.K = indicator.shape[0]
        self.dim = indicator.ndim

    @property
    def frac1(self) -> float:
        return float(np.count_nonzero(self.indicator)) / self.indicator.size

    @property
    def frac2(self) -> float:
        return 1.0 - self.frac1

    def volume_fraction(self, m: int) -> float:
        if m == 1:
            return self.frac1
        if m == 2:
            return self.frac2
        raise GeometryError(f"phase must be 1 or 2, got {m}")

    def chi(self, y: np.ndarray, m: int = 1) -> np.ndarray:
        """Indicator of phase m at Y-points (periodically extended)."""
        phases = self.phase_at(y)
        return (phases == m).astype(float)

    def phase_at(self, y: np.ndarray) -> np.ndarray:
        """Phase (1 or 2) of points in the reference cell, shape (P, N)."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        idx = np.floor(np.mod(y, 1.0) * self.K).astype(int)
        idx = np.clip(idx, 0, self.K - 1)
        vals = self.indicator[tuple(idx[:, ax] for ax in range(self.dim))]
        return np.where(vals, 1, 2)

    def phase1_connected(self) -> bool:
        """Face-adjacency connectivity of the fissure phase with periodic wrap."""
        return _connected_periodic(self.indicator)

    def phase2_connected(self) -> bool:
        return _connected_periodic(~self.indicator)

    # -- constructors ---------------------------------------------------------

    @classmethod
    def checkerboard(cls, K: int, dim: int = 2) -> "CellDecomposition":
        """chi1 = 1 on the two diagonal half-cells.  Only corner-connected."""
        if K % 2:
            raise GeometryError("checkerboard needs an even grid")
        grids = np.meshgrid(*([np.arange(K)] * dim), indexing="ij")
        parity = sum((2 * g) // K for g in grids) % 2
        return cls(parity == 0)

    @classmethod
    def stripe(cls, fraction: float, K: int, dim: int = 2, axis: int = 0) -> "CellDecomposition":
        """chi1 = 1 where y_axis < fraction; connected for 0 < fraction < 1."""
        if not 0.0 < fraction < 1.0:
            raise GeometryError("stripe fraction must lie in (0,1)")
        grids = np.meshgrid(*([np.arange(K)] * dim), indexing="ij")
        centers = (grids[axis] + 0.5) / K
        return cls(centers < fraction)

    @classmethod
    def inclusion(cls, radius: float, K: int, dim: int = 2) -> "CellDecomposition":
        """Matrix phase is a centered ball; the connected complement is chi1."""
        if not 0.0 < radius < 0.5:
            raise GeometryError("inclusion radius must lie in (0, 0.5)")
        grids = np.meshgrid(*([(np.arange(K) + 0.5) / K] * dim), indexing="ij")
        r2 = sum((g - 0.5) ** 2 for g in grids)
        return cls(r2 > radius**2)

    @classmethod
    def from_text(cls, path) -> "CellDecomposition":
        """Plain-text raster: first token K, then K^N zeros/ones row-major."""
        with open(path) as fh:
            tokens = fh.read().split()
        K = int(tokens[0])
        flat = np.array([int(t) for t in tokens[1:]], dtype=int)
        dim = round(np.log(flat.size) / np.log(K)) if K > 1 else 1
        if K**dim != flat.size:
            raise GeometryError("token count is not K^N")
        if not np.all((flat == 0) | (flat == 1)):
            raise GeometryError("raster entries must be 0 or 1")
        return cls(flat.reshape((K,) * dim).astype(bool))

    def to_text(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"{self.K}\n")
            flat = self.indicator.astype(int).ravel()
            for row in flat.reshape(-1, self.K):
                fh.write(" ".join(map(str, row)) + "\n")


def _connected_periodic(mask: np.ndarray) -> bool:
    """Flood fill under face adjacency with periodic wrap."""
    total = int(np.count_nonzero(mask))
    if total == 0:
        return False
    start = tuple(np.argwhere(mask)[0])
    seen = np.zeros_like(mask, dtype=bool)
    seen[start] = True
    stack = [start]
    K = mask.shape[0]
    dim = mask.ndim
    while stack:
        idx = stack.pop()
        for ax in range(dim):
            for step in (-1, 1):
                nxt = list(idx)
                nxt[ax] = (nxt[ax] + step) % K
                nxt = tuple(nxt)
                if mask[nxt] and not seen[nxt]:
                    seen[nxt] = True
                    stack.append(nxt)
    return int(np.count_nonzero(seen)) == total


@dataclass(frozen=True)
class Box:
    """Axis-aligned macroscopic domain Q."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        if np.any(self.hi <= self.lo):
            raise GeometryError("box must have positive extent")

    @classmethod
    def unit(cls, dim: int) -> "Box":
        return cls(np.zeros(dim), np.ones(dim))

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.all((x >= self.lo - 1e-14) & (x <= self.hi + 1e-14), axis=1)

    def midpoint_grid(self, res: int) -> np.ndarray:
        """Midpoint quadrature nodes, shape (res^N, N)."""
        axes = [
            self.lo[ax] + (np.arange(res) + 0.5) * (self.hi[ax] - self.lo[ax]) / res
            for ax in range(self.dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(frozen=True)
class ScaledGeometry:
    """The cell decomposition scaled by eps^2 onto the box Q."""

    eps: float
    domain: Box
    cells: CellDecomposition

    def __post_init__(self):
        if not 0.0 < self.eps <= 1.0:
            raise GeometryError("eps must lie in (0, 1]")
        if self.domain.dim != self.cells.dim:
            raise GeometryError("domain and cell dimensions differ")

    @property
    def period(self) -> float:
        return self.eps**2

    def classify(self, x: np.ndarray) -> np.ndarray:
        """Phase of macroscopic points; raises if any point leaves Q."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if not np.all(self.domain.contains(x)):
            raise GeometryError("point outside the domain Q")
        return self.cells.phase_at(np.mod(x / self.period, 1.0))

    def min_resolution(self) -> int:
        """Smallest quadrature resolution giving 4 points per eps^2 cell per axis."""
        extent = float(np.max(self.domain.hi - self.domain.lo))
        return int(np.ceil(4.0 * extent / self.period))

    def phase_fraction_in_Q(self, m: int, resolution: int) -> float:
        """Midpoint-quadrature measure of phase m relative to |Q|."""
        if resolution < self.min_resolution():
            raise GeometryError(
                f"quadrature resolution {resolution} under-resolves the "
                f"eps^2 = {self.period} cells (need >= {self.min_resolution()})"
            )
        pts = self.domain.midpoint_grid(resolution)
        phases = self.classify(pts)
        return float(np.count_nonzero(phases == m)) / phases.size

"""Uniform one-dimensional state grids shared by the game and wave modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, OffGridImage

_UNIFORMITY_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class StateGrid:
    """Strictly increasing, uniformly spaced real nodes."""

    nodes: np.ndarray

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise DimensionMismatch("grid needs a 1-d array of at least two nodes")
        steps = np.diff(nodes)
        if np.any(steps <= 0.0):
            raise ValueError("grid nodes must be strictly increasing")
        if np.max(np.abs(steps - steps[0])) > _UNIFORMITY_ATOL * max(1.0, abs(steps[0])):
            raise ValueError("grid nodes must be uniformly spaced")
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def from_range(cls, start: float, stop: float, count: int) -> "StateGrid":
        return cls(np.linspace(float(start), float(stop), int(count)))

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    @property
    def dx(self) -> float:
        return float(self.nodes[1] - self.nodes[0])

    @property
    def x0(self) -> float:
        return float(self.nodes[0])

    @property
    def length(self) -> float:
        """Periodic extent: one spacing past the last node."""
        return self.size * self.dx

    def snap_index(self, x: float, wrap: bool = False) -> int:
        """Index of the node nearest to ``x``; the image must land within dx/2.

        With ``wrap`` the grid is treated as periodic: images beyond either
        end map around, but off-lattice images still fail the dx/2 test.
        """
        return int(self.snap_indices(np.array([float(x)]), wrap=wrap)[0])

    def snap_indices(self, xs: np.ndarray, wrap: bool = False) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        ks = np.rint((xs - self.x0) / self.dx).astype(int)
        off = np.abs(xs - (self.x0 + ks * self.dx)) > 0.5 * self.dx * (1.0 + 1e-9)
        if np.any(off):
            raise OffGridImage(
                f"image {xs[off][0]!r} is farther than dx/2 from any node"
            )
        if wrap:
            return np.mod(ks, self.size)
        if np.any(ks < 0) or np.any(ks >= self.size):
            bad = xs[(ks < 0) | (ks >= self.size)][0]
            raise OffGridImage(f"image {bad!r} falls outside the grid")
        return ks

    def wavenumbers(self) -> np.ndarray:
        """Momentum-lattice wavenumbers in FFT order for the periodic grid."""
        return 2.0 * np.pi * np.fft.fftfreq(self.size, d=self.dx)

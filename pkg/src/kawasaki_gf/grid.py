"""Periodic grids and grid-sampled fields."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, InputError
from .geometry import Torus
from .kernels import PairKernel, min_image


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``n`` nodes per axis at ``x_j = j * h``."""

    torus: Torus
    n: int

    def __post_init__(self):
        if self.n < 8 or self.n & (self.n - 1):
            raise ConfigurationError(f"grid size must be a power of two >= 8, got {self.n}")

    @property
    def d(self) -> int:
        return self.torus.d

    @property
    def L(self) -> float:
        return self.torus.L

    @property
    def h(self) -> float:
        return self.torus.L / self.n

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.d

    @cached_property
    def axis(self) -> np.ndarray:
        return np.arange(self.n) * self.h

    @cached_property
    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``shape + (d,)``."""
        mesh = np.meshgrid(*([self.axis] * self.d), indexing="ij")
        return np.stack(mesh, axis=-1)

    def nearest_index(self, points) -> tuple:
        """Index tuple of the nearest grid node for each point (periodic)."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.d)
        idx = np.rint(pts / self.h).astype(int) % self.n
        return tuple(idx[:, k] for k in range(self.d))

    def sample_kernel(self, kernel: PairKernel) -> np.ndarray:
        """Kernel values at the minimum-image offsets of the grid nodes."""
        if kernel.d != self.d or kernel.L != self.L:
            raise InputError("kernel and grid live on different tori")
        return kernel.evaluate(min_image(self.coords, self.L))

    def wave_numbers(self) -> np.ndarray:
        """Angular wave numbers of the DFT modes, shape ``shape + (d,)``."""
        k1 = 2 * np.pi * np.fft.fftfreq(self.n, d=self.h)
        mesh = np.meshgrid(*([k1] * self.d), indexing="ij")
        return np.stack(mesh, axis=-1)


@dataclass
class DensityField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise InputError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        self.values = v

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "DensityField":
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def gaussian_bump(cls, grid: Grid, center, width: float, height: float,
                      baseline: float = 0.0) -> "DensityField":
        c = np.broadcast_to(np.asarray(center, dtype=float), (grid.d,))
        r2 = np.sum(min_image(grid.coords - c, grid.L) ** 2, axis=-1)
        return cls(grid, baseline + height * np.exp(-0.5 * r2 / width**2))

    @classmethod
    def from_spec(cls, grid: Grid, spec: Mapping) -> "DensityField":
        """Build from ``{"type": "constant", "value": c}`` or a gaussian-bump spec."""
        kind = spec.get("type")
        try:
            if kind == "constant":
                return cls.constant(grid, spec["value"])
            if kind == "gaussian-bump":
                return cls.gaussian_bump(grid, spec["center"], spec["width"],
                                         spec["height"], spec.get("baseline", 0.0))
        except KeyError as exc:
            raise ConfigurationError(f"rho0 spec missing key {exc.args[0]!r}") from None
        raise ConfigurationError(f"unknown rho0 type {kind!r}")

    def integral(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_volume)

    def max(self) -> float:
        return float(np.max(self.values))

    def min(self) -> float:
        return float(np.min(self.values))

    def at(self, points) -> np.ndarray:
        """Nearest-node values at arbitrary points."""
        return self.values[self.grid.nearest_index(points)]

    def copy(self) -> "DensityField":
        return DensityField(self.grid, self.values.copy())

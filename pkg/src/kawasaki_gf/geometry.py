"""Torus geometry, finite configurations, relative energy and Poisson sampling."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InputError
from .kernels import PairKernel, min_image


@dataclass(frozen=True)
class Torus:
    d: int
    L: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ConfigurationError(f"torus dimension must be 1, 2 or 3, got {self.d}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise ConfigurationError(f"torus side must be positive, got {self.L}")

    @property
    def volume(self) -> float:
        return self.L**self.d

    def wrap(self, x):
        """Map positions into [0, L)."""
        x = np.mod(np.asarray(x, dtype=float), self.L)
        # fmod of a tiny negative number can round up to exactly L
        return np.where(x >= self.L, 0.0, x)

    def displacement(self, x, y):
        """Minimum-image displacement y - x, componentwise in [-L/2, L/2)."""
        return min_image(np.asarray(y, dtype=float) - np.asarray(x, dtype=float), self.L)


def min_image_displacement(torus: Torus, x, y):
    return torus.displacement(x, y)


@dataclass
class Configuration:
    """Finite point set on a torus; points are stored as an (N, d) array."""

    points: np.ndarray
    torus: Torus

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, self.torus.d)
        if pts.ndim == 1 and self.torus.d == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] != self.torus.d:
            raise InputError(f"points must have shape (N, {self.torus.d}), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InputError("points must be finite")
        if np.any(pts < 0) or np.any(pts >= self.torus.L):
            raise InputError(f"points must lie in [0, {self.torus.L})")
        self.points = np.array(pts)

    @classmethod
    def empty(cls, torus: Torus) -> "Configuration":
        return cls(np.zeros((0, torus.d)), torus)

    @classmethod
    def wrapped(cls, points, torus: Torus) -> "Configuration":
        return cls(torus.wrap(points), torus)

    def __len__(self) -> int:
        return self.points.shape[0]

    def copy(self) -> "Configuration":
        return Configuration(self.points.copy(), self.torus)

    def subset(self, indices) -> "Configuration":
        # a subset of a valid configuration is valid, so validation is skipped
        out = object.__new__(Configuration)
        out.points = self.points[np.asarray(indices, dtype=int)].reshape(-1, self.torus.d)
        out.torus = self.torus
        return out

    def with_point(self, z) -> "Configuration":
        z = np.asarray(z, dtype=float).reshape(1, self.torus.d)
        return Configuration(np.vstack([self.points, z]), self.torus)

    def to_csv(self, path) -> None:
        """One row per point; a leading comment line records d and L."""
        d = self.torus.d
        with open(path, "w", newline="") as fh:
            fh.write(f"# d={d},L={self.torus.L!r}\n")
            w = csv.writer(fh)
            w.writerow([f"x{i + 1}" for i in range(d)])
            for p in self.points:
                w.writerow([format(v, ".17g") for v in p])

    @classmethod
    def from_csv(cls, path) -> "Configuration":
        text = Path(path).read_text().splitlines()
        if not text or not text[0].startswith("#"):
            raise InputError("configuration CSV must start with a '# d=...,L=...' line")
        meta = dict(item.split("=") for item in text[0][1:].strip().split(","))
        torus = Torus(int(meta["d"]), float(meta["L"]))
        rows = list(csv.reader(text[2:]))
        pts = np.array([[float(v) for v in r] for r in rows if r]).reshape(-1, torus.d)
        return cls(pts, torus)


class CellList:
    """Uniform cell grid over the torus with cell side >= ``cutoff``.

    Supports O(1) point moves so it can track a configuration that is being
    mutated by a simulation.
    """

    def __init__(self, config: Configuration, cutoff: float):
        if cutoff <= 0:
            raise ConfigurationError("cell-list cutoff must be positive")
        self.torus = config.torus
        self.n_cells = max(1, int(math.floor(self.torus.L / cutoff)))
        self.side = self.torus.L / self.n_cells
        self.cells: dict[tuple, list[int]] = {}
        self.cell_of: list[tuple] = []
        for i, p in enumerate(config.points):
            c = self._cell(p)
            self.cell_of.append(c)
            self.cells.setdefault(c, []).append(i)
        d = self.torus.d
        shifts = set()
        for off in itertools.product((-1, 0, 1), repeat=d):
            shifts.add(tuple(o % self.n_cells for o in off))
        self._shifts = sorted(shifts)

    def _cell(self, p) -> tuple:
        idx = np.floor(np.asarray(p) / self.side).astype(int) % self.n_cells
        return tuple(int(i) for i in idx)

    def __len__(self) -> int:
        return len(self.cell_of)

    def neighbors(self, y) -> np.ndarray:
        """Sorted indices of points in the cell of ``y`` and adjacent cells."""
        c = self._cell(y)
        out: list[int] = []
        for s in self._shifts:
            key = tuple((ci + si) % self.n_cells for ci, si in zip(c, s))
            out.extend(self.cells.get(key, ()))
        return np.array(sorted(out), dtype=int)

    def move(self, i: int, new_position) -> None:
        old = self.cell_of[i]
        new = self._cell(new_position)
        if new != old:
            self.cells[old].remove(i)
            self.cells.setdefault(new, []).append(i)
            self.cell_of[i] = new


def relative_energy(config: Configuration, y, phi: PairKernel,
                    cells: CellList | None = None) -> float:
    """Sum over x in the configuration of phi(x - y).

    With a cell list, only points in neighbouring cells are visited; this is
    exact for compactly supported phi because the cell side is at least the
    support radius.
    """
    if phi.is_zero or len(config) == 0:
        return 0.0
    pts = config.points
    if cells is not None:
        idx = cells.neighbors(y)
        if idx.size == 0:
            return 0.0
        pts = pts[idx]
    disp = min_image(pts - np.asarray(y, dtype=float), config.torus.L)
    return float(np.sum(phi.evaluate(disp)))


def build_cell_list(config: Configuration, phi: PairKernel) -> CellList | None:
    """Cell list for compactly supported, nonzero phi; None otherwise."""
    if phi.is_zero or phi.support_radius is None:
        return None
    cl = CellList(config, phi.support_radius)
    return cl if cl.n_cells >= 3 else None


def poisson_sample(torus: Torus, intensity, rng: np.random.Generator) -> Configuration:
    """Poisson point process with the given intensity.

    ``intensity`` is a nonnegative constant or a DensityField, read as piecewise
    constant on the cells centred at grid nodes. Points are proposed uniformly
    at the maximal intensity and thinned cell-wise.
    """
    if np.isscalar(intensity):
        c = float(intensity)
        if not math.isfinite(c) or c < 0:
            raise InputError("intensity must be a finite nonnegative number")
        n = rng.poisson(c * torus.volume)
        return Configuration(torus.wrap(rng.random((n, torus.d)) * torus.L), torus)
    values = np.asarray(intensity.values)
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise InputError("intensity must be finite and nonnegative")
    top = float(values.max())
    if top == 0.0:
        return Configuration.empty(torus)
    n = rng.poisson(top * torus.volume)
    pts = torus.wrap(rng.random((n, torus.d)) * torus.L)
    keep = rng.random(n) * top < intensity.at(pts)
    return Configuration(pts[keep], torus)

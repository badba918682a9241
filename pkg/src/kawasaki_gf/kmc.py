"""Exact continuous-time simulation of Kawasaki hopping by Poisson-clock thinning.

A particle at ``x`` hops to ``y`` at rate ``a(x - y) * exp(-eps * E(y, gamma))``
where ``E(y, gamma)`` sums ``phi`` over the whole configuration, the hopping
particle included. Because ``phi >= 0`` the factor ``exp(-eps * E)`` is at most
one, so proposals drawn at total rate ``N * ||a||_1`` (particle uniform,
displacement from ``a / ||a||_1``) and accepted with that factor reproduce the
jump process exactly. The clock advances on rejected proposals too.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, StateError, StatisticsError
from .geometry import CellList, Configuration, build_cell_list, relative_energy
from .grid import DensityField, Grid
from .kernels import PairKernel


@dataclass
class Event:
    dt: float
    index: int
    proposal: np.ndarray
    accepted: bool


@dataclass
class Snapshot:
    time: float
    points: np.ndarray
    displacement: np.ndarray  # cumulative unwrapped displacement per particle
    proposed: int
    accepted: int

    def configuration(self, torus) -> Configuration:
        return Configuration(self.points, torus)


@dataclass
class KawasakiSystem:
    config: Configuration
    a: PairKernel
    phi: PairKernel
    rng: np.random.Generator
    epsilon: float = 1.0
    time: float = 0.0
    proposed: int = 0
    accepted: int = 0
    displacement: np.ndarray = field(default=None, repr=False)
    cells: CellList | None = field(default=None, repr=False)

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise InputError(f"epsilon must be positive, got {self.epsilon}")
        if self.a.is_zero:
            raise InputError("hopping kernel must be nonzero")
        d = self.config.torus.d
        for k in (self.a, self.phi):
            if k.d != d or k.L != self.config.torus.L:
                raise InputError("kernels and configuration live on different tori")
        if self.displacement is None:
            self.displacement = np.zeros_like(self.config.points)
        if self.cells is None:
            self.cells = build_cell_list(self.config, self.phi)
        self._total_rate_per_particle = self.a.l1_norm()

    @property
    def n_particles(self) -> int:
        return len(self.config)

    def energy(self, y) -> float:
        return relative_energy(self.config, y, self.phi, self.cells)

    def hop_rate(self, x_index: int, y) -> float:
        """Rate a(x - y) exp(-eps E(y, gamma)) for particle ``x_index`` to hop to y."""
        if not 0 <= x_index < self.n_particles:
            raise InputError(f"particle index {x_index} out of range")
        x = self.config.points[x_index]
        y = np.asarray(y, dtype=float)
        return self.a.evaluate(y - x) * math.exp(-self.epsilon * self.energy(y))

    def acceptance_probability(self, y) -> float:
        return math.exp(-self.epsilon * self.energy(y))

    def snapshot(self) -> Snapshot:
        return Snapshot(self.time, self.config.points.copy(), self.displacement.copy(),
                        self.proposed, self.accepted)

    def _draw_dt(self) -> float:
        n = self.n_particles
        if n == 0:
            raise StateError("cannot step an empty configuration")
        return float(self.rng.exponential(1.0 / (n * self._total_rate_per_particle)))

    def _fire(self, dt: float) -> Event:
        torus = self.config.torus
        i = int(self.rng.integers(self.n_particles))
        xi = self.a.sample_displacement(self.rng)
        y = torus.wrap(self.config.points[i] + xi)
        u = self.rng.random()
        ok = bool(u < self.acceptance_probability(y))
        self.time += dt
        self.proposed += 1
        if ok:
            self.accepted += 1
            self.config.points[i] = y
            self.displacement[i] += xi
            if self.cells is not None:
                self.cells.move(i, y)
        return Event(dt, i, y, ok)

    def step(self) -> Event:
        return self._fire(self._draw_dt())


def hop_rate(system: KawasakiSystem, x_index: int, y) -> float:
    return system.hop_rate(x_index, y)


def step(system: KawasakiSystem) -> Event:
    return system.step()


def simulate(system: KawasakiSystem, t_end: float, snapshot_times=None) -> list[Snapshot]:
    """Run to ``t_end`` and return the states at ``snapshot_times``.

    The state recorded at time s is the state after every event with event
    time <= s. Default snapshot times: ``[t_end]``.
    """
    if t_end < 0:
        raise InputError("t_end must be nonnegative")
    times = [float(t_end)] if snapshot_times is None else [float(t) for t in snapshot_times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise InputError("snapshot times must be strictly increasing")
    if times and (times[0] < system.time or times[-1] > t_end):
        raise InputError("snapshot times must lie within [current time, t_end]")
    out: list[Snapshot] = []
    k = 0
    if system.n_particles == 0:
        for t in times:
            system.time = t
            out.append(system.snapshot())
        system.time = t_end
        return out
    while True:
        t_next = system.time + system._draw_dt()
        while k < len(times) and times[k] < t_next:
            snap = system.snapshot()
            snap.time = times[k]
            out.append(snap)
            k += 1
        if t_next > t_end:
            system.time = t_end
            break
        system._fire(t_next - system.time)
    return out


def replica_densities(configs, grid: Grid) -> np.ndarray:
    """Per-replica histogram densities, shape ``(R,) + grid.shape``.

    Particles are binned to the nearest grid node; counts are divided by the
    cell volume.
    """
    configs = list(configs)
    per = np.zeros((len(configs),) + grid.shape)
    for r, c in enumerate(configs):
        pts = c.points if isinstance(c, Configuration) else np.asarray(c)
        if len(pts):
            np.add.at(per[r], grid.nearest_index(pts), 1.0)
    return per / grid.cell_volume


def estimate_density_with_error(configs, grid: Grid) -> tuple[DensityField, DensityField]:
    """Replica-mean histogram density and its standard error.

    The error is the replica standard deviation over sqrt(R), zero when R == 1.
    """
    per = replica_densities(configs, grid)
    R = per.shape[0]
    if R == 0:
        zero = DensityField(grid, np.zeros(grid.shape))
        return zero, zero.copy()
    err = per.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros(grid.shape)
    return DensityField(grid, per.mean(axis=0)), DensityField(grid, err)


def estimate_density(configs, grid: Grid) -> DensityField:
    return estimate_density_with_error(configs, grid)[0]


@dataclass
class RadialFunction:
    edges: np.ndarray
    values: np.ndarray
    stderr: np.ndarray

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def _shell_volume(d: int, r0, r1):
    if d == 1:
        return 2 * (r1 - r0)
    if d == 2:
        return np.pi * (r1**2 - r0**2)
    return 4 / 3 * np.pi * (r1**3 - r0**3)


def estimate_pair_correlation(configs, edges) -> RadialFunction:
    """Radial two-point density from ordered pairs of distinct particles.

    Each replica contributes pair counts / (V * shell volume); for a Poisson
    process of intensity rho the estimate is rho^2 in every shell. ``edges``
    must lie in [0, L/2].
    """
    configs = list(configs)
    if not configs:
        raise StatisticsError("need at least one configuration")
    edges = np.asarray(edges, dtype=float)
    torus = configs[0].torus
    if edges[0] < 0 or edges[-1] > torus.L / 2 or np.any(np.diff(edges) <= 0):
        raise InputError("radial bin edges must increase within [0, L/2]")
    shell = _shell_volume(torus.d, edges[:-1], edges[1:]) * torus.volume
    per = np.zeros((len(configs), len(edges) - 1))
    for r, c in enumerate(configs):
        n = len(c)
        if n < 2:
            raise StatisticsError("pair correlation needs at least two particles")
        diff = c.points[:, None, :] - c.points[None, :, :]
        diff -= torus.L * np.floor(diff / torus.L + 0.5)
        dist = np.sqrt(np.sum(diff**2, axis=-1))[~np.eye(n, dtype=bool)]
        counts, _ = np.histogram(dist, bins=edges)
        per[r] = counts / shell
    R = len(configs)
    err = per.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros(per.shape[1])
    return RadialFunction(edges, per.mean(axis=0), err)


def estimate_two_point_density(configs, grid: Grid, cells_per_bin: int, bins) -> tuple:
    """Two-point correlation density on coarse spatial bins (d == 1).

    Coarse bin ``b`` collects the grid cells ``b*m .. b*m+m-1`` with
    ``m = cells_per_bin``. Returns ``(mean, stderr)`` arrays of shape
    ``(len(bins), len(bins))`` holding ordered distinct-pair counts divided by
    ``R * |A| * |B|``.
    """
    if grid.d != 1:
        raise InputError("two-point density on coarse bins is implemented for d == 1")
    bins = list(bins)
    width = cells_per_bin * grid.h
    configs = list(configs)
    per = np.zeros((len(configs), len(bins), len(bins)))
    for r, c in enumerate(configs):
        cell = grid.nearest_index(c.points)[0] // cells_per_bin
        counts = np.array([np.count_nonzero(cell == b) for b in bins], dtype=float)
        pairs = np.outer(counts, counts) - np.diag(counts)
        per[r] = pairs / width**2
    R = len(configs)
    err = per.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros(per.shape[1:])
    return per.mean(axis=0), err

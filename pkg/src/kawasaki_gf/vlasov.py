"""Spectral solver for the Vlasov-type kinetic equation of Kawasaki hopping

    d/dt rho = (rho * a) exp(-(rho * phi)) - rho (a * exp(-(rho * phi)))

on a periodic grid. Convolutions are periodic and evaluated with real FFTs,
using the kernel sampled at the grid nodes with quadrature weight h^d. Time
stepping is classical explicit RK4.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InputError, NumericalBlowUp, StateError, StepSizeError
from .grid import DensityField, Grid
from .kernels import PairKernel

log = logging.getLogger(__name__)

NEG_TOL_RHS = 1e-12
NEG_TOL_CLIP = 1e-13
STABILITY_LIMIT = 0.1


@lru_cache(maxsize=64)
def kernel_hat(grid: Grid, kernel: PairKernel) -> np.ndarray:
    """rfft of the grid-sampled kernel, times the cell volume."""
    return np.fft.rfftn(grid.sample_kernel(kernel)) * grid.cell_volume


def _conv_hat(values: np.ndarray, ghat: np.ndarray) -> np.ndarray:
    return np.fft.irfftn(np.fft.rfftn(values) * ghat, s=values.shape, axes=tuple(range(values.ndim)))


def convolve(f: DensityField, g) -> DensityField:
    """Periodic convolution (f * g)(x) = int f(y) g(x - y) dy on the grid."""
    grid = f.grid
    if isinstance(g, PairKernel):
        ghat = kernel_hat(grid, g)
    else:
        if g.grid != grid:
            raise InputError("fields live on different grids")
        ghat = np.fft.rfftn(g.values) * grid.cell_volume
    return DensityField(grid, _conv_hat(f.values, ghat))


class VlasovOperator:
    """Right-hand side of the kinetic equation with cached kernel transforms."""

    def __init__(self, grid: Grid, a: PairKernel, phi: PairKernel):
        self.grid = grid
        self.a = a
        self.phi = phi
        self.a_hat = kernel_hat(grid, a)
        self.phi_hat = kernel_hat(grid, phi)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        w = np.exp(-_conv_hat(rho, self.phi_hat))
        return _conv_hat(rho, self.a_hat) * w - rho * _conv_hat(w, self.a_hat)


def vlasov_rhs(rho: DensityField, a: PairKernel, phi: PairKernel) -> DensityField:
    if rho.min() < -NEG_TOL_RHS:
        raise StateError(f"density has negative entries (min {rho.min():.3g})")
    return DensityField(rho.grid, VlasovOperator(rho.grid, a, phi)(rho.values))


@dataclass
class Trajectory:
    times: list[float]
    fields: list[DensityField]

    def at(self, t: float, tol: float = 1e-12) -> DensityField:
        for s, f in zip(self.times, self.fields):
            if abs(s - t) <= tol * max(1.0, abs(t)):
                return f
        raise KeyError(f"time {t} not in trajectory")

    def __len__(self) -> int:
        return len(self.times)


def _rk4(op: VlasovOperator, y: np.ndarray, h: float) -> np.ndarray:
    k1 = op(y)
    k2 = op(y + 0.5 * h * k1)
    k3 = op(y + 0.5 * h * k2)
    k4 = op(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(rho0: DensityField, t_end: float, dt: float, a: PairKernel,
              phi: PairKernel, output_times=None, alpha0: float | None = None) -> Trajectory:
    """Integrate from ``rho0`` and return fields at ``output_times``.

    Each interval between consecutive output times is split into equal RK4
    steps no longer than ``dt``. ``alpha0``, if given, enables a logged
    (non-fatal) check that the sup norm stays below ``1/alpha0``.
    """
    if dt <= 0:
        raise InputError("dt must be positive")
    if dt * a.l1_norm() > STABILITY_LIMIT * (1 + 1e-12):
        raise InputError(f"dt * ||a||_1 = {dt * a.l1_norm():.3g} exceeds {STABILITY_LIMIT}")
    times = [float(t_end)] if output_times is None else [float(t) for t in output_times]
    if any(b <= a_ for a_, b in zip(times, times[1:])) or times[0] < 0 or times[-1] > t_end:
        raise InputError("output times must increase within [0, t_end]")
    if rho0.min() < -NEG_TOL_RHS:
        raise StateError("initial density has negative entries")
    op = VlasovOperator(rho0.grid, a, phi)
    y = rho0.values.copy()
    t = 0.0
    out_t, out_f = [], []
    for target in times:
        span = target - t
        n_steps = int(math.ceil(span / dt - 1e-9)) if span > 0 else 0
        for _ in range(n_steps):
            y = _rk4(op, y, span / n_steps)
            if not np.all(np.isfinite(y)):
                raise NumericalBlowUp(f"non-finite density near t = {t:.6g}")
            low = y.min()
            if low < -NEG_TOL_CLIP:
                raise StepSizeError(f"density went negative ({low:.3g}); reduce dt")
            if low < 0:
                y = np.maximum(y, 0.0)
        t = target
        if alpha0 is not None and y.max() > (1 + 1e-12) / alpha0:
            log.warning("sup norm %.6g exceeds 1/alpha0 = %.6g at t = %.6g",
                        y.max(), 1 / alpha0, t)
        out_t.append(t)
        out_f.append(DensityField(rho0.grid, y.copy()))
    return Trajectory(out_t, out_f)


def linear_mode_rate(a: PairKernel, k) -> float:
    """Decay rate ||a||_1 - a_hat(k) of a Fourier mode when phi == 0."""
    return a.l1_norm() - a.fourier(k)

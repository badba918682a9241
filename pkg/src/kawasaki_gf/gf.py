"""Bogoliubov generating functionals and their evolution operators.

Two representations are provided: the exponential (Poissonian) functional
``B(theta) = exp(int rho theta)`` and the empirical functional of an ensemble of
configurations, ``mean over replicas of prod_x (1 + theta(x))``.

For exponential functionals the first variational derivative is
``rho(x) B(theta)``, so each evolution operator collapses to a handful of
periodic convolutions on the grid; see :func:`apply_operator`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, InputError
from .geometry import Configuration
from .grid import DensityField, Grid
from .kernels import PairKernel, ball_volume, min_image
from .vlasov import Trajectory, _conv_hat, integrate, kernel_hat

VARIANTS = ("kawasaki", "eps_ren", "vlasov")
THETA_FAMILIES = ("gaussian", "cosine", "indicator")


@dataclass(frozen=True)
class TestFunction:
    """Signed test function with a closed-form L1 norm.

    * ``gaussian``  ``amplitude * exp(-|x - center|^2 / (2 width^2))``
    * ``cosine``    ``amplitude * cos(2 pi m (x_1 - center_1) / L)``
    * ``indicator`` ``amplitude * 1[|x - center| <= width]``
    """

    __test__ = False  # keep pytest from collecting this class

    family: str
    amplitude: float
    center: tuple
    width: float
    d: int
    L: float
    m: int = 1

    def __post_init__(self):
        if self.family not in THETA_FAMILIES:
            raise ConfigurationError(f"unknown test-function family {self.family!r}")
        object.__setattr__(self, "center",
                           tuple(np.broadcast_to(np.asarray(self.center, float), (self.d,))))
        if self.family != "cosine" and not self.width > 0:
            raise ConfigurationError("test-function width must be positive")
        if self.family == "cosine" and self.m < 1:
            raise ConfigurationError("cosine mode number must be >= 1")

    @classmethod
    def from_dict(cls, spec: Mapping, *, d: int, L: float) -> "TestFunction":
        try:
            return cls(spec["family"], float(spec["amplitude"]), spec.get("center", 0.0),
                       float(spec.get("width", 1.0)), d, float(L), int(spec.get("m", 1)))
        except KeyError as exc:
            raise ConfigurationError(f"test function missing key {exc.args[0]!r}") from None

    def to_dict(self) -> dict:
        return {"family": self.family, "amplitude": self.amplitude,
                "center": list(self.center), "width": self.width, "m": self.m}

    def scaled(self, factor: float) -> "TestFunction":
        return replace(self, amplitude=self.amplitude * factor)

    def __call__(self, points) -> np.ndarray:
        x = np.asarray(points, dtype=float)
        if self.d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        disp = min_image(x - np.asarray(self.center), self.L)
        if self.family == "cosine":
            return self.amplitude * np.cos(2 * np.pi * self.m * disp[..., 0] / self.L)
        r2 = np.sum(disp**2, axis=-1)
        if self.family == "gaussian":
            return self.amplitude * np.exp(-0.5 * r2 / self.width**2)
        return np.where(r2 <= self.width**2, self.amplitude, 0.0)

    def on_grid(self, grid: Grid) -> np.ndarray:
        return self(grid.coords)

    def l1_norm(self) -> float:
        """Closed-form L1 norm (gaussian tails beyond the box neglected)."""
        A = abs(self.amplitude)
        if self.family == "gaussian":
            return A * (2 * np.pi * self.width**2) ** (self.d / 2)
        if self.family == "cosine":
            return A * (2 / np.pi) * self.L**self.d
        return A * ball_volume(self.d, self.width)

    def lower_bound(self) -> float:
        """A value <= inf theta over the box."""
        if self.family == "cosine":
            return -abs(self.amplitude)
        return min(0.0, self.amplitude)


def theta_on_grid(theta, grid: Grid) -> np.ndarray:
    if isinstance(theta, DensityField):
        if theta.grid != grid:
            raise InputError("test function and density live on different grids")
        return theta.values
    return theta.on_grid(grid)


def theta_at_points(theta, points) -> np.ndarray:
    if isinstance(theta, DensityField):
        return theta.at(points)
    return theta(points)


def _scale(theta, factor: float):
    if isinstance(theta, DensityField):
        return DensityField(theta.grid, theta.values * factor)
    return theta.scaled(factor)


def grid_l1(theta, grid: Grid) -> float:
    return float(np.sum(np.abs(theta_on_grid(theta, grid))) * grid.cell_volume)


@dataclass
class ExponentialGF:
    rho: DensityField

    def log_value(self, theta) -> float:
        g = self.rho.grid
        return float(np.sum(self.rho.values * theta_on_grid(theta, g)) * g.cell_volume)

    def evaluate(self, theta) -> float:
        return math.exp(self.log_value(theta))

    def derivative(self, theta, x) -> float:
        """First variational derivative at point ``x``: rho(x) B(theta)."""
        return float(self.rho.at(x)[0]) * self.evaluate(theta)


@dataclass
class EmpiricalGF:
    ensemble: Sequence[Configuration]

    def samples(self, theta) -> np.ndarray:
        """Per-replica values prod_x (1 + theta(x))."""
        out = np.empty(len(self.ensemble))
        for r, c in enumerate(self.ensemble):
            if len(c) == 0:
                out[r] = 1.0
                continue
            f = 1.0 + np.asarray(theta_at_points(theta, c.points), dtype=float)
            if np.any(f <= 0):
                raise InputError("empirical GF needs theta > -1 at every particle")
            out[r] = math.exp(math.fsum(np.log(f)))
        return out

    def evaluate_with_error(self, theta) -> tuple[float, float]:
        s = self.samples(theta)
        if len(s) == 0:
            raise InputError("empty ensemble")
        err = float(s.std(ddof=1) / math.sqrt(len(s))) if len(s) > 1 else 0.0
        return float(s.mean()), err

    def evaluate(self, theta) -> float:
        return self.evaluate_with_error(theta)[0]


def evaluate(gf, theta) -> float:
    return gf.evaluate(theta)


def evaluate_renormalized(gf: EmpiricalGF, theta, epsilon: float) -> float:
    """B_ren(theta) = B(epsilon * theta) for an ensemble of the scaled system."""
    if epsilon <= 0:
        raise InputError("epsilon must be positive")
    return gf.evaluate(_scale(theta, epsilon))


def evaluate_renormalized_with_error(gf: EmpiricalGF, theta, epsilon: float):
    if epsilon <= 0:
        raise InputError("epsilon must be positive")
    return gf.evaluate_with_error(_scale(theta, epsilon))


def apply_operator(rho: DensityField, theta, variant: str, a: PairKernel,
                   phi: PairKernel, epsilon: float | None = None) -> float:
    """Value of an evolution operator applied to ``ExponentialGF(rho)`` at theta.

    With ``w = exp(-phi)`` (``kawasaki``) or ``w = exp(-eps phi)``
    (``eps_ren``) and ``aw = a w`` the result is::

        int dy exp(g(y)) [theta(y) (rho * aw)(y) - ((rho theta) * aw)(y)]

    where ``g = (rho theta) * w + (rho * (w - 1)) / s`` with ``s = 1`` or ``eps``.
    For ``vlasov`` it is::

        exp(int rho theta) int dy exp(-(rho * phi)(y)) [theta (rho * a) - (rho theta) * a](y)
    """
    if variant not in VARIANTS:
        raise InputError(f"unknown operator variant {variant!r}")
    grid = rho.grid
    th = theta_on_grid(theta, grid)
    r = rho.values
    rt = r * th
    hv = grid.cell_volume
    if variant == "vlasov":
        a_hat = kernel_hat(grid, a)
        bracket = th * _conv_hat(r, a_hat) - _conv_hat(rt, a_hat)
        weight = np.exp(-_conv_hat(r, kernel_hat(grid, phi)))
        log_b = float(np.sum(rt) * hv)
        return math.exp(log_b) * float(np.sum(weight * bracket) * hv)

    if variant == "eps_ren":
        if epsilon is None or not epsilon > 0:
            raise InputError("eps_ren needs a positive epsilon")
        s = float(epsilon)
    else:
        s = 1.0
    phi_grid = grid.sample_kernel(phi)
    w = np.exp(-s * phi_grid)
    wm1 = np.expm1(-s * phi_grid) / s
    aw = grid.sample_kernel(a) * w
    aw_hat = np.fft.rfftn(aw) * hv
    g = _conv_hat(rt, np.fft.rfftn(w) * hv) + _conv_hat(r, np.fft.rfftn(wm1) * hv)
    bracket = th * _conv_hat(r, aw_hat) - _conv_hat(rt, aw_hat)
    return float(np.sum(np.exp(g) * bracket) * hv)


def gf_time_consistency(trajectory: Trajectory, theta, t: float, dt_fd: float,
                        a: PairKernel, phi: PairKernel) -> float:
    """|d/dt B_t(theta) - (L_V B_t)(theta)| with B_t = ExponentialGF(rho_t).

    The time derivative is a central difference over ``t -/+ dt_fd``; the
    trajectory must contain those two times and ``t`` itself.
    """
    try:
        lo, mid, hi = (trajectory.at(s) for s in (t - dt_fd, t, t + dt_fd))
    except KeyError:
        raise InputError(
            f"trajectory must contain t and t -/+ dt_fd (t = {t}, dt_fd = {dt_fd})") from None
    fd = (ExponentialGF(hi).evaluate(theta) - ExponentialGF(lo).evaluate(theta)) / (2 * dt_fd)
    return abs(fd - apply_operator(mid, theta, "vlasov", a, phi))


def time_consistency(rho0: DensityField, theta, t: float, dt_fd: float, a: PairKernel,
                     phi: PairKernel, dt: float | None = None) -> tuple[float, float]:
    """Integrate from ``rho0`` and return ``(residual, operator value)`` at ``t``."""
    if t - dt_fd <= 0:
        raise InputError("t too close to the start of the trajectory")
    dt = dt_fd if dt is None else dt
    traj = integrate(rho0, t + dt_fd, dt, a, phi, output_times=[t - dt_fd, t, t + dt_fd])
    res = gf_time_consistency(traj, theta, t, dt_fd, a, phi)
    return res, apply_operator(traj.at(t), theta, "vlasov", a, phi)


def correlation_from_exponential(rho: DensityField, eta: Configuration) -> float:
    """Correlation function of a Poissonian functional: prod_x rho(x) (nearest node)."""
    if len(eta) == 0:
        return 1.0
    return float(np.prod(rho.at(eta.points)))

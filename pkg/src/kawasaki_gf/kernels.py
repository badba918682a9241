"""Even, nonnegative, integrable pair kernels on a periodic box.

The same type is used for the hopping kernel ``a`` and the pair potential
``phi``. Three radial families are supported so that norms, Fourier
transforms and displacement sampling are all exact:

* ``tophat``      ``h * 1[|x| <= R]``
* ``gaussian``    ``A * exp(-|x|^2 / (2 sigma^2))``
* ``exponential`` ``A * exp(-kappa |x|)``

Kernels are evaluated under the minimum-image convention. Construction
refuses kernels whose mass beyond radius ``L/2`` exceeds ``TAIL_TOL`` of the
total, so closed-form norms over R^d are valid on the torus.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import special, stats

from .errors import ConfigurationError, InputError

FAMILIES = ("tophat", "gaussian", "exponential")
TAIL_TOL = 1e-12

# JSON parameter names per family: (amplitude, scale)
PARAM_NAMES = {
    "tophat": ("h", "R"),
    "gaussian": ("A", "sigma"),
    "exponential": ("A", "kappa"),
}


def ball_volume(d: int, r: float) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * r**d


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d."""
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


def min_image(x, L: float):
    """Reduce displacements componentwise to [-L/2, L/2)."""
    x = np.asarray(x, dtype=float)
    return x - L * np.floor((x + 0.5 * L) / L)


@dataclass(frozen=True)
class PairKernel:
    family: str
    amplitude: float
    scale: float
    d: int
    L: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown kernel family {self.family!r}")
        for name, v in (("amplitude", self.amplitude), ("scale", self.scale), ("L", self.L)):
            if not math.isfinite(v):
                raise ConfigurationError(f"kernel {name} must be finite, got {v}")
        if self.amplitude < 0:
            raise ConfigurationError("kernel amplitude must be nonnegative")
        if self.scale <= 0 or self.L <= 0:
            raise ConfigurationError("kernel scale and torus side must be positive")
        if self.d not in (1, 2, 3):
            raise ConfigurationError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.amplitude > 0:
            half = 0.5 * self.L
            if self.family == "tophat":
                if self.scale >= half:
                    raise ConfigurationError(
                        f"tophat radius {self.scale} must be below L/2 = {half}")
            elif self.tail_fraction(half) > TAIL_TOL:
                raise ConfigurationError(
                    f"{self.family} kernel too wide for torus side {self.L}: "
                    f"tail mass {self.tail_fraction(half):.3g} beyond L/2")

    # -- constructors -------------------------------------------------------
    @classmethod
    def tophat(cls, h: float, R: float, *, d: int = 1, L: float) -> "PairKernel":
        return cls("tophat", float(h), float(R), d, float(L))

    @classmethod
    def gaussian(cls, A: float, sigma: float, *, d: int = 1, L: float) -> "PairKernel":
        return cls("gaussian", float(A), float(sigma), d, float(L))

    @classmethod
    def exponential(cls, A: float, kappa: float, *, d: int = 1, L: float) -> "PairKernel":
        return cls("exponential", float(A), float(kappa), d, float(L))

    @classmethod
    def zero(cls, *, d: int = 1, L: float) -> "PairKernel":
        return cls("tophat", 0.0, min(1.0, 0.25 * L), d, float(L))

    @classmethod
    def from_dict(cls, spec: Mapping, *, d: int, L: float) -> "PairKernel":
        try:
            family = spec["family"]
            amp_key, scale_key = PARAM_NAMES[family]
        except KeyError as exc:
            raise ConfigurationError(f"kernel spec needs a valid 'family': {exc}") from None
        missing = [k for k in (amp_key, scale_key) if k not in spec]
        if missing:
            raise ConfigurationError(f"{family} kernel missing key(s): {', '.join(missing)}")
        return cls(family, float(spec[amp_key]), float(spec[scale_key]), d, float(L))

    def to_dict(self) -> dict:
        amp_key, scale_key = PARAM_NAMES[self.family]
        return {"family": self.family, amp_key: self.amplitude, scale_key: self.scale}

    # -- properties ---------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return self.amplitude == 0.0

    @property
    def support_radius(self) -> float | None:
        """Radius of compact support, or None for unbounded support."""
        return self.scale if self.family == "tophat" else None

    def tail_fraction(self, r: float) -> float:
        """Fraction of the R^d mass lying at distance > r from the origin."""
        if self.family == "tophat":
            return 0.0 if r >= self.scale else 1.0 - (r / self.scale) ** self.d
        if self.family == "gaussian":
            return float(stats.chi(self.d).sf(r / self.scale))
        return float(stats.gamma(self.d).sf(self.scale * r))

    def l1_norm(self) -> float:
        A, s, d = self.amplitude, self.scale, self.d
        if self.family == "tophat":
            return A * ball_volume(d, s)
        if self.family == "gaussian":
            return A * (2 * math.pi * s * s) ** (d / 2)
        # integral of exp(-kappa r) r^(d-1) dr = (d-1)! / kappa^d
        return A * sphere_area(d) * math.gamma(d) / s**d

    def linf_norm(self) -> float:
        return self.amplitude

    # -- evaluation ---------------------------------------------------------
    def _radial(self, r):
        A, s = self.amplitude, self.scale
        if self.family == "tophat":
            return np.where(r <= s, A, 0.0)
        if self.family == "gaussian":
            return A * np.exp(-0.5 * (r / s) ** 2)
        return A * np.exp(-s * r)

    def evaluate(self, x):
        """Kernel value at displacement(s) ``x``.

        ``x`` is a d-vector, an array of shape ``(..., d)``, or for ``d == 1``
        a scalar / 1-D array of displacements. Components are reduced to the
        minimum image first.
        """
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise InputError("displacement must be finite")
        scalar = x.ndim == 0
        if self.d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            r = np.abs(min_image(x, self.L))
        else:
            if x.shape[-1] != self.d:
                raise InputError(f"expected {self.d}-vectors, got shape {x.shape}")
            r = np.sqrt(np.sum(min_image(x, self.L) ** 2, axis=-1))
        val = self._radial(r)
        return float(val) if scalar or np.ndim(val) == 0 else val

    def fourier(self, k):
        """Closed-form transform int a(x) exp(-i k.x) dx over R^d.

        ``k`` is a wave vector (array of shape ``(..., d)``) or, for d == 1,
        scalar wave numbers.
        """
        k = np.asarray(k, dtype=float)
        if self.d == 1 and (k.ndim == 0 or k.shape[-1] != 1):
            q = np.abs(k)
        else:
            q = np.sqrt(np.sum(k**2, axis=-1))
        A, s, d = self.amplitude, self.scale, self.d
        if self.family == "gaussian":
            out = A * (2 * math.pi * s * s) ** (d / 2) * np.exp(-0.5 * (s * q) ** 2)
        elif self.family == "exponential":
            if d == 1:
                out = 2 * A * s / (s * s + q * q)
            elif d == 2:
                out = 2 * math.pi * A * s / (s * s + q * q) ** 1.5
            else:
                out = 8 * math.pi * A * s / (s * s + q * q) ** 2
        else:
            qs = q * s
            with np.errstate(invalid="ignore", divide="ignore"):
                if d == 1:
                    shape = np.where(qs == 0, 1.0, np.sin(qs) / np.where(qs == 0, 1.0, qs))
                elif d == 2:
                    safe = np.where(qs == 0, 1.0, qs)
                    shape = np.where(qs == 0, 1.0, 2 * special.j1(safe) / safe)
                else:
                    safe = np.where(qs == 0, 1.0, qs)
                    shape = np.where(
                        qs == 0, 1.0, 3 * (np.sin(safe) - safe * np.cos(safe)) / safe**3)
            out = self.l1_norm() * shape
        return float(out) if np.ndim(out) == 0 else out

    # -- sampling -----------------------------------------------------------
    def sample_displacement(self, rng: np.random.Generator, size: int | None = None):
        """Draw displacement(s) from the normalized kernel a / ||a||_1.

        Returns a d-vector, or an array of shape ``(size, d)``.
        """
        if self.is_zero:
            raise ConfigurationError("cannot sample from a zero kernel")
        n = 1 if size is None else size
        d, s = self.d, self.scale
        if self.family == "gaussian":
            out = rng.normal(0.0, s, size=(n, d))
        elif d == 1:
            if self.family == "tophat":
                out = rng.uniform(-s, s, size=(n, 1))
            else:
                out = rng.laplace(0.0, 1.0 / s, size=(n, 1))
        else:
            u = rng.normal(size=(n, d))
            u /= np.linalg.norm(u, axis=1, keepdims=True)
            if self.family == "tophat":
                r = s * rng.random(n) ** (1.0 / d)
            else:
                r = rng.gamma(d, 1.0 / s, size=n)
            out = u * r[:, None]
        return out[0] if size is None else out

    def cdf_1d(self, x):
        """Cumulative distribution of a sampled displacement (d == 1 only)."""
        if self.d != 1:
            raise InputError("cdf_1d is defined for d == 1 only")
        s = self.scale
        if self.family == "tophat":
            return stats.uniform(-s, 2 * s).cdf(x)
        if self.family == "gaussian":
            return stats.norm(0, s).cdf(x)
        return stats.laplace(0, 1 / s).cdf(x)

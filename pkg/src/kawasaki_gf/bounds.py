"""Norm bounds on the generating-functional evolution operators.

The scale norm is ``||B||_alpha = sup_theta |B(theta)| exp(-||theta||_1 / alpha)``.
The calculators below give the closed-form operator bounds, and
:func:`verify_bound_randomized` tries to falsify them on exponential
functionals, the one class where both sides are computable exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError
from .gf import TestFunction, apply_operator, grid_l1
from .grid import DensityField, Grid
from .kernels import PairKernel

VERIFY_VARIANTS = ("hop", "generator", "gap")


@dataclass(frozen=True)
class ScaleParameters:
    alpha: float
    alpha_prime: float
    alpha_dprime: float
    alpha0: float
    epsilon: float | None = None

    def __post_init__(self):
        if not (0 < self.alpha <= self.alpha_prime < self.alpha_dprime <= self.alpha0):
            raise DomainError(
                "need 0 < alpha <= alpha' < alpha'' <= alpha0, got "
                f"{self.alpha}, {self.alpha_prime}, {self.alpha_dprime}, {self.alpha0}")
        if self.epsilon is not None and self.epsilon < 0:
            raise DomainError("epsilon must be nonnegative")

    @property
    def gap(self) -> float:
        return self.alpha_dprime - self.alpha_prime


def scale_norm_exponential(rho: DensityField, alpha: float) -> float:
    """||exp(int rho .)||_alpha: 1 if sup rho <= 1/alpha, else ``math.inf``."""
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    return 1.0 if rho.max() * alpha <= 1.0 + 1e-12 else math.inf


def exponential_norm_witness(rho: DensityField, alpha: float, c: float) -> float:
    """|B(theta)| exp(-||theta||_1 / alpha) for theta = c * (indicator of the argmax cell)."""
    g = rho.grid
    idx = np.unravel_index(np.argmax(rho.values), g.shape)
    mass = c * g.cell_volume
    return math.exp(rho.values[idx] * mass - mass / alpha)


def hop_operator_bound(c0: float, c1: float, alpha: float, alpha_prime: float,
                       a_l1: float) -> float:
    """Norm bound for a generic hop operator with coefficient sup c0 and shift L1 norm c1:

    ``2 exp(c1 / alpha) ||a||_1 alpha' / (alpha - c0 alpha')``, valid for c0 alpha' < alpha.
    """
    if not c0 * alpha_prime < alpha:
        raise DomainError(f"need c0 * alpha' < alpha, got {c0} * {alpha_prime} >= {alpha}")
    return 2 * math.exp(c1 / alpha) * a_l1 * alpha_prime / (alpha - c0 * alpha_prime)


def generator_norm_bound(params: ScaleParameters, a_l1: float, phi_l1: float) -> float:
    """``2 exp(||phi||_1 / alpha) ||a||_1 alpha0 / (alpha'' - alpha')``.

    Shared by the Kawasaki, renormalized and Vlasov operators.
    """
    return 2 * math.exp(phi_l1 / params.alpha) * a_l1 * params.alpha0 / params.gap


def vlasov_gap_bound(params: ScaleParameters, a_l1: float, phi_l1: float, phi_linf: float,
                     b_norm: float = 1.0) -> float:
    """Bound on ||L_eps,ren B - L_V B||_alpha', linear in epsilon."""
    if params.epsilon is None:
        raise DomainError("the gap bound needs epsilon")
    a, a0, gap = params.alpha, params.alpha0, params.gap
    bracket = (2 * math.e * phi_l1 + a0 / math.e) / gap + 8 * a0**2 / gap**2
    return (2 * params.epsilon * a_l1 * phi_linf * (math.e * a0 / a) * b_norm
            * math.exp(phi_l1 / a) * bracket)


def existence_time(alpha: float, alpha0: float, a_l1: float, phi_l1: float) -> float:
    """Conservative local existence time (alpha0 - alpha) / (e M).

    M is the generator constant ``2 exp(||phi||_1 / alpha) ||a||_1 alpha0``.
    """
    if not 0 < alpha < alpha0:
        raise DomainError(f"need 0 < alpha < alpha0, got {alpha}, {alpha0}")
    # written with exp(-phi_l1 / alpha) so that tiny alpha underflows to T = 0
    return (alpha0 - alpha) * math.exp(-phi_l1 / alpha) / (2 * math.e * a_l1 * alpha0)


def best_alpha(alpha0: float, phi_l1: float) -> float:
    """The alpha in (0, alpha0) maximizing :func:`existence_time`."""
    if phi_l1 <= 0:
        # T decreases in alpha when phi vanishes; stay off the endpoint
        return 1e-6 * alpha0
    return 0.5 * (-phi_l1 + math.sqrt(phi_l1**2 + 4 * phi_l1 * alpha0))


def random_test_function(grid: Grid, rng: np.random.Generator, l1: float) -> TestFunction:
    """Random gaussian/cosine/indicator test function with grid L1 norm ``l1``."""
    fam = ("gaussian", "cosine", "indicator")[int(rng.integers(3))]
    center = tuple(rng.random(grid.d) * grid.L)
    width = float(rng.uniform(0.05, 0.2) * grid.L)
    m = int(rng.integers(1, 4))
    sign = 1.0 if rng.random() < 0.5 else -1.0
    unit = TestFunction(fam, 1.0, center, max(width, 1.5 * grid.h), grid.d, grid.L, m)
    return unit.scaled(sign * l1 / grid_l1(unit, grid))


def verify_bound_randomized(variant: str, rho: DensityField, params: ScaleParameters,
                            n_theta: int, rng: np.random.Generator, a: PairKernel,
                            phi: PairKernel) -> float:
    """Largest ratio ``|value| exp(-||theta||_1 / alpha') / bound`` over random theta.

    ``hop`` and ``generator`` check every operator (``eps_ren`` only when
    ``params.epsilon`` is set) against the hop-operator and generator bounds;
    ``gap`` checks ``|L_eps,ren - L_V|`` against the epsilon-linear bound.
    A result above 1 is a counterexample.
    """
    if variant not in VERIFY_VARIANTS:
        raise InputError(f"unknown variant {variant!r}")
    if scale_norm_exponential(rho, params.alpha_dprime) != 1.0:
        raise DomainError("need sup rho <= 1/alpha'' so that ||B||_alpha'' = 1")
    a_l1, phi_l1 = a.l1_norm(), phi.l1_norm()
    eps = params.epsilon
    if variant == "gap":
        if not eps:
            raise DomainError("the gap variant needs a positive epsilon")
        bound = vlasov_gap_bound(params, a_l1, phi_l1, phi.linf_norm())
    elif variant == "hop":
        bound = hop_operator_bound(1.0, phi_l1, params.alpha_dprime, params.alpha_prime, a_l1)
    else:
        bound = generator_norm_bound(params, a_l1, phi_l1)
    grid = rho.grid
    worst = 0.0
    for _ in range(n_theta):
        target = float(rng.uniform(0.0, 20.0 * params.alpha0))
        theta = random_test_function(grid, rng, target)
        weight = math.exp(-grid_l1(theta, grid) / params.alpha_prime)
        if variant == "gap":
            values = [apply_operator(rho, theta, "eps_ren", a, phi, eps)
                      - apply_operator(rho, theta, "vlasov", a, phi)]
        else:
            values = [apply_operator(rho, theta, "kawasaki", a, phi),
                      apply_operator(rho, theta, "vlasov", a, phi)]
            if eps:
                values.append(apply_operator(rho, theta, "eps_ren", a, phi, eps))
        worst = max(worst, max(abs(v) for v in values) * weight / bound)
    return worst


def ci_cases(L: float = 10.0, n: int = 128, epsilon: float = 0.05):
    """The standard falsification grid: 3 kernel pairs x 3 density shapes.

    Yields ``(label, rho, params, a, phi)``; alpha0 is set to 1 / sup rho so
    the exponential functional has unit norm at alpha'' = alpha0.
    """
    from .geometry import Torus

    grid = Grid(Torus(1, L), n)
    kernels = {
        "tophat": (PairKernel.tophat(1.0, 0.8, L=L), PairKernel.tophat(0.5, 0.6, L=L)),
        "gaussian": (PairKernel.gaussian(1.0, 0.5, L=L), PairKernel.gaussian(0.8, 0.4, L=L)),
        "exponential": (PairKernel.exponential(1.0, 6.0, L=L),
                         PairKernel.exponential(2.0, 7.0, L=L)),
    }
    x = grid.axis
    densities = {
        "constant": DensityField.constant(grid, 0.5),
        "bump": DensityField.gaussian_bump(grid, 0.5 * L, 1.0, 0.8, 0.2),
        "cosine": DensityField(grid, 0.5 + 0.4 * np.cos(2 * np.pi * x / L)),
    }
    for kname, (a, phi) in kernels.items():
        for rname, rho in densities.items():
            a0 = 1.0 / rho.max()
            params = ScaleParameters(0.5 * a0, 0.6 * a0, a0, a0, epsilon)
            yield f"{kname}/{rname}", rho, params, a, phi


def run_ci_grid(n_theta: int, seed: int, variants=VERIFY_VARIANTS) -> list[dict]:
    """Run :func:`verify_bound_randomized` over :func:`ci_cases`."""
    out = []
    for v_idx, variant in enumerate(variants):
        for c_idx, (label, rho, params, a, phi) in enumerate(ci_cases()):
            rng = np.random.default_rng([seed, v_idx, c_idx])
            ratio = verify_bound_randomized(variant, rho, params, n_theta, rng, a, phi)
            out.append({"variant": variant, "case": label, "max_ratio": ratio,
                        "n_samples": n_theta, "seed": seed})
    return out

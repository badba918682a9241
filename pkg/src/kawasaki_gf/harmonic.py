"""Combinatorial harmonic analysis on finite configurations.

Functions on finite configurations are plain callables taking a
:class:`Configuration`. Subsets of an n-point configuration are indexed by
bitmasks in binary-counter order: bit ``i`` of the mask selects point ``i``.
The enumeration routines are exact correctness oracles, capped at
``MAX_POINTS`` points.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import SizeError
from .geometry import Configuration

MAX_POINTS = 25

FiniteFunctional = Callable[[Configuration], float]


def _check_size(n: int) -> None:
    if n > MAX_POINTS:
        raise SizeError(f"subset enumeration limited to {MAX_POINTS} points, got {n}")


def subset_masks(n: int) -> np.ndarray:
    """Boolean array (2**n, n): row m selects the points of bitmask m."""
    m = np.arange(2**n)[:, None]
    return ((m >> np.arange(n)) & 1).astype(bool)


def subset_table(G: FiniteFunctional, gamma: Configuration) -> np.ndarray:
    """Values of G on every subset of gamma, in binary-counter order."""
    n = len(gamma)
    _check_size(n)
    return np.array([float(G(gamma.subset(np.flatnonzero(sel)))) for sel in subset_masks(n)])


def zeta_transform(values) -> np.ndarray:
    """Subset-sum transform: out[S] = sum of values[T] over T subset of S."""
    v = np.asarray(values, dtype=float)
    n = int(round(math.log2(v.size)))
    if v.size != 2**n:
        raise ValueError("table length must be a power of two")
    _check_size(n)
    t = v.reshape((2,) * n)
    for ax in range(n):
        t = np.cumsum(t, axis=ax)
    return t.reshape(-1)


def mobius_transform(values) -> np.ndarray:
    """Inverse of :func:`zeta_transform` (inclusion-exclusion)."""
    v = np.asarray(values, dtype=float)
    n = int(round(math.log2(v.size)))
    if v.size != 2**n:
        raise ValueError("table length must be a power of two")
    _check_size(n)
    t = v.reshape((2,) * n)
    for ax in range(n):
        t = np.diff(t, axis=ax, prepend=0.0)
    return t.reshape(-1)


def k_transform(G: FiniteFunctional, gamma: Configuration) -> float:
    """(KG)(gamma): sum of G over all subsets of gamma."""
    return float(np.sum(subset_table(G, gamma)))


def k_inverse(F: FiniteFunctional, eta: Configuration) -> float:
    """Alternating subset sum: sum over xi subset of eta of (-1)^|eta \\ xi| F(xi)."""
    n = len(eta)
    table = subset_table(F, eta)
    signs = (-1.0) ** (n - subset_masks(n).sum(axis=1))
    return float(np.sum(signs * table))


def coherent_state(f: Callable, eta: Configuration) -> float:
    """Product of f over the points of eta; 1 on the empty configuration.

    ``f`` maps an (m, d) array of points to m values.
    """
    if len(eta) == 0:
        return 1.0
    return float(np.prod(np.asarray(f(eta.points), dtype=float)))


def coherent_functional(f: Callable) -> FiniteFunctional:
    return lambda eta: coherent_state(f, eta)


def lp_exponential_integral(f, n_max: int) -> float:
    """Truncated Lebesgue-Poisson integral of a coherent state.

    Returns sum_{n <= n_max} s^n / n! with s the integral of ``f`` (a
    DensityField, or the integral itself as a number).
    """
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    s = float(f) if np.isscalar(f) else f.integral()
    term, terms = 1.0, [1.0]
    for n in range(1, n_max + 1):
        term *= s / n
        terms.append(term)
    return math.fsum(terms)

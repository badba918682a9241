import math

import numpy as np
import pytest
from scipy import stats

from kawasaki_gf.errors import InputError, StatisticsError
from kawasaki_gf.geometry import Configuration, Torus, poisson_sample
from kawasaki_gf.grid import DensityField, Grid
from kawasaki_gf.kernels import PairKernel
from kawasaki_gf.kmc import (KawasakiSystem, estimate_density, estimate_density_with_error,
                             estimate_pair_correlation, estimate_two_point_density, hop_rate,
                             simulate, step)

L = 10.0
T1 = Torus(1, L)
A = PairKernel.gaussian(1.0, 0.5, L=L)
PHI = PairKernel.tophat(1.0, 0.8, L=L)
ZERO = PairKernel.zero(L=L)


def system(points, phi=PHI, seed=0, eps=1.0, a=A):
    return KawasakiSystem(Configuration(np.asarray(points, float), T1), a, phi,
                          np.random.default_rng(seed), epsilon=eps)


def test_hop_rate_free():
    s = system([1.0, 4.0], phi=ZERO)
    assert hop_rate(s, 0, [1.3]) == A.evaluate(0.3)


def test_hop_rate_single_particle_includes_self_interaction():
    s = system([1.0], phi=PairKernel.gaussian(0.7, 0.4, L=L), eps=0.5)
    expected = A.evaluate(0.4) * math.exp(-0.5 * 0.7 * math.exp(-0.5 * (0.4 / 0.4) ** 2))
    assert hop_rate(s, 0, [1.4]) == pytest.approx(expected, rel=1e-14)


def test_hop_rate_outside_support():
    s = system([1.0], a=PairKernel.tophat(1.0, 0.5, L=L))
    assert hop_rate(s, 0, [2.0]) == 0.0
    with pytest.raises(InputError):
        hop_rate(s, 3, [2.0])


def test_free_hopping_accepts_everything():
    s = system([1.0, 2.0, 3.0], phi=ZERO)
    events = [step(s) for _ in range(200)]
    assert all(e.accepted for e in events)
    assert s.accepted == s.proposed == 200


def test_single_particle_acceptance_probability():
    phi = PairKernel.gaussian(2.0, 0.5, L=L)
    s = system([3.0], phi=phi)
    for y in (3.1, 3.5, 4.4):
        assert s.acceptance_probability([y]) == pytest.approx(math.exp(-phi.evaluate(y - 3.0)))


def test_small_epsilon_accepts():
    s = system(np.linspace(0, 9, 30), eps=1e-12)
    assert all(s.acceptance_probability([y]) > 1 - 1e-10 for y in np.linspace(0, 9.9, 50))


def test_acceptance_in_unit_interval_and_count_conserved(rng):
    cfg = poisson_sample(T1, 3.0, rng)
    s = KawasakiSystem(cfg, A, PHI, rng)
    n = len(cfg)
    for _ in range(500):
        e = step(s)
        assert 0.0 <= s.acceptance_probability(e.proposal) <= 1.0
        assert len(s.config) == n
    assert 0 < s.accepted < s.proposed


def test_cell_list_matches_brute_force_energy(rng):
    cfg = poisson_sample(T1, 3.0, rng)
    s = KawasakiSystem(cfg, A, PHI, rng)
    assert s.cells is not None
    for _ in range(300):
        step(s)
    from kawasaki_gf.geometry import relative_energy
    for y in np.linspace(0, 9.95, 40):
        assert s.energy([y]) == relative_energy(s.config, [y], PHI)


def test_simulate_zero_time_returns_initial_state():
    s = system([1.0, 5.0])
    snaps = simulate(s, 0.0)
    assert len(snaps) == 1 and snaps[0].time == 0.0
    assert np.array_equal(snaps[0].points, [[1.0], [5.0]])


def test_simulate_deterministic():
    a = simulate(system([1.0, 5.0, 7.0], seed=9), 5.0, [1.0, 2.5, 5.0])
    b = simulate(system([1.0, 5.0, 7.0], seed=9), 5.0, [1.0, 2.5, 5.0])
    for x, y in zip(a, b):
        assert x.time == y.time and np.array_equal(x.points, y.points)
        assert np.array_equal(x.displacement, y.displacement)


def test_simulate_validates_times():
    with pytest.raises(InputError):
        simulate(system([1.0]), 1.0, [0.5, 0.5])
    with pytest.raises(InputError):
        simulate(system([1.0]), 1.0, [2.0])
    with pytest.raises(InputError):
        KawasakiSystem(Configuration(np.array([1.0]), T1), ZERO, PHI, np.random.default_rng(0))
    with pytest.raises(InputError):
        system([1.0], eps=0.0)


def test_event_counts_poisson_small():
    t, n = 2.0, 3
    rate = n * A.l1_norm() * t
    counts = np.array([simulate(system([1, 4, 7], phi=ZERO, seed=s), t)[0].accepted
                       for s in range(1000)])
    ks = np.arange(counts.max() + 1)
    pmf = stats.poisson(rate).pmf(ks)
    # pool tails so every expected count is >= 5
    lo, hi = np.searchsorted(np.cumsum(pmf) * 1000, 5), len(ks) - 1
    while pmf[hi:].sum() * 1000 < 5:
        hi -= 1
    obs = [np.sum(counts <= lo)] + [np.sum(counts == k) for k in range(lo + 1, hi)] + \
        [np.sum(counts >= hi)]
    exp = [stats.poisson(rate).cdf(lo)] + list(pmf[lo + 1:hi]) + [stats.poisson(rate).sf(hi - 1)]
    assert stats.chisquare(obs, np.array(exp) * 1000).pvalue > 1e-3


def test_free_hopping_relaxes_to_uniform():
    torus = Torus(1, 4.0)
    a = PairKernel.tophat(1.0, 0.5, L=4.0)
    pts = []
    for s in range(300):
        sys_ = KawasakiSystem(Configuration(np.full(4, 1.0), torus), a, PairKernel.zero(L=4.0),
                              np.random.default_rng(s))
        pts.append(simulate(sys_, 40.0)[0].points[:, 0])
    counts, _ = np.histogram(np.concatenate(pts), bins=8, range=(0, 4))
    assert stats.chisquare(counts).pvalue > 1e-3


def test_density_of_poisson_samples():
    g = Grid(T1, 16)
    rng = np.random.default_rng(7)
    configs = [poisson_sample(T1, 2.0, rng) for _ in range(400)]
    mean, err = estimate_density_with_error(configs, g)
    z = (mean.values - 2.0) / err.values
    assert np.all(np.abs(z) < 4.0)
    assert mean.integral() == pytest.approx(np.mean([len(c) for c in configs]))
    assert np.all(estimate_density([Configuration.empty(T1)], g).values == 0.0)


def test_pair_correlation_of_poisson():
    rng = np.random.default_rng(8)
    configs = [poisson_sample(T1, 3.0, rng) for _ in range(2000)]
    g2 = estimate_pair_correlation(configs, np.linspace(0, 5, 6))
    assert np.all(np.abs(g2.values - 9.0) <= 3.5 * g2.stderr)
    with pytest.raises(StatisticsError):
        estimate_pair_correlation([Configuration(np.array([1.0]), T1)], [0, 1])


def test_two_point_density_of_poisson():
    g = Grid(T1, 64)
    rng = np.random.default_rng(10)
    intensity = DensityField.gaussian_bump(g, 5.0, 1.5, 3.0, 1.0)
    configs = [poisson_sample(T1, intensity, rng) for _ in range(3000)]
    mean, err = estimate_two_point_density(configs, g, 8, [3, 4, 5])
    m = [intensity.values[b * 8:(b + 1) * 8].mean() for b in (3, 4, 5)]
    z = (mean - np.outer(m, m)) / err
    assert np.all(np.abs(z) < 4.0)

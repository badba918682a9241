import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kawasaki_gf.bounds import (ScaleParameters, best_alpha, ci_cases, existence_time,
                                exponential_norm_witness, generator_norm_bound,
                                hop_operator_bound, scale_norm_exponential,
                                verify_bound_randomized, vlasov_gap_bound)
from kawasaki_gf.errors import DomainError, InputError
from kawasaki_gf.grid import DensityField
from kawasaki_gf.kernels import PairKernel

# 0.2 e 2 e [(2e + 2/e) + 32], evaluated at 30 digits
GAP_BOUND_REFERENCE = 112.82297306762969329


def test_scale_norm_exponential(grid256, bump):
    assert scale_norm_exponential(DensityField.constant(grid256, 0.0), 3.0) == 1.0
    assert scale_norm_exponential(bump, 1.0 / bump.max()) == 1.0
    assert scale_norm_exponential(bump, 2.0 / bump.max()) == math.inf
    # the witness grows without bound when sup rho > 1/alpha
    alpha = 2.0 / bump.max()
    assert exponential_norm_witness(bump, alpha, 1e4) > exponential_norm_witness(bump, alpha, 1e2)
    assert exponential_norm_witness(bump, 0.5 / bump.max(), 1e4) < 1.0


def test_scale_norm_nested(bump):
    a0 = 1.0 / bump.max()
    assert all(scale_norm_exponential(bump, a) == 1.0 for a in np.linspace(0.01, 1, 20) * a0)


def test_hop_operator_bound():
    assert hop_operator_bound(1, 0, 2, 1, 1) == 2.0
    assert hop_operator_bound(1, 2.0, 2, 1, 1) == pytest.approx(math.e * hop_operator_bound(1, 0, 2, 1, 1))
    assert hop_operator_bound(1, 0, 1.0, 1 - 1e-9, 1) > 1e8
    with pytest.raises(DomainError):
        hop_operator_bound(1, 0, 1, 1, 1)


def test_generator_norm_bound():
    p = ScaleParameters(1.0, 1.0, 2.0, 2.0)
    assert generator_norm_bound(p, 1.0, 0.0) == 4.0
    assert generator_norm_bound(p, 1.0, 1.0) == pytest.approx(4.0 * math.e)
    half = ScaleParameters(1.0, 1.5, 2.0, 2.0)
    assert generator_norm_bound(half, 1.0, 0.0) == pytest.approx(8.0)


def test_vlasov_gap_bound():
    p = ScaleParameters(1.0, 1.0, 2.0, 2.0, 0.1)
    assert vlasov_gap_bound(p, 1.0, 1.0, 1.0) == pytest.approx(GAP_BOUND_REFERENCE, rel=1e-14)
    assert vlasov_gap_bound(ScaleParameters(1.0, 1.0, 2.0, 2.0, 0.0), 1, 1, 1) == 0.0
    assert vlasov_gap_bound(p, 1.0, 1.0, 0.0) == 0.0
    with pytest.raises(DomainError):
        vlasov_gap_bound(ScaleParameters(1.0, 1.0, 2.0, 2.0), 1, 1, 1)


def test_existence_time():
    assert existence_time(1.0, 2.0, 1.0, 0.0) == pytest.approx(0.091969860292860580399, rel=1e-14)
    assert existence_time(1.0, 2.0, 2.0, 0.0) == pytest.approx(existence_time(1.0, 2.0, 1.0, 0.0) / 2)
    assert existence_time(2.0 - 1e-9, 2.0, 1.0, 0.3) < 1e-9
    with pytest.raises(DomainError):
        existence_time(2.0, 2.0, 1.0, 0.0)


def test_best_alpha_maximizes_existence_time():
    for a0, p1 in [(0.1, 0.05), (1.0, 2.0), (2.0, 0.1)]:
        b = best_alpha(a0, p1)
        assert 0 < b < a0
        grid = np.linspace(1e-3, 1 - 1e-3, 999) * a0
        assert existence_time(b, a0, 1.0, p1) >= max(existence_time(g, a0, 1.0, p1) for g in grid)


def test_scale_parameter_ordering():
    with pytest.raises(DomainError):
        ScaleParameters(1.0, 2.0, 2.0, 3.0)
    with pytest.raises(DomainError):
        ScaleParameters(1.0, 1.0, 2.0, 1.5)
    with pytest.raises(DomainError):
        ScaleParameters(1.0, 1.0, 2.0, 2.0, -0.1)


positive = st.floats(0.01, 10)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(0.1, 1), gap=st.floats(0.05, 2), extra=st.floats(0, 1),
       a1=positive, p1=positive, pinf=positive, eps=st.floats(0.001, 1), da=positive)
def test_bounds_positive_and_monotone(a, gap, extra, a1, p1, pinf, eps, da):
    p = ScaleParameters(a, a, a + gap, a + gap + extra, eps)
    for f in (lambda x, y: generator_norm_bound(p, x, y),
              lambda x, y: vlasov_gap_bound(p, x, y, pinf),
              lambda x, y: hop_operator_bound(1.0, y, a + gap, a, x)):
        base = f(a1, p1)
        assert base > 0
        assert f(a1 + da, p1) > base and f(a1, p1 + da) > base
    narrow = ScaleParameters(a, a + gap * 0.999, a + gap, a + gap + extra, eps)
    assert generator_norm_bound(narrow, a1, p1) > 100 * generator_norm_bound(p, a1, p1)


def test_verifier_homogeneous_vlasov_is_zero(grid256):
    rho = DensityField.constant(grid256, 0.5)
    a = PairKernel.gaussian(1.0, 0.5, L=10.0)
    p = ScaleParameters(1.0, 1.2, 2.0, 2.0, 0.1)
    from kawasaki_gf.bounds import random_test_function
    from kawasaki_gf.gf import apply_operator
    th = random_test_function(grid256, np.random.default_rng(0), 3.0)
    assert abs(apply_operator(rho, th, "vlasov", a, a)) < 1e-12
    assert verify_bound_randomized("generator", rho, p, 10, np.random.default_rng(0), a, a) <= 1


def test_verifier_preconditions(bump):
    a = PairKernel.gaussian(1.0, 0.5, L=10.0)
    p = ScaleParameters(1.0, 1.2, 2.0, 2.0)
    with pytest.raises(DomainError):
        verify_bound_randomized("hop", bump, p, 5, np.random.default_rng(0), a, a)
    good = ScaleParameters(0.3, 0.4, 0.9, 0.9)
    with pytest.raises(DomainError):
        verify_bound_randomized("gap", bump, good, 5, np.random.default_rng(0), a, a)
    with pytest.raises(InputError):
        verify_bound_randomized("bogus", bump, good, 5, np.random.default_rng(0), a, a)


def test_gap_bound_holds_when_epsilon_halves():
    label, rho, p, a, phi = next(iter(ci_cases()))
    for eps in (0.1, 0.05, 0.025):
        q = ScaleParameters(p.alpha, p.alpha_prime, p.alpha_dprime, p.alpha0, eps)
        assert verify_bound_randomized("gap", rho, q, 30, np.random.default_rng(1), a, phi) <= 1


def test_ci_cases_shape():
    cases = list(ci_cases())
    assert len(cases) == 9
    assert {c[0].split("/")[0] for c in cases} == {"tophat", "gaussian", "exponential"}
    assert all(scale_norm_exponential(rho, p.alpha_dprime) == 1.0 for _, rho, p, _, _ in cases)

import math

import numpy as np
import pytest

from kawasaki_gf.errors import InputError, NumericalBlowUp, StateError, StepSizeError
from kawasaki_gf.geometry import Torus
from kawasaki_gf.grid import DensityField, Grid
from kawasaki_gf.kernels import PairKernel
from kawasaki_gf.vlasov import (Trajectory, convolve, integrate, linear_mode_rate,
                                vlasov_rhs)

L = 10.0


def test_convolve_identity(grid256, bump):
    delta = np.zeros(grid256.shape)
    delta[0] = 1.0 / grid256.h
    out = convolve(bump, DensityField(grid256, delta))
    assert np.max(np.abs(out.values - bump.values)) < 1e-10


def test_convolve_constant_and_fubini(grid256, bump, smooth_kernels):
    a, _ = smooth_kernels
    c = convolve(DensityField.constant(grid256, 2.5), a)
    assert np.max(np.abs(c.values - 2.5 * a.l1_norm())) < 1e-10
    f = convolve(bump, a)
    assert f.integral() == pytest.approx(bump.integral() * a.l1_norm(), rel=1e-10)


def test_convolve_matches_direct_sum(grid256, bump, smooth_kernels):
    a, _ = smooth_kernels
    x = grid256.axis
    direct = np.array([np.sum(bump.values * a.evaluate(xi - x)) * grid256.h for xi in x])
    assert np.max(np.abs(convolve(bump, a).values - direct)) < 1e-12


def test_rhs_homogeneous_and_mass(grid256, bump, smooth_kernels):
    a, phi = smooth_kernels
    assert np.max(np.abs(vlasov_rhs(DensityField.constant(grid256, 1.7), a, phi).values)) < 1e-12
    r = vlasov_rhs(bump, a, phi)
    assert abs(np.sum(r.values)) <= 1e-10 * np.sum(np.abs(r.values))


def test_rhs_linear_mode(grid256):
    a = PairKernel.gaussian(1.0, 0.5, L=L)
    k = 2 * math.pi * 3 / L
    rho = DensityField(grid256, 1.0 + 0.1 * np.cos(k * grid256.axis))
    r = vlasov_rhs(rho, a, PairKernel.zero(L=L))
    expected = 0.1 * (a.fourier(k) - a.l1_norm()) * np.cos(k * grid256.axis)
    assert np.max(np.abs(r.values - expected)) < 1e-8


def test_rhs_rejects_negative(grid256):
    a = PairKernel.gaussian(1.0, 0.5, L=L)
    with pytest.raises(StateError):
        vlasov_rhs(DensityField(grid256, -np.ones(grid256.shape)), a, a)


def test_linear_mode_rate():
    a = PairKernel.tophat(1.0, 0.5, L=L)
    assert linear_mode_rate(a, 0.0) == 0.0
    assert linear_mode_rate(a, 2 * math.pi) == pytest.approx(1.0, abs=1e-15)
    g = PairKernel.gaussian(0.8, 0.6, L=L)
    assert linear_mode_rate(g, 1.3) == pytest.approx(
        g.l1_norm() * (1 - math.exp(-0.36 * 1.69 / 2)), rel=1e-14)


def test_integrate_homogeneous(grid256, smooth_kernels):
    a, phi = smooth_kernels
    traj = integrate(DensityField.constant(grid256, 0.8), 2.0, 0.05, a, phi, [1.0, 2.0])
    assert all(np.max(np.abs(f.values - 0.8)) < 1e-12 for f in traj.fields)


def test_integrate_mass_and_output_times(grid256, bump, smooth_kernels):
    a, phi = smooth_kernels
    times = [0.0, 0.5, 1.3, 2.0]
    traj = integrate(bump, 2.0, 0.05, a, phi, times)
    assert traj.times == times and len(traj) == 4
    assert np.array_equal(traj.at(0.0).values, bump.values)
    for f in traj.fields:
        assert f.integral() == pytest.approx(bump.integral(), rel=1e-12)
    with pytest.raises(KeyError):
        traj.at(0.7)


def test_integrate_free_mode_decay(grid256):
    a = PairKernel.gaussian(1.0, 0.5, L=L)
    k = 2 * math.pi * 2 / L
    x = grid256.axis
    rho = DensityField(grid256, 1.0 + 0.2 * np.cos(k * x))
    f = integrate(rho, 2.0, 0.01, a, PairKernel.zero(L=L)).fields[-1]
    amp = 2 * np.sum((f.values - 1.0) * np.cos(k * x)) / len(x)
    assert amp == pytest.approx(0.2 * math.exp(-2.0 * linear_mode_rate(a, k)), rel=1e-6)


def test_integrate_guards(grid256, bump, smooth_kernels):
    a, phi = smooth_kernels
    with pytest.raises(InputError):
        integrate(bump, 1.0, 0.1, a, phi)
    with pytest.raises(InputError):
        integrate(bump, 1.0, 0.01, a, phi, [0.5, 0.2])
    with pytest.raises(InputError):
        integrate(bump, 1.0, -0.01, a, phi)


def test_sup_norm_monitor_logs(grid256, bump, smooth_kernels, caplog):
    a, phi = smooth_kernels
    integrate(bump, 0.1, 0.05, a, phi, alpha0=1.0)
    assert "exceeds" in caplog.text


def test_trajectory_lookup_tolerance(grid256):
    f = DensityField.constant(grid256, 1.0)
    tr = Trajectory([0.1 + 0.2], [f])
    assert tr.at(0.3) is f


def test_error_types_are_numerical():
    assert issubclass(NumericalBlowUp, ArithmeticError)
    assert issubclass(StepSizeError, ArithmeticError)

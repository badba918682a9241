import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kawasaki_gf.errors import InputError
from kawasaki_gf.geometry import (CellList, Configuration, Torus, build_cell_list,
                                  min_image_displacement, poisson_sample, relative_energy)
from kawasaki_gf.grid import DensityField, Grid
from kawasaki_gf.kernels import PairKernel


def test_min_image_examples():
    assert min_image_displacement(Torus(1, 10), 9.5, 0.5) == pytest.approx(1.0)
    assert min_image_displacement(Torus(1, 10), 3.3, 3.3) == 0.0
    assert min_image_displacement(Torus(1, 4), 0.0, 2.0) == -2.0


@settings(max_examples=100, deadline=None)
@given(x=st.floats(0, 9.999), y=st.floats(0, 9.999))
def test_min_image_range_and_consistency(x, y):
    t = Torus(1, 10.0)
    dxy = float(min_image_displacement(t, x, y))
    assert -5.0 <= dxy < 5.0
    assert (x + dxy - y) % 10.0 == pytest.approx(0.0, abs=1e-9) or \
        (x + dxy - y) % 10.0 == pytest.approx(10.0, abs=1e-9)


def test_relative_energy_examples():
    phi = PairKernel.tophat(1.0, 1.5, L=4.0)
    t = Torus(1, 4.0)
    assert relative_energy(Configuration.empty(t), [0.5], phi) == 0.0
    assert relative_energy(Configuration(np.array([0.0, 1.0]), t), [0.5], phi) == 2.0
    phi8 = PairKernel.tophat(1.0, 1.5, L=8.0)
    assert relative_energy(Configuration(np.array([0.0]), Torus(1, 8.0)), [2.0], phi8) == 0.0


@pytest.mark.parametrize("d", [1, 2, 3])
def test_cell_list_energy_equals_brute_force(d):
    rng = np.random.default_rng(d)
    t = Torus(d, 6.0)
    phi = PairKernel.tophat(1.0, 0.9, d=d, L=6.0)
    cfg = poisson_sample(t, 2.0 if d < 3 else 0.5, rng)
    cells = build_cell_list(cfg, phi)
    assert cells is not None
    for y in rng.random((50, d)) * 6.0:
        assert relative_energy(cfg, y, phi, cells) == relative_energy(cfg, y, phi)


def test_cell_list_move_tracks_points():
    t = Torus(1, 10.0)
    cfg = Configuration(np.array([0.5, 5.5]), t)
    cl = CellList(cfg, 1.0)
    cl.move(0, [9.7])
    assert 0 in cl.neighbors([0.2]) and 0 not in cl.neighbors([5.0])


def test_no_cell_list_for_smooth_kernels():
    cfg = Configuration(np.array([1.0]), Torus(1, 10.0))
    assert build_cell_list(cfg, PairKernel.gaussian(1, 0.5, L=10.0)) is None


def test_configuration_validation(tmp_path):
    t = Torus(2, 5.0)
    with pytest.raises(InputError):
        Configuration(np.array([[5.0, 1.0]]), t)
    with pytest.raises(InputError):
        Configuration(np.array([1.0, 2.0, 3.0]), t)
    c = Configuration.wrapped(np.array([[5.5, -0.5], [1.0, 2.0]]), t)
    assert np.allclose(c.points, [[0.5, 4.5], [1.0, 2.0]])
    c.to_csv(tmp_path / "c.csv")
    back = Configuration.from_csv(tmp_path / "c.csv")
    assert back.torus == t and np.array_equal(back.points, c.points)


def test_torus_wrap_never_returns_L():
    t = Torus(1, 10.0)
    assert t.wrap(np.array([-1e-18]))[0] < 10.0


def test_poisson_zero_intensity(rng):
    assert len(poisson_sample(Torus(1, 10.0), 0.0, rng)) == 0
    g = Grid(Torus(1, 10.0), 16)
    assert len(poisson_sample(g.torus, DensityField.constant(g, 0.0), rng)) == 0


def test_poisson_mean_count():
    t = Torus(2, 3.0)
    rng = np.random.default_rng(5)
    counts = np.array([len(poisson_sample(t, 1.5, rng)) for _ in range(10**4)])
    mean = 1.5 * 9.0
    assert abs(counts.mean() - mean) <= 3 * np.sqrt(mean / len(counts))


def test_poisson_respects_support():
    g = Grid(Torus(1, 10.0), 64)
    vals = np.where((g.axis > 1.0) & (g.axis < 4.0), 3.0, 0.0)
    rng = np.random.default_rng(6)
    pts = np.concatenate([poisson_sample(g.torus, DensityField(g, vals), rng).points[:, 0]
                          for _ in range(200)])
    assert len(pts) > 1000 and np.all(pts > 0.5)
    assert np.all(pts < 5.0)
    with pytest.raises(InputError):
        poisson_sample(g.torus, DensityField(g, vals - 5.0), rng)

"""Experiment orchestration: the particle-vs-kinetic scaling experiment and the
two-particle equilibrium check, plus their persistence."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import scipy
from scipy import integrate as quad_int
from scipy import stats

from . import __version__
from .bounds import best_alpha, existence_time
from .errors import ConfigurationError, InputError, StatisticsError
from .geometry import Configuration, Torus, poisson_sample
from .gf import EmpiricalGF, ExponentialGF, TestFunction, evaluate_renormalized_with_error
from .grid import DensityField, Grid
from .kernels import PairKernel, min_image
from .kmc import (KawasakiSystem, estimate_two_point_density, replica_densities,
                  simulate)
from .vlasov import integrate

log = logging.getLogger(__name__)

MAX_EXPECTED_PARTICLES = 1e5


def seeded_rng(seed: int, replica: int, stream: int = 0) -> np.random.Generator:
    """Replica stream: base seed + replica index, with ``stream`` separating sweeps."""
    return np.random.default_rng(np.random.SeedSequence(seed + replica, spawn_key=(stream,)))


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def config_hash(cfg: Mapping) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


def manifest(cfg: Mapping, command: str) -> dict:
    return {
        "command": command,
        "config_sha256": config_hash(cfg),
        "seed": cfg.get("seed"),
        "versions": {"kawasaki_gf": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
    }


def write_json(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# scaling experiment
# ---------------------------------------------------------------------------

DEFAULT_SCALING = {
    "torus": {"d": 1, "L": 10.0},
    "n": 128,
    "a": {"family": "gaussian", "A": 1.0, "sigma": 0.5},
    "phi": {"family": "gaussian", "A": 0.04, "sigma": 0.5},
    "rho0": {"type": "gaussian-bump", "center": 5.0, "width": 1.0, "height": 8.0,
             "baseline": 3.0},
    "epsilons": [0.5, 0.2, 0.1],
    "t_end": None,
    "observation_times": None,
    "replicas": 50,
    "thetas": [
        {"family": "gaussian", "amplitude": 0.1, "center": 5.0, "width": 1.0},
        {"family": "gaussian", "amplitude": -0.08, "center": 3.5, "width": 0.7},
    ],
    "dt": 1e-3,
    "alpha": None,
    "alpha0": None,
    "pair_cells_per_bin": 13,
    "pair_bins": [3, 4, 5],
    "output_dir": None,
}


@dataclass
class ExperimentConfig:
    torus: Torus
    n: int
    a: PairKernel
    phi: PairKernel
    rho0: dict
    epsilons: list
    t_end: float | None
    observation_times: list | None
    replicas: int
    thetas: list
    seed: int
    dt: float = 1e-3
    alpha: float | None = None
    alpha0: float | None = None
    pair_cells_per_bin: int = 13
    pair_bins: list = field(default_factory=lambda: [3, 4, 5])
    output_dir: str | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, cfg: Mapping) -> "ExperimentConfig":
        unknown = set(cfg) - set(DEFAULT_SCALING) - {"seed"}
        if unknown:
            raise ConfigurationError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        if "seed" not in cfg:
            raise ConfigurationError("missing required config key 'seed'")
        merged = {**DEFAULT_SCALING, **cfg}
        torus = torus_from(merged["torus"])
        kw = {k: merged[k] for k in ("rho0", "epsilons", "t_end", "observation_times",
                                     "replicas", "thetas", "dt", "alpha", "alpha0",
                                     "pair_cells_per_bin", "pair_bins", "output_dir")}
        kw["epsilons"] = [float(e) for e in kw["epsilons"]]
        out = cls(torus=torus, n=int(merged["n"]),
                  a=PairKernel.from_dict(merged["a"], d=torus.d, L=torus.L),
                  phi=PairKernel.from_dict(merged["phi"], d=torus.d, L=torus.L),
                  seed=int(merged["seed"]), raw=dict(merged), **kw)
        out.validate()
        return out

    def validate(self) -> None:
        eps = self.epsilons
        if not eps or any(e <= 0 for e in eps):
            raise ConfigurationError("epsilons: values must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigurationError("epsilons: values must be strictly decreasing")
        if int(self.replicas) < 1:
            raise ConfigurationError("replicas: must be >= 1")
        if self.torus.d != 1:
            raise ConfigurationError("torus: the scaling experiment is implemented for d == 1")
        mass = self.rho0_field().integral()
        if mass / min(eps) > MAX_EXPECTED_PARTICLES:
            raise ConfigurationError(
                f"epsilons: expected particle count {mass / min(eps):.3g} exceeds "
                f"{MAX_EXPECTED_PARTICLES:.0e}")

    @property
    def grid(self) -> Grid:
        return Grid(self.torus, self.n)

    def rho0_field(self) -> DensityField:
        return DensityField.from_spec(self.grid, self.rho0)

    def test_functions(self) -> list[TestFunction]:
        return [TestFunction.from_dict(t, d=self.torus.d, L=self.torus.L) for t in self.thetas]


def torus_from(spec: Mapping) -> Torus:
    try:
        return Torus(int(spec["d"]), float(spec["L"]))
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"torus: needs keys d and L ({exc})") from None


@dataclass
class DensityRecord:
    epsilon: float
    time: float
    rho_emp: np.ndarray      # epsilon * empirical density
    rho_pde: np.ndarray
    stderr: np.ndarray
    l1_error: float
    l1_stderr: float
    linf_error: float


@dataclass
class GFRecord:
    epsilon: float
    time: float
    theta_id: int
    b_emp: float
    b_pde: float
    stderr: float

    @property
    def gap(self) -> float:
        return abs(self.b_emp - self.b_pde)


@dataclass
class PairRecord:
    epsilon: float
    time: float
    estimate: np.ndarray     # epsilon^2 * two-point density on coarse bins
    target: np.ndarray       # products of bin-averaged rho_t
    stderr: np.ndarray

    @property
    def max_abs_z(self) -> float:
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.abs(self.estimate - self.target) / self.stderr
        return float(np.nanmax(z))


@dataclass
class ScalingReport:
    epsilons: list
    times: list
    alpha: float
    alpha0: float
    existence_time: float
    t_end: float
    x: np.ndarray
    density: list
    gf: list
    pairs: list
    initial_z: dict          # epsilon -> standardized chi-square of t=0 counts
    particle_counts: dict    # epsilon -> mean initial particle number
    runtimes: dict = field(default_factory=dict)  # seconds; never written to disk

    def density_record(self, eps: float, t: float) -> DensityRecord:
        return next(r for r in self.density if r.epsilon == eps and r.time == t)

    def gf_record(self, eps: float, t: float, theta_id: int) -> GFRecord:
        return next(r for r in self.gf if r.epsilon == eps and r.time == t
                    and r.theta_id == theta_id)

    def summary(self) -> dict:
        return {
            "epsilons": self.epsilons,
            "times": self.times,
            "alpha": self.alpha,
            "alpha0": self.alpha0,
            "existence_time_conservative_estimate": self.existence_time,
            "t_end": self.t_end,
            "initial_chi2_z": {fmt(k): v for k, v in self.initial_z.items()},
            "mean_initial_particles": {fmt(k): v for k, v in self.particle_counts.items()},
            "density_errors": [
                {"epsilon": r.epsilon, "time": r.time, "l1_error": r.l1_error,
                 "l1_stderr": r.l1_stderr, "linf_error": r.linf_error}
                for r in self.density],
            "gf_gaps": [
                {"epsilon": r.epsilon, "time": r.time, "theta_id": r.theta_id,
                 "gap": r.gap, "stderr": r.stderr} for r in self.gf],
            "pair_factorization": [
                {"epsilon": r.epsilon, "time": r.time, "max_abs_z": r.max_abs_z}
                for r in self.pairs],
        }


def _jackknife_l1(per: np.ndarray, target: np.ndarray, scale: float, hv: float) -> float:
    R = per.shape[0]
    if R < 2:
        return 0.0
    total = per.sum(axis=0)
    loo = np.array([np.sum(np.abs(scale * (total - per[r]) / (R - 1) - target)) * hv
                    for r in range(R)])
    return float(math.sqrt((R - 1) / R * np.sum((loo - loo.mean()) ** 2)))


def run_scaling_experiment(cfg: ExperimentConfig) -> ScalingReport:
    """Particles at several epsilon against the kinetic-equation solution.

    For each epsilon: replicas start from Poisson(rho0 / epsilon), evolve under
    the epsilon-scaled hopping dynamics, and are compared through
    epsilon * density and B(epsilon theta) with rho_t and exp(int rho_t theta).
    """
    grid, torus = cfg.grid, cfg.torus
    rho0 = cfg.rho0_field()
    a, phi = cfg.a, cfg.phi
    alpha0 = cfg.alpha0 if cfg.alpha0 is not None else 1.0 / rho0.max()
    alpha = cfg.alpha if cfg.alpha is not None else best_alpha(alpha0, phi.l1_norm())
    t_exist = existence_time(alpha, alpha0, a.l1_norm(), phi.l1_norm())
    t_end = cfg.t_end if cfg.t_end is not None else 0.9 * t_exist
    if t_end > t_exist:
        log.warning("t_end = %.4g exceeds the conservative existence time %.4g", t_end, t_exist)
    obs = cfg.observation_times if cfg.observation_times is not None else [t_end / 2, t_end]
    times = sorted({0.0, *[float(t) for t in obs]})
    if times[-1] > t_end:
        raise ConfigurationError("observation_times: must not exceed t_end")
    dt = min(cfg.dt, 0.1 / a.l1_norm())
    traj = integrate(rho0, t_end, dt, a, phi, output_times=times, alpha0=alpha0)
    thetas = cfg.test_functions()
    hv = grid.cell_volume
    m = cfg.pair_cells_per_bin
    bins = list(cfg.pair_bins)

    density, gfs, pairs = [], [], []
    initial_z, counts, runtimes = {}, {}, {}
    for i, eps in enumerate(cfg.epsilons):
        t0 = time.perf_counter()
        intensity = DensityField(grid, rho0.values / eps)
        runs = []
        for r in range(cfg.replicas):
            rng = seeded_rng(cfg.seed, r, stream=i)
            system = KawasakiSystem(poisson_sample(torus, intensity, rng), a, phi, rng,
                                    epsilon=eps)
            runs.append(simulate(system, t_end, times))
        runtimes[eps] = time.perf_counter() - t0
        counts[eps] = float(np.mean([len(s[0].points) for s in runs]))
        for k, t in enumerate(times):
            configs = [Configuration(s[k].points, torus) for s in runs]
            per = replica_densities(configs, grid)
            R = per.shape[0]
            rho_t = traj.at(t).values
            emp = eps * per.mean(axis=0)
            err = eps * per.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros_like(emp)
            density.append(DensityRecord(
                eps, t, emp, rho_t.copy(), err,
                float(np.sum(np.abs(emp - rho_t)) * hv),
                _jackknife_l1(per, rho_t, eps, hv),
                float(np.max(np.abs(emp - rho_t)))))
            if t == 0.0:
                observed = per.sum(axis=0) * hv
                expected = R * rho0.values * hv / eps
                mask = expected > 0
                chi2 = float(np.sum((observed[mask] - expected[mask]) ** 2 / expected[mask]))
                dof = int(mask.sum())
                initial_z[eps] = (chi2 - dof) / math.sqrt(2 * dof)
            egf = EmpiricalGF(configs)
            for j, th in enumerate(thetas):
                b_emp, se = evaluate_renormalized_with_error(egf, th, eps)
                gfs.append(GFRecord(eps, t, j, b_emp, ExponentialGF(traj.at(t)).evaluate(th), se))
            if bins:
                est, est_err = estimate_two_point_density(configs, grid, m, bins)
                bin_means = np.array([rho_t[b * m:(b + 1) * m].mean() for b in bins])
                pairs.append(PairRecord(eps, t, eps**2 * est, np.outer(bin_means, bin_means),
                                        eps**2 * est_err))
        log.info("epsilon %.4g: %d replicas, %.1f particles on average, %.2fs",
                 eps, cfg.replicas, counts[eps], runtimes[eps])
    return ScalingReport(list(cfg.epsilons), times, alpha, alpha0, t_exist, t_end,
                         grid.axis.copy(), density, gfs, pairs, initial_z, counts, runtimes)


def write_scaling_outputs(report: ScalingReport, cfg: ExperimentConfig, outdir) -> list[Path]:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "density.csv", out / "gf.csv", out / "report.json", out / "manifest.json"]
    with open(paths[0], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epsilon", "time", "x", "rho_emp", "rho_pde", "abs_err"])
        for rec in report.density:
            for x, e, p in zip(report.x, rec.rho_emp, rec.rho_pde):
                w.writerow([fmt(rec.epsilon), fmt(rec.time), fmt(x), fmt(e), fmt(p),
                            fmt(abs(e - p))])
    with open(paths[1], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epsilon", "time", "theta_id", "b_emp", "b_pde", "stderr"])
        for rec in report.gf:
            w.writerow([fmt(rec.epsilon), fmt(rec.time), rec.theta_id, fmt(rec.b_emp),
                        fmt(rec.b_pde), fmt(rec.stderr)])
    write_json(paths[2], report.summary())
    write_json(paths[3], manifest(cfg.raw, "scaling"))
    return paths


# ---------------------------------------------------------------------------
# two-particle equilibrium
# ---------------------------------------------------------------------------

@dataclass
class EquilibriumResult:
    edges: np.ndarray
    counts: np.ndarray
    expected: np.ndarray
    chi2: float
    pvalue: float
    n_samples: int

    def to_dict(self) -> dict:
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                for k, v in asdict(self).items()}


def pair_distance_law(phi: PairKernel, edges) -> np.ndarray:
    """Bin probabilities of the stationary two-particle distance (d == 1).

    The target density is proportional to exp(-phi(r)) times the ideal
    distance density, which is uniform on [0, L/2] in one dimension.
    """
    half = phi.L / 2
    brk = [phi.support_radius] if phi.support_radius else None

    def weight(r):
        return math.exp(-phi.evaluate(r))

    def mass(lo, hi):
        pts = [p for p in (brk or []) if lo < p < hi] or None
        return quad_int.quad(weight, lo, hi, points=pts, epsabs=1e-13, epsrel=1e-12)[0]

    total = mass(0.0, half)
    return np.array([mass(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]) / total


def run_equilibrium_check(a: PairKernel, phi: PairKernel, t_burn: float, t_sample: float,
                          rng: np.random.Generator, n_bins: int = 20,
                          sample_interval: float | None = None,
                          epsilon: float = 1.0) -> EquilibriumResult:
    """Long-run distance histogram of two particles against the Gibbs target.

    Distances are recorded every ``sample_interval`` (default: ten proposals
    per particle) after a burn-in, and compared with :func:`pair_distance_law`
    by a chi-square test.
    """
    if a.d != 1:
        raise InputError("the equilibrium check is implemented for d == 1")
    torus = Torus(1, a.L)
    interval = sample_interval or 10.0 / a.l1_norm()
    n = int(math.floor(t_sample / interval))
    edges = np.linspace(0.0, torus.L / 2, n_bins + 1)
    probs = pair_distance_law(phi.__class__(phi.family, phi.amplitude * epsilon, phi.scale,
                                            phi.d, phi.L), edges)
    if n * probs.min() < 5:
        raise StatisticsError(f"{n} samples give expected bin counts below 5")
    start = Configuration(torus.wrap(rng.random((2, 1)) * torus.L), torus)
    system = KawasakiSystem(start, a, phi, rng, epsilon=epsilon)
    times = t_burn + interval * np.arange(1, n + 1)
    snaps = simulate(system, float(times[-1]), times)
    dist = np.array([abs(float(min_image(s.points[1, 0] - s.points[0, 0], torus.L)))
                     for s in snaps])
    counts, _ = np.histogram(dist, bins=edges)
    expected = n * probs
    chi2, p = stats.chisquare(counts, expected)
    return EquilibriumResult(edges, counts, expected, float(chi2), float(p), n)

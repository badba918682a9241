"""Command-line entry point: ``kawasaki-gf <subcommand> ...``.

Exit codes: 0 success, 1 invalid input or configuration, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .bounds import (VERIFY_VARIANTS, ScaleParameters, existence_time, generator_norm_bound,
                     hop_operator_bound, run_ci_grid, vlasov_gap_bound)
from .errors import ConfigurationError, StateError, StatisticsError
from .geometry import poisson_sample
from .gf import EmpiricalGF, ExponentialGF, TestFunction, apply_operator, time_consistency
from .grid import DensityField, Grid
from .harness import (ExperimentConfig, fmt, manifest, run_equilibrium_check,
                      run_scaling_experiment, seeded_rng, torus_from, write_json,
                      write_scaling_outputs)
from .kernels import PairKernel
from .kmc import KawasakiSystem, replica_densities, simulate
from .vlasov import integrate

log = logging.getLogger("kawasaki_gf")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


class _Keys:
    """Config access that names the offending key on every failure."""

    def __init__(self, cfg, required: Sequence[str], optional: Mapping):
        if not isinstance(cfg, dict):
            raise ConfigurationError("config must be a JSON object")
        unknown = set(cfg) - set(required) - set(optional) - {"output_dir"}
        if unknown:
            raise ConfigurationError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        for k in required:
            if k not in cfg:
                raise ConfigurationError(f"missing required config key {k!r}")
        self.raw = cfg
        self.values = {**optional, **cfg}

    def __getitem__(self, key):
        return self.values[key]

    def number(self, key, kind=float):
        try:
            return kind(self.values[key])
        except (TypeError, ValueError):
            raise ConfigurationError(f"{key}: expected a number") from None

    def kernels(self, torus):
        out = []
        for k in ("a", "phi"):
            try:
                out.append(PairKernel.from_dict(self.values[k], d=torus.d, L=torus.L))
            except (KeyError, TypeError) as exc:
                raise ConfigurationError(f"{k}: malformed kernel spec ({exc})") from None
        return out


def _load(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: malformed JSON ({exc})") from None


def _outdir(args, cfg: Mapping, command: str) -> Path:
    out = Path(args.out or cfg.get("output_dir") or Path("runs") / command)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _coord(x) -> str:
    return " ".join(fmt(v) for v in np.atleast_1d(x))


def cmd_simulate(args) -> int:
    cfg = _Keys(_load(args.config), ("torus", "a", "phi", "seed", "t_end"),
                {"epsilon": 1.0, "snapshot_times": None, "replicas": 1,
                 "rho0": {"type": "constant", "value": 1.0}, "n": 64})
    torus = torus_from(cfg["torus"])
    a, phi = cfg.kernels(torus)
    t_end = cfg.number("t_end")
    times = cfg["snapshot_times"] or [t_end]
    seed, eps = cfg.number("seed", int), cfg.number("epsilon")
    grid = Grid(torus, cfg.number("n", int))
    rho0 = DensityField.from_spec(grid, cfg["rho0"])
    out = _outdir(args, cfg.raw, "simulate")

    per_time = [[] for _ in times]
    with open(out / "snapshots.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replica", "time", "particle"] + [f"x{i + 1}" for i in range(torus.d)])
        for r in range(cfg.number("replicas", int)):
            rng = seeded_rng(seed, r)
            system = KawasakiSystem(poisson_sample(torus, rho0, rng), a, phi, rng, epsilon=eps)
            for k, snap in enumerate(simulate(system, t_end, times)):
                per_time[k].append(snap.points)
                for i, p in enumerate(snap.points):
                    w.writerow([r, fmt(snap.time), i] + [fmt(v) for v in p])
    with open(out / "observables.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "bin_center", "value", "stderr"])
        centers = grid.coords.reshape(-1, torus.d)
        for t, pts in zip(times, per_time):
            dens = replica_densities(pts, grid).reshape(len(pts), -1)
            err = (dens.std(axis=0, ddof=1) / math.sqrt(len(pts)) if len(pts) > 1
                   else np.zeros(dens.shape[1]))
            for c, v, e in zip(centers, dens.mean(axis=0), err):
                w.writerow([fmt(t), _coord(c), fmt(v), fmt(e)])
    write_json(out / "manifest.json", manifest(cfg.raw, "simulate"))
    print(f"wrote {out / 'snapshots.csv'} and {out / 'observables.csv'}")
    return 0


def cmd_vlasov(args) -> int:
    cfg = _Keys(_load(args.config), ("torus", "n", "a", "phi", "rho0", "t_end", "dt"),
                {"output_times": None, "alpha0": None, "seed": None})
    torus = torus_from(cfg["torus"])
    a, phi = cfg.kernels(torus)
    grid = Grid(torus, cfg.number("n", int))
    rho0 = DensityField.from_spec(grid, cfg["rho0"])
    traj = integrate(rho0, cfg.number("t_end"), cfg.number("dt"), a, phi,
                     output_times=cfg["output_times"], alpha0=cfg["alpha0"])
    out = _outdir(args, cfg.raw, "vlasov")
    coords = grid.coords.reshape(-1, torus.d)
    with open(out / "vlasov.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "index", "x", "rho"])
        for t, f in zip(traj.times, traj.fields):
            for i, (x, v) in enumerate(zip(coords, f.values.ravel())):
                w.writerow([fmt(t), i, _coord(x), fmt(v)])
    write_json(out / "manifest.json", manifest(cfg.raw, "vlasov"))
    print(f"wrote {out / 'vlasov.csv'}")
    return 0


def cmd_gf_check(args) -> int:
    cfg = _Keys(_load(args.config), ("torus", "n", "a", "phi", "rho", "theta", "seed"),
                {"epsilons": [0.1, 0.05, 0.025, 0.0125], "t": 0.5, "dt_fd": 1e-3,
                 "replicas": 1000})
    torus = torus_from(cfg["torus"])
    a, phi = cfg.kernels(torus)
    grid = Grid(torus, cfg.number("n", int))
    rho = DensityField.from_spec(grid, cfg["rho"])
    theta = TestFunction.from_dict(cfg["theta"], d=torus.d, L=torus.L)
    records = []

    eps = [float(e) for e in cfg["epsilons"]]
    limit = apply_operator(rho, theta, "vlasov", a, phi)
    gaps = [apply_operator(rho, theta, "eps_ren", a, phi, e) - limit for e in eps]
    slope = None
    if len(eps) > 1 and all(g != 0 for g in gaps):
        slope = float(np.polyfit(np.log(eps), np.log(np.abs(gaps)), 1)[0])
    for e, g in zip(eps, gaps):
        records.append({"variant": "eps_ren", "epsilon": e, "value": g + limit,
                        "residual": abs(g), "slope": slope})
    records.append({"variant": "vlasov", "epsilon": None, "value": limit,
                    "residual": None, "slope": None})

    t, dt_fd = cfg.number("t"), cfg.number("dt_fd")
    res, value = time_consistency(rho, theta, t, dt_fd, a, phi)
    res_half, _ = time_consistency(rho, theta, t, dt_fd / 2, a, phi)
    order = math.log2(res / res_half) if res > 0 and res_half > 0 else None
    records.append({"variant": "time_consistency", "epsilon": None, "value": value,
                    "residual": res, "slope": order})

    if theta.lower_bound() <= -1:
        raise ConfigurationError("theta: empirical comparison needs theta > -1")
    seed = cfg.number("seed", int)
    ensemble = [poisson_sample(torus, rho, seeded_rng(seed, r))
                for r in range(cfg.number("replicas", int))]
    b_emp, err = EmpiricalGF(ensemble).evaluate_with_error(theta)
    b_exp = ExponentialGF(rho).evaluate(theta)
    records.append({"variant": "empirical", "epsilon": None, "value": b_emp,
                    "residual": abs(b_emp - b_exp), "slope": None, "stderr": err})

    out = _outdir(args, cfg.raw, "gf-check")
    write_json(out / "gf_check.json", records)
    write_json(out / "manifest.json", manifest(cfg.raw, "gf-check"))
    for rec in records:
        print(" ".join(f"{k}={v}" for k, v in rec.items()))
    return 0


def cmd_scaling(args) -> int:
    raw = _load(args.config)
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object")
    cfg = ExperimentConfig.from_dict(raw)
    report = run_scaling_experiment(cfg)
    out = _outdir(args, raw, "scaling")
    for p in write_scaling_outputs(report, cfg, out):
        print(f"wrote {p}")
    return 0


def cmd_bounds(args) -> int:
    alpha_p = args.alpha if args.alpha_prime is None else args.alpha_prime
    alpha_pp = args.alpha0 if args.alpha_dprime is None else args.alpha_dprime
    params = ScaleParameters(args.alpha, alpha_p, alpha_pp, args.alpha0, args.epsilon)
    norms = f"a_l1={fmt(args.a_l1)} phi_l1={fmt(args.phi_l1)}"
    scales = (f"alpha={fmt(args.alpha)} alpha'={fmt(alpha_p)} alpha''={fmt(alpha_pp)} "
              f"alpha0={fmt(args.alpha0)}")
    rows = []
    if args.alpha < args.alpha0:
        rows.append(("existence_time", f"alpha={fmt(args.alpha)} alpha0={fmt(args.alpha0)} "
                     f"{norms}", existence_time(args.alpha, args.alpha0, args.a_l1,
                                                args.phi_l1), "(conservative estimate)"))
    rows.append(("generator_norm_bound", f"{scales} {norms}",
                 generator_norm_bound(params, args.a_l1, args.phi_l1), ""))
    rows.append(("hop_operator_bound", f"c0=1 c1=phi_l1 alpha''={fmt(alpha_pp)} "
                 f"alpha'={fmt(alpha_p)} a_l1={fmt(args.a_l1)}",
                 hop_operator_bound(1.0, args.phi_l1, alpha_pp, alpha_p, args.a_l1), ""))
    if args.epsilon is not None and args.phi_linf is not None:
        rows.append(("vlasov_gap_bound", f"{scales} {norms} phi_linf={fmt(args.phi_linf)} "
                     f"epsilon={fmt(args.epsilon)}",
                     vlasov_gap_bound(params, args.a_l1, args.phi_l1, args.phi_linf), ""))
    print(f"{'formula':<22} {'value':>24}  inputs")
    for name, inputs, value, note in rows:
        print(f"{name:<22} {fmt(value):>24}  {inputs} {note}".rstrip())

    records = []
    if args.n_theta > 0:
        cases = run_ci_grid(args.n_theta, args.seed)
        for variant in VERIFY_VARIANTS:
            sel = [c for c in cases if c["variant"] == variant]
            records.append({"variant": variant, "max_ratio": max(c["max_ratio"] for c in sel),
                            "n_samples": args.n_theta * len(sel), "seed": args.seed})
        print("randomized verification (ratio > 1 is a counterexample):")
        for rec in records:
            print(f"  {rec['variant']:<10} max_ratio={fmt(rec['max_ratio'])} "
                  f"n_samples={rec['n_samples']}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "bounds.json", records)
        inputs = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
        write_json(out / "manifest.json", manifest(inputs, "bounds"))
    return 0 if all(r["max_ratio"] <= 1 for r in records) else 2


def cmd_equilibrium(args) -> int:
    cfg = _Keys(_load(args.config), ("torus", "a", "phi", "t_burn", "t_sample", "seed"),
                {"bins": 20, "sample_interval": None, "epsilon": 1.0})
    torus = torus_from(cfg["torus"])
    if torus.d != 1:
        raise ConfigurationError("torus: the equilibrium check is implemented for d == 1")
    a, phi = cfg.kernels(torus)
    res = run_equilibrium_check(a, phi, cfg.number("t_burn"), cfg.number("t_sample"),
                                seeded_rng(cfg.number("seed", int), 0),
                                n_bins=cfg.number("bins", int),
                                sample_interval=cfg["sample_interval"],
                                epsilon=cfg.number("epsilon"))
    out = _outdir(args, cfg.raw, "equilibrium")
    write_json(out / "equilibrium.json", res.to_dict())
    write_json(out / "manifest.json", manifest(cfg.raw, "equilibrium"))
    print(f"chi2={fmt(res.chi2)} p={fmt(res.pvalue)} samples={res.n_samples}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kawasaki-gf", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    for name, func, helptext in [
        ("simulate", cmd_simulate, "run the particle system"),
        ("vlasov", cmd_vlasov, "integrate the kinetic equation"),
        ("gf-check", cmd_gf_check, "check generating-functional operators"),
        ("scaling", cmd_scaling, "particles versus kinetic equation over an epsilon sweep"),
        ("equilibrium", cmd_equilibrium, "two-particle stationary distance test"),
    ]:
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", required=True, help="JSON config file")
        s.add_argument("--out", help="output directory (default: config output_dir or runs/<cmd>)")
        s.set_defaults(func=func)
    b = sub.add_parser("bounds", help="evaluate the norm bounds and try to falsify them")
    for flag in ("--alpha", "--alpha0", "--a-l1", "--phi-l1"):
        b.add_argument(flag, type=float, required=True)
    b.add_argument("--alpha-prime", type=float, help="default: alpha")
    b.add_argument("--alpha-dprime", type=float, help="default: alpha0")
    b.add_argument("--phi-linf", type=float)
    b.add_argument("--epsilon", type=float)
    b.add_argument("--n-theta", type=int, default=20,
                   help="random test functions per case of the verification grid (0 to skip)")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", help="directory for bounds.json and manifest.json")
    b.set_defaults(func=cmd_bounds)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ArithmeticError, StateError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, StatisticsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Particle system versus kinetic equation over the default epsilon sweep.

    python scripts/run_scaling.py --seed 2024 --replicas 50 --out runs/scaling
"""
import argparse
import json
import logging

from kawasaki_gf.harness import ExperimentConfig, run_scaling_experiment, write_scaling_outputs


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--replicas", type=int, default=50)
    p.add_argument("--out", default="runs/scaling")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    cfg = ExperimentConfig.from_dict({"seed": args.seed, "replicas": args.replicas})
    report = run_scaling_experiment(cfg)
    write_scaling_outputs(report, cfg, args.out)
    print(json.dumps(report.summary(), indent=2))


if __name__ == "__main__":
    main()

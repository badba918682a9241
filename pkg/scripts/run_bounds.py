"""Randomized falsification of the operator norm bounds on the standard case grid."""
import argparse

from kawasaki_gf.bounds import run_ci_grid


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n-theta", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    rows = run_ci_grid(args.n_theta, args.seed)
    for r in rows:
        print(f"{r['variant']:<10} {r['case']:<22} {r['max_ratio']:.3e}")
    worst = max(r["max_ratio"] for r in rows)
    print(f"worst ratio {worst:.3e} ({'ok' if worst <= 1 else 'COUNTEREXAMPLE'})")


if __name__ == "__main__":
    main()

"""Orthogonality and residual of the computed eigenvectors for the tridiagonal families."""

import argparse

from hybriddc.dc import DCOptions, solve, verify
from hybriddc.matgen import gen_clement, gen_hermite, gen_sht, gen_toeplitz211


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[1000, 2000, 4000])
    ap.add_argument("--switch-threshold", type=int, default=256)
    args = ap.parse_args()

    families = {
        "clement": gen_clement,
        "hermite": gen_hermite,
        "toeplitz211": gen_toeplitz211,
        "sht(m=n)": lambda n: gen_sht(n, n),
    }
    print(f"{'matrix':>12} {'n':>6} {'path':>11} {'orthogonality':>14} {'residual':>10} {'max rank':>9}")
    for name, gen in families.items():
        for n in args.n:
            T = gen(n)
            for path in ("force-dense", "auto"):
                E, stats = solve(T, DCOptions(path=path, switch_threshold=args.switch_threshold))
                m = verify(T, E)
                ranks = [s.hss_rank for s in stats.merges if s.hss_rank is not None]
                print(f"{name:>12} {n:6d} {path:>11} {m['orthogonality']:14.2e} {m['residual']:10.2e} "
                      f"{max(ranks) if ranks else '-':>9}")


if __name__ == "__main__":
    main()

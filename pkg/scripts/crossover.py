"""Dense vs HSS top-merge update flops on a matrix family, and the crossover n."""

import argparse

from hybriddc.cli import bench_rows, crossover
from hybriddc.dc import DCOptions
from hybriddc.matgen import gen_clement, gen_hermite, gen_toeplitz211

GENERATORS = {"clement": gen_clement, "hermite": gen_hermite, "toeplitz211": gen_toeplitz211}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kind", choices=sorted(GENERATORS), default="clement")
    ap.add_argument("--n", type=int, nargs="+", default=[256, 512, 1024, 2048, 4096])
    ap.add_argument("--leaf-size", type=int, default=128)
    ap.add_argument("--no-bisect", action="store_true")
    args = ap.parse_args()

    opts = DCOptions(leaf_size=args.leaf_size, switch_threshold=max(1024, 2 * args.leaf_size))
    print(f"{'n':>6} {'K':>6} {'dense flops':>14} {'hss flops':>14} {'ratio':>7} {'rank':>5}")
    for n in args.n:
        T = GENERATORS[args.kind](n)
        dense, hss = bench_rows(T, n, opts)
        K = round(n * (1 - dense["deflation_fraction"]))
        ratio = hss["flops_update_top_merge"] / dense["flops_update_top_merge"]
        print(f"{n:6d} {K:6d} {dense['flops_update_top_merge']:14d} {hss['flops_update_top_merge']:14d} "
              f"{ratio:7.3f} {hss['hss_rank']:5d}")
    if not args.no_bisect:
        lo = 2 * opts.base_size + 1
        print("crossover n:", crossover(args.kind, lo, max(args.n), opts))


if __name__ == "__main__":
    main()

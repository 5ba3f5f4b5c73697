"""HSS rank and reconstruction error of the dense Toeplitz test matrices."""

import argparse

import numpy as np

from hybriddc.flops import FlopCounter
from hybriddc.hss import DenseSource, build_cluster_tree, compress_randomized, hss_to_dense
from hybriddc.matgen import gen_toeplitz_dense


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[500, 1000, 2000, 4000])
    ap.add_argument("--tol", type=float, nargs="+", default=[1e-14])
    ap.add_argument("--leaf-size", type=int, default=128)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'kind':>14} {'n':>6} {'tol':>8} {'rank':>5} {'samples':>7} {'rel.error':>10} {'construct flops':>16}")
    for kind in ("diag-dominant", "kinetic"):
        for n in args.n:
            A = gen_toeplitz_dense(n, kind)
            for tol in args.tol:
                c = FlopCounter()
                H = compress_randomized(DenseSource(A, c), build_cluster_tree(n, args.leaf_size),
                                        tol=tol, seed=args.seed, counter=c)
                err = np.linalg.norm(hss_to_dense(H) - A) / np.linalg.norm(A)
                print(f"{kind:>14} {n:6d} {tol:8.0e} {H.hss_rank:5d} {H.info['samples']:7d} "
                      f"{err:10.2e} {c['construct']:16d}")


if __name__ == "__main__":
    main()

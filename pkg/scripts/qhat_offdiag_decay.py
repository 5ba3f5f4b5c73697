"""Singular values of an off-diagonal block of Q-hat and its HSS rank.

Builds the rank-one system d_i = i/N, rho = 1 with a random unit z, forms the
eigenvector matrix Q-hat and prints the normalized singular values of
Q-hat[:N/2, N/2:] at a few indices, plus the HSS rank at several tolerances.
"""

import argparse

import numpy as np

from hybriddc.hss import OperatorSource, build_cluster_tree, compress_randomized
from hybriddc.secular import RankOneEigenvectors, SecularSystem, lowner_reweight, solve_secular


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=2)
    ap.add_argument("--leaf-size", type=int, default=128)
    args = ap.parse_args()

    N = args.n
    rng = np.random.default_rng(args.seed)
    z = rng.standard_normal(N)
    sys_ = SecularSystem(np.arange(1, N + 1) / N, z / np.linalg.norm(z), 1.0)
    roots = solve_secular(sys_)
    op = RankOneEigenvectors(sys_, lowner_reweight(sys_, roots), roots)
    h = N // 2
    s = np.linalg.svd(op.dense()[:h, h:], compute_uv=False)
    s = s / s[0]
    print("index  sigma_i / sigma_1")
    for i in (1, 5, 10, 20, 30, 40, 50, 75, 100):
        if i <= s.size:
            print(f"{i:5d}  {s[i - 1]:.3e}")
    print("numerical rank at 1e-14:", int(np.sum(s > 1e-14)))
    tree = build_cluster_tree(N, args.leaf_size)
    for tol in (1e-6, 1e-10, 1e-14):
        H = compress_randomized(OperatorSource(op), tree, tol=tol, seed=args.seed)
        print(f"tol {tol:.0e}: hss_rank {H.hss_rank}, samples {H.info['samples']}")


if __name__ == "__main__":
    main()

"""Symmetric tridiagonal divide-and-conquer eigensolver with HSS-accelerated merges."""

from .dc import DCOptions, EigenDecomposition, MergeStats, SolveStats, compare_top_merge, solve, verify
from .matgen import (
    SymTridiagonal,
    gen_clement,
    gen_hermite,
    gen_sht,
    gen_toeplitz211,
    gen_toeplitz_dense,
    read_matrix,
    read_tridiag,
    write_dense,
    write_tridiag,
)

__version__ = "0.1.0"

__all__ = [
    "DCOptions",
    "EigenDecomposition",
    "MergeStats",
    "SolveStats",
    "SymTridiagonal",
    "compare_top_merge",
    "gen_clement",
    "gen_hermite",
    "gen_sht",
    "gen_toeplitz211",
    "gen_toeplitz_dense",
    "read_matrix",
    "read_tridiag",
    "solve",
    "verify",
    "write_dense",
    "write_tridiag",
]

"""Hierarchically semiseparable matrices: construction and fast products."""

from .apply import hss_diagnostics, hss_matmat, hss_matvec, hss_memory, hss_to_dense
from .compress import RNG_NAME, HSSMatrix, compress_randomized
from .interp import interpolative_decomposition
from .source import DenseSource, MatrixSource, OperatorSource
from .tree import ClusterTree, Node, build_cluster_tree

__all__ = [
    "ClusterTree",
    "DenseSource",
    "HSSMatrix",
    "MatrixSource",
    "Node",
    "OperatorSource",
    "RNG_NAME",
    "build_cluster_tree",
    "compress_randomized",
    "hss_diagnostics",
    "hss_matmat",
    "hss_matvec",
    "hss_memory",
    "hss_to_dense",
    "interpolative_decomposition",
]

"""Postordered binary cluster trees over contiguous index ranges."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import InvalidParameterError


@dataclass(frozen=True)
class Node:
    start: int
    stop: int
    left: int = -1
    right: int = -1
    parent: int = -1
    level: int = 0

    @property
    def size(self) -> int:
        return self.stop - self.start

    @property
    def is_leaf(self) -> bool:
        return self.left < 0


@dataclass(frozen=True)
class ClusterTree:
    """Nodes are numbered in postorder, so children precede their parent and
    the root is the last node.  Ranges are half-open ``[start, stop)``."""

    n: int
    leaf_size: int
    nodes: tuple

    @property
    def root(self) -> int:
        return len(self.nodes) - 1

    @property
    def leaves(self) -> list[int]:
        return [i for i, nd in enumerate(self.nodes) if nd.is_leaf]

    @property
    def depth(self) -> int:
        return max(nd.level for nd in self.nodes)

    def levels(self) -> list[list[int]]:
        """Node ids grouped by depth, deepest first."""
        by = [[] for _ in range(self.depth + 1)]
        for i, nd in enumerate(self.nodes):
            by[nd.level].append(i)
        return by[::-1]

    def __getitem__(self, i) -> Node:
        return self.nodes[i]

    def __len__(self):
        return len(self.nodes)


def build_cluster_tree(n: int, leaf_size: int) -> ClusterTree:
    """Bisect ``[0, n)`` at ``ceil(span/2)`` until spans are at most ``leaf_size``."""
    if leaf_size < 1:
        raise InvalidParameterError(f"leaf_size must be positive, got {leaf_size}")
    if n < 1:
        raise InvalidParameterError(f"n must be positive, got {n}")
    raw: list[list] = []

    def visit(start, stop, level):
        span = stop - start
        if span <= leaf_size:
            raw.append([start, stop, -1, -1, level])
            return len(raw) - 1
        mid = start + (span + 1) // 2
        a = visit(start, mid, level + 1)
        b = visit(mid, stop, level + 1)
        raw.append([start, stop, a, b, level])
        return len(raw) - 1

    visit(0, n, 0)
    parent = [-1] * len(raw)
    for i, (_, _, a, b, _) in enumerate(raw):
        if a >= 0:
            parent[a] = parent[b] = i
    nodes = tuple(
        Node(s, e, a, b, parent[i], lev) for i, (s, e, a, b, lev) in enumerate(raw)
    )
    return ClusterTree(n, leaf_size, nodes)

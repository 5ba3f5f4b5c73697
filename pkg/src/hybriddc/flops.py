"""Floating point operation bookkeeping.

Counts are analytic (2*m*k*n for a product, and so on) and are attached to
named categories so callers can split them into secular and update work.
"""

from collections import Counter
from dataclasses import dataclass, field


@dataclass
class FlopCounter:
    counts: Counter = field(default_factory=Counter)

    def add(self, category: str, flops: float) -> None:
        self.counts[category] += int(flops)

    def gemm(self, category: str, m: int, k: int, n: int) -> None:
        self.counts[category] += 2 * m * k * n

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def merge(self, other: "FlopCounter") -> None:
        self.counts.update(other.counts)

    def __getitem__(self, category: str) -> int:
        return self.counts[category]


def qr_flops(m: int, n: int) -> int:
    """Householder QR of an m-by-n matrix, leading terms."""
    a, b = max(m, n), min(m, n)
    return int(2 * a * b * b - 2 * b**3 / 3)

"""Bit-vector encoding of n-vertex graphs and exact clique counting.

Bit k of a graph code is the edge variable of the k-th vertex pair in the
order (1,2), (1,3), ..., (1,n), (2,3), ..., (n-1,n); the least significant
bit is the pair (1,2). Vertices are numbered from 1.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb

from .errors import ArgumentError


def num_pairs(n: int) -> int:
    """Number of vertex pairs, i.e. the code width L."""
    return n * (n - 1) // 2


@lru_cache(maxsize=None)
def pair_list(n: int) -> tuple[tuple[int, int], ...]:
    """All vertex pairs in bit order."""
    return tuple((v, w) for v in range(1, n + 1) for w in range(v + 1, n + 1))


def edge_index(v: int, v2: int, n: int) -> int:
    """Bit position of the pair (v, v2) with 1 <= v < v2 <= n."""
    if not (1 <= v < v2 <= n):
        raise ArgumentError(f"need 1 <= v < v2 <= n, got v={v}, v2={v2}, n={n}")
    # pairs (1,*) .. (v-1,*) come first: sum_{u<v} (n - u)
    before = (v - 1) * n - (v - 1) * v // 2
    return before + (v2 - v - 1)


@dataclass(frozen=True)
class GraphCode:
    bits: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ArgumentError(f"vertex count must be positive, got {self.n}")
        if not 0 <= self.bits < (1 << self.L):
            raise ArgumentError(f"code {self.bits} out of range for n={self.n}")

    @property
    def L(self) -> int:
        return num_pairs(self.n)

    def has_edge(self, v: int, v2: int) -> bool:
        if v > v2:
            v, v2 = v2, v
        return bool(self.bits >> edge_index(v, v2, self.n) & 1)

    def edges(self) -> list[tuple[int, int]]:
        return [p for k, p in enumerate(pair_list(self.n)) if self.bits >> k & 1]

    def adjacency(self) -> list[int]:
        """Per-vertex neighbour bitmasks; bit (w-1) of entry v-1 marks edge v-w."""
        adj = [0] * self.n
        for v, w in self.edges():
            adj[v - 1] |= 1 << (w - 1)
            adj[w - 1] |= 1 << (v - 1)
        return adj

    def permuted(self, perm) -> "GraphCode":
        """Relabel vertex v as perm[v-1] (perm is a permutation of 1..n)."""
        bits = 0
        for v, w in self.edges():
            a, b = sorted((perm[v - 1], perm[w - 1]))
            bits |= 1 << edge_index(a, b, self.n)
        return GraphCode(bits, self.n)

    def to_text(self) -> str:
        return f"n={self.n} code={self.bits}"

    def edge_list(self) -> str:
        return ",".join(f"{v}-{w}" for v, w in self.edges())

    @classmethod
    def from_edges(cls, n: int, edges) -> "GraphCode":
        bits = 0
        for v, w in edges:
            a, b = sorted((v, w))
            bits |= 1 << edge_index(a, b, n)
        return cls(bits, n)

    @classmethod
    def complete(cls, n: int) -> "GraphCode":
        return cls((1 << num_pairs(n)) - 1, n)

    @classmethod
    def empty(cls, n: int) -> "GraphCode":
        return cls(0, n)

    @classmethod
    def parse(cls, text: str) -> "GraphCode":
        m = re.fullmatch(r"\s*n=(\d+)\s+code=(\d+)\s*", text)
        if m is None:
            raise ArgumentError(f"expected 'n=<int> code=<int>', got {text!r}")
        return cls(int(m.group(2)), int(m.group(1)))


@dataclass(frozen=True)
class CountTriple:
    cliques: int
    independents: int

    @property
    def energy(self) -> int:
        return self.cliques + self.independents


def complement(code: GraphCode) -> GraphCode:
    return GraphCode(code.bits ^ ((1 << code.L) - 1), code.n)


def _check_size(k: int, name: str) -> None:
    if k < 2:
        raise ArgumentError(f"{name} must be >= 2, got {k}")


def _count_complete_subsets(adj: list[int], k: int) -> int:
    count = 0
    for subset in combinations(range(len(adj)), k):
        mask = 0
        for v in subset:
            mask |= 1 << v
        if all(adj[v] & mask == mask ^ (1 << v) for v in subset):
            count += 1
    return count


def count_cliques(code: GraphCode, x: int) -> int:
    """Number of x-subsets of vertices that are pairwise adjacent."""
    _check_size(x, "x")
    if x > code.n:
        return 0
    return _count_complete_subsets(code.adjacency(), x)


def count_independent(code: GraphCode, y: int) -> int:
    """Number of y-subsets of vertices with no edge among them."""
    _check_size(y, "y")
    if y > code.n:
        return 0
    return _count_complete_subsets(complement(code).adjacency(), y)


def energy_h(code: GraphCode, x: int, y: int) -> CountTriple:
    """Clique and independent-set counts; their sum is the energy h."""
    return CountTriple(count_cliques(code, x), count_independent(code, y))


def bound_v(n: int, x: int, y: int) -> int:
    """Largest possible number of x-cliques or y-independent sets."""
    return max(comb(n, x), comb(n, y))

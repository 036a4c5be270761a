"""Diagonal of the problem Hamiltonian over all graph codes and its level structure.

The problem Hamiltonian is diagonal in the computational basis, entry k being
h(k) = (#x-cliques + #y-independent sets) of the graph with code k. The table
is built by a vectorised sweep over vertex subsets, which is independent of
the per-graph adjacency counting in :mod:`ramsey_probe.graphs`.
"""

from __future__ import annotations

import hashlib
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from pathlib import Path

import numpy as np

from .errors import ArgumentError, FormatError, ResourceError
from .graphs import GraphCode, edge_index, num_pairs

DEFAULT_MAX_L = 21
MAX_L_ENV = "RPROBE_MAX_L"

MAGIC = b"RPROBE1\x00"
_HEADER = struct.Struct("<8sIIIIQ")
_CHECKSUM = struct.Struct("<Q")

_CHUNK = 1 << 16


def max_L(override: int | None = None) -> int:
    if override is not None:
        return override
    env = os.environ.get(MAX_L_ENV)
    return int(env) if env else DEFAULT_MAX_L


def _check_args(n: int, x: int, y: int) -> None:
    if n < 2:
        raise ArgumentError(f"n must be >= 2, got {n}")
    if x < 2 or y < 2:
        raise ArgumentError(f"x and y must be >= 2, got x={x}, y={y}")


def subset_masks(n: int, k: int) -> np.ndarray:
    """Edge-bit mask of every k-subset of vertices (empty if k > n)."""
    masks = []
    for subset in combinations(range(1, n + 1), k):
        m = 0
        for v, w in combinations(subset, 2):
            m |= 1 << edge_index(v, w, n)
        masks.append(m)
    return np.array(masks, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class DiagonalTable:
    n: int
    x: int
    y: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def L(self) -> int:
        return num_pairs(self.n)

    @property
    def N(self) -> int:
        return 1 << self.L

    def digest(self) -> str:
        h = hashlib.sha256(struct.pack("<III", self.n, self.x, self.y))
        h.update(self.values.astype("<u2").tobytes())
        return h.hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, DiagonalTable):
            return NotImplemented
        return ((self.n, self.x, self.y) == (other.n, other.x, other.y)
                and np.array_equal(self.values, other.values))


def _count_chunk(lo: int, hi: int, clique_masks, indep_masks) -> np.ndarray:
    codes = np.arange(lo, hi, dtype=np.int64)
    out = np.zeros(hi - lo, dtype=np.uint16)
    for m in clique_masks:
        out += (codes & m) == m
    for m in indep_masks:
        out += (codes & m) == 0
    return out


def build_diagonal(n: int, x: int, y: int, *, cap: int | None = None,
                   workers: int = 1) -> DiagonalTable:
    """Evaluate h for every one of the 2^L graph codes.

    Chunks are concatenated in code order, so the result does not depend on
    ``workers``.
    """
    _check_args(n, x, y)
    L = num_pairs(n)
    limit = max_L(cap)
    if L > limit:
        raise ResourceError(
            f"L={L} exceeds the cap of {limit} (raise it with {MAX_L_ENV} or --max-L)")
    N = 1 << L
    cm, im = subset_masks(n, x), subset_masks(n, y)
    bounds = [(lo, min(lo + _CHUNK, N)) for lo in range(0, N, _CHUNK)]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda b: _count_chunk(*b, cm, im), bounds))
    else:
        parts = [_count_chunk(lo, hi, cm, im) for lo, hi in bounds]
    return DiagonalTable(n, x, y, np.concatenate(parts))


@dataclass(frozen=True)
class Spectrum:
    """Distinct eigenvalues of the problem Hamiltonian with multiplicities."""

    levels: tuple[tuple[int, int], ...]
    N: int
    n: int | None = None
    x: int | None = None
    y: int | None = None
    table: DiagonalTable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        energies = [e for e, _ in self.levels]
        if any(b <= a for a, b in zip(energies, energies[1:])):
            raise ArgumentError("levels must be strictly ascending")
        if any(m <= 0 for _, m in self.levels):
            raise ArgumentError("multiplicities must be positive")
        if sum(m for _, m in self.levels) != self.N:
            raise ArgumentError("multiplicities must sum to N")

    @classmethod
    def synthetic(cls, levels, N: int | None = None) -> "Spectrum":
        levels = tuple(sorted((int(e), int(m)) for e, m in levels))
        return cls(levels, N if N is not None else sum(m for _, m in levels))

    @property
    def r(self) -> int:
        return len(self.levels)

    @property
    def E1(self) -> int:
        return self.levels[0][0]

    @property
    def m1(self) -> int:
        return self.levels[0][1]

    def minimizers(self) -> list[GraphCode]:
        """Graph codes attaining the ground energy (second pass over the table)."""
        if self.table is None:
            raise ArgumentError("minimizers need the originating table")
        ks = np.flatnonzero(self.table.values == self.E1)
        return [GraphCode(int(k), self.table.n) for k in ks]

    def to_json(self) -> dict:
        return {"n": self.n, "x": self.x, "y": self.y, "N": self.N, "r": self.r,
                "E1": self.E1, "m1": self.m1,
                "levels": [[e, m] for e, m in self.levels]}


def extract_levels(table: DiagonalTable) -> Spectrum:
    counts = np.bincount(table.values)
    levels = tuple((int(e), int(m)) for e, m in enumerate(counts) if m)
    return Spectrum(levels, table.N, table.n, table.x, table.y, table)


@dataclass(frozen=True)
class ClassicalDecision:
    E1: int
    m1: int
    below: bool


def classical_decide(n: int, x: int, y: int, *, cap: int | None = None) -> ClassicalDecision:
    """Brute-force answer to "is n < R(x, y)?"."""
    spec = extract_levels(build_diagonal(n, x, y, cap=cap))
    return ClassicalDecision(spec.E1, spec.m1, spec.E1 == 0)


# Conservative starting points: R(x, y) - 1 for the known small values.
_KNOWN_SEEDS = {(3, 3): 5, (3, 4): 8, (3, 5): 13, (3, 6): 17, (3, 7): 22,
                (3, 8): 27, (3, 9): 35, (4, 4): 17, (4, 5): 24}


def lower_bound_start(x: int, y: int) -> int:
    """A starting n that never exceeds R(x, y)."""
    if x < 2 or y < 2:
        raise ArgumentError(f"x and y must be >= 2, got x={x}, y={y}")
    a, b = sorted((x, y))
    if a == 2:
        return max(b - 1, 2)
    return _KNOWN_SEEDS.get((a, b), b)


def save_table(table: DiagonalTable, path) -> None:
    payload = table.values.astype("<u2").tobytes()
    header = _HEADER.pack(MAGIC, table.n, table.x, table.y, table.L, table.N)
    Path(path).write_bytes(header + payload + _CHECKSUM.pack(_checksum(payload)))


def load_table(path, *, n: int | None = None, x: int | None = None,
               y: int | None = None) -> DiagonalTable:
    """Read a cache file; optional (n, x, y) must match the header."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size + _CHECKSUM.size:
        raise FormatError(f"{path}: file too short")
    magic, fn, fx, fy, fL, fN = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if fL != num_pairs(fn) or fN != 1 << fL:
        raise FormatError(f"{path}: inconsistent header n={fn} L={fL} N={fN}")
    for name, want, got in (("n", n, fn), ("x", x, fx), ("y", y, fy)):
        if want is not None and want != got:
            raise FormatError(f"{path}: header {name}={got}, expected {want}")
    payload = raw[_HEADER.size:-_CHECKSUM.size]
    if len(payload) != 2 * fN:
        raise FormatError(f"{path}: payload has {len(payload)} bytes, expected {2 * fN}")
    (stored,) = _CHECKSUM.unpack(raw[-_CHECKSUM.size:])
    if stored != _checksum(payload):
        raise FormatError(f"{path}: checksum mismatch")
    values = np.frombuffer(payload, dtype="<u2").astype(np.uint16)
    limit = comb(fn, fx) + comb(fn, fy)
    if values.size and int(values.max()) > limit:
        raise FormatError(f"{path}: entry exceeds {limit}")
    return DiagonalTable(fn, fx, fy, values)


def _checksum(payload: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")

"""The simplex lattice V(k, q), its up-cells E(k, q) and the k=3 triangulation.

Points are plain tuples of non-negative ints summing to q. Every sequence
returned here is in canonical order: lexicographically descending, first
coordinate varying slowest, so ``(q, 0, ..., 0)`` comes first and
``(0, ..., 0, q)`` last.

Bulk operations work on ``numpy`` integer arrays with one point per row;
:func:`rank_array` maps rows back to their canonical index without hashing.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

from .errors import InvalidParameterError

Point = tuple[int, ...]

MAX_KQ = 10**6
BLOCK_ROWS = 1 << 20


def _check_kq(k: int, q: int, *, min_q: int = 0) -> None:
    if k < 2:
        raise InvalidParameterError(f"k must be >= 2, got {k}")
    if q < min_q:
        raise InvalidParameterError(f"q must be >= {min_q}, got {q}")
    if k * q > MAX_KQ:
        raise InvalidParameterError(f"k*q = {k * q} exceeds the guard {MAX_KQ}")


def lattice_size(k: int, q: int) -> int:
    """|V(k, q)| = C(q+k-1, k-1); zero for negative q."""
    if q < 0:
        return 0
    return math.comb(q + k - 1, k - 1)


# ---------------------------------------------------------------- points


def enumerate_vertices(k: int, q: int) -> list[Point]:
    """All compositions of ``q`` into ``k`` non-negative parts, canonical order."""
    _check_kq(k, q)
    return [tuple(int(v) for v in row) for row in vertex_array(k, q)]


# large enough to hold every tail lattice touched while streaming V(7, 49)
@functools.lru_cache(maxsize=1024)
def _vertex_array_cached(k: int, q: int) -> np.ndarray:
    if k == 1:
        out = np.array([[q]], dtype=np.int32)
    else:
        parts = []
        for first in range(q, -1, -1):
            sub = _vertex_array_cached(k - 1, q - first)
            head = np.full((sub.shape[0], 1), first, dtype=np.int32)
            parts.append(np.hstack((head, sub)))
        out = np.vstack(parts)
    out.flags.writeable = False
    return out


def vertex_array(k: int, q: int) -> np.ndarray:
    """V(k, q) as a read-only ``(N, k)`` int32 array in canonical order."""
    _check_kq(k, q)
    return _vertex_array_cached(k, q)


def iter_vertex_blocks(k: int, q: int, max_rows: int = BLOCK_ROWS) -> Iterator[np.ndarray]:
    """Yield V(k, q) in canonical order as consecutive row blocks.

    Blocks are split on leading coordinates so no single block is much larger
    than ``max_rows`` (a block is never split below one leading coordinate of
    a k=2 tail). Concatenating the blocks gives :func:`vertex_array`.
    """
    _check_kq(k, q)
    yield from _blocks(k, q, max_rows)


def _blocks(k: int, q: int, max_rows: int) -> Iterator[np.ndarray]:
    if k <= 2 or lattice_size(k, q) <= max_rows:
        yield _vertex_array_cached(k, q)
        return
    for first in range(q, -1, -1):
        for sub in _blocks(k - 1, q - first, max_rows):
            head = np.full((sub.shape[0], 1), first, dtype=np.int32)
            yield np.hstack((head, sub))


@functools.lru_cache(maxsize=32)
def _comb_table(n_max: int, k: int) -> np.ndarray:
    # table[n + 1, m] = C(n, m) for -1 <= n <= n_max, 0 <= m <= k
    table = np.zeros((n_max + 2, k + 1), dtype=np.int64)
    for n in range(0, n_max + 1):
        for m in range(0, min(n, k) + 1):
            table[n + 1, m] = math.comb(n, m)
    return table


def rank(a: Sequence[int]) -> int:
    """Canonical index of ``a`` among V(len(a), sum(a))."""
    k = len(a)
    remaining = sum(a)
    r = 0
    for i in range(k - 1):
        parts_after = k - i - 1
        # points whose i-th coordinate exceeds a[i], given the prefix
        r += math.comb(remaining - a[i] - 1 + parts_after, parts_after)
        remaining -= a[i]
    return r


def rank_array(points: np.ndarray, q: int) -> np.ndarray:
    """Vectorised :func:`rank` for an ``(n, k)`` array of points of V(k, q)."""
    points = np.asarray(points)
    n, k = points.shape
    if lattice_size(k, q) >= 2**62:
        raise InvalidParameterError("lattice too large for 64-bit ranks")
    table = _comb_table(q + k, k)
    out = np.zeros(n, dtype=np.int64)
    remaining = np.full(n, q, dtype=np.int64)
    for i in range(k - 1):
        parts_after = k - i - 1
        col = points[:, i].astype(np.int64)
        out += table[remaining - col - 1 + parts_after + 1, parts_after]
        remaining -= col
    return out


def unrank(index: int, k: int, q: int) -> Point:
    size = lattice_size(k, q)
    if not 0 <= index < size:
        raise InvalidParameterError(f"index {index} out of range for V({k},{q})")
    coords = []
    remaining = q
    for i in range(k - 1):
        parts_after = k - i - 1
        for value in range(remaining, -1, -1):
            block = lattice_size(parts_after, remaining - value)
            if index < block:
                break
            index -= block
        coords.append(value)
        remaining -= value
    coords.append(remaining)
    return tuple(coords)


def admissible_colors(a: Sequence[int]) -> frozenset[int]:
    """The list L(a): 1-based indices of the positive coordinates of ``a``."""
    if any(v < 0 for v in a):
        raise InvalidParameterError(f"negative coordinate in {tuple(a)}")
    colors = frozenset(i + 1 for i, v in enumerate(a) if v > 0)
    if not colors:
        raise InvalidParameterError("the zero point (q = 0) has no admissible color")
    return colors


# ---------------------------------------------------------------- cells


@dataclass(frozen=True, order=True)
class Cell:
    """Up-cell e(b) = {b + e_1, ..., b + e_k} with ``sum(base) == q - 1``."""

    base: Point

    @property
    def k(self) -> int:
        return len(self.base)

    @property
    def q(self) -> int:
        return sum(self.base) + 1

    def vertices(self) -> list[Point]:
        return cell_vertices(self)


@dataclass(frozen=True, order=True)
class DownCell:
    """Inverted triangle {b + e_i + e_j : i < j} of the k=3 triangulation."""

    base: Point

    @property
    def q(self) -> int:
        return sum(self.base) + 2

    def vertices(self) -> list[Point]:
        return down_cell_vertices(self)


def enumerate_cells(k: int, q: int) -> list[Cell]:
    """E(k, q) indexed by V(k, q-1), in canonical order of the bases."""
    _check_kq(k, q, min_q=1)
    return [Cell(b) for b in enumerate_vertices(k, q - 1)]


def cell_vertices(cell: Cell) -> list[Point]:
    b = cell.base
    return [tuple(v + (j == i) for j, v in enumerate(b)) for i in range(len(b))]


def cell_vertex_ranks(bases: np.ndarray, q: int) -> np.ndarray:
    """``(n, k)`` canonical ranks in V(k, q) of the vertices of each up-cell."""
    bases = np.asarray(bases)
    k = bases.shape[1]
    out = np.empty((bases.shape[0], k), dtype=np.int64)
    for i in range(k):
        shifted = bases.copy()
        shifted[:, i] += 1
        out[:, i] = rank_array(shifted, q)
    return out


def cells_adjacent(c1: Cell, c2: Cell) -> bool:
    """True iff the two hyperedges share a vertex (never for c1 == c2)."""
    if c1.k != c2.k or c1.q != c2.q:
        raise InvalidParameterError("cells belong to different lattices")
    diff = [x - y for x, y in zip(c1.base, c2.base)]
    nonzero = [d for d in diff if d != 0]
    return sorted(nonzero) == [-1, 1]


def enumerate_down_cells(q: int) -> list[DownCell]:
    """Down-triangles of the k=3 subdivision; bases run over V(3, q-2)."""
    if q < 2:
        raise InvalidParameterError(f"down cells need q >= 2, got {q}")
    _check_kq(3, q)
    return [DownCell(b) for b in enumerate_vertices(3, q - 2)]


def down_cell_vertices(cell: DownCell) -> list[Point]:
    b0, b1, b2 = cell.base
    return [(b0 + 1, b1 + 1, b2), (b0 + 1, b1, b2 + 1), (b0, b1 + 1, b2 + 1)]


# ---------------------------------------------------------------- dump format


def format_points(points: Iterable[Sequence[int]]) -> str:
    return "".join(" ".join(str(int(v)) for v in p) + "\n" for p in points)


def write_lattice(stream: TextIO, k: int, q: int, *, cells: bool = False) -> None:
    """Write V(k, q), or the cell bases of E(k, q) under a ``#cells`` header."""
    if cells:
        _check_kq(k, q, min_q=1)
        stream.write(f"#cells k={k} q={q}\n")
        stream.write(format_points(vertex_array(k, q - 1)))
    else:
        stream.write(format_points(vertex_array(k, q)))


def parse_points(text: str) -> tuple[dict[str, int], list[Point]]:
    """Inverse of :func:`write_lattice`; returns header fields and points."""
    header: dict[str, int] = {}
    points: list[Point] = []
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            for field in line[1:].split()[1:]:
                key, _, value = field.partition("=")
                header[key] = int(value)
            continue
        points.append(tuple(int(tok) for tok in line.split()))
    return header, points

"""Sperner-admissible labelings of the simplex lattice and their statistics.

A :class:`Labeling` stores one color per vertex of V(k, q), aligned with the
canonical vertex order of :mod:`sperner.lattice`. Colors are 1-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence, TextIO

import numpy as np

from . import lattice
from .errors import (
    InternalInconsistencyError,
    InvalidParameterError,
    OutOfDomainError,
    PreconditionError,
)
from .lattice import Cell, DownCell, Point


@dataclass(frozen=True, eq=False)
class Labeling:
    k: int
    q: int
    colors: np.ndarray

    def __post_init__(self) -> None:
        colors = np.array(self.colors, dtype=np.uint8)
        if colors.ndim != 1 or colors.shape[0] != lattice.lattice_size(self.k, self.q):
            raise InvalidParameterError(
                f"expected {lattice.lattice_size(self.k, self.q)} colors for V({self.k},{self.q}), "
                f"got shape {colors.shape}"
            )
        if colors.size and (colors.min() < 1 or colors.max() > self.k):
            raise InvalidParameterError(f"colors must lie in 1..{self.k}")
        colors.flags.writeable = False
        object.__setattr__(self, "colors", colors)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Labeling):
            return NotImplemented
        return (self.k, self.q) == (other.k, other.q) and np.array_equal(self.colors, other.colors)

    def __hash__(self) -> int:
        return hash((self.k, self.q, self.colors.tobytes()))

    def __getitem__(self, a: Sequence[int]) -> int:
        if len(a) != self.k or sum(a) != self.q:
            raise InvalidParameterError(f"{tuple(a)} is not a point of V({self.k},{self.q})")
        return int(self.colors[lattice.rank(a)])

    def with_color(self, a: Sequence[int], color: int) -> Labeling:
        colors = self.colors.copy()
        colors[lattice.rank(a)] = color
        return Labeling(self.k, self.q, colors)


@dataclass(frozen=True)
class TopDecomposition:
    pi: tuple[int, ...]
    t: int
    top: tuple[int, ...]


@dataclass
class LabelingStats:
    admissible: bool
    monochromatic_count: int
    nonmonochromatic_count: int
    max_colors_per_cell: int
    per_color_mono: dict[int, int]
    colors_per_cell: np.ndarray | None = field(default=None, repr=False)

    def to_json(self, bound: int | None = None) -> dict:
        out = {
            "admissible": self.admissible,
            "mono": self.monochromatic_count,
            "nonmono": self.nonmonochromatic_count,
            "max_colors_per_cell": self.max_colors_per_cell,
            "per_color_mono": {str(c): n for c, n in sorted(self.per_color_mono.items())},
        }
        if bound is not None:
            out["bound"] = bound
            out["meets_bound"] = self.nonmonochromatic_count == bound
        return out


# ---------------------------------------------------------------- constructions


def from_function(k: int, q: int, label: Callable[[np.ndarray], np.ndarray]) -> Labeling:
    """Build a labeling from a vectorised rule mapping ``(n, k)`` points to colors."""
    lattice._check_kq(k, q, min_q=1)
    parts = [np.asarray(label(block), dtype=np.uint8) for block in lattice.iter_vertex_blocks(k, q)]
    return Labeling(k, q, np.concatenate(parts))


def _first_choice_rule(points: np.ndarray) -> np.ndarray:
    return np.argmax(points > 0, axis=1) + 1


def _max_coordinate_rule(points: np.ndarray) -> np.ndarray:
    # argmax returns the first maximum, i.e. the smallest index on ties
    return np.argmax(points, axis=1) + 1


def first_choice(k: int, q: int) -> Labeling:
    """Label every vertex by its smallest positive coordinate."""
    return from_function(k, q, _first_choice_rule)


def max_coordinate(k: int, q: int) -> Labeling:
    """Label every vertex by its largest coordinate, smallest index on ties."""
    return from_function(k, q, _max_coordinate_rule)


def top_decomposition(a: Sequence[int]) -> TopDecomposition:
    """Sort coordinates descending (stable on index) and find the top prefix.

    ``t`` is the largest prefix length with ``a[pi[j]] >= k - j + 1`` for all
    ``j <= t`` (1-based); it may be 0 when the largest coordinate is below k.
    """
    k = len(a)
    pi = tuple(sorted(range(1, k + 1), key=lambda i: (-a[i - 1], i)))
    t = 0
    for j, i in enumerate(pi, start=1):
        if a[i - 1] < k - j + 1:
            break
        t = j
    return TopDecomposition(pi=pi, t=t, top=pi[:t])


def _top_coordinate_rule(points: np.ndarray) -> np.ndarray:
    n, k = points.shape
    order = np.argsort(-points, axis=1, kind="stable")
    ranked = np.take_along_axis(points, order, axis=1)
    ok = ranked >= np.arange(k, 0, -1)
    t = np.where(ok.all(axis=1), k, np.argmin(ok, axis=1))
    # t == 0 only happens outside q >= k^2; fall back to the largest coordinate
    last = np.maximum(t - 1, 0)
    return order[np.arange(n), last] + 1


def top_coordinate(k: int, q: int, *, force: bool = False) -> Labeling:
    """Label each vertex by the last of its top coordinates.

    Guaranteed to put at most 4 colors on every cell for k >= 4 and q >= k^2;
    ``force=True`` builds it anyway outside that range.
    """
    if not force:
        if k < 4:
            raise OutOfDomainError(f"top-coordinate labeling needs k >= 4, got k={k}")
        if q < k * k:
            raise OutOfDomainError(f"top-coordinate labeling needs q >= k^2 = {k * k}, got q={q}")
    return from_function(k, q, _top_coordinate_rule)


def random_admissible(k: int, q: int, rng: np.random.Generator) -> Labeling:
    """Pick each vertex's color uniformly and independently from L(a)."""

    def rule(points: np.ndarray) -> np.ndarray:
        mask = points > 0
        pick = np.floor(rng.random(points.shape[0]) * mask.sum(axis=1))
        return np.argmax(np.cumsum(mask, axis=1) > pick[:, None], axis=1) + 1

    return from_function(k, q, rule)


STRATEGIES: dict[str, Callable[..., Labeling]] = {
    "first-choice": first_choice,
    "max-coordinate": max_coordinate,
    "top-coordinate": top_coordinate,
}


# ---------------------------------------------------------------- checks


def is_admissible(labeling: Labeling) -> bool:
    offset = 0
    for block in lattice.iter_vertex_blocks(labeling.k, labeling.q):
        colors = labeling.colors[offset : offset + block.shape[0]].astype(np.int64)
        if not (block[np.arange(block.shape[0]), colors - 1] > 0).all():
            return False
        offset += block.shape[0]
    return True


def nonmono_lower_bound(k: int, q: int) -> int:
    """Minimum number of non-monochromatic cells: C(q+k-3, k-2)."""
    if k < 2 or q < 1:
        raise InvalidParameterError(f"need k >= 2 and q >= 1, got k={k}, q={q}")
    return math.comb(q + k - 3, k - 2)


def _cell_color_columns(labeling: Labeling) -> list[np.ndarray]:
    """Colors of vertex ``b + e_i`` for every cell, one array per i, canonical cell order.

    Adding e_i preserves the canonical order, so the i-th vertices of all cells
    are exactly the points with a positive i-th coordinate, in order.
    """
    k = labeling.k
    masks: list[list[np.ndarray]] = [[] for _ in range(k)]
    for block in lattice.iter_vertex_blocks(k, labeling.q):
        positive = block > 0
        for i in range(k):
            masks[i].append(positive[:, i])
    return [labeling.colors[np.concatenate(m)] for m in masks]


def _cell_color_blocks(labeling: Labeling) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (bases, colors) blocks over E(k, q) in canonical cell order."""
    columns = _cell_color_columns(labeling)
    offset = 0
    for bases in lattice.iter_vertex_blocks(labeling.k, labeling.q - 1):
        rows = slice(offset, offset + bases.shape[0])
        yield bases, np.stack([col[rows] for col in columns], axis=1)
        offset += bases.shape[0]


def _distinct_per_row(colors: np.ndarray) -> np.ndarray:
    k = colors.shape[1]
    if k > 63:
        ordered = np.sort(colors, axis=1)
        return 1 + (np.diff(ordered, axis=1) != 0).sum(axis=1)
    bits = np.zeros(colors.shape[0], dtype=np.uint64)
    for i in range(k):
        bits |= np.left_shift(np.uint64(1), colors[:, i].astype(np.uint64) - np.uint64(1))
    return np.bitwise_count(bits).astype(np.int64)


def compute_stats(labeling: Labeling, *, per_cell: bool = False) -> LabelingStats:
    k = labeling.k
    mono = 0
    total = 0
    max_colors = 0
    per_color = np.zeros(k + 1, dtype=np.int64)
    distinct_parts = []
    for _, colors in _cell_color_blocks(labeling):
        distinct = _distinct_per_row(colors)
        is_mono = distinct == 1
        mono += int(is_mono.sum())
        total += colors.shape[0]
        max_colors = max(max_colors, int(distinct.max()))
        per_color += np.bincount(colors[is_mono, 0], minlength=k + 1)
        if per_cell:
            distinct_parts.append(distinct.astype(np.uint8))
    return LabelingStats(
        admissible=is_admissible(labeling),
        monochromatic_count=mono,
        nonmonochromatic_count=total - mono,
        max_colors_per_cell=max_colors,
        per_color_mono={c: int(per_color[c]) for c in range(1, k + 1)},
        colors_per_cell=np.concatenate(distinct_parts) if per_cell else None,
    )


def nonmonochromatic_bases(labeling: Labeling) -> list[Point]:
    out: list[Point] = []
    for bases, colors in _cell_color_blocks(labeling):
        for row in bases[_distinct_per_row(colors) > 1]:
            out.append(tuple(int(v) for v in row))
    return out


# ---------------------------------------------------------------- injection witness


@dataclass
class PhiWitness:
    """Images of the monochromatic cells under b -> b - e_i, with certificates."""

    images: dict[int, list[Point]]
    valid: bool
    disjoint: bool
    total: int
    capacity: int

    @property
    def within_capacity(self) -> bool:
        return self.total <= self.capacity

    @property
    def ok(self) -> bool:
        return self.valid and self.disjoint and self.within_capacity


def phi_witness(labeling: Labeling) -> PhiWitness:
    """Map each color-i monochromatic cell base b to b - e_i in V(k, q-2).

    Checks that every image is a lattice point, that images of different
    colors never collide, and that the image count fits in V(k, q-2). A failed
    check on an admissible labeling raises :class:`InternalInconsistencyError`.
    """
    k, q = labeling.k, labeling.q
    if q < 2:
        raise PreconditionError(f"phi witness needs q >= 2, got {q}")
    if not is_admissible(labeling):
        raise PreconditionError("phi witness is only defined for admissible labelings")
    images: dict[int, list[Point]] = {c: [] for c in range(1, k + 1)}
    valid = True
    image_rows = []
    for bases, colors in _cell_color_blocks(labeling):
        is_mono = _distinct_per_row(colors) == 1
        mono_bases = bases[is_mono].astype(np.int64)
        mono_colors = colors[is_mono, 0].astype(np.int64)
        shifted = mono_bases.copy()
        shifted[np.arange(shifted.shape[0]), mono_colors - 1] -= 1
        if (shifted < 0).any():
            valid = False
        image_rows.append(shifted)
        for row, c in zip(shifted, mono_colors):
            images[int(c)].append(tuple(int(v) for v in row))
    all_images = np.vstack(image_rows) if image_rows else np.zeros((0, k), dtype=np.int64)
    total = all_images.shape[0]
    capacity = lattice.lattice_size(k, q - 2)
    if valid and total:
        disjoint = np.unique(lattice.rank_array(all_images, q - 2)).size == total
    else:
        disjoint = len({p for pts in images.values() for p in pts}) == total
    witness = PhiWitness(images=images, valid=valid, disjoint=disjoint, total=total, capacity=capacity)
    if not witness.ok:
        raise InternalInconsistencyError(
            f"injection certificate failed on an admissible labeling: valid={valid}, "
            f"disjoint={disjoint}, total={total}, capacity={capacity}"
        )
    return witness


# ---------------------------------------------------------------- k = 3 triangulation


def find_rainbow_cells(labeling: Labeling) -> list[tuple[Cell | DownCell, str]]:
    """All up or down triangles whose three vertices carry three distinct colors."""
    if labeling.k != 3:
        raise PreconditionError("rainbow search is implemented for k = 3 only")
    if not is_admissible(labeling):
        raise PreconditionError("labeling is not Sperner-admissible")
    q = labeling.q
    triangles: list[tuple[Cell | DownCell, str]] = [(c, "up") for c in lattice.enumerate_cells(3, q)]
    if q >= 2:
        triangles += [(d, "down") for d in lattice.enumerate_down_cells(q)]
    colors = labeling.colors
    rainbow = []
    for cell, kind in triangles:
        seen = {int(colors[lattice.rank(v)]) for v in cell.vertices()}
        if len(seen) == 3:
            rainbow.append((cell, kind))
    return rainbow


# ---------------------------------------------------------------- file format


def write_labeling(stream: TextIO, labeling: Labeling) -> None:
    stream.write(f"#labeling k={labeling.k} q={labeling.q}\n")
    offset = 0
    for block in lattice.iter_vertex_blocks(labeling.k, labeling.q):
        colors = labeling.colors[offset : offset + block.shape[0]]
        stream.write(
            "".join(
                " ".join(str(int(v)) for v in row) + f" -> {int(c)}\n" for row, c in zip(block, colors)
            )
        )
        offset += block.shape[0]


def read_labeling(text: str) -> Labeling:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or not lines[0].startswith("#labeling"):
        raise InvalidParameterError("missing '#labeling k=K q=Q' header")
    header = dict(field.split("=") for field in lines[0].split()[1:])
    try:
        k, q = int(header["k"]), int(header["q"])
    except (KeyError, ValueError) as exc:
        raise InvalidParameterError(f"bad labeling header: {lines[0]!r}") from exc
    expected = lattice.enumerate_vertices(k, q)
    if len(lines) - 1 != len(expected):
        raise InvalidParameterError(f"expected {len(expected)} vertex lines, got {len(lines) - 1}")
    colors = []
    for line, point in zip(lines[1:], expected):
        coords, sep, color = line.partition("->")
        if not sep or tuple(int(t) for t in coords.split()) != point:
            raise InvalidParameterError(f"expected vertex {point} in canonical order, got {line!r}")
        colors.append(int(color))
    return Labeling(k, q, np.array(colors))

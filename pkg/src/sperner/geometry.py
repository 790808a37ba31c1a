"""Voronoi-type partitions of the regular simplex and their separating sets.

The simplex is ``{x in R^k : x >= 0, sum(x) = 1}`` with edge length sqrt(2).
For an interior base point ``z`` the part ``A_i`` collects the points where
``x_i - z_i`` is largest. A point lies within distance ``eps`` of the
separating set exactly when the top two values of ``x - z`` differ by at most
``eps * sqrt(2)``; every estimate below relies on that test.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidParameterError, PreconditionError

SQRT2 = math.sqrt(2.0)
MC_BLOCK = 1 << 18


# ---------------------------------------------------------------- points and partitions


def as_simplex_point(x: Sequence[float], tol: float = 1e-12) -> np.ndarray:
    """Validate ``x`` as a point of the simplex and renormalise its sum to 1."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise InvalidParameterError("a simplex point needs at least 2 coordinates")
    if (x < -tol).any() or abs(x.sum() - 1.0) > tol * x.size:
        raise InvalidParameterError(f"{x.tolist()} is not in the simplex")
    x = np.clip(x, 0.0, None)
    return x / x.sum()


def barycenter(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


@dataclass(frozen=True, eq=False)
class VoronoiSpec:
    """Base point of the partition; must be strictly inside the simplex."""

    z: np.ndarray

    def __post_init__(self) -> None:
        z = as_simplex_point(self.z)
        if z.min() <= 0.0:
            raise PreconditionError(f"base point {z.tolist()} is not interior")
        z.flags.writeable = False
        object.__setattr__(self, "z", z)

    @property
    def k(self) -> int:
        return self.z.size

    @classmethod
    def centered(cls, k: int) -> VoronoiSpec:
        return cls(barycenter(k))


@dataclass(frozen=True)
class PartitionAssignment:
    part: int
    gap: float


def _top_two(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    part = np.argmax(values, axis=-1)
    top = np.take_along_axis(values, part[..., None], axis=-1)[..., 0]
    rest = values.copy()
    np.put_along_axis(rest, part[..., None], -np.inf, axis=-1)
    return part, top - rest.max(axis=-1)


def classify(x: Sequence[float], spec: VoronoiSpec) -> PartitionAssignment:
    """Part of ``x`` (1-based, smallest index on ties) and its gap to the runner-up."""
    x = as_simplex_point(x)
    if x.size != spec.k:
        raise InvalidParameterError("dimension mismatch between point and base point")
    part, gap = _top_two((x - spec.z)[None, :])
    return PartitionAssignment(part=int(part[0]) + 1, gap=float(gap[0]))


def classify_many(points: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`classify`: returns (1-based parts, gaps)."""
    part, gap = _top_two(np.asarray(points) - z)
    return part + 1, gap


@dataclass(frozen=True)
class AdmissibilityCertificate:
    admissible: bool
    # every x in part i has x_i >= margin_i = z_i
    margins: tuple[float, ...]


def is_sperner_admissible_partition(spec: VoronoiSpec) -> AdmissibilityCertificate:
    """Certify that part i never touches the facet x_i = 0.

    For x in A_i, x_i - z_i is at least the mean of x - z, which is zero, so
    x_i >= z_i > 0.
    """
    margins = tuple(float(v) for v in spec.z)
    return AdmissibilityCertificate(admissible=min(margins) > 0.0, margins=margins)


# ---------------------------------------------------------------- closed forms


def simplex_height(k: int) -> float:
    """Distance from a vertex to the opposite facet: sqrt(k / (k-1))."""
    _check_k(k)
    return math.sqrt(k / (k - 1))


def simplex_volume(k: int) -> float:
    """(k-1)-dimensional volume sqrt(k) / (k-1)!."""
    _check_k(k)
    return math.sqrt(k) / math.factorial(k - 1)


def separating_set_content_exact(k: int) -> float:
    """(k-2)-dimensional content of any Voronoi-type separating set: sqrt(k/2) / (k-2)!."""
    _check_k(k)
    return math.sqrt(k / 2) / math.factorial(k - 2)


def separating_set_content_pyramid(k: int, z: Sequence[float] | None = None) -> float:
    """Same content assembled from cones over the facets' separating sets.

    The separating set is the union of cones with apex ``z`` over the facet
    separating sets; the cone over facet i has height ``z_i * h_k``.
    """
    _check_k(k)
    if k == 2:
        return 1.0
    z = barycenter(k) if z is None else as_simplex_point(z)
    facet = separating_set_content_pyramid(k - 1)
    heights = z * simplex_height(k)
    return float(heights.sum()) * facet / (k - 2)


def eps_neighborhood_volume_exact(k: int, eps: float) -> float:
    """Volume of the eps-neighbourhood of the centred Voronoi separating set.

    Equals (1 - (1 - eps*sqrt(2))^(k-1)) times the simplex volume; valid while
    eps*sqrt(2) < 1/k.
    """
    _check_k(k)
    if eps < 0 or eps * SQRT2 >= 1.0 / k:
        raise PreconditionError(f"eps={eps} outside the range 0 <= eps*sqrt(2) < 1/k")
    shrink = -math.expm1((k - 1) * math.log1p(-eps * SQRT2))
    return shrink * simplex_volume(k)


def _check_k(k: int) -> None:
    if k < 2:
        raise InvalidParameterError(f"k must be >= 2, got {k}")


def _check_eps(eps: float, z: np.ndarray) -> None:
    # the shrunk parts need x_i > eps*sqrt(2) and x_i >= z_i on A_i
    if not 0 <= eps * SQRT2 < z.min():
        raise PreconditionError(f"eps={eps} outside the safe range eps*sqrt(2) < min(z) = {z.min()}")


# ---------------------------------------------------------------- sampling


def sample_simplex(k: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` uniform points of the simplex via normalised exponential variates."""
    g = rng.standard_exponential((n, k))
    return g / g.sum(axis=1, keepdims=True)


def _block_sizes(samples: int) -> list[int]:
    full, rest = divmod(samples, MC_BLOCK)
    return [MC_BLOCK] * full + ([rest] if rest else [])


def _map_blocks(
    seed: int, samples: int, k: int, fn: Callable[[np.ndarray], np.ndarray], workers: int = 1, stream: int = 0
) -> np.ndarray:
    """Sum ``fn`` over sample blocks; block b draws from the generator seeded by (seed, stream, b)."""
    sizes = _block_sizes(samples)

    def run(b: int) -> np.ndarray:
        rng = np.random.default_rng([seed, stream, b])
        return np.asarray(fn(sample_simplex(k, sizes[b], rng)), dtype=np.int64)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(b) for b in range(len(sizes))]
    return np.sum(parts, axis=0)


@dataclass
class MeasureReport:
    k: int
    z: tuple[float, ...]
    epsilon: float
    samples: int
    seed: int
    neighborhood_volume: float
    neighborhood_std: float
    content_estimate: float
    std_error: float

    @property
    def exact(self) -> float:
        return separating_set_content_exact(self.k)

    @property
    def sigmas_off(self) -> float:
        return (self.content_estimate - self.exact) / self.std_error if self.std_error > 0 else math.inf

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "z": list(self.z),
            "eps": self.epsilon,
            "samples": self.samples,
            "seed": self.seed,
            "neighborhood_volume": self.neighborhood_volume,
            "content_estimate": self.content_estimate,
            "exact": self.exact,
            "std_error": self.std_error,
            "sigmas_off": self.sigmas_off,
        }


def _binomial_volume(hits: int, samples: int, total_volume: float) -> tuple[float, float]:
    p = hits / samples
    return p * total_volume, total_volume * math.sqrt(p * (1 - p) / samples)


def mc_minkowski_content(
    spec: VoronoiSpec, eps: float, samples: int, seed: int = 0, workers: int = 1
) -> MeasureReport:
    """Estimate the separating set's content as vol(eps-neighbourhood) / (2 eps)."""
    if samples < 1:
        raise InvalidParameterError("samples must be >= 1")
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    _check_eps(eps, spec.z)
    k = spec.k
    threshold = eps * SQRT2

    def count(points: np.ndarray) -> np.ndarray:
        _, gap = classify_many(points, spec.z)
        return np.array(int((gap <= threshold).sum()))

    hits = int(_map_blocks(seed, samples, k, count, workers))
    volume, sigma = _binomial_volume(hits, samples, simplex_volume(k))
    return MeasureReport(
        k=k,
        z=tuple(float(v) for v in spec.z),
        epsilon=eps,
        samples=samples,
        seed=seed,
        neighborhood_volume=volume,
        neighborhood_std=sigma,
        content_estimate=volume / (2 * eps),
        std_error=sigma / (2 * eps),
    )


# ---------------------------------------------------------------- shrinking construction


@dataclass(frozen=True)
class ShrinkConstruction:
    """Parts with their eps-buffer removed, and the same parts pushed off their vertex.

    ``A'_i`` holds the points of ``A_i`` farther than eps from the separating
    set; ``A''_i = A'_i - eps*sqrt(2) * e_i`` lies in the scaled simplex of
    total mass ``1 - eps*sqrt(2)``.
    """

    spec: VoronoiSpec
    eps: float

    @property
    def shift(self) -> float:
        return self.eps * SQRT2

    def shrunk_part(self, points: np.ndarray) -> np.ndarray:
        """1-based index of the ``A'_i`` containing each point, 0 if in the buffer."""
        part, gap = classify_many(points, self.spec.z)
        return np.where(gap > self.shift, part, 0)

    def translate(self, points: np.ndarray, parts: np.ndarray) -> np.ndarray:
        """Apply x -> x - eps*sqrt(2) * e_i to points of ``A'_i`` (parts > 0)."""
        out = np.array(points, dtype=float)
        rows = np.flatnonzero(parts > 0)
        out[rows, parts[rows] - 1] -= self.shift
        return out

    def translated_membership(self, points: np.ndarray) -> np.ndarray:
        """Boolean ``(n, k)``: whether each point of the scaled simplex lies in ``A''_i``."""
        n, k = points.shape
        member = np.zeros((n, k), dtype=bool)
        for i in range(k):
            lifted = np.array(points, dtype=float)
            lifted[:, i] += self.shift
            inside = (lifted >= 0).all(axis=1)
            member[:, i] = inside & (self.shrunk_part(lifted) == i + 1)
        return member


@dataclass
class ShrinkReport:
    k: int
    eps: float
    samples: int
    overlap_violations: int
    translated_overlap_violations: int
    containment_violations: int
    shrunk_union_volume: float
    shrunk_union_std: float
    buffer_volume: float
    buffer_std: float

    @property
    def total_volume(self) -> float:
        return self.shrunk_union_volume + self.buffer_volume

    @property
    def total_std(self) -> float:
        return math.hypot(self.shrunk_union_std, self.buffer_std)

    @property
    def sigmas_off(self) -> float:
        diff = self.total_volume - simplex_volume(self.k)
        return diff / self.total_std if self.total_std > 0 else (0.0 if diff == 0 else math.inf)


def shrink_partition(spec: VoronoiSpec, eps: float) -> ShrinkConstruction:
    _check_eps(eps, spec.z)
    return ShrinkConstruction(spec, eps)


def verify_shrink(
    construction: ShrinkConstruction, samples: int, seed: int = 0, tol: float = 1e-12
) -> ShrinkReport:
    """Check the construction on random samples.

    * translated points of ``A'_i`` stay non-negative with total mass
      ``1 - eps*sqrt(2)`` and belong to no ``A''_j`` with j != i;
    * uniform points of the scaled simplex lie in at most one ``A''_i``;
    * vol(union of A'_i) estimated from coverage of the scaled simplex by the
      ``A''_i`` (they are isometric copies), plus vol(buffer) estimated from an
      independent sample of the simplex, adds up to the simplex volume.
    """
    if samples < 1:
        raise InvalidParameterError("samples must be >= 1")
    spec, k = construction.spec, construction.spec.k
    mass = 1.0 - construction.shift
    volume = simplex_volume(k)

    def buffer_and_translation(points: np.ndarray) -> np.ndarray:
        parts = construction.shrunk_part(points)
        moved = construction.translate(points, parts)
        inside = parts > 0
        moved_in = moved[inside]
        bad_contain = int(((moved_in < -tol).any(axis=1) | (np.abs(moved_in.sum(axis=1) - mass) > tol)).sum())
        member = construction.translated_membership(moved_in)
        own = member[np.arange(moved_in.shape[0]), parts[inside] - 1]
        bad_overlap = int((member.sum(axis=1) != 1).sum() + (~own).sum())
        return np.array([int((~inside).sum()), bad_contain, bad_overlap])

    def coverage(points: np.ndarray) -> np.ndarray:
        member = construction.translated_membership(points * mass)
        covered = member.sum(axis=1)
        return np.array([int((covered >= 1).sum()), int((covered > 1).sum())])

    buffer_hits, contain_bad, moved_overlap = _map_blocks(seed, samples, k, buffer_and_translation, stream=1)
    covered_hits, overlap_bad = _map_blocks(seed, samples, k, coverage, stream=2)
    buffer_vol, buffer_std = _binomial_volume(int(buffer_hits), samples, volume)
    scaled_volume = mass ** (k - 1) * volume
    union_vol, union_std = _binomial_volume(int(covered_hits), samples, scaled_volume)
    return ShrinkReport(
        k=k,
        eps=construction.eps,
        samples=samples,
        overlap_violations=int(overlap_bad),
        translated_overlap_violations=int(moved_overlap),
        containment_violations=int(contain_bad),
        shrunk_union_volume=union_vol,
        shrunk_union_std=union_std,
        buffer_volume=buffer_vol,
        buffer_std=buffer_std,
    )


# ---------------------------------------------------------------- unit square


@dataclass(frozen=True)
class SquareReport:
    voronoi_length: float
    diagonal_infimum: float
    family: tuple[tuple[float, float], ...]

    def to_json(self) -> dict:
        return {
            "voronoi_length": self.voronoi_length,
            "diagonal_infimum": self.diagonal_infimum,
            "family": [{"delta": d, "length": length} for d, length in self.family],
        }


def _polyline_length(segments: Sequence[tuple[tuple[float, float], tuple[float, float]]]) -> float:
    return sum(math.dist(p, r) for p, r in segments)


def square_voronoi_segments() -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """The '+' cross: center of the unit square to each edge midpoint."""
    c = (0.5, 0.5)
    return [(c, (0.5, 0.0)), (c, (1.0, 0.5)), (c, (0.5, 1.0)), (c, (0.0, 0.5))]


def square_family_segments(delta: float) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """Separating set of the corner-cut partition with parameter ``delta``.

    B_1 and B_3 are the right isosceles triangles with legs ``delta`` at
    corners (0,0) and (1,1). The remaining band is split along the diagonal,
    from the midpoint of B_1's hypotenuse to the midpoint of B_3's, giving B_2
    (below) and B_4 (above). Each B_i touches only faces through its vertex.
    """
    if not 0 < delta < 1:
        raise InvalidParameterError("delta must lie in (0, 1)")
    d = delta
    return [
        ((d, 0.0), (0.0, d)),
        ((1.0, 1.0 - d), (1.0 - d, 1.0)),
        ((d / 2, d / 2), (1.0 - d / 2, 1.0 - d / 2)),
    ]


def square_family_length(delta: float) -> float:
    return _polyline_length(square_family_segments(delta))


def square_demo(deltas: Sequence[float] = (0.2, 0.1, 0.05, 0.01)) -> SquareReport:
    """Voronoi cross (length 2) versus the corner-cut family (length sqrt(2)(1 + delta))."""
    return SquareReport(
        voronoi_length=_polyline_length(square_voronoi_segments()),
        # the family length is affine in delta, so its infimum is the delta -> 0 diagonal
        diagonal_infimum=math.dist((0.0, 0.0), (1.0, 1.0)),
        family=tuple((float(d), square_family_length(d)) for d in deltas),
    )

"""Exact and heuristic search over Sperner-admissible labelings of small lattices.

The exact search is a depth-first backtracking over vertices ordered by
``|L(a)|`` (corners first). A cell is scored as soon as its last vertex is
assigned. The tree is split at the first vertex with more than one admissible
color; each subtree is searched independently from the same incumbent, so the
result, including ``nodes_visited``, does not depend on how many workers run
the subtrees.
"""
from __future__ import annotations

import enum
import functools
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import labeling as lab
from . import lattice
from .errors import InvalidParameterError, SearchBudgetError
from .labeling import Labeling


class Objective(str, enum.Enum):
    MIN_NONMONO = "min_nonmono"
    MIN_MAX_COLORS = "min_max_colors"


@dataclass(frozen=True)
class SearchSpec:
    k: int
    q: int
    objective: Objective
    node_limit: int = 10**8
    time_limit: float = 60.0
    prune: bool = True
    # with prune, stop as soon as the incumbent reaches the known lower bound
    use_bound: bool = True
    workers: int = 1


@dataclass
class SearchResult:
    objective: Objective
    optimum: int
    witness: Labeling
    nodes_visited: int
    proven_optimal: bool
    lower_bound_used: int
    search_space: int

    def to_json(self, witness_file: str | None = None) -> dict:
        return {
            "objective": self.objective.value,
            "k": self.witness.k,
            "q": self.witness.q,
            "optimum": self.optimum,
            "proven_optimal": self.proven_optimal,
            "nodes_visited": self.nodes_visited,
            "bound": self.lower_bound_used,
            "search_space": self.search_space,
            "witness_file": witness_file,
        }


def search_space_size(k: int, q: int) -> int:
    """Number of admissible labelings, the product of |L(a)| over V(k, q)."""
    lattice._check_kq(k, q, min_q=1)
    size = 1
    for s in range(2, k + 1):
        # points with support size s: choose the support, then compose q into s positive parts
        size *= s ** (math.comb(k, s) * math.comb(q - 1, s - 1))
    return size


def evaluate(labeling: Labeling, objective: Objective) -> int:
    stats = lab.compute_stats(labeling)
    if objective is Objective.MIN_NONMONO:
        return stats.nonmonochromatic_count
    return stats.max_colors_per_cell


def lower_bound(k: int, q: int, objective: Objective) -> int:
    if objective is Objective.MIN_NONMONO:
        return lab.nonmono_lower_bound(k, q)
    # the single cell of E(k, 1) holds every corner; otherwise some cell is non-monochromatic
    return k if q == 1 else 2


def initial_labeling(k: int, q: int, objective: Objective) -> Labeling:
    if objective is Objective.MIN_NONMONO:
        return lab.first_choice(k, q)
    if k >= 4 and q >= k * k:
        return lab.top_coordinate(k, q)
    return lab.max_coordinate(k, q)


# ---------------------------------------------------------------- exact search


@dataclass(frozen=True)
class _Problem:
    k: int
    q: int
    order: tuple[int, ...]
    choices: tuple[tuple[int, ...], ...]
    completes_at: tuple[tuple[tuple[int, ...], ...], ...]


@functools.lru_cache(maxsize=16)
def _problem(k: int, q: int) -> _Problem:
    vertices = lattice.enumerate_vertices(k, q)
    choices = [tuple(sorted(lattice.admissible_colors(a))) for a in vertices]
    order = sorted(range(len(vertices)), key=lambda r: (len(choices[r]), r))
    position = {r: p for p, r in enumerate(order)}
    completes: list[list[tuple[int, ...]]] = [[] for _ in order]
    for bases in lattice.iter_vertex_blocks(k, q - 1):
        for ranks in lattice.cell_vertex_ranks(bases, q).tolist():
            completes[max(position[r] for r in ranks)].append(tuple(ranks))
    return _Problem(
        k=k,
        q=q,
        order=tuple(order),
        choices=tuple(choices[r] for r in order),
        completes_at=tuple(tuple(c) for c in completes),
    )


class _BudgetExceeded(Exception):
    pass


def _search_subtree(
    k: int,
    q: int,
    objective: Objective,
    prefix: tuple[int, ...],
    incumbent: int,
    prune: bool,
    node_limit: int,
    deadline: float,
) -> tuple[int, tuple[int, ...] | None, int, bool]:
    """Search every completion of ``prefix`` (colors by order position).

    Returns ``(best, colors_by_rank or None, nodes, exhausted)``; a witness is
    reported only if it strictly beats ``incumbent``.
    """
    prob = _problem(k, q)
    n = len(prob.order)
    colors = [0] * n  # indexed by vertex rank
    min_nonmono = objective is Objective.MIN_NONMONO
    best = incumbent
    best_colors: tuple[int, ...] | None = None
    nodes = 0

    def score(pos: int, cost: int) -> int | None:
        cost = _score_unpruned(prob, colors, pos, cost, min_nonmono)
        if prune and cost >= best:
            return None
        return cost

    def descend(pos: int, cost: int) -> None:
        nonlocal best, best_colors, nodes
        if pos == n:
            if cost < best:
                best = cost
                best_colors = tuple(colors)
            return
        vertex = prob.order[pos]
        for color in prob.choices[pos]:
            nodes += 1
            if nodes > node_limit or (nodes & 0xFFF == 0 and time.monotonic() > deadline):
                raise _BudgetExceeded
            colors[vertex] = color
            new_cost = score(pos, cost)
            if new_cost is not None:
                descend(pos + 1, new_cost)
        colors[vertex] = 0

    cost = 0
    for pos, color in enumerate(prefix):
        colors[prob.order[pos]] = color
        cost = _score_unpruned(prob, colors, pos, cost, min_nonmono)
    if prune and cost >= best:
        return best, None, nodes, False
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, n + 200))
    try:
        descend(len(prefix), cost)
        exhausted = False
    except _BudgetExceeded:
        nodes = min(nodes, node_limit)
        exhausted = True
    finally:
        sys.setrecursionlimit(limit)
    return best, best_colors, nodes, exhausted


def _score_unpruned(prob: _Problem, colors: list[int], pos: int, cost: int, min_nonmono: bool) -> int:
    for cell in prob.completes_at[pos]:
        distinct = len({colors[r] for r in cell})
        if min_nonmono:
            cost += distinct > 1
        else:
            cost = max(cost, distinct)
    return cost


def _run_subtree(args: tuple) -> tuple[int, tuple[int, ...] | None, int, bool]:
    return _search_subtree(*args)


def exhaustive_search(spec: SearchSpec) -> SearchResult:
    """Minimise ``spec.objective`` over all admissible labelings of V(k, q)."""
    k, q, objective = spec.k, spec.q, Objective(spec.objective)
    space = search_space_size(k, q)
    if not spec.prune and space > spec.node_limit:
        raise SearchBudgetError(
            f"search space {space} exceeds node limit {spec.node_limit}; enable pruning or raise the limit"
        )
    bound = lower_bound(k, q, objective)
    start = initial_labeling(k, q, objective)
    start_value = evaluate(start, objective)
    if spec.prune and spec.use_bound and start_value <= bound:
        return SearchResult(objective, start_value, start, 0, True, bound, space)

    prob = _problem(k, q)
    deadline = time.monotonic() + spec.time_limit
    branch_pos = next((p for p, ch in enumerate(prob.choices) if len(ch) > 1), None)
    if branch_pos is None:
        # single admissible labeling: nothing to search
        return SearchResult(objective, start_value, start, len(prob.order), True, bound, space)

    fixed = tuple(prob.choices[p][0] for p in range(branch_pos))
    branches = prob.choices[branch_pos]
    per_branch = max(1, spec.node_limit // len(branches))
    tasks = [
        (k, q, objective, fixed + (color,), start_value, spec.prune, per_branch, deadline)
        for color in branches
    ]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=min(spec.workers, len(tasks))) as pool:
            outcomes = list(pool.map(_run_subtree, tasks))
    else:
        outcomes = [_run_subtree(t) for t in tasks]

    candidates = [(start_value, tuple(int(c) for c in start.colors))]
    nodes = branch_pos + len(branches)
    exhausted = False
    for value, colors, sub_nodes, sub_exhausted in outcomes:
        nodes += sub_nodes
        exhausted |= sub_exhausted
        if colors is not None:
            candidates.append((value, colors))
    optimum, colors = min(candidates)
    witness = Labeling(k, q, np.array(colors))
    return SearchResult(objective, optimum, witness, nodes, not exhausted, bound, space)


def exhaustive_min_nonmono(k: int, q: int, spec: SearchSpec | None = None) -> SearchResult:
    spec = spec or SearchSpec(k, q, Objective.MIN_NONMONO)
    _check_spec(spec, k, q, Objective.MIN_NONMONO)
    return exhaustive_search(spec)


def exhaustive_min_max_colors(k: int, q: int, spec: SearchSpec | None = None) -> SearchResult:
    spec = spec or SearchSpec(k, q, Objective.MIN_MAX_COLORS)
    _check_spec(spec, k, q, Objective.MIN_MAX_COLORS)
    return exhaustive_search(spec)


def _check_spec(spec: SearchSpec, k: int, q: int, objective: Objective) -> None:
    if (spec.k, spec.q) != (k, q) or Objective(spec.objective) is not objective:
        raise InvalidParameterError("search spec does not match the requested instance")


# ---------------------------------------------------------------- heuristic


def random_restart_min_max_colors(
    k: int, q: int, seed: int = 0, iters: int = 10_000, restarts: int = 4
) -> SearchResult:
    """Hill-climb on single-vertex recolorings to reduce the max colors per cell.

    The first climb starts from the warm-start labeling, later ones from
    random admissible labelings. Each climb makes ``iters`` proposals and
    accepts any move that does not worsen (max colors, cells at that max).
    """
    objective = Objective.MIN_MAX_COLORS
    rng = np.random.default_rng(seed)
    vertices = lattice.vertex_array(k, q)
    table = np.vstack(
        [lattice.cell_vertex_ranks(b, q) for b in lattice.iter_vertex_blocks(k, q - 1)]
    )
    incidence: list[list[int]] = [[] for _ in range(vertices.shape[0])]
    for cell, ranks in enumerate(table.tolist()):
        for r in ranks:
            incidence[r].append(cell)
    supports = [np.flatnonzero(row) + 1 for row in vertices]

    start = initial_labeling(k, q, objective)
    best_value = evaluate(start, objective)
    best = start
    proposals = 0
    for attempt in range(restarts if iters > 0 else 0):
        current = start if attempt == 0 else lab.random_admissible(k, q, rng)
        colors = current.colors.astype(np.int64)
        counts = np.zeros((table.shape[0], k + 1), dtype=np.int64)
        np.add.at(counts, (np.repeat(np.arange(table.shape[0]), k), colors[table].ravel()), 1)
        distinct = (counts > 0).sum(axis=1)
        hist = np.bincount(distinct, minlength=k + 1)

        def score() -> tuple[int, int]:
            top = int(np.flatnonzero(hist)[-1])
            return top, int(hist[top])

        current_score = score()
        for _ in range(iters):
            proposals += 1
            v = int(rng.integers(vertices.shape[0]))
            options = supports[v]
            if options.size == 1:
                continue
            old = int(colors[v])
            others = options[options != old]
            new = int(others[rng.integers(others.size)])
            _recolor(counts, distinct, hist, incidence[v], old, new)
            colors[v] = new
            trial = score()
            if trial <= current_score:
                current_score = trial
            else:
                _recolor(counts, distinct, hist, incidence[v], new, old)
                colors[v] = old
        if current_score[0] < best_value:
            best_value = current_score[0]
            best = Labeling(k, q, colors)
    return SearchResult(objective, best_value, best, proposals, False, lower_bound(k, q, objective),
                        search_space_size(k, q))


def _recolor(counts, distinct, hist, cells, old: int, new: int) -> None:
    for c in cells:
        before = distinct[c]
        counts[c, old] -= 1
        if counts[c, old] == 0:
            distinct[c] -= 1
        if counts[c, new] == 0:
            distinct[c] += 1
        counts[c, new] += 1
        if distinct[c] != before:
            hist[before] -= 1
            hist[distinct[c]] += 1

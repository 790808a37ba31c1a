from __future__ import annotations

import itertools

import numpy as np
import pytest

from sperner import labeling as lab
from sperner import lattice
from sperner import search as srch
from sperner.errors import InvalidParameterError, SearchBudgetError
from sperner.labeling import Labeling
from sperner.search import Objective, SearchSpec


def brute_optimum(k: int, q: int, objective: Objective) -> int:
    """Minimum of the objective over every admissible labeling (tiny instances only)."""
    choices = [sorted(lattice.admissible_colors(a)) for a in lattice.enumerate_vertices(k, q)]
    return min(
        srch.evaluate(Labeling(k, q, np.array(combo)), objective) for combo in itertools.product(*choices)
    )


def check_witness(result: srch.SearchResult) -> None:
    assert lab.is_admissible(result.witness)
    assert srch.evaluate(result.witness, result.objective) == result.optimum


@pytest.mark.parametrize("k,q,expected", [(3, 2, 2), (3, 3, 3), (3, 4, 4), (4, 2, 3), (4, 3, 6)])
def test_min_nonmono_equals_bound(k, q, expected):
    spec = SearchSpec(k, q, Objective.MIN_NONMONO, use_bound=False)
    result = srch.exhaustive_min_nonmono(k, q, spec)
    assert result.proven_optimal
    assert result.optimum == expected == lab.nonmono_lower_bound(k, q)
    check_witness(result)


@pytest.mark.parametrize("k,q", [(3, 2), (3, 3), (4, 2)])
@pytest.mark.parametrize("objective", list(Objective))
def test_prune_and_exhaustion_agree(k, q, objective):
    pruned = srch.exhaustive_search(SearchSpec(k, q, objective, use_bound=False))
    full = srch.exhaustive_search(SearchSpec(k, q, objective, prune=False))
    assert pruned.optimum == full.optimum == brute_optimum(k, q, objective)
    assert srch.evaluate(pruned.witness, objective) == srch.evaluate(full.witness, objective)
    assert full.nodes_visited >= pruned.nodes_visited
    check_witness(pruned)
    check_witness(full)


def test_search_space_size():
    assert srch.search_space_size(3, 2) == 8
    assert srch.search_space_size(4, 2) == 64
    assert srch.search_space_size(3, 4) == 2**9 * 3**3


@pytest.mark.parametrize("k,q,expected", [(3, 2, 2), (3, 3, 2), (3, 4, 2), (4, 2, 3), (4, 3, 2), (5, 1, 5)])
def test_min_max_colors(k, q, expected):
    spec = SearchSpec(k, q, Objective.MIN_MAX_COLORS, use_bound=False)
    result = srch.exhaustive_min_max_colors(k, q, spec)
    assert result.proven_optimal
    assert result.optimum == expected
    check_witness(result)


def test_min_max_colors_single_cell_needs_all_colors():
    for k in range(2, 7):
        assert srch.exhaustive_min_max_colors(k, 1).optimum == k


def test_bound_stop_is_immediate_for_first_choice():
    result = srch.exhaustive_min_nonmono(3, 4)
    assert result.proven_optimal and result.nodes_visited == 0
    assert result.lower_bound_used == lab.nonmono_lower_bound(3, 4)


def test_budget_exhaustion_is_flagged():
    spec = SearchSpec(4, 3, Objective.MIN_NONMONO, node_limit=1000, use_bound=False)
    result = srch.exhaustive_search(spec)
    assert not result.proven_optimal
    check_witness(result)


def test_unpruned_refuses_oversized_space():
    with pytest.raises(SearchBudgetError):
        srch.exhaustive_search(SearchSpec(4, 3, Objective.MIN_NONMONO, prune=False, node_limit=10))


def test_spec_mismatch():
    with pytest.raises(InvalidParameterError):
        srch.exhaustive_min_nonmono(3, 2, SearchSpec(3, 3, Objective.MIN_NONMONO))


def test_search_is_deterministic():
    spec = SearchSpec(3, 4, Objective.MIN_MAX_COLORS, use_bound=False)
    a, b = srch.exhaustive_search(spec), srch.exhaustive_search(spec)
    assert a.to_json() == b.to_json()
    assert a.witness == b.witness


@pytest.mark.parametrize("k,q", [(3, 2), (3, 3), (3, 4), (4, 2)])
@pytest.mark.parametrize("objective", list(Objective))
def test_worker_count_independent(k, q, objective):
    one = srch.exhaustive_search(SearchSpec(k, q, objective, use_bound=False, workers=1))
    two = srch.exhaustive_search(SearchSpec(k, q, objective, use_bound=False, workers=2))
    assert one.to_json() == two.to_json()
    assert one.witness == two.witness


def test_heuristic_zero_iterations_returns_initializer():
    result = srch.random_restart_min_max_colors(4, 16, seed=3, iters=0)
    init = srch.initial_labeling(4, 16, Objective.MIN_MAX_COLORS)
    assert result.witness == init
    assert result.optimum == srch.evaluate(init, Objective.MIN_MAX_COLORS)
    assert not result.proven_optimal


@pytest.mark.parametrize("seed", [0, 1])
def test_heuristic_keeps_top_coordinate_guarantee(seed):
    result = srch.random_restart_min_max_colors(4, 16, seed=seed, iters=2000, restarts=2)
    assert result.optimum <= 4
    check_witness(result)


def test_heuristic_is_deterministic():
    a = srch.random_restart_min_max_colors(3, 6, seed=0, iters=3000)
    b = srch.random_restart_min_max_colors(3, 6, seed=0, iters=3000)
    assert a.witness == b.witness and a.to_json() == b.to_json()
    check_witness(a)


def test_initial_labelings():
    assert srch.initial_labeling(3, 4, Objective.MIN_NONMONO) == lab.first_choice(3, 4)
    assert srch.initial_labeling(4, 16, Objective.MIN_MAX_COLORS) == lab.top_coordinate(4, 16)
    assert srch.initial_labeling(4, 3, Objective.MIN_MAX_COLORS) == lab.max_coordinate(4, 3)

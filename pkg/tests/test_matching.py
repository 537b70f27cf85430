"""Exactness and reduction tests for the matching primitives.

Random instances are certified against exhaustive enumeration oracles
that share no code with the production paths.
"""

import math
import random

import numpy as np
import pytest

from hdrg.matching import (
    MatchGraph,
    brute_force_mwm_weight,
    brute_force_mwpm_weight,
    matching_weight,
    mwm,
    mwpm,
    sparsified_components,
)


def complete_edges(n, weight_fn):
    return [(i, j, weight_fn(i, j)) for i in range(n) for j in range(i + 1, n)]


def test_mwpm_two_vertices():
    assert mwpm(2, [(0, 1, 3.5)]) == [(0, 1)]


def test_mwpm_k4_unique_cheap_pairing():
    edges = [(0, 1, 1.0), (2, 3, 1.0), (0, 2, 5.0), (0, 3, 5.0), (1, 2, 5.0), (1, 3, 5.0)]
    pairs = mwpm(4, edges)
    assert pairs == [(0, 1), (2, 3)]


def test_mwpm_rejects_odd_and_impossible():
    with pytest.raises(ValueError):
        mwpm(3, [(0, 1, 1.0)])
    with pytest.raises(ValueError):
        mwpm(4, [(0, 1, 1.0)])


def test_mwpm_matches_enumeration_small_and_large():
    rng = random.Random(2)
    for trial in range(200):
        n = rng.choice([4, 6, 8, 10, 14])  # 14 exercises the blossom path
        edges = complete_edges(n, lambda i, j: rng.randint(0, 50))
        pairs = mwpm(n, edges)
        lookup = {(i, j): w for i, j, w in edges}
        weight = sum(lookup[p] for p in pairs)
        assert weight == brute_force_mwpm_weight(n, edges)


def test_mwm_single_vertex_abstains():
    graph = MatchGraph(1, [3.0])
    result = mwm(graph)
    assert result.pairs == [] and result.abstainers == [0]
    assert result.total_weight == 3.0


def test_mwm_double_abstention_beats_expensive_edge():
    graph = MatchGraph(2, [1.0, 1.0], [(0, 1, 4.0)])
    result = mwm(graph)
    assert result.abstainers == [0, 1]
    assert result.total_weight == 2.0


def test_mwm_pairs_cheap_edge():
    graph = MatchGraph(2, [3.0, 3.0], [(0, 1, 4.0)])
    result = mwm(graph)
    assert result.pairs == [(0, 1)]
    assert result.total_weight == 4.0


def test_mwm_matches_partition_oracle():
    rng = random.Random(11)
    for trial in range(200):
        n = rng.randint(1, 8)
        vw = [rng.randint(0, 20) for _ in range(n)]
        edges = complete_edges(n, lambda i, j: rng.randint(0, 30))
        graph = MatchGraph(n, [float(w) for w in vw], edges)
        result = mwm(graph)
        assert result.total_weight == brute_force_mwm_weight(graph)


def test_mwm_float_weights_certified():
    rng = random.Random(5)
    for trial in range(100):
        n = rng.randint(2, 7)
        vw = [rng.uniform(0, 5) for _ in range(n)]
        edges = complete_edges(n, lambda i, j: rng.uniform(0, 8))
        graph = MatchGraph(n, vw, edges)
        result = mwm(graph)
        assert result.total_weight <= brute_force_mwm_weight(graph) + 1e-9


def test_doubling_weight_identity():
    # The doubled graph's perfect matching weight equals the mwm weight.
    rng = random.Random(31)
    for trial in range(50):
        n = rng.randint(2, 6)
        vw = [float(rng.randint(0, 9)) for _ in range(n)]
        edges = complete_edges(n, lambda i, j: float(rng.randint(0, 12)))
        graph = MatchGraph(n, vw, edges)
        doubled = []
        for i, j, w in edges:
            doubled.append((i, j, w))
            doubled.append((i + n, j + n, 0.0))
        for j in range(n):
            doubled.append((j, j + n, vw[j]))
        pairs = mwpm(2 * n, doubled)
        lookup = {(min(i, j), max(i, j)): w for i, j, w in doubled}
        doubled_weight = math.fsum(lookup[p] for p in pairs)
        assert doubled_weight == pytest.approx(mwm(graph).total_weight, abs=1e-12)


def test_determinism():
    rng = random.Random(8)
    n = 8
    vw = [float(rng.randint(0, 5)) for _ in range(n)]
    edges = complete_edges(n, lambda i, j: float(rng.randint(0, 9)))
    graph = MatchGraph(n, vw, edges)
    first = mwm(graph)
    second = mwm(graph)
    assert first.pairs == second.pairs and first.abstainers == second.abstainers


def test_sparsified_solve_equals_dense_solve():
    rng = random.Random(77)
    for trial in range(500):
        n = rng.randint(2, 9)
        # Low-density geometry: clustered points make most cross edges fail
        # the W_jk < W_j + W_k test.
        pts = [(rng.uniform(0, 40), rng.uniform(0, 40)) for _ in range(n)]
        W = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                if i != j:
                    W[i, j] = abs(pts[i][0] - pts[j][0]) + abs(pts[i][1] - pts[j][1])
        np.fill_diagonal(W, np.inf)
        vw = W.min(axis=1) * 0.5 + 1e-6
        edges_all = [(i, j, float(W[i, j])) for i in range(n) for j in range(i + 1, n)]
        dense = mwm(MatchGraph(n, [float(v) for v in vw], edges_all))

        total = 0.0
        for comp in sparsified_components(W, vw):
            comp_edges = [
                (ai, bi, float(W[comp[ai], comp[bi]]))
                for ai in range(len(comp))
                for bi in range(ai + 1, len(comp))
                if W[comp[ai], comp[bi]] < vw[comp[ai]] + vw[comp[bi]]
            ]
            sub = mwm(MatchGraph(len(comp), [float(vw[i]) for i in comp], comp_edges))
            total += sub.total_weight
        assert total == pytest.approx(dense.total_weight, abs=1e-9)


def test_sparsifier_isolates_distant_pairs():
    W = np.array(
        [
            [np.inf, 2.0, 50.0, 50.0],
            [2.0, np.inf, 50.0, 50.0],
            [50.0, 50.0, np.inf, 2.0],
            [50.0, 50.0, 2.0, np.inf],
        ]
    )
    vw = np.array([1.5, 1.5, 1.5, 1.5])
    comps = sparsified_components(W, vw)
    assert sorted(tuple(c) for c in comps) == [(0, 1), (2, 3)]

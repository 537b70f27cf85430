"""Classic HDRG decoders, the wormhole oracle and recovery construction."""

import random

import numpy as np
import pytest

from hdrg.clustering import (
    METRIC_MANHATTAN,
    WormholeOracle,
    defects_of,
    hdrg_run,
    metric_matrix,
    neutrality,
)
from hdrg.noise import NoiseParams, cantor_bundle, sample_chain, trial_rng
from hdrg.toric import CodeParams, compose, logical_class, syndrome_of, transport_chain


def reference_distances(positions, cliques, code, metric):
    """All-pairs shortest paths over the clique graph (scipy reference).

    Dense scipy graphs treat exact zeros as missing edges, so free clique
    hops are encoded as epsilon weights (small enough not to
    perturb integer distances, large enough to survive the dense-to-sparse
    conversion).
    """
    from scipy.sparse.csgraph import shortest_path

    base = metric_matrix(positions, code, metric)
    for members in cliques:
        for i in members:
            for j in members:
                if i != j:
                    base[i, j] = 1e-6
    return shortest_path(base, method="FW", directed=False)


def test_neutrality():
    assert neutrality([1, 2], 3)
    assert not neutrality([1, 1], 3)
    assert neutrality([1, 1, 1], 3)


def test_shortcut_two_strings_gives_width():
    # Two length-3 strings with a gap of 2: removing the inner pair leaves
    # the outer defects at effective distance 2*l0 = 6, not 3*l0 - 1 = 8.
    code = CodeParams(3, 20)
    positions = np.array([[0, 0], [3, 0], [5, 0], [8, 0]])
    oracle = WormholeOracle(positions, code, METRIC_MANHATTAN)
    assert oracle.distance(0, 3) == 8
    oracle.register_clique(np.array([1, 2]))
    assert oracle.distance(0, 3) == 6
    assert oracle.route(0, 3) == [0, 1, 2, 3]


def test_shortcut_fig2_distance_update():
    code = CodeParams(3, 16)
    positions = np.array([[0, 0], [1, 2], [2, 3], [3, 5]])
    oracle = WormholeOracle(positions, code, METRIC_MANHATTAN)
    assert oracle.distance(0, 3) == 8
    oracle.register_clique(np.array([1, 2]))
    assert oracle.distance(0, 3) == 6


def test_irrelevant_clique_changes_nothing():
    code = CodeParams(2, 30)
    positions = np.array([[0, 0], [3, 0], [14, 14], [15, 14]])
    oracle = WormholeOracle(positions, code, METRIC_MANHATTAN)
    before = oracle.dist.copy()
    oracle.register_clique(np.array([2, 3]))
    assert oracle.distance(0, 1) == before[0, 1]


def test_oracle_matches_reference_shortest_paths():
    rng = random.Random(4)
    code = CodeParams(3, 15)
    for metric in ("manhattan", "chebyshev"):
        for _ in range(30):
            m = rng.randint(4, 12)
            pts = set()
            while len(pts) < m:
                pts.add((rng.randrange(15), rng.randrange(15)))
            positions = np.array(sorted(pts))
            oracle = WormholeOracle(positions, code, metric)
            cliques = []
            ids = list(range(m))
            for _ in range(rng.randint(1, 4)):
                members = rng.sample(ids, rng.randint(2, 3))
                cliques.append(members)
                oracle.register_clique(np.array(members))
            ref = reference_distances(positions, cliques, code, metric)
            assert np.allclose(oracle.dist, ref, atol=1e-4)


def test_distances_never_increase_and_static_without_shortcuts():
    code = CodeParams(3, 12)
    positions = np.array([[0, 0], [1, 0], [4, 4], [5, 4], [9, 1]])
    oracle = WormholeOracle(positions, code, METRIC_MANHATTAN)
    static = metric_matrix(positions, code, METRIC_MANHATTAN)
    before = oracle.dist.copy()
    oracle.register_clique(np.array([0, 1]))
    assert (oracle.dist <= before).all()
    fresh = WormholeOracle(positions, code, METRIC_MANHATTAN)
    assert np.array_equal(fresh.dist, static)


def test_hdrg_run_trivial_cases():
    code = CodeParams(3, 10)
    for strategy in ("bh", "abcb", "ed"):
        recovery, iterations = hdrg_run(strategy, [], code)
        assert recovery == {} and iterations == 0
        pair = [((1, 1), 1), ((4, 2), 2)]
        recovery, _ = hdrg_run(strategy, pair, code)
        syndrome = syndrome_of(recovery, code)
        assert syndrome == {(1, 1): 2, (4, 2): 1}


def test_bh_merge_schedule():
    # Chebyshev distance 3 merges once the search radius reaches 2^2 = 4.
    code = CodeParams(2, 12)
    defects = [((0, 0), 1), ((3, 0), 1)]
    _, iterations = hdrg_run("bh", defects, code)
    assert iterations == 3  # n = 0, 1 make no progress; merged at n = 2


def test_abcb_merge_schedule():
    # Metric value 2 + 4/(2*10) = 2.2: first merged when D(n) = 3.
    code = CodeParams(2, 10)
    defects = [((0, 0), 1), ((2, 2), 1)]
    _, iterations = hdrg_run("abcb", defects, code)
    assert iterations == 3
    # Adjacent defects carry metric 1 + 1/(2L) > 1, so they merge at n=1
    # (the refinement term defers the trivial merge by one scale).
    _, iterations = hdrg_run("abcb", [((0, 0), 1), ((1, 0), 1)], code)
    assert iterations == 2


def test_ed_strict_inequality_schedule():
    code = CodeParams(2, 10)
    defects = [((3, 3), 1), ((4, 3), 1)]
    _, iterations = hdrg_run("ed", defects, code)
    assert iterations == 2  # n=0 sweep sees no pair with d < 1


def test_ed_three_colinear_charges_merge_to_neutral():
    code = CodeParams(3, 12)
    defects = [((2, 5), 1), ((3, 5), 1), ((4, 5), 1)]
    recovery, iterations = hdrg_run("ed", defects, code)
    residual = syndrome_of(
        compose(recovery, _chain_with_syndrome(defects, code), code), code
    )
    assert residual == {}
    assert iterations == 3


def _chain_with_syndrome(defects, code):
    """Any chain whose syndrome matches the given defects (for residual
    checks): transport each charge in from a common dump site, which adds
    a compensating charge there that the defect list must already cancel."""
    chain = {}
    total = 0
    dump = (0, 0)
    for q, g in defects:
        if q == dump:
            continue
        chain = compose(chain, transport_chain(dump, q, g, code), code)
        total += g
    syndrome = syndrome_of(chain, code)
    expect = {q: g for q, g in defects if q != dump}
    assert {k: v for k, v in syndrome.items() if k != dump} == expect
    return chain


def test_cluster_charge_additivity():
    code = CodeParams(5, 8)
    defects = [((0, 0), 2), ((1, 0), 4), ((2, 0), 4)]
    recovery, _ = hdrg_run("ed", defects, code)
    # 2 + 4 + 4 = 10 == 0 mod 5: the cluster is neutral and fully removed.
    chain = _chain_with_syndrome(defects, code)
    assert syndrome_of(compose(recovery, chain, code), code) == {}


def test_ed_monte_carlo_clears_syndrome():
    code = CodeParams(3, 16)
    noise = NoiseParams(0.05, 3)
    trials = 10_000
    for t in range(trials):
        error = sample_chain(noise, code, trial_rng(6, t))
        recovery, _ = hdrg_run("ed", defects_of(syndrome_of(error, code)), code)
        assert syndrome_of(compose(recovery, error, code), code) == {}


def _subcritical_chains(code):
    """All error chains with fewer than floor((L+1)/2) errors."""
    budget = (code.L + 1) // 2 - 1
    edges = list(range(code.n_edges))
    charges = list(range(1, code.d))
    chains = [[(e, g)] for e in edges for g in charges]
    if budget >= 2:
        for i, e1 in enumerate(edges):
            for e2 in edges[i + 1 :]:
                for g1 in charges:
                    for g2 in charges:
                        chains.append([(e1, g1), (e2, g2)])
    return chains


@pytest.mark.parametrize("strategy", ["bh", "abcb", "mwm"])
def test_smallest_shortcut_breaking_size(strategy):
    """With shortcuts on, no chain of fewer than floor((L+1)/2) errors
    causes a logical error for L < 9 (exhaustive for L=3,5 at d=2,3).

    Expanding diamonds is exempt: its greedy left-to-right sweep commits
    to one of two tied distance-1 pairings around the boundary, and the
    completing transport can then wind the torus with only two errors
    (e.g. d=2, L=5, errors on the vertical cut).  The matching decoder
    optimizes the pairing globally and is immune.
    """
    from hdrg.mwm_decoder import decode

    for d in (2, 3):
        for L in (3, 5):
            code = CodeParams(d, L)
            for items in _subcritical_chains(code):
                error = dict(items)
                defects = defects_of(syndrome_of(error, code))
                if strategy == "mwm":
                    recovery, _ = decode(defects, code, NoiseParams(0.05, d))
                else:
                    recovery, _ = hdrg_run(strategy, defects, code, True)
                combined = compose(recovery, error, code)
                assert syndrome_of(combined, code) == {}
                assert logical_class(combined, code) == (0, 0), (d, L, items)


def test_ed_two_error_wrap_counterexample():
    """The explicit configuration defeating expanding diamonds at L=5:
    two errors on the vertical cut whose four anyons admit two tied
    nearest-neighbour pairings; the sweep picks the one whose completion
    wraps.  Documents why the exhaustive invariant above exempts ED."""
    code = CodeParams(2, 5)
    error = {0: 1, 4: 1}
    recovery, _ = hdrg_run("ed", defects_of(syndrome_of(error, code)), code, True)
    combined = compose(recovery, error, code)
    assert syndrome_of(combined, code) == {}
    assert logical_class(combined, code) != (0, 0)

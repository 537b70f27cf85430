"""Sampling statistics, measurement histories and Cantor bundles."""

import math

import numpy as np
import pytest

from hdrg.noise import (
    MeasurementHistory,
    NoiseParams,
    cantor_bundle,
    cantor_gaps,
    sample_chain,
    sample_history,
    syndrome_changes,
    trial_rng,
)
from hdrg.toric import CodeParams, edge_index, HORIZONTAL, syndrome_of
from hdrg.clustering import defects_of


def test_zero_rate_is_silent():
    code = CodeParams(3, 8)
    rng = trial_rng(0, 0)
    assert sample_chain(NoiseParams(0.0, 3), code, rng) == {}
    history = sample_history(NoiseParams(0.0, 3), code, 4, trial_rng(0, 1))
    assert all(not s for s in history.measured)
    assert syndrome_changes(history) == []


def test_rejects_undecodable_rate():
    code = CodeParams(2, 4)
    with pytest.raises(ValueError):
        sample_chain(NoiseParams(0.6, 2), code, trial_rng(0, 0))


def test_error_rate_statistics():
    code = CodeParams(3, 20)
    noise = NoiseParams(0.1, 3)
    edges = 0
    errors = 0
    g_counts = {1: 0, 2: 0}
    t = 0
    while edges < 1_000_000:
        chain = sample_chain(noise, code, trial_rng(42, t))
        t += 1
        edges += code.n_edges
        errors += len(chain)
        for g in chain.values():
            g_counts[g] += 1
    sigma = math.sqrt(0.1 * 0.9 * edges)
    assert abs(errors - 0.1 * edges) < 3 * sigma
    # both charges equally likely among errors
    sigma_g = math.sqrt(errors * 0.25)
    assert abs(g_counts[1] - g_counts[2]) < 6 * sigma_g


def test_phi_lambda_statistics():
    code = CodeParams(6, 20)
    noise = NoiseParams(0.2, 6, "phi_lambda")
    edges = 0
    counts = {g: 0 for g in range(1, 6)}
    t = 0
    while edges < 1_000_000:
        chain = sample_chain(noise, code, trial_rng(7, t))
        t += 1
        edges += code.n_edges
        for g in chain.values():
            counts[g] += 1
    sigma3 = math.sqrt(edges * 0.1 * 0.9)
    assert abs(counts[3] - 0.1 * edges) < 3 * sigma3
    sigma1 = math.sqrt(edges * 0.025 * 0.975)
    for g in (1, 2, 4, 5):
        assert abs(counts[g] - 0.025 * edges) < 3 * sigma1


def test_reproducibility_and_substreams():
    code = CodeParams(3, 12)
    noise = NoiseParams(0.15, 3)
    a = sample_chain(noise, code, trial_rng(123, 9))
    b = sample_chain(noise, code, trial_rng(123, 9))
    c = sample_chain(noise, code, trial_rng(123, 10))
    assert a == b
    assert a != c


def test_history_final_round_is_perfect():
    code = CodeParams(3, 6)
    noise = NoiseParams(0.1, 3)
    history = sample_history(noise, code, 5, trial_rng(3, 0))
    assert history.measured[-1] == syndrome_of(history.total_error(), code)
    assert len(history.measured) == 6
    assert len(history.increments) == 5


def test_persistent_syndrome_without_measurement_noise():
    # A single data error at round 2 shows up in every later measurement.
    code = CodeParams(3, 6)
    eid = edge_index(code, 2, 3, HORIZONTAL)
    increments = [{}, {eid: 1}, {}, {}]
    history = MeasurementHistory(code=code, rounds=4)
    accumulated = {}
    from hdrg.toric import compose

    for inc in increments:
        accumulated = compose(accumulated, inc, code)
        history.increments.append(inc)
        history.measured.append(syndrome_of(accumulated, code))
    history.measured.append(syndrome_of(accumulated, code))
    expected = syndrome_of({eid: 1}, code)
    for t in range(1, 5):
        assert history.measured[t] == expected
    defects = syndrome_changes(history)
    assert len(defects) == 2
    assert all(d.t == 2 for d in defects)
    assert {(d.x, d.y) for d in defects} == set(expected)


def test_single_measurement_error_defect_pair():
    code = CodeParams(5, 4)
    history = MeasurementHistory(code=code, rounds=3)
    history.increments = [{}, {}, {}]
    history.measured = [{}, {(1, 2): 2}, {}, {}]
    defects = syndrome_changes(history)
    assert defects == [(1, 2, 2, 2), (1, 2, 3, 3)]


def test_syndrome_changes_charge_conservation():
    code = CodeParams(4, 5)
    noise = NoiseParams(0.1, 4)
    for t in range(1000):
        history = sample_history(noise, code, 3, trial_rng(31, t))
        defects = syndrome_changes(history)
        assert sum(g for _, _, _, g in defects) % 4 == 0


def test_cantor_length_sequences():
    lengths, gaps = cantor_gaps(3, 2, "plain_ed_abcb")
    assert lengths == [2, 5, 14, 41]
    assert lengths[3] == (3**4 + 1) // 2
    lengths_bh, _ = cantor_gaps(2, 2, "plain_bh")
    assert lengths_bh == [2, 5, 14]
    # Shortcut regime follows l_{n+1} = 2 l_n + 2^n l0 - 1, matching the
    # closed form (n+1) 2^n + 1 for every level.
    lengths_sc, gaps_sc = cantor_gaps(3, 2, "shortcut")
    assert lengths_sc == [2, 5, 13, 33]
    assert gaps_sc == [1, 3, 7]
    assert all(lengths_sc[n] == (n + 1) * 2**n + 1 for n in range(1, 4))
    lengths_scbh, gaps_scbh = cantor_gaps(2, 2, "shortcut_bh")
    assert gaps_scbh == [1, 2]
    assert lengths_scbh == [2, 5, 12]


def test_cantor_bundle_counts():
    code = CodeParams(3, 81)
    for level, regime in ((0, "shortcut"), (2, "plain_ed_abcb"), (3, "shortcut")):
        chain = cantor_bundle(level, 2, regime, code)
        assert len(chain) == 2 * 2**level
        defects = defects_of(syndrome_of(chain, code))
        assert len(defects) == 2 ** (level + 1)


def test_cantor_level_zero():
    code = CodeParams(3, 9)
    chain = cantor_bundle(0, 2, "shortcut", code)
    defects = defects_of(syndrome_of(chain, code))
    assert len(chain) == 2
    assert len(defects) == 2
    (qa, _), (qb, _) = defects
    assert abs(qa[0] - qb[0]) == 2


def test_cantor_rejects_oversized_bundle():
    code = CodeParams(3, 12)
    with pytest.raises(ValueError):
        cantor_bundle(2, 2, "plain_ed_abcb", code)  # l_2 = 14 > 12

"""Error sampling: i.i.d. qudit noise, faulty measurement histories and
deterministic Cantor-like adversarial bundles.

Sampling decisions are made by comparing 53-bit integers drawn from a
PCG64 stream against integer thresholds, so identical seeds reproduce
identical samples on any platform.  Per-trial substreams are derived from
(seed, trial index), making batches order-independent under parallel
execution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .toric import (
    CodeParams,
    ErrorChain,
    Syndrome,
    VERTICAL,
    compose,
    edge_index,
    syndrome_of,
)

_BITS = 53
_SCALE = 1 << _BITS

UNIFORM = "uniform"
PHI_LAMBDA = "phi_lambda"

CANTOR_REGIMES = ("plain_ed_abcb", "plain_bh", "shortcut", "shortcut_bh")


@dataclass(frozen=True)
class NoiseParams:
    """Per-qudit, per-round error rate and charge distribution."""

    p: float
    d: int
    charge_distribution: str = UNIFORM

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"error rate must be in [0, 1), got {self.p}")
        if self.charge_distribution not in (UNIFORM, PHI_LAMBDA):
            raise ValueError(f"unknown charge distribution {self.charge_distribution!r}")
        if self.charge_distribution == PHI_LAMBDA and self.d != 6:
            raise ValueError("phi_lambda noise requires d=6")


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent substream for one trial of a seeded batch."""
    return np.random.default_rng(np.random.SeedSequence((seed, trial)))


def require_decodable(noise: NoiseParams) -> None:
    """Decoders need p < (d-1)/d so that the log-likelihood cost is positive."""
    if noise.p >= (noise.d - 1) / noise.d:
        raise ValueError(
            f"error rate {noise.p} is not below (d-1)/d = {(noise.d - 1) / noise.d}"
        )


def _draw_charges(noise: NoiseParams, count: int, rng: np.random.Generator) -> np.ndarray:
    """Charges of `count` errored qudits, conditioned on an error occurring."""
    if noise.charge_distribution == UNIFORM:
        return rng.integers(1, noise.d, size=count, dtype=np.int64)
    # phi_lambda: charge 3 with conditional probability 1/2, each of
    # 1, 2, 4, 5 with conditional probability 1/8.
    v = rng.integers(0, _SCALE, size=count, dtype=np.int64)
    half = _SCALE >> 1
    quarter = half >> 2
    charges = np.full(count, 3, dtype=np.int64)
    phi = v >= half
    bucket = (v[phi] - half) // quarter
    charges[phi] = np.asarray([1, 2, 4, 5], dtype=np.int64)[bucket]
    return charges


def sample_chain(noise: NoiseParams, code: CodeParams, rng: np.random.Generator) -> ErrorChain:
    """Independent error on each of the 2L^2 edges with probability p."""
    require_decodable(noise)
    threshold = round(noise.p * _SCALE)
    u = rng.integers(0, _SCALE, size=code.n_edges, dtype=np.int64)
    edges = np.flatnonzero(u < threshold)
    if edges.size == 0:
        return {}
    charges = _draw_charges(noise, edges.size, rng)
    return {int(e): int(g) for e, g in zip(edges, charges)}


def _measured_syndrome(
    true_syndrome: Syndrome, noise: NoiseParams, code: CodeParams, rng: np.random.Generator
) -> Syndrome:
    """True syndrome with each plaquette flipped by a uniform nontrivial
    offset with probability p."""
    d, L = noise.d, code.L
    threshold = round(noise.p * _SCALE)
    u = rng.integers(0, _SCALE, size=L * L, dtype=np.int64)
    sites = np.flatnonzero(u < threshold)
    measured = dict(true_syndrome)
    if sites.size:
        offsets = rng.integers(1, d, size=sites.size, dtype=np.int64)
        for site, off in zip(sites, offsets):
            q = (int(site) // L, int(site) % L)
            total = (measured.get(q, 0) + int(off)) % d
            if total:
                measured[q] = total
            else:
                measured.pop(q, None)
    return measured


@dataclass
class MeasurementHistory:
    """T rounds of noisy syndrome extraction plus one final perfect round.

    measured[t-1] is the syndrome reported at round t (t = 1..T);
    measured[T] is the perfect final measurement.
    """

    code: CodeParams
    rounds: int
    increments: list[ErrorChain] = field(default_factory=list)
    measured: list[Syndrome] = field(default_factory=list)

    def total_error(self) -> ErrorChain:
        total: ErrorChain = {}
        for inc in self.increments:
            total = compose(total, inc, self.code)
        return total


class Defect3D(NamedTuple):
    x: int
    y: int
    t: int
    g: int


def sample_history(
    noise: NoiseParams, code: CodeParams, rounds: int, rng: np.random.Generator
) -> MeasurementHistory:
    """Accumulate fresh data errors each round and report noisy syndromes."""
    if rounds < 1:
        raise ValueError("need at least one measurement round")
    require_decodable(noise)
    history = MeasurementHistory(code=code, rounds=rounds)
    accumulated: ErrorChain = {}
    for _ in range(rounds):
        increment = sample_chain(noise, code, rng)
        accumulated = compose(accumulated, increment, code)
        history.increments.append(increment)
        history.measured.append(
            _measured_syndrome(syndrome_of(accumulated, code), noise, code, rng)
        )
    history.measured.append(syndrome_of(accumulated, code))
    return history


def syndrome_changes(history: MeasurementHistory) -> list[Defect3D]:
    """Defects of the 3D decoding problem: nonzero differences between
    consecutive measured syndromes (round 0 is the all-trivial reference)."""
    d = history.code.d
    defects: list[Defect3D] = []
    previous: Syndrome = {}
    for t, current in enumerate(history.measured, start=1):
        for q in sorted(set(previous) | set(current)):
            delta = (current.get(q, 0) - previous.get(q, 0)) % d
            if delta:
                defects.append(Defect3D(q[0], q[1], t, delta))
        previous = current
    return defects


def cantor_gaps(level: int, l0: int, regime: str) -> tuple[list[int], list[int]]:
    """Segment lengths l_n and gaps g_n for a level-`level` bundle.

    The recurrence is l_{n+1} = 2*l_n + g_n with regime-specific gaps:
    plain_ed_abcb uses g_n = l_n - 1, plain_bh uses
    g_n = 2**(ceil(log2 l_n) - 1), the shortcut regime uses g_n = w_n - 1
    with bundle width w_n = 2**n * l0, and shortcut_bh uses
    g_n = 2**(ceil(log2 w_n) - 1), the widest gaps that still land below
    the doubling search scale once shortcuts collapse each sub-bundle to
    its width.
    """
    if regime not in CANTOR_REGIMES:
        raise ValueError(f"unknown cantor regime {regime!r}")
    if level < 0 or l0 < 2:
        raise ValueError("need level >= 0 and l0 >= 2")
    lengths = [l0]
    gaps: list[int] = []
    for n in range(level):
        ln = lengths[-1]
        if regime == "plain_ed_abcb":
            gap = ln - 1
        elif regime == "plain_bh":
            gap = 1 << (math.ceil(math.log2(ln)) - 1)
        elif regime == "shortcut":
            gap = (1 << n) * l0 - 1
        else:
            gap = 1 << (math.ceil(math.log2((1 << n) * l0)) - 1)
        gaps.append(gap)
        lengths.append(2 * ln + gap)
    return lengths, gaps


def cantor_bundle(level: int, l0: int, regime: str, code: CodeParams) -> ErrorChain:
    """Colinear nested error bundle along the x axis at y = L//2.

    Contains l0 * 2**level errors of charge 1 creating 2**(level+1)
    defects; designed so that scale-doubling decoders annihilate the inner
    pairs of every sub-bundle first.
    """
    lengths, gaps = cantor_gaps(level, l0, regime)
    if lengths[-1] > code.L:
        raise ValueError(
            f"level-{level} bundle of extent {lengths[-1]} does not fit on L={code.L}"
        )
    y = code.L // 2
    offsets = [0]
    for n in range(level):
        offsets = offsets + [off + lengths[n] + gaps[n] for off in offsets]
    items: list[tuple[int, int]] = []
    for off in sorted(offsets):
        for i in range(1, l0 + 1):
            items.append((edge_index(code, off + i, y, VERTICAL), 1))
    chain: ErrorChain = {}
    for edge, g in items:
        chain[edge] = g
    return chain

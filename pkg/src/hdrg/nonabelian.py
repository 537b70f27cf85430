"""Fibonacci-like anyon decoding simulated through the D(Z_6) model.

The Phi-Lambda model has fusion rules L x L = 1, L x P = P,
P x P = 1 + L + P.  With perfect measurements it is simulated by D(Z_6):
charge 3 plays Lambda, charges 1, 2, 4, 5 play Phi.  The decoder must not
see the underlying Z_6 charge of a Phi, only its fusion category; hidden
charges live inside `PhiLambdaCharges` and are consulted solely when a
fusion is physically performed (and by the final homology check).

Decoding is two-staged.  Stage 1 runs the matching decoder over the Phi
defects alone (Lambda defects are invisible to it); each matched pair
fuses, vacuum outcomes are annihilated and become wormholes, Phi outcomes
keep going as merged clusters, and Lambda outcomes are swept to a point
and queued.  Stage 2 perfect-matches all Lambda particles, ignoring their
fusion history.
"""

from __future__ import annotations

import enum

from .clustering import defects_of
from .matching import mwpm
from .mwm_decoder import DecoderConfig, MwmDecoder, beta, log_multiplicity
from .noise import PHI_LAMBDA, NoiseParams, sample_chain
from .toric import (
    CodeParams,
    ErrorChain,
    compose,
    logical_class,
    syndrome_of,
    torus_displacement,
    transport_chain,
)

LAMBDA_CHARGE = 3


class Category(enum.Enum):
    VACUUM = "vacuum"
    LAMBDA = "lambda"
    PHI = "phi"


def categorize(g: int) -> Category:
    """Fusion category of a Z_6 charge: 0 vacuum, 3 Lambda, rest Phi."""
    g %= 6
    if g == 0:
        return Category.VACUUM
    if g == LAMBDA_CHARGE:
        return Category.LAMBDA
    return Category.PHI


class PhiLambdaCharges:
    """Hidden Z_6 charges behind a category-only interface.

    The decoding engine calls `fuse` (the irreversible act of bringing two
    clusters together) and acts on the returned instruction; it never
    reads a charge.  Transport exponents for recovery chains are supplied
    per defect, mirroring the physical moves the fusion performs.
    """

    def __init__(self, defect_charges: list[int]):
        self.d = 6
        self._defect_charges = [g % 6 for g in defect_charges]
        self._hidden: dict[int, int] = {}
        self.fusion_log: list[tuple[int, int, Category]] = []

    def init_cluster(self, uid: int, defect: int) -> None:
        self._hidden[uid] = self._defect_charges[defect]

    def fuse(self, uid_a: int, uid_b: int, child: int) -> str:
        total = (self._hidden[uid_a] + self._hidden[uid_b]) % 6
        self._hidden[child] = total
        category = categorize(total)
        self.fusion_log.append((uid_a, uid_b, category))
        if category is Category.VACUUM:
            return "remove"
        if category is Category.LAMBDA:
            return "retire"
        return "continue"

    def category(self, uid: int) -> Category:
        return categorize(self._hidden[uid])

    def defect_charge(self, defect: int) -> int:
        return self._defect_charges[defect]


def fuse(charges: PhiLambdaCharges, uid_a: int, uid_b: int, child: int) -> Category:
    """Fuse two clusters and observe only the outcome category."""
    charges.fuse(uid_a, uid_b, child)
    return charges.category(child)


def sample_phi_lambda(p: float, code: CodeParams, rng) -> ErrorChain:
    """Noise with p_3 = p/2 and p_1 = p_2 = p_4 = p_5 = p/8 per edge."""
    if code.d != 6:
        raise ValueError("the Phi-Lambda model is simulated with d=6")
    return sample_chain(NoiseParams(p, 6, PHI_LAMBDA), code, rng)


def _stage2_pairing(
    lambdas: list[tuple[int, int]],
    code: CodeParams,
    p: float,
    include_dm1: bool = False,
) -> list[tuple[int, int]]:
    """Perfect matching of Lambda locations with string-likelihood weights.

    Lambda strings come in a single charge type, so the (d-1) multiplicity
    factor is dropped by default.
    """
    n = len(lambdas)
    if n % 2:
        raise RuntimeError("odd Lambda count: hidden charge conservation broken")
    if n == 0:
        return []
    b = beta(p, 6)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            disp = torus_displacement(lambdas[i], lambdas[j], code)
            w = disp.d1 - log_multiplicity(
                disp.dx, disp.dy, d=6, include_dm1=include_dm1
            ) / b
            edges.append((i, j, w))
    return mwpm(n, edges)


def decode_phi_lambda(
    error: ErrorChain,
    code: CodeParams,
    noise: NoiseParams,
    cfg: DecoderConfig | None = None,
) -> tuple[ErrorChain, bool, int]:
    """Two-stage decoding of a Z_6-simulated Phi-Lambda syndrome.

    Returns (recovery, success, stage-1 iterations); success means the
    combined chain has trivial Z_6 homology.  Perfect measurements only.
    """
    if code.d != 6:
        raise ValueError("the Phi-Lambda model is simulated with d=6")
    cfg = cfg or DecoderConfig()
    syndrome = syndrome_of(error, code)
    defects = defects_of(syndrome)

    phi_defects = [(q, g) for q, g in defects if categorize(g) is Category.PHI]
    frozen_lambdas = [q for q, g in defects if categorize(g) is Category.LAMBDA]

    recovery: ErrorChain = {}
    iterations = 0
    retired: list[tuple[int, int]] = []
    if phi_defects:
        charges = PhiLambdaCharges([g for _, g in phi_defects])
        decoder = MwmDecoder(phi_defects, code, noise, cfg, charges=charges)
        result = decoder.run()
        recovery = result.recovery
        iterations = result.iterations
        for pos, residual in result.retired:
            if residual != LAMBDA_CHARGE:
                raise RuntimeError("retired cluster is not a Lambda")
            retired.append((pos[0], pos[1]))

    lambdas = frozen_lambdas + retired
    for i, j in _stage2_pairing(lambdas, code, noise.p):
        recovery = compose(
            recovery, transport_chain(lambdas[i], lambdas[j], LAMBDA_CHARGE, code), code
        )

    combined = compose(recovery, error, code)
    if syndrome_of(combined, code):
        raise RuntimeError("recovery failed to clear the syndrome")
    success = logical_class(combined, code) == (0, 0)
    return recovery, success, iterations


def negate_charges(chain: ErrorChain, code: CodeParams) -> ErrorChain:
    """The Z_6 automorphism 1<->5, 2<->4 (charge negation); it fixes fusion
    categories, so decoder decisions must be invariant under it."""
    return {e: (code.d - g) % code.d for e, g in chain.items()}

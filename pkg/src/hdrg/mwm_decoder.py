"""Minimum-weight-matching HDRG decoder.

Each iteration assigns every pair of active clusters a pairing weight

    W_jk = d_jk - log(mu_jk) / beta

where d_jk is the current (shortcut-adjusted) Manhattan distance and
mu_jk counts minimum-length error strings compatible with the pairing,
and every cluster a vertex weight interpolating between an abstaining
weight (half its cheapest pairing) and a tag-along weight (its
nearest-neighbour distance corrected by the summed multiplicity of all
nearest neighbours).  A minimum-weight matching with abstention is then
solved per sparsified component; matched pairs fuse.  Neutral fusion
products are annihilated and become wormholes through which all other
distances may take shortcuts; non-neutral products continue as merged
clusters (and provide shortcuts too).

Distances are kept as exact integers so nearest-neighbour sets and the
equal-distance multiplicity accumulation rule never depend on float
rounding.  Works for 2D syndromes and for 3D syndrome-change defects;
in 3D the recovery is the spatial projection of the annihilation sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .clustering import DefectList, sweep_recovery
from .matching import MatchGraph, mwm, sparsified_components
from .noise import NoiseParams
from .toric import CodeParams, ErrorChain, compose

MULT_INTERIOR = "interior"
MULT_LEGS = "legs"

_ACTIVE = 0
_PASSIVE = 1
_DEAD = 2


@dataclass(frozen=True)
class DecoderConfig:
    lam: float = 0.3
    epsilon: float = 1e-6
    include_dm1_factor: bool = True
    dims: int = 2
    use_shortcuts: bool = True
    # Multiplicity composition for shortcut routes.  "interior" scores a
    # shortcut by the multiplicity of the hop through the wormhole itself
    # (reproduces the worked four-anyon example); "legs" multiplies the
    # multiplicities of the two connecting legs (the update equation as
    # displayed).  See the decisions ledger for why both exist.
    wormhole_mult: str = MULT_INTERIOR

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.dims not in (2, 3):
            raise ValueError("dims must be 2 or 3")
        if self.wormhole_mult not in (MULT_INTERIOR, MULT_LEGS):
            raise ValueError(f"unknown wormhole_mult {self.wormhole_mult!r}")


def beta(p: float, d: int) -> float:
    """Log-likelihood cost per error: -log((p/(d-1)) / (1-p))."""
    if not 0.0 < p < (d - 1) / d:
        raise ValueError(f"need 0 < p < (d-1)/d for a positive beta, got p={p}")
    return -math.log((p / (d - 1)) / (1.0 - p))


def _log_binom(n, k):
    n = np.asarray(n, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def log_multiplicity(
    dx: int, dy: int, dt: int | None = None, *, d: int, include_dm1: bool = True
) -> float:
    """Log of the number of minimum-length error strings for a separation.

    2D: (d-1) * C(dx+dy, dx); 3D: (d-1) * C(dx+dy+dt, dt) * C(dx+dy, dx).
    Computed via log-gamma, so huge d (e.g. 7919) cannot overflow.
    """
    total = float(_log_binom(dx + dy, dx))
    if dt is not None:
        total += float(_log_binom(dx + dy + dt, dt))
    if include_dm1:
        total += math.log(d - 1)
    return total


@dataclass
class ClusterRec:
    uid: int
    slot: int
    members: list[int]
    tree: list[tuple[int, int, list[int]]] = field(default_factory=list)
    status: int = _ACTIVE


class AbelianCharges:
    """Charge bookkeeping for the D(Z_d) model: plain sums mod d."""

    def __init__(self, d: int, defect_charges: list[int]):
        self.d = d
        self._defect_charges = [g % d for g in defect_charges]
        self._value: dict[int, int] = {}

    def init_cluster(self, uid: int, defect: int) -> None:
        self._value[uid] = self._defect_charges[defect]

    def fuse(self, uid_a: int, uid_b: int, child: int) -> str:
        total = (self._value[uid_a] + self._value[uid_b]) % self.d
        self._value[child] = total
        return "remove" if total == 0 else "continue"

    def defect_charge(self, defect: int) -> int:
        return self._defect_charges[defect]

    def charge(self, uid: int) -> int:
        return self._value[uid]


class PairState:
    """Distance, multiplicity and meeting-point tables over clusters.

    Slots index a fixed set of matrix rows (one per initial defect);
    merged clusters reuse the lower slot of their parents and wormholes
    stay behind as passive slots so later relaxations can route through
    them.  `via` freezes, per strictly-improved pair, the wormhole and the
    four anchor positions realizing the improvement, which is enough to
    replay the believed route when a pair is finally annihilated.
    """

    def __init__(
        self,
        defects: DefectList,
        code: CodeParams,
        noise: NoiseParams,
        cfg: DecoderConfig,
        charges=None,
    ):
        self.code = code
        self.cfg = cfg
        m = len(defects)
        # An empty syndrome never consults the weights, so a vanishing
        # error rate is fine there.
        self.beta = beta(noise.p, code.d) if m else float("inf")
        self.m = m
        dims = cfg.dims
        if m:
            self.positions = np.asarray([p for p, _ in defects], dtype=np.int64)
            if self.positions.shape[1] != dims:
                raise ValueError("defect dimensionality does not match config")
        else:
            self.positions = np.zeros((0, dims), dtype=np.int64)
        self.charges = charges or AbelianCharges(code.d, [g for _, g in defects])

        axes = self._axis_separation(self.positions, self.positions)
        self.D = axes.sum(axis=2, dtype=np.int32)
        self.AX = axes.astype(np.int32)  # per-axis components of the paid legs
        # Binomial arguments never exceed the largest initial separation
        # (interior hops run between defect positions).
        max_n = int(self.D.max()) + 1 if m else 1
        self._logfact = gammaln(np.arange(max_n + 1, dtype=np.float64) + 1.0)
        self.LOGMU = self._initial_logmu(axes)
        ids = np.arange(m, dtype=np.int32)
        self.MEET_A = np.broadcast_to(ids[:, None], (m, m)).copy()
        self.MEET_B = np.broadcast_to(ids[None, :], (m, m)).copy()
        np.fill_diagonal(self.D, 0)

        # Slots 0..n_live-1 are the live (active or passive) rows of every
        # table; a dying slot is filled by the last live one, keeping all
        # per-event work on a contiguous prefix.
        self.n_live = m
        self.status = np.full(m, _ACTIVE, dtype=np.int8)
        self.clusters: dict[int, ClusterRec] = {}
        self.slot_uid = list(range(m))
        self._next_uid = m
        for i in range(m):
            self.clusters[i] = ClusterRec(uid=i, slot=i, members=[i])
            self.charges.init_cluster(i, i)
        self.via: dict[tuple[int, int], tuple[int, int, int, int, int]] = {}

    # -- geometry -----------------------------------------------------

    def _axis_separation(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        L = self.code.L
        diff = np.abs(a[:, None, :] - b[None, :, :])
        out = np.minimum(diff, L - diff)
        if a.shape[1] > 2:
            out[:, :, 2:] = diff[:, :, 2:]
        return out

    def _binom_table(self, n: np.ndarray, k: np.ndarray) -> np.ndarray:
        lf = self._logfact
        return lf[n] - lf[k] - lf[n - k]

    def _initial_logmu(self, axes: np.ndarray) -> np.ndarray:
        d1 = axes.sum(axis=2)
        logmu = self._binom_table(axes[:, :, 0] + axes[:, :, 1], axes[:, :, 0])
        if axes.shape[2] > 2:
            logmu += self._binom_table(d1, axes[:, :, 2])
        if self.cfg.include_dm1_factor:
            logmu += math.log(self.code.d - 1)
        return logmu

    def _interior_logmu(self, pos_in: np.ndarray, pos_out: np.ndarray) -> np.ndarray:
        """Multiplicity of the hop between wormhole entry and exit points."""
        L = self.code.L
        diff = np.abs(pos_in - pos_out)
        axes = np.minimum(diff, L - diff)
        if diff.shape[-1] > 2:
            axes[..., 2:] = diff[..., 2:]
        logmu = self._binom_table(axes[..., 0] + axes[..., 1], axes[..., 0])
        if diff.shape[-1] > 2:
            logmu += self._binom_table(axes.sum(axis=-1), axes[..., 2])
        if self.cfg.include_dm1_factor:
            logmu += math.log(self.code.d - 1)
        return logmu

    # -- queries ------------------------------------------------------

    def active_slots(self) -> np.ndarray:
        return np.flatnonzero(self.status[: self.n_live] == _ACTIVE)

    def live_slots(self) -> np.ndarray:
        return np.arange(self.n_live)

    def uid_of_slot(self, slot: int) -> int:
        return self.slot_uid[slot]

    def slot_of_uid(self, uid: int) -> int:
        rec = self.clusters[uid]
        if rec.status == _DEAD:
            raise KeyError(f"cluster {uid} is no longer live")
        return rec.slot

    def distance(self, slot_a: int, slot_b: int) -> int:
        return int(self.D[slot_a, slot_b])

    def log_mu(self, slot_a: int, slot_b: int) -> float:
        return float(self.LOGMU[slot_a, slot_b])

    # -- merge and shortcut updates ------------------------------------

    def fuse_pair(self, slot_a: int, slot_b: int) -> tuple[int, str]:
        """Fuse the matched clusters at slot_a, slot_b.

        Folds the pair's rows into slot_a by the merge rule (distance is
        the min, multiplicity follows the winner and accumulates on ties),
        records the connecting tree edge with its believed route, consults
        the charge system, and applies shortcut relaxation through the
        fusion product.  Returns (child uid, action).
        """
        if slot_b < slot_a:
            slot_a, slot_b = slot_b, slot_a
        uid_a = self.slot_uid[slot_a]
        uid_b = self.slot_uid[slot_b]
        rec_a = self.clusters[uid_a]
        rec_b = self.clusters[uid_b]

        anchor_a = int(self.MEET_A[slot_a, slot_b])
        anchor_b = int(self.MEET_B[slot_a, slot_b])
        waypoints = self.pair_route(uid_a, uid_b)
        if waypoints[0] != anchor_a:
            waypoints = [anchor_a] + waypoints
        if waypoints[-1] != anchor_b:
            waypoints = waypoints + [anchor_b]

        child_uid = self._next_uid
        self._next_uid += 1
        child = ClusterRec(
            uid=child_uid,
            slot=slot_a,
            members=rec_a.members + rec_b.members,
            tree=rec_a.tree + rec_b.tree + [(anchor_a, anchor_b, waypoints)],
        )
        action = self.charges.fuse(uid_a, uid_b, child_uid)

        self._fold_rows(slot_a, slot_b)
        self.slot_uid[slot_a] = child_uid
        rec_a.status = rec_b.status = _DEAD
        self.clusters[child_uid] = child
        if action == "remove":
            child.status = _PASSIVE
            self.status[slot_a] = _PASSIVE
        elif action == "retire":
            child.status = _DEAD
        else:
            child.status = _ACTIVE
            self.status[slot_a] = _ACTIVE
        self._kill_slot(slot_b)
        if action == "retire":
            self._kill_slot(child.slot)

        if self.cfg.use_shortcuts and action in ("remove", "continue"):
            self._relax_via(child.slot, accumulate_equal=True)
        return child_uid, action

    def _kill_slot(self, s: int) -> None:
        """Retire slot s by moving the last live slot into its place."""
        n = self.n_live - 1
        if s != n:
            for table in (self.D, self.LOGMU, self.AX, self.MEET_A, self.MEET_B):
                table[s, :n] = table[n, :n]
                table[:n, s] = table[:n, n]
                table[s, s] = table[n, n]
            self.status[s] = self.status[n]
            moved_uid = self.slot_uid[n]
            self.slot_uid[s] = moved_uid
            if self.clusters[moved_uid].status != _DEAD:
                self.clusters[moved_uid].slot = s
        self.n_live = n

    def _fold_rows(self, sa: int, sb: int) -> None:
        """Merge rule: d_(ab)l = min(d_al, d_bl); mu follows the winner and
        is accumulated when the distances tie (components and meeting
        points stay with slot_a on ties)."""
        n = self.n_live
        Da = self.D[sa, :n]
        Db = self.D[sb, :n]
        b_wins = Db < Da
        tie = Db == Da
        newD = np.where(b_wins, Db, Da)
        newMU = np.where(b_wins, self.LOGMU[sb, :n], self.LOGMU[sa, :n])
        if tie.any():
            acc = np.logaddexp(self.LOGMU[sa, :n], self.LOGMU[sb, :n])
            newMU = np.where(tie, acc, newMU)
        newAX = np.where(b_wins[:, None], self.AX[sb, :n], self.AX[sa, :n])
        newMA = np.where(b_wins, self.MEET_A[sb, :n], self.MEET_A[sa, :n])
        newMB = np.where(b_wins, self.MEET_B[sb, :n], self.MEET_B[sa, :n])

        self.D[sa, :n] = newD
        self.D[:n, sa] = newD
        self.LOGMU[sa, :n] = newMU
        self.LOGMU[:n, sa] = newMU
        self.AX[sa, :n] = newAX
        self.AX[:n, sa] = newAX
        self.MEET_A[sa, :n] = newMA
        self.MEET_B[:n, sa] = newMA
        self.MEET_B[sa, :n] = newMB
        self.MEET_A[:n, sa] = newMB
        self.D[sa, sa] = 0
        self.LOGMU[sa, sa] = 0.0

    def _relax_via(self, c: int, accumulate_equal: bool) -> None:
        """Relax pair distances through the cluster at slot c.

        A single pass is exact: the table is a shortest-path metric over
        the earlier cliques, and no shortest path gains from entering the
        same clique twice (the two visits collapse to one free hop), so
        every improvement routes through c exactly once.
        """
        n = self.n_live
        if n < 3:
            return
        Dv = self.D[:n, :n]
        colD = np.ascontiguousarray(Dv[:, c])
        cand = colD[:, None] + colD[None, :]
        mask = cand <= Dv if accumulate_equal else cand < Dv
        rows, cols = np.nonzero(mask)
        keep = (rows < cols) & (rows != c) & (cols != c)
        rows, cols = rows[keep], cols[keep]
        if rows.size:
            # Passive-passive entries are never read again (folds read the
            # rows of active parents, weights read active pairs), so only
            # pairs with an active endpoint are refreshed.
            act = self.status[:n] == _ACTIVE
            keep = act[rows] | act[cols]
            rows, cols = rows[keep], cols[keep]
        if rows.size == 0:
            return
        vals = cand[rows, cols] - Dv[rows, cols]

        def cand_logmu(r, cc):
            if self.cfg.wormhole_mult == MULT_LEGS:
                return self.LOGMU[r, c] + self.LOGMU[cc, c]
            p_in = self.positions[self.MEET_B[r, c]]
            p_out = self.positions[self.MEET_B[cc, c]]
            return self._interior_logmu(p_in, p_out)

        eq = vals == 0
        if eq.any():
            er, ec = rows[eq], cols[eq]
            acc = np.logaddexp(self.LOGMU[er, ec], cand_logmu(er, ec))
            self.LOGMU[er, ec] = acc
            self.LOGMU[ec, er] = acc

        imp = vals < 0
        if not imp.any():
            return
        rows, cols = rows[imp], cols[imp]
        newD = colD[rows] + colD[cols]
        newMU = cand_logmu(rows, cols)
        newAX = self.AX[rows, c] + self.AX[cols, c]
        anchor_a = self.MEET_A[rows, c]
        anchor_b = self.MEET_A[cols, c]
        entry_a = self.MEET_B[rows, c]
        entry_b = self.MEET_B[cols, c]
        self.D[rows, cols] = newD
        self.D[cols, rows] = newD
        self.LOGMU[rows, cols] = newMU
        self.LOGMU[cols, rows] = newMU
        self.AX[rows, cols] = newAX
        self.AX[cols, rows] = newAX
        self.MEET_A[rows, cols] = anchor_a
        self.MEET_B[rows, cols] = anchor_b
        self.MEET_A[cols, rows] = anchor_b
        self.MEET_B[cols, rows] = anchor_a
        c_uid = self.slot_uid[c]
        for a, b, ea, eb, m_in, m_out in zip(
            rows.tolist(),
            cols.tolist(),
            anchor_a.tolist(),
            anchor_b.tolist(),
            entry_a.tolist(),
            entry_b.tolist(),
        ):
            ua, ub = self.slot_uid[a], self.slot_uid[b]
            if ua < ub:
                self.via[(ua, ub)] = (c_uid, int(ea), int(m_in), int(m_out), int(eb))
            else:
                self.via[(ub, ua)] = (c_uid, int(eb), int(m_out), int(m_in), int(ea))

    # -- route reconstruction ------------------------------------------

    def pair_route(self, uid_a: int, uid_b: int) -> list[int]:
        """Waypoint positions of the believed route between two clusters."""
        return self._route(uid_a, uid_b, set(), 0)

    def _route(self, ua: int, ub: int, visiting: set, depth: int) -> list[int]:
        key = (ua, ub) if ua < ub else (ub, ua)
        ent = self.via.get(key)
        if ent is None or key in visiting or depth > 64:
            return self._direct_leg(ua, ub)
        visiting.add(key)
        c_uid, ea, m_in, m_out, eb = ent
        if ua > ub:
            ea, eb = eb, ea
            m_in, m_out = m_out, m_in
        left = self._route(ua, c_uid, visiting, depth + 1)
        right = self._route(c_uid, ub, visiting, depth + 1)
        visiting.discard(key)
        if left[-1] != m_in:
            left = left + [m_in]
        if right[0] != m_out:
            right = [m_out] + right
        return left + right

    def _direct_leg(self, ua: int, ub: int) -> list[int]:
        rec_a = self.clusters[ua]
        rec_b = self.clusters[ub]
        if (
            rec_a.status != _DEAD
            and rec_b.status != _DEAD
            and (rec_a.status == _ACTIVE or rec_b.status == _ACTIVE)
        ):
            sa, sb = rec_a.slot, rec_b.slot
            return [int(self.MEET_A[sa, sb]), int(self.MEET_B[sa, sb])]
        best = None
        for i in rec_a.members:
            for j in rec_b.members:
                d1 = int(
                    self._axis_separation(
                        self.positions[i : i + 1], self.positions[j : j + 1]
                    ).sum()
                )
                if best is None or d1 < best[0]:
                    best = (d1, i, j)
        return [best[1], best[2]]


# -- weight system ------------------------------------------------------


def _weight_tables(state: PairState, act: np.ndarray):
    """Vectorized pairing and vertex weights over the active clusters."""
    cfg = state.cfg
    b = state.beta
    subD = state.D[np.ix_(act, act)].astype(np.float64)
    subMU = state.LOGMU[np.ix_(act, act)]
    W = subD - subMU / b
    big = np.inf
    np.fill_diagonal(W, big)
    np.fill_diagonal(subD, big)

    dmin = subD.min(axis=1)
    nn_mask = subD == dmin[:, None]
    masked = np.where(nn_mask, subMU, -np.inf)
    log_mu_j = _logsumexp_rows(masked)
    WT = dmin - log_mu_j / b

    Wmin = W.min(axis=1)
    eps = cfg.epsilon * (1.0 + np.abs(Wmin))
    WA = 0.5 * Wmin + eps
    Wv = WA + cfg.lam * (WT - WA)
    Wv = np.where(WT < WA, WA, Wv)
    return W, Wv, subD, dmin, WT, WA


def _logsumexp_rows(a: np.ndarray) -> np.ndarray:
    peak = a.max(axis=1)
    safe = np.where(np.isfinite(peak), peak, 0.0)
    out = safe + np.log(np.exp(a - safe[:, None]).sum(axis=1))
    return np.where(np.isfinite(peak), out, -np.inf)


def pairing_weight(state: PairState, slot_a: int, slot_b: int) -> float:
    """W_jk = d_jk - log(mu_jk) / beta for the current state."""
    return float(state.D[slot_a, slot_b] - state.LOGMU[slot_a, slot_b] / state.beta)


def tagalong_weight(state: PairState, slot: int) -> float:
    """W^T_j = d_j - log(sum of nearest-neighbour multiplicities) / beta."""
    act = state.active_slots()
    if act.size < 2:
        raise ValueError("tag-along weight needs at least two active clusters")
    _, _, subD, dmin, WT, _ = _weight_tables(state, act)
    idx = int(np.flatnonzero(act == slot)[0])
    return float(WT[idx])


def abstain_weight(state: PairState, slot: int) -> float:
    """W^A_j = min_k W_jk / 2 + epsilon."""
    act = state.active_slots()
    if act.size < 2:
        raise ValueError("abstain weight needs at least two active clusters")
    _, _, _, _, _, WA = _weight_tables(state, act)
    idx = int(np.flatnonzero(act == slot)[0])
    return float(WA[idx])


def vertex_weight(state: PairState, slot: int) -> float:
    """Interpolation W^A + lambda (W^T - W^A), floored at W^A."""
    act = state.active_slots()
    _, Wv, _, _, _, _ = _weight_tables(state, act)
    idx = int(np.flatnonzero(act == slot)[0])
    return float(Wv[idx])


def merge_update(state: PairState, slot_a: int, slot_b: int) -> int:
    """Spec-level merge of a matched non-neutral pair; returns child uid."""
    child, action = state.fuse_pair(slot_a, slot_b)
    if action != "continue":
        raise ValueError("merge_update expects a non-neutral pair")
    return child


def shortcut_pair_update(
    state: PairState, slot_a: int, slot_b: int, via_slot: int, mode: str | None = None
) -> None:
    """Relax one pair through one via cluster (scalar form of the engine's
    vectorized update; `mode` overrides the configured multiplicity rule)."""
    d_cand = state.distance(slot_a, via_slot) + state.distance(via_slot, slot_b)
    current = state.distance(slot_a, slot_b)
    if d_cand > current:
        return
    rule = mode or state.cfg.wormhole_mult
    if rule == MULT_LEGS:
        mu_cand = state.log_mu(slot_a, via_slot) + state.log_mu(via_slot, slot_b)
    else:
        p_in = state.positions[int(state.MEET_B[slot_a, via_slot])]
        p_out = state.positions[int(state.MEET_A[via_slot, slot_b])]
        mu_cand = float(
            state._interior_logmu(
                p_in[None, :].astype(np.int64), p_out[None, :].astype(np.int64)
            )[0]
        )
    if d_cand < current:
        state.D[slot_a, slot_b] = state.D[slot_b, slot_a] = d_cand
        state.LOGMU[slot_a, slot_b] = state.LOGMU[slot_b, slot_a] = mu_cand
        ax = state.AX[slot_a, via_slot] + state.AX[via_slot, slot_b]
        state.AX[slot_a, slot_b] = state.AX[slot_b, slot_a] = ax
        state.MEET_A[slot_a, slot_b] = state.MEET_A[slot_a, via_slot]
        state.MEET_B[slot_a, slot_b] = state.MEET_B[via_slot, slot_b]
        state.MEET_A[slot_b, slot_a] = state.MEET_B[slot_a, slot_b]
        state.MEET_B[slot_b, slot_a] = state.MEET_A[slot_a, slot_b]
    else:
        acc = np.logaddexp(state.LOGMU[slot_a, slot_b], mu_cand)
        state.LOGMU[slot_a, slot_b] = state.LOGMU[slot_b, slot_a] = acc


# -- decoding loop -------------------------------------------------------


@dataclass
class DecodeResult:
    recovery: ErrorChain
    iterations: int
    retired: list[tuple[tuple[int, ...], int]] = field(default_factory=list)


class MwmDecoder:
    """Stepwise driver around PairState (stepping exposed for inspection)."""

    def __init__(
        self,
        defects: DefectList,
        code: CodeParams,
        noise: NoiseParams,
        cfg: DecoderConfig | None = None,
        charges=None,
    ):
        self.cfg = cfg or DecoderConfig()
        self.code = code
        self.state = PairState(defects, code, noise, self.cfg, charges=charges)
        self.recovery: ErrorChain = {}
        self.iterations = 0
        self.retired: list[tuple[tuple[int, ...], int]] = []

    def done(self) -> bool:
        return self.state.active_slots().size == 0

    def run_iteration(self) -> list[tuple[int, int]]:
        """One matching round; returns the matched slot pairs."""
        state = self.state
        act = state.active_slots()
        if act.size == 0:
            return []
        if act.size == 1:
            raise RuntimeError("a single non-neutral cluster cannot remain")
        W, Wv, _, _, _, _ = _weight_tables(state, act)
        pairs: list[tuple[int, int]] = []
        for comp in sparsified_components(W, Wv):
            if comp.size < 2:
                continue
            local_edges = []
            for ai in range(comp.size):
                for bi in range(ai + 1, comp.size):
                    w = W[comp[ai], comp[bi]]
                    if w < Wv[comp[ai]] + Wv[comp[bi]]:
                        local_edges.append((ai, bi, float(w)))
            graph = MatchGraph(
                n=int(comp.size),
                vertex_weights=[float(Wv[i]) for i in comp],
                edges=local_edges,
            )
            result = mwm(graph)
            for ai, bi in result.pairs:
                pairs.append((int(act[comp[ai]]), int(act[comp[bi]])))
        if not pairs:
            raise RuntimeError("matching made no progress with >= 2 active clusters")
        # Fusions compact the slot tables, so resolve pairs by cluster uid.
        pair_uids = sorted(
            tuple(sorted((state.slot_uid[a], state.slot_uid[b]))) for a, b in pairs
        )
        for uid_a, uid_b in pair_uids:
            child_uid, action = state.fuse_pair(
                state.slot_of_uid(uid_a), state.slot_of_uid(uid_b)
            )
            if action in ("remove", "retire"):
                self._annihilate(child_uid, partial=(action == "retire"))
        self.iterations += 1
        return pair_uids

    def _annihilate(self, uid: int, partial: bool) -> None:
        state = self.state
        rec = state.clusters[uid]
        charges = {i: state.charges.defect_charge(i) for i in rec.members}
        if partial:
            root = min(rec.members)
            residual = sum(charges.values()) % self.code.d
            charges[root] = (charges[root] - residual) % self.code.d
            chain = sweep_recovery(state.positions, charges, rec.tree, self.code)
            pos = tuple(int(c) for c in state.positions[root])
            self.retired.append((pos, residual))
        else:
            chain = sweep_recovery(state.positions, charges, rec.tree, self.code)
        self.recovery = compose(self.recovery, chain, self.code)

    def run(self) -> DecodeResult:
        guard = 0
        while not self.done():
            self.run_iteration()
            guard += 1
            if guard > self.state.m + 2:
                raise RuntimeError("decoder exceeded its iteration bound")
        return DecodeResult(self.recovery, self.iterations, self.retired)


def decode(
    defects: DefectList,
    code: CodeParams,
    noise: NoiseParams,
    cfg: DecoderConfig | None = None,
) -> tuple[ErrorChain, int]:
    """Decode a 2D defect set; returns (recovery, iterations)."""
    decoder = MwmDecoder(defects, code, noise, cfg)
    result = decoder.run()
    return result.recovery, result.iterations


def decode_3d(
    defects: list,
    code: CodeParams,
    noise: NoiseParams,
    cfg: DecoderConfig | None = None,
) -> tuple[ErrorChain, int]:
    """Decode 3D syndrome-change defects (x, y, t, g).

    The returned chain is the spatial projection of the annihilation
    sweeps: timelike transport asserts measurement errors and produces no
    data correction.
    """
    base = cfg or DecoderConfig()
    cfg3 = DecoderConfig(
        lam=base.lam,
        epsilon=base.epsilon,
        include_dm1_factor=base.include_dm1_factor,
        dims=3,
        use_shortcuts=base.use_shortcuts,
        wormhole_mult=base.wormhole_mult,
    )
    defect_list: DefectList = [((d.x, d.y, d.t), d.g) for d in defects]
    decoder = MwmDecoder(defect_list, code, noise, cfg3)
    result = decoder.run()
    return result.recovery, result.iterations

"""Generic HDRG machinery and the three prior clustering decoders.

An HDRG decoder repeatedly groups syndrome defects into clusters, removes
clusters whose total charge vanishes mod d, and finally outputs the
product of per-cluster annihilation chains.  This module provides:

* `WormholeOracle` - a pairwise distance table over defect positions that
  supports shortcut relaxation through removed or merged clusters and can
  reconstruct the waypoint route realizing any current distance;
* `sweep_recovery` - turns a cluster's merge tree into an annihilation
  chain by transporting accumulated charges leaf-to-root;
* the BH, ABCB and expanding-diamonds clustering strategies behind a
  common engine, `hdrg_run`.

Positions may be 2D (x, y) or 3D (x, y, t); the first two axes wrap, time
does not, and recovery transports act on the spatial projection only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .toric import CodeParams, ErrorChain, Syndrome, compose, transport_chain

Position = tuple[int, ...]
DefectList = list[tuple[Position, int]]

METRIC_MANHATTAN = "manhattan"
METRIC_CHEBYSHEV = "chebyshev"
METRIC_ABCB = "abcb"


def defects_of(syndrome: Syndrome) -> DefectList:
    """Sorted (position, charge) list; sorting fixes defect ids."""
    return [(q, syndrome[q]) for q in sorted(syndrome)]


def neutrality(charges, d: int) -> bool:
    """A cluster can be removed iff its charges sum to zero mod d."""
    return sum(charges) % d == 0


def axis_distances(positions: np.ndarray, code: CodeParams) -> np.ndarray:
    """Per-axis minimal separations, shape (m, m, dims).

    Spatial axes wrap around the torus, the time axis (if present) does
    not.
    """
    L = code.L
    diff = np.abs(positions[:, None, :] - positions[None, :, :])
    wrapped = np.minimum(diff, L - diff)
    if positions.shape[1] > 2:
        wrapped[:, :, 2:] = diff[:, :, 2:]
    return wrapped


def metric_matrix(positions: np.ndarray, code: CodeParams, metric: str) -> np.ndarray:
    axes = axis_distances(positions, code)
    manhattan = axes.sum(axis=2)
    if metric == METRIC_MANHATTAN:
        return manhattan.astype(np.float64)
    chebyshev = axes.max(axis=2)
    if metric == METRIC_CHEBYSHEV:
        return chebyshev.astype(np.float64)
    if metric == METRIC_ABCB:
        return chebyshev + manhattan / (2.0 * code.L)
    raise ValueError(f"unknown metric {metric!r}")


class WormholeOracle:
    """Pairwise distances over fixed defect positions with shortcuts.

    Registering a clique (the member positions of a merged or removed
    cluster) makes traversal between its members free and relaxes every
    other pair through it.  One relaxation per registration keeps the
    table equal to true shortest paths through all registered cliques: the
    table is a metric beforehand, and no shortest path benefits from
    entering the same clique twice.  Distances never increase.
    """

    def __init__(self, positions: np.ndarray, code: CodeParams, metric: str):
        self.positions = positions
        self.code = code
        self.metric = metric
        self.dist = metric_matrix(positions, code, metric)
        np.fill_diagonal(self.dist, 0.0)
        self.cliques: list[np.ndarray] = []
        # via[(i, j)] with i < j: waypoints (entry at i's side, exit at j's
        # side) of the clique hop realizing the last strict improvement.
        self.via: dict[tuple[int, int], tuple[int, int]] = {}

    def distance(self, i: int, j: int) -> float:
        return float(self.dist[i, j])

    def register_clique(self, members: np.ndarray) -> None:
        members = np.asarray(members, dtype=np.intp)
        self.cliques.append(members)
        self._relax(members)

    def _relax(self, members: np.ndarray) -> bool:
        dist = self.dist
        cols = dist[:, members]
        col = cols.min(axis=1)
        entry = members[cols.argmin(axis=1)]
        cand = col[:, None] + col[None, :]
        improved = cand < dist
        np.fill_diagonal(improved, False)
        if not improved.any():
            return False
        rows, cols_idx = np.nonzero(improved)
        dist[rows, cols_idx] = cand[rows, cols_idx]
        for a, b in zip(rows.tolist(), cols_idx.tolist()):
            if a < b:
                self.via[(a, b)] = (int(entry[a]), int(entry[b]))
        return True

    def route(self, i: int, j: int) -> list[int]:
        """Waypoint positions realizing the current distance from i to j."""
        return self._route(i, j, set(), 0)

    def _route(self, i: int, j: int, visiting: set, depth: int) -> list[int]:
        if i == j:
            return [i]
        key = (i, j) if i < j else (j, i)
        if key not in self.via or key in visiting or depth > 64:
            return [i, j]
        visiting.add(key)
        entry, exit_ = self.via[key]
        if i > j:
            entry, exit_ = exit_, entry
        left = self._route(i, entry, visiting, depth + 1)
        right = self._route(exit_, j, visiting, depth + 1)
        visiting.discard(key)
        return left + right


def sweep_recovery(
    positions: np.ndarray,
    charges: dict[int, int],
    tree_edges: list[tuple[int, int, list[int]]],
    code: CodeParams,
) -> ErrorChain:
    """Annihilation chain for one neutral cluster.

    `tree_edges` spans the cluster's defects; each edge carries the
    waypoint route its merge was based on.  Charges are swept leaf-to-root
    along the tree: the whole subtree charge rides each edge, so after the
    sweep every defect site is neutralized.  Timelike waypoint legs (3D)
    contribute no data correction.
    """
    d = code.d
    nodes = sorted(charges)
    if not tree_edges:
        if len(nodes) == 1 and charges[nodes[0]] % d == 0:
            return {}
        if not nodes:
            return {}
    adjacency: dict[int, list[tuple[int, int]]] = {v: [] for v in nodes}
    for idx, (u, v, _) in enumerate(tree_edges):
        adjacency[u].append((v, idx))
        adjacency[v].append((u, idx))

    root = nodes[0]
    order: list[int] = []
    parent_edge: dict[int, tuple[int, int] | None] = {root: None}
    stack = [root]
    seen = {root}
    while stack:
        u = stack.pop()
        order.append(u)
        for v, idx in adjacency[u]:
            if v not in seen:
                seen.add(v)
                parent_edge[v] = (u, idx)
                stack.append(v)
    if len(seen) != len(nodes):
        raise ValueError("merge tree does not span the cluster")

    accumulated = {v: charges[v] % d for v in nodes}
    recovery: ErrorChain = {}
    for v in reversed(order):
        if v == root:
            continue
        u, idx = parent_edge[v]
        g = accumulated[v] % d
        if g:
            eu, ev, waypoints = tree_edges[idx]
            path = waypoints if waypoints[0] == v else list(reversed(waypoints))
            for a, b in zip(path, path[1:]):
                src = tuple(int(c) for c in positions[a][:2])
                dst = tuple(int(c) for c in positions[b][:2])
                if src != dst:
                    recovery = compose(
                        recovery, transport_chain(src, dst, g, code), code
                    )
        accumulated[u] = (accumulated[u] + g) % d
        accumulated[v] = 0
    if accumulated[root] % d != 0:
        raise ValueError("cluster is not neutral")
    return recovery


@dataclass
class _Cluster:
    members: list[int]
    charge: int
    tree: list[tuple[int, int, list[int]]]


class _ClassicEngine:
    """Shared state for the BH / ABCB / ED decoders."""

    def __init__(self, defects: DefectList, code: CodeParams, metric: str, shortcuts: bool):
        self.code = code
        self.shortcuts = shortcuts
        self.m = len(defects)
        if self.m:
            self.positions = np.asarray([p for p, _ in defects], dtype=np.int64)
        else:
            self.positions = np.zeros((0, 2), dtype=np.int64)
        self.charges = [g for _, g in defects]
        self.alive = [True] * self.m
        self.oracle = WormholeOracle(self.positions, code, metric) if self.m else None
        self.parent = list(range(self.m))
        self.clusters: dict[int, _Cluster] = {
            i: _Cluster([i], g % code.d, []) for i, g in enumerate(self.charges)
        }
        self.recovery: ErrorChain = {}

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def merge(self, i: int, j: int) -> int:
        """Union the clusters of defects i and j; the tree edge carries the
        current route between them."""
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return ri
        route = self.oracle.route(i, j)
        if rj < ri:
            ri, rj = rj, ri
        a, b = self.clusters[ri], self.clusters.pop(rj)
        self.parent[rj] = ri
        a.members.extend(b.members)
        a.charge = (a.charge + b.charge) % self.code.d
        a.tree.extend(b.tree)
        a.tree.append((i, j, route))
        return ri

    def settle(self, roots: list[int]) -> None:
        """Remove now-neutral clusters and apply shortcut updates."""
        for root in sorted(set(self.find(r) for r in roots)):
            cluster = self.clusters[root]
            if len(cluster.members) < 2:
                continue
            if cluster.charge == 0:
                chain = sweep_recovery(
                    self.positions,
                    {v: self.charges[v] for v in cluster.members},
                    cluster.tree,
                    self.code,
                )
                self.recovery = compose(self.recovery, chain, self.code)
                for v in cluster.members:
                    self.alive[v] = False
                del self.clusters[root]
            if self.shortcuts:
                self.oracle.register_clique(np.asarray(cluster.members, dtype=np.intp))

    def active_defects(self) -> list[int]:
        return [i for i in range(self.m) if self.alive[i]]

    def done(self) -> bool:
        return not any(self.alive)


class _SearchDistanceStrategy:
    """BH / ABCB style: edges between all defect pairs within D(n)."""

    def __init__(self, metric: str, schedule):
        self.metric = metric
        self.schedule = schedule

    def step(self, engine: _ClassicEngine, n: int) -> list[int]:
        threshold = self.schedule(n)
        active = engine.active_defects()
        changed = []
        for ai in range(len(active)):
            for bi in range(ai + 1, len(active)):
                i, j = active[ai], active[bi]
                if engine.oracle.distance(i, j) <= threshold:
                    if engine.find(i) != engine.find(j):
                        changed.append(engine.merge(i, j))
        return changed


class _ExpandingDiamondsStrategy:
    """Mutually-nearest style sweep with immediate neutral removal."""

    metric = METRIC_MANHATTAN

    def step(self, engine: _ClassicEngine, n: int) -> list[int]:
        threshold = n + 1
        roots = sorted(
            engine.clusters,
            key=lambda r: min(
                (int(engine.positions[v][1]), int(engine.positions[v][0]))
                for v in engine.clusters[r].members
            ),
        )
        # Cluster distances are frozen at sweep start (recomputed between
        # sweeps, as in the original formulation).
        table = {}
        for oi in range(len(roots)):
            for oj in range(oi + 1, len(roots)):
                table[(oi, oj)] = self._cluster_distance(engine, roots[oi], roots[oj])
        consumed: set[int] = set()
        changed = []
        for oi in range(len(roots)):
            if oi in consumed:
                continue
            for oj in range(oi + 1, len(roots)):
                if oj in consumed:
                    continue
                dist, pair = table[(oi, oj)]
                if dist < threshold:
                    i, j = pair
                    root = engine.merge(i, j)
                    consumed.add(oj)
                    changed.append(root)
                    engine.settle([root])
                    break
        return []  # neutral removal already settled inside the sweep

    @staticmethod
    def _cluster_distance(engine: _ClassicEngine, ra: int, rb: int):
        best = math.inf
        best_pair = None
        for i in engine.clusters[ra].members:
            for j in engine.clusters[rb].members:
                dij = engine.oracle.distance(i, j)
                if dij < best:
                    best = dij
                    best_pair = (i, j)
        return best, best_pair


STRATEGIES = {
    "bh": lambda: _SearchDistanceStrategy(METRIC_CHEBYSHEV, lambda n: 2**n),
    "abcb": lambda: _SearchDistanceStrategy(METRIC_ABCB, lambda n: n + 1),
    "ed": lambda: _ExpandingDiamondsStrategy(),
}


def hdrg_run(
    strategy: str,
    defects: DefectList,
    code: CodeParams,
    shortcuts: bool = True,
) -> tuple[ErrorChain, int]:
    """Run one of the classic HDRG decoders to completion.

    Returns the recovery chain and the number of clustering iterations.
    The recovery always clears the syndrome; whether it is homologically
    correct is for the caller to judge.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    strat = STRATEGIES[strategy]()
    engine = _ClassicEngine(defects, code, strat.metric, shortcuts)
    iterations = 0
    n = 0
    stale = 0
    while not engine.done():
        before = sum(engine.alive)
        changed = strat.step(engine, n)
        engine.settle(changed)
        iterations += 1
        n += 1
        stale = stale + 1 if sum(engine.alive) == before else 0
        if stale > int(math.log2(max(4, 4 * code.L))) + code.L + 4:
            raise RuntimeError("clustering made no progress")
    return engine.recovery, iterations

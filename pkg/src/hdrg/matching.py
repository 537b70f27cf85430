"""Exact minimum-weight matching on general weighted graphs.

Two primitives: `mwpm` finds a minimum-weight perfect matching, and `mwm`
finds a minimum-weight (possibly non-perfect) matching where every
unpaired vertex pays its vertex weight.  `mwm` reduces to `mwpm` by graph
doubling: each vertex j gets a twin j', twins mirror the original edges at
zero weight, and the edge (j, j') carries the vertex weight.

`mwpm` dispatches to a bitmask dynamic program for up to 12 vertices and
to the blossom implementation in networkx beyond that; both are exact.
Slow exhaustive enumerators are provided as independent test oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

Edge = tuple[int, int, float]

_DP_LIMIT = 12


@dataclass
class MatchGraph:
    """Weighted graph with per-vertex abstention weights."""

    n: int
    vertex_weights: list[float]
    edges: list[Edge] = field(default_factory=list)

    def __post_init__(self):
        if len(self.vertex_weights) != self.n:
            raise ValueError("vertex weight count does not match vertex count")
        seen = set()
        for i, j, w in self.edges:
            if i == j:
                raise ValueError("self loops are not allowed")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError("edge endpoint out of range")
            if not math.isfinite(w):
                raise ValueError("edge weights must be finite")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)


@dataclass
class Matching:
    pairs: list[tuple[int, int]]
    abstainers: list[int]
    total_weight: float


def matching_weight(graph: MatchGraph, pairs, abstainers) -> float:
    lookup = {(min(i, j), max(i, j)): w for i, j, w in graph.edges}
    terms = [lookup[(min(i, j), max(i, j))] for i, j in pairs]
    terms += [graph.vertex_weights[j] for j in abstainers]
    return math.fsum(terms)


def _dp_mwpm(n: int, weights: dict[tuple[int, int], float]) -> list[tuple[int, int]]:
    """Exact perfect matching over <= 12 vertices by subset DP.

    Ties are broken toward the lexicographically smallest pairing (lowest
    unmatched vertex matches its lowest equally-good partner).
    """
    memo: dict[int, float] = {0: 0.0}
    choice: dict[int, int] = {}

    def solve(mask: int) -> float:
        if mask in memo:
            return memo[mask]
        i = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << i)
        best = math.inf
        best_j = -1
        sub = rest
        while sub:
            j = (sub & -sub).bit_length() - 1
            sub ^= 1 << j
            w = weights.get((i, j))
            if w is None:
                continue
            cand = w + solve(rest ^ (1 << j))
            if cand < best:
                best = cand
                best_j = j
        memo[mask] = best
        choice[mask] = best_j
        return best

    full = (1 << n) - 1
    if solve(full) == math.inf:
        raise ValueError("graph admits no perfect matching")
    pairs = []
    mask = full
    while mask:
        i = (mask & -mask).bit_length() - 1
        j = choice[mask]
        pairs.append((i, j))
        mask ^= (1 << i) | (1 << j)
    return pairs


def _blossom_mwpm(n: int, edges: list[Edge]) -> list[tuple[int, int]]:
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    for i, j, w in edges:
        graph.add_edge(i, j, weight=-w)
    mate = nx.max_weight_matching(graph, maxcardinality=True)
    if 2 * len(mate) != n:
        raise ValueError("graph admits no perfect matching")
    return sorted((min(i, j), max(i, j)) for i, j in mate)


def mwpm(n: int, edges: list[Edge]) -> list[tuple[int, int]]:
    """Minimum-weight perfect matching; exact for arbitrary weights."""
    if n % 2:
        raise ValueError("perfect matching needs an even vertex count")
    if n == 0:
        return []
    if n <= _DP_LIMIT:
        weights = {}
        for i, j, w in edges:
            key = (min(i, j), max(i, j))
            weights[key] = w
        return sorted(_dp_mwpm(n, weights))
    return _blossom_mwpm(n, edges)


def mwm(graph: MatchGraph) -> Matching:
    """Minimum-weight matching with abstention, via the doubling reduction."""
    n = graph.n
    doubled: list[Edge] = []
    for i, j, w in graph.edges:
        doubled.append((i, j, w))
        doubled.append((i + n, j + n, 0.0))
    for j in range(n):
        doubled.append((j, j + n, graph.vertex_weights[j]))
    raw = mwpm(2 * n, doubled)
    pairs = []
    abstainers = []
    for i, j in raw:
        if j == i + n:
            abstainers.append(i)
        elif j < n:
            pairs.append((i, j))
    pairs.sort()
    abstainers.sort()
    return Matching(pairs, abstainers, matching_weight(graph, pairs, abstainers))


def enumerate_perfect_matchings(n: int, edges: list[Edge]):
    """Yield every perfect matching as a list of pairs (test oracle)."""
    adjacency = {}
    for i, j, w in edges:
        adjacency.setdefault(i, {})[j] = w
        adjacency.setdefault(j, {})[i] = w

    vertices = list(range(n))

    def recurse(unmatched: list[int], acc: list[tuple[int, int]]):
        if not unmatched:
            yield list(acc)
            return
        i = unmatched[0]
        for j in unmatched[1:]:
            if j in adjacency.get(i, ()):
                acc.append((i, j))
                rest = [v for v in unmatched if v != i and v != j]
                yield from recurse(rest, acc)
                acc.pop()

    yield from recurse(vertices, [])


def brute_force_mwpm_weight(n: int, edges: list[Edge]) -> float:
    """Minimum perfect-matching weight by exhaustive enumeration."""
    lookup = {(min(i, j), max(i, j)): w for i, j, w in edges}
    best = math.inf
    for pairs in enumerate_perfect_matchings(n, edges):
        weight = math.fsum(lookup[(min(i, j), max(i, j))] for i, j in pairs)
        best = min(best, weight)
    if best == math.inf:
        raise ValueError("graph admits no perfect matching")
    return best


def brute_force_mwm_weight(graph: MatchGraph) -> float:
    """Minimum matching weight over all (pairs, abstainers) partitions."""
    lookup = {(min(i, j), max(i, j)): w for i, j, w in graph.edges}
    best = math.inf
    vertices = list(range(graph.n))

    def recurse(unmatched: list[int], acc_weight: float):
        nonlocal best
        if not unmatched:
            best = min(best, acc_weight)
            return
        i = unmatched[0]
        rest = unmatched[1:]
        # i abstains
        recurse(rest, acc_weight + graph.vertex_weights[i])
        # i pairs with some j
        for j in rest:
            w = lookup.get((min(i, j), max(i, j)))
            if w is not None:
                recurse([v for v in rest if v != j], acc_weight + w)

    recurse(vertices, 0.0)
    return best


def sparsified_components(
    weight_matrix: np.ndarray, vertex_weights: np.ndarray
) -> list[np.ndarray]:
    """Split vertices into components of the graph keeping edge (j, k) iff
    W_jk < W_j + W_k.

    Edges failing the test can always be replaced by two abstentions
    without increasing the total weight, so solving each component
    separately reproduces a global optimum.
    """
    n = weight_matrix.shape[0]
    keep = weight_matrix < (vertex_weights[:, None] + vertex_weights[None, :])
    np.fill_diagonal(keep, False)
    n_comp, labels = _connected_components(keep)
    return [np.flatnonzero(labels == c) for c in range(n_comp)]


def _connected_components(adjacency: np.ndarray) -> tuple[int, np.ndarray]:
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components

    return connected_components(csr_matrix(adjacency), directed=False)

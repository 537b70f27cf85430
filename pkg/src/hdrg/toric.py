"""D(Z_d) toric code: geometry, error chains, syndromes and homology.

The code lives on an L x L grid of plaquettes with periodic boundaries.
Each plaquette coordinate (x, y) owns two edges (one horizontal, one
vertical), so there are 2*L^2 qudits.  Error chains are sparse maps from
edge id to a Z_d exponent, syndromes are sparse maps from plaquette
coordinate to a Z_d charge.  Everything here is charge-level: no state
vectors are ever built.

Conventions (fixed once, used everywhere):

* edge id = 2*(x*L + y) + orientation, orientation 0 = horizontal,
  1 = vertical.
* The horizontal edge at (x, y) is the bottom border of plaquette (x, y);
  an exponent g on it deposits +g on (x, y) and -g on (x, y-1).
* The vertical edge at (x, y) is the left border of plaquette (x, y);
  an exponent g on it deposits +g on (x, y) and -g on (x-1, y).
* Winding numbers are read off the cut x=0 (vertical edges v(0, y)) and
  the cut y=0 (horizontal edges h(x, 0)).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

Coord = tuple[int, int]
ErrorChain = dict[int, int]
Syndrome = dict[Coord, int]

HORIZONTAL = 0
VERTICAL = 1


@dataclass(frozen=True)
class CodeParams:
    """Qudit dimension and linear size of the plaquette grid."""

    d: int
    L: int

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"qudit dimension must be >= 2, got {self.d}")
        if self.L < 2:
            raise ValueError(f"code size must be >= 2, got {self.L}")

    @property
    def n_edges(self) -> int:
        return 2 * self.L * self.L


class Displacement(NamedTuple):
    """Minimal per-axis wraparound distances between two plaquettes."""

    dx: int
    dy: int
    d1: int  # Manhattan distance
    dinf: int  # Chebyshev distance


def edge_index(params: CodeParams, x: int, y: int, orientation: int) -> int:
    L = params.L
    return 2 * ((x % L) * L + (y % L)) + orientation


def edge_components(params: CodeParams, edge: int) -> tuple[int, int, int]:
    """Inverse of edge_index: returns (x, y, orientation)."""
    L = params.L
    orientation = edge & 1
    cell = edge >> 1
    return cell // L, cell % L, orientation


def _axis_delta(a: int, b: int, L: int) -> int:
    """Signed minimal step count from a to b along one periodic axis.

    Ties at L/2 are broken toward the increasing direction.
    """
    fwd = (b - a) % L
    bwd = L - fwd
    if fwd <= bwd:
        return fwd
    return -bwd


def torus_displacement(a: Coord, b: Coord, params: CodeParams) -> Displacement:
    L = params.L
    dx = min((b[0] - a[0]) % L, (a[0] - b[0]) % L)
    dy = min((b[1] - a[1]) % L, (a[1] - b[1]) % L)
    return Displacement(dx, dy, dx + dy, max(dx, dy))


def normalize_chain(items: Iterable[tuple[int, int]], params: CodeParams) -> ErrorChain:
    """Accumulate (edge, exponent) pairs into a reduced sparse chain."""
    chain: ErrorChain = {}
    d = params.d
    for edge, g in items:
        total = (chain.get(edge, 0) + g) % d
        if total:
            chain[edge] = total
        else:
            chain.pop(edge, None)
    return chain


def compose(a: ErrorChain, b: ErrorChain, params: CodeParams) -> ErrorChain:
    """Edgewise product of two chains (exponents add mod d)."""
    d = params.d
    out = dict(a)
    for edge, g in b.items():
        total = (out.get(edge, 0) + g) % d
        if total:
            out[edge] = total
        else:
            out.pop(edge, None)
    return out


def inverse(chain: ErrorChain, params: CodeParams) -> ErrorChain:
    d = params.d
    return {edge: d - g for edge, g in chain.items()}


def syndrome_of(chain: ErrorChain, params: CodeParams) -> Syndrome:
    """Anyon pattern created by a chain: charges fuse by addition mod d."""
    d, L = params.d, params.L
    charges: Syndrome = {}

    def add(q: Coord, g: int) -> None:
        total = (charges.get(q, 0) + g) % d
        if total:
            charges[q] = total
        else:
            charges.pop(q, None)

    for edge, g in chain.items():
        x, y, orientation = edge_components(params, edge)
        add((x, y), g)
        if orientation == HORIZONTAL:
            add((x, (y - 1) % L), d - g)
        else:
            add(((x - 1) % L, y), d - g)
    return charges


def transport_chain(src: Coord, dst: Coord, g: int, params: CodeParams) -> ErrorChain:
    """Chain moving a charge g from src to dst along one minimal path.

    The path is axis-ordered (x moves, then y moves), each axis taking the
    shorter wraparound direction with ties broken toward increasing
    coordinate.  Its syndrome is exactly {src: -g, dst: +g}.
    """
    d, L = params.d, params.L
    g %= d
    if g == 0 or src == dst:
        return {}
    items: list[tuple[int, int]] = []
    x, y = src
    step_x = _axis_delta(src[0], dst[0], L)
    while step_x != 0:
        if step_x > 0:
            items.append((edge_index(params, x + 1, y, VERTICAL), g))
            x = (x + 1) % L
            step_x -= 1
        else:
            items.append((edge_index(params, x, y, VERTICAL), d - g))
            x = (x - 1) % L
            step_x += 1
    step_y = _axis_delta(src[1], dst[1], L)
    while step_y != 0:
        if step_y > 0:
            items.append((edge_index(params, x, y + 1, HORIZONTAL), g))
            y = (y + 1) % L
            step_y -= 1
        else:
            items.append((edge_index(params, x, y, HORIZONTAL), d - g))
            y = (y - 1) % L
            step_y += 1
    return normalize_chain(items, params)


def stabilizer_loop(q: Coord, g: int, params: CodeParams) -> ErrorChain:
    """Elementary contractible transport loop anchored at plaquette q.

    Moves a charge g around the square q -> q+x -> q+x+y -> q+y -> q; the
    result has empty syndrome and trivial homology class.
    """
    L = params.L
    x, y = q
    right = ((x + 1) % L, y)
    diag = ((x + 1) % L, (y + 1) % L)
    up = (x, (y + 1) % L)
    chain = transport_chain(q, right, g, params)
    chain = compose(chain, transport_chain(right, diag, g, params), params)
    chain = compose(chain, transport_chain(diag, up, g, params), params)
    chain = compose(chain, transport_chain(up, q, g, params), params)
    return chain


def logical_class(chain: ErrorChain, params: CodeParams) -> tuple[int, int]:
    """Winding numbers (gx, gy) of a syndrome-free chain.

    gx sums the exponents of vertical edges crossing the cut x=0, gy those
    of horizontal edges crossing the cut y=0.  Raises if the chain has a
    nonempty syndrome, since homology is only defined for closed chains.
    """
    if syndrome_of(chain, params):
        raise ValueError("logical_class requires a chain with empty syndrome")
    d, L = params.d, params.L
    gx = 0
    gy = 0
    for y in range(L):
        gx += chain.get(edge_index(params, 0, y, VERTICAL), 0)
    for x in range(L):
        gy += chain.get(edge_index(params, x, 0, HORIZONTAL), 0)
    return gx % d, gy % d


def is_trivial(chain: ErrorChain, params: CodeParams) -> bool:
    return logical_class(chain, params) == (0, 0)

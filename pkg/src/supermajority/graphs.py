"""Graph families used as social-network models.

Vertices are labelled 0..n-1. Star and Wheel put the hub at 0; the lattice is
laid out row-major. Clamped lattice boundaries are carried as a frozen-spin
mask (``GraphInstance.clamp``) rather than as a different edge set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class GraphFamily(str, Enum):
    EMPTY = "empty"
    STAR = "star"
    CHAIN = "chain"
    RING = "ring"
    WHEEL = "wheel"
    COMPLETE = "complete"
    LATTICE = "lattice"


class Boundary(str, Enum):
    FREE = "free"
    PLUS = "plus"
    MINUS = "minus"


class GraphError(ValueError):
    pass


MIN_SIZE = {
    GraphFamily.EMPTY: 1,
    GraphFamily.STAR: 2,
    GraphFamily.CHAIN: 2,
    GraphFamily.RING: 3,
    GraphFamily.WHEEL: 4,
    GraphFamily.COMPLETE: 1,
    GraphFamily.LATTICE: 1,
}


@dataclass(frozen=True)
class GraphInstance:
    family: GraphFamily
    n: int
    edges: np.ndarray  # (m, 2) int array, i < j
    boundary: Boundary = Boundary.FREE
    hub: int | None = None
    side: int | None = None
    clamp: np.ndarray = field(default=None, repr=False)  # int8: 0 free, +-1 frozen

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def has_clamp(self) -> bool:
        return bool(np.any(self.clamp != 0))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        np.add.at(deg, self.edges[:, 0], 1)
        np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def adjacency_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Neighbour lists as (indptr, indices), sorted by vertex."""
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        return np.cumsum(indptr), dst.astype(np.int64)


def _pairs(pairs) -> np.ndarray:
    arr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
    return np.sort(arr, axis=1)


def _ring_edges(vertices: list[int]) -> list[tuple[int, int]]:
    m = len(vertices)
    return [(vertices[i], vertices[(i + 1) % m]) for i in range(m)]


def lattice_side(n: int) -> int:
    side = math.isqrt(n)
    if side * side != n:
        raise GraphError(f"lattice needs a perfect-square n, got {n}")
    return side


def boundary_mask(side: int, boundary: Boundary) -> np.ndarray:
    clamp = np.zeros((side, side), dtype=np.int8)
    if boundary is not Boundary.FREE:
        value = 1 if boundary is Boundary.PLUS else -1
        clamp[0, :] = clamp[-1, :] = value
        clamp[:, 0] = clamp[:, -1] = value
    return clamp.ravel()


def build_graph(family, n: int, boundary=Boundary.FREE) -> GraphInstance:
    """Build one of the supported graph families with a canonical layout.

    Wheel's ``n`` counts the hub, so the rim is an (n-1)-cycle. A clamped
    lattice freezes its outer ring of vertices; those vertices still count
    towards ``n``.
    """
    family = GraphFamily(family)
    boundary = Boundary(boundary)
    n = int(n)
    if n < MIN_SIZE[family]:
        raise GraphError(f"{family.value} graph needs n >= {MIN_SIZE[family]}, got {n}")
    if boundary is not Boundary.FREE and family is not GraphFamily.LATTICE:
        raise GraphError(f"boundary {boundary.value!r} only applies to the lattice")

    hub = side = None
    if family is GraphFamily.EMPTY:
        pairs = []
    elif family is GraphFamily.STAR:
        hub = 0
        pairs = [(0, i) for i in range(1, n)]
    elif family is GraphFamily.CHAIN:
        pairs = [(i, i + 1) for i in range(n - 1)]
    elif family is GraphFamily.RING:
        pairs = _ring_edges(list(range(n)))
    elif family is GraphFamily.WHEEL:
        hub = 0
        pairs = _ring_edges(list(range(1, n))) + [(0, i) for i in range(1, n)]
    elif family is GraphFamily.COMPLETE:
        iu = np.triu_indices(n, k=1)
        pairs = np.column_stack(iu)
    else:
        side = lattice_side(n)
        idx = np.arange(n).reshape(side, side)
        horiz = np.column_stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()])
        vert = np.column_stack([idx[:-1, :].ravel(), idx[1:, :].ravel()])
        pairs = np.concatenate([horiz, vert])

    edges = _pairs(pairs)
    if family is GraphFamily.LATTICE:
        clamp = boundary_mask(side, boundary)
    else:
        clamp = np.zeros(n, dtype=np.int8)
    g = GraphInstance(family, n, edges, boundary, hub, side, clamp)
    validate(g)
    return g


def validate(g: GraphInstance) -> None:
    e = g.edges
    if e.size:
        if np.any(e[:, 0] == e[:, 1]):
            raise GraphError("self-loop in edge set")
        if np.any(e < 0) or np.any(e >= g.n):
            raise GraphError("edge endpoint out of range")
        if len(np.unique(e, axis=0)) != len(e):
            raise GraphError("duplicate edge")
    if g.clamp.shape != (g.n,):
        raise GraphError("clamp mask has the wrong length")


def edge_count(g: GraphInstance) -> int:
    return g.num_edges


def expected_degrees(family, n: int) -> np.ndarray:
    """Closed-form degree sequence for each family (lattice excluded)."""
    family = GraphFamily(family)
    if family is GraphFamily.EMPTY:
        return np.zeros(n, dtype=np.int64)
    if family is GraphFamily.STAR:
        return np.array([n - 1] + [1] * (n - 1))
    if family is GraphFamily.CHAIN:
        return np.array([1] + [2] * (n - 2) + [1])
    if family is GraphFamily.RING:
        return np.full(n, 2)
    if family is GraphFamily.WHEEL:
        return np.array([n - 1] + [3] * (n - 1))
    if family is GraphFamily.COMPLETE:
        return np.full(n, n - 1)
    side = lattice_side(n)
    grid = np.full((side, side), 4)
    grid[0, :] -= 1
    grid[-1, :] -= 1
    grid[:, 0] -= 1
    grid[:, -1] -= 1
    return grid.ravel()

"""
Finite index structures for the standard graph on Z^n and for the
subdivided Z^2 graph (a vertex added on every edge).

Three geometries are supported:

* ``Box(L)``: lattice points with ``max|mu_j| <= L``; edges leaving the
  box are dropped (plain restriction).
* ``Torus(q)``: points of ``{0..q-1}^n`` with periodic wrap-around.  With
  ``twisted=True`` the wrap carries a sign ``-1`` (antiperiodic boundary
  conditions), which shifts the momentum grid to ``(k + 1/2)/q``.
* ``SubdividedZ2(base)``: the subdivided graph built on top of a 2-D box
  or torus.  Midpoint vertices are stored with doubled integer coordinates.

Each unoriented edge is stored once, as ``(base point mu, direction j)``
meaning the oriented edge ``(mu, mu + delta_j)``.  Cochain antisymmetry is a
convention of the operators, not of the storage.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np

__all__ = [
    "Box",
    "Torus",
    "SubdividedZ2",
    "LatticeGraph",
    "build_lattice",
    "edge_representative",
    "OutOfBounds",
]


class OutOfBounds(ValueError):
    """A requested vertex, edge or plaquette is not part of the lattice."""


@dataclass(frozen=True)
class Box:
    L: int


@dataclass(frozen=True)
class Torus:
    q: int
    twisted: bool = False


@dataclass(frozen=True)
class SubdividedZ2:
    base: Union[Box, Torus]


Geometry = Union[Box, Torus, SubdividedZ2]


def edge_representative(tail: Sequence[int], head: Sequence[int]) -> Tuple[int, Tuple[int, ...], bool]:
    """Orbit representative of an oriented edge of Z^n.

    Returns ``(j, mu, flipped)`` with ``j`` in ``1..n`` such that the edge is
    ``mu e_j = (mu, mu + delta_j)`` (``flipped=False``) or its transpose.

    >>> edge_representative((3, 0), (2, 0))
    (1, (2, 0), True)
    """
    tail = tuple(int(t) for t in tail)
    head = tuple(int(h) for h in head)
    if len(tail) != len(head):
        raise ValueError("endpoints must have the same dimension")
    diff = [h - t for h, t in zip(head, tail)]
    nonzero = [k for k, d in enumerate(diff) if d != 0]
    if len(nonzero) != 1 or abs(diff[nonzero[0]]) != 1:
        raise OutOfBounds(f"({tail}, {head}) is not an edge of Z^{len(tail)}")
    j = nonzero[0]
    if diff[j] == 1:
        return j + 1, tail, False
    return j + 1, head, True


@dataclass(frozen=True, eq=False)
class LatticeGraph:
    """Vertex and edge index sets of a finite lattice graph.

    Attributes
    ----------
    n : int
        Dimension of the underlying lattice.
    geometry : Box | Torus | SubdividedZ2
    points : (nv, n) int array
        Lattice points, lexicographically ordered.  Row ``i`` is vertex ``i``.
    edge_base, edge_dir : arrays
        Edge ``k`` is ``(edge_base[k], edge_base[k] + delta_{edge_dir[k]})``
        with ``edge_dir`` zero-based.  Ordered lexicographically on the base
        point, then on the direction.
    edge_tail, edge_head : int arrays
        Vertex rows of the two endpoints (after wrap-around on a torus).
    edge_sign : float array
        ``-1`` for edges whose head wraps across a twisted boundary, else ``+1``.

    For ``SubdividedZ2`` geometries ``points``/``edge_*`` describe the base
    Z^2 graph; every base edge carries one midpoint vertex, so midpoints are
    indexed exactly like base edges.
    """

    n: int
    geometry: Geometry
    points: np.ndarray
    edge_base: np.ndarray
    edge_dir: np.ndarray
    edge_tail: np.ndarray
    edge_head: np.ndarray
    edge_sign: np.ndarray
    _edge_table: np.ndarray = field(repr=False)

    # -- sizes ---------------------------------------------------------------
    @property
    def base_geometry(self) -> Union[Box, Torus]:
        g = self.geometry
        return g.base if isinstance(g, SubdividedZ2) else g

    @property
    def subdivided(self) -> bool:
        return isinstance(self.geometry, SubdividedZ2)

    @property
    def is_torus(self) -> bool:
        return isinstance(self.base_geometry, Torus)

    @property
    def twisted(self) -> bool:
        g = self.base_geometry
        return isinstance(g, Torus) and g.twisted

    @property
    def num_vertices(self) -> int:
        """Lattice points only (midpoints of a subdivided graph excluded)."""
        return len(self.points)

    @property
    def num_edges(self) -> int:
        return len(self.edge_base)

    @property
    def dimension(self) -> int:
        """Size of the state space: vertex block plus edge (or midpoint) block."""
        return self.num_vertices + self.num_edges

    @property
    def side(self) -> int:
        g = self.base_geometry
        return g.q if isinstance(g, Torus) else 2 * g.L + 1

    # -- index maps ----------------------------------------------------------
    def _wrap(self, mu) -> Tuple[Tuple[int, ...], int]:
        mu = tuple(int(x) for x in mu)
        g = self.base_geometry
        if isinstance(g, Torus):
            winds = sum(x // g.q for x in mu)
            sign = -1 if (g.twisted and winds % 2) else 1
            return tuple(x % g.q for x in mu), sign
        if any(abs(x) > g.L for x in mu):
            raise OutOfBounds(f"{mu} lies outside the box of half-width {g.L}")
        return mu, 1

    def vertex_index(self, mu) -> int:
        """Row of lattice point ``mu`` (wrapped on a torus)."""
        return self.wrap_vertex(mu)[0]

    def wrap_vertex(self, mu) -> Tuple[int, int]:
        """``(row, sign)`` of ``mu``; sign is the twist picked up by wrapping."""
        if len(mu) != self.n:
            raise ValueError(f"expected a point of Z^{self.n}")
        w, sign = self._wrap(mu)
        off = 0 if self.is_torus else self.base_geometry.L
        idx = 0
        for x in w:
            idx = idx * self.side + (x + off)
        return idx, sign

    def edge_index(self, mu, j: int) -> Tuple[int, int]:
        """``(row, sign)`` of the edge ``mu e_j`` (``j`` one-based), relative to edge block."""
        if not 1 <= j <= self.n:
            raise ValueError(f"direction must be in 1..{self.n}")
        v, sign = self.wrap_vertex(mu)
        k = int(self._edge_table[v, j - 1])
        if k < 0:
            raise OutOfBounds(f"edge {tuple(mu)}e_{j} leaves the box")
        return k, sign

    def oriented_edge_index(self, tail, head) -> Tuple[int, int]:
        """Edge row and orientation sign (+1 stored orientation, -1 transpose)."""
        j, mu, flipped = edge_representative(tail, head)
        k, sign = self.edge_index(mu, j)
        return k, (-sign if flipped else sign)

    def centered_points(self) -> np.ndarray:
        """Lattice points as minimal-image representatives (torus) or as is (box)."""
        if self.is_torus:
            q = self.side
            return ((self.points + q // 2) % q) - q // 2
        return self.points

    def centered_edge_base(self) -> np.ndarray:
        if self.is_torus:
            q = self.side
            return ((self.edge_base + q // 2) % q) - q // 2
        return self.edge_base

    # -- subdivided graph ----------------------------------------------------
    def doubled_coordinates(self) -> np.ndarray:
        """Doubled integer coordinates: ``2 mu`` for points, ``2 mu + delta_j`` for midpoints."""
        pts = 2 * self.points
        mids = 2 * self.edge_base + np.eye(self.n, dtype=int)[self.edge_dir]
        return np.vstack([pts, mids])

    def midpoint_index(self, mu, j: int) -> Tuple[int, int]:
        """Row (in the full vertex list) of the midpoint ``mu + delta_j/2``."""
        if not self.subdivided:
            raise TypeError("midpoints exist only on SubdividedZ2 graphs")
        k, sign = self.edge_index(mu, j)
        return self.num_vertices + k, sign

    def subdivided_edges(self) -> np.ndarray:
        """Oriented edges of the subdivided graph as ``(tail_row, head_row)`` pairs.

        Each base edge ``mu e_j`` splits into ``(mu, mid)`` and ``(mid, mu + delta_j)``.
        """
        if not self.subdivided:
            raise TypeError("not a subdivided graph")
        mids = self.num_vertices + np.arange(self.num_edges)
        first = np.column_stack([self.edge_tail, mids])
        second = np.column_stack([mids, self.edge_head])
        return np.vstack([first, second])

    def edge_eta(self, tail_doubled, head_doubled) -> Tuple[int, ...]:
        """Index ``eta(e) = floor(head) - floor(tail)`` of a subdivided-graph edge.

        Orbit representatives are ``(0,0)``, ``(1/2,0)`` and ``(0,1/2)``, so the
        integer part of a point with doubled coordinates ``x`` is ``x // 2``.
        """
        t = np.asarray(tail_doubled, dtype=int)
        h = np.asarray(head_doubled, dtype=int)
        if np.abs(h - t).sum() != 1:
            raise OutOfBounds("endpoints are not adjacent in the subdivided graph")
        return tuple(int(x) for x in (h // 2 - t // 2))


def _grid_points(n: int, coords: np.ndarray) -> np.ndarray:
    return np.array(list(itertools.product(coords, repeat=n)), dtype=int).reshape(-1, n)


def build_lattice(n: int, geometry: Geometry) -> LatticeGraph:
    """Build a :class:`LatticeGraph` for a box, torus or subdivided Z^2 geometry.

    Examples
    --------
    >>> g = build_lattice(2, Torus(3))
    >>> g.num_vertices, g.num_edges, g.dimension
    (9, 18, 27)
    >>> build_lattice(2, Box(1)).num_edges
    12
    """
    if n < 2:
        raise ValueError("a flat band requires n >= 2")
    base = geometry.base if isinstance(geometry, SubdividedZ2) else geometry
    if isinstance(geometry, SubdividedZ2) and n != 2:
        raise ValueError("the subdivided graph is defined on Z^2 only")
    if isinstance(base, Torus):
        if base.q < 2:
            raise ValueError("torus side q must be >= 2")
        side, off = base.q, 0
        coords = np.arange(base.q)
    elif isinstance(base, Box):
        if base.L < 1:
            raise ValueError("box half-width L must be >= 1")
        side, off = 2 * base.L + 1, base.L
        coords = np.arange(-base.L, base.L + 1)
    else:
        raise TypeError(f"unknown geometry {geometry!r}")

    points = _grid_points(n, coords)
    nv = len(points)
    strides = side ** np.arange(n - 1, -1, -1)
    table = -np.ones((nv, n), dtype=np.int64)

    bases, dirs, tails, heads, signs = [], [], [], [], []
    for j in range(n):
        head = points.copy()
        head[:, j] += 1
        if isinstance(base, Torus):
            wraps = head[:, j] >= base.q
            head[:, j] %= base.q
            ok = np.ones(nv, dtype=bool)
            sgn = np.where(wraps & base.twisted, -1.0, 1.0)
        else:
            ok = head[:, j] <= base.L
            sgn = np.ones(nv)
        rows = np.nonzero(ok)[0]
        bases.append(rows)
        dirs.append(np.full(len(rows), j))
        tails.append(rows)
        heads.append(((head[ok] + off) * strides).sum(axis=1))
        signs.append(sgn[ok])

    # lexicographic on the base point, then direction
    base_rows = np.concatenate(bases)
    dir_all = np.concatenate(dirs)
    order = np.lexsort((dir_all, base_rows))
    base_rows = base_rows[order]
    dir_all = dir_all[order]
    table[base_rows, dir_all] = np.arange(len(order))

    return LatticeGraph(
        n=n,
        geometry=geometry,
        points=points,
        edge_base=points[base_rows],
        edge_dir=dir_all,
        edge_tail=np.concatenate(tails)[order],
        edge_head=np.concatenate(heads)[order],
        edge_sign=np.concatenate(signs)[order],
        _edge_table=table,
    )

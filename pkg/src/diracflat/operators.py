"""
Real-space sparse operators on l2(vertices) + l2(edges).

Layout of every operator is ``[vertex block | edge block]`` with the row
orders of :class:`~diracflat.lattice.LatticeGraph`.  With one stored
orientation per edge the half-weighted inner product on oriented cochains
reduces to the plain Euclidean one, so ``d^*`` is the transpose of ``d``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .lattice import LatticeGraph

__all__ = [
    "PotentialSpec",
    "AdmissibilityError",
    "japanese_bracket",
    "build_coboundary",
    "build_H0",
    "build_potential",
    "potential_values",
    "build_H",
    "symbol_seminorms",
    "write_triplets",
    "read_triplets",
]


class AdmissibilityError(ValueError):
    """The coefficients do not define an admissible perturbation."""


def japanese_bracket(mu) -> np.ndarray:
    """``<mu> = (1 + |mu|^2)^(1/2)`` along the last axis."""
    mu = np.asarray(mu, dtype=float)
    return np.sqrt(1.0 + (mu * mu).sum(axis=-1))


@dataclass(frozen=True)
class PotentialSpec:
    """Diagonal perturbation ``v_j(mu) = Gamma_j <mu>^(-gamma)``.

    Parameters
    ----------
    gamma : float
        Decay rate, ``0 < gamma < n``.
    coefficients : sequence of float
        ``(Gamma_0, Gamma_1, ..., Gamma_n)``; ``Gamma_0`` weights the vertex
        component, ``Gamma_j`` the edge orbit ``j`` (or, on the subdivided
        graph, the midpoints ``mu + delta_j / 2``).
    correction : float
        Amplitude of an extra ``<mu>^(-gamma-1)`` term on every component.
        It stays in the same symbol class and leaves the ``Gamma_j``
        asymptotics unchanged.
    check_admissible : bool
        Turn off to allow all-zero edge coefficients (used for the vertex-only
        and zero-potential experiments).
    """

    gamma: float
    coefficients: Tuple[float, ...]
    correction: float = 0.0
    check_admissible: bool = True

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))

    @property
    def n(self) -> int:
        return len(self.coefficients) - 1

    def validate(self, n: Optional[int] = None) -> None:
        n = self.n if n is None else n
        if len(self.coefficients) != n + 1:
            raise AdmissibilityError(
                f"expected {n + 1} coefficients (Gamma_0..Gamma_n), got {len(self.coefficients)}"
            )
        if not self.check_admissible:
            return
        if not (0.0 < self.gamma < n):
            raise AdmissibilityError(f"gamma must be < n and > 0 (gamma={self.gamma}, n={n})")
        if all(c == 0.0 for c in self.coefficients[1:]):
            raise AdmissibilityError("admissibility needs Gamma_j != 0 for at least one j >= 1")

    def profile(self, mu) -> np.ndarray:
        """``<mu>^(-gamma) + correction <mu>^(-gamma-1)``."""
        br = japanese_bracket(mu)
        out = br ** (-self.gamma)
        if self.correction:
            out = out + self.correction * br ** (-self.gamma - 1.0)
        return out

    def component(self, j: int, mu) -> np.ndarray:
        return self.coefficients[j] * self.profile(mu)


def build_coboundary(g: LatticeGraph) -> sp.csr_matrix:
    """``d``: vertex functions to edge cochains, ``(df)(mu e_j) = f(mu + delta_j) - f(mu)``.

    On a twisted torus the head value picks up the wrap sign.
    """
    ne, nv = g.num_edges, g.num_vertices
    rows = np.concatenate([np.arange(ne), np.arange(ne)])
    cols = np.concatenate([g.edge_head, g.edge_tail])
    vals = np.concatenate([g.edge_sign, -np.ones(ne)])
    # q = 2 tori store (mu, mu+d) and (mu+d, mu) as distinct edges; duplicates are summed
    return sp.csr_matrix((vals, (rows, cols)), shape=(ne, nv))


def build_H0(g: LatticeGraph, m: float) -> sp.csr_matrix:
    """``H0 = d + d^* + m tau`` as a real symmetric sparse matrix."""
    if m <= 0:
        raise ValueError("mass m must be positive")
    d = build_coboundary(g)
    nv, ne = g.num_vertices, g.num_edges
    H = sp.bmat(
        [[m * sp.identity(nv), d.T], [d, -m * sp.identity(ne)]],
        format="csr",
    )
    return H


def potential_values(g: LatticeGraph, spec: PotentialSpec) -> np.ndarray:
    """Diagonal of ``V``: vertex values then edge values (at each edge's base point)."""
    spec.validate(g.n)
    v0 = spec.component(0, g.centered_points())
    base = g.centered_edge_base()
    coeff = np.asarray(spec.coefficients[1:])[g.edge_dir]
    ve = coeff * spec.profile(base)
    return np.concatenate([v0, ve])


def build_potential(g: LatticeGraph, spec: PotentialSpec) -> sp.csr_matrix:
    """Diagonal multiplication operator of an admissible perturbation."""
    return sp.diags(potential_values(g, spec), format="csr")


def build_H(g: LatticeGraph, m: float, spec: PotentialSpec) -> sp.csr_matrix:
    """Perturbed operator ``H = H0 + V``."""
    return (build_H0(g, m) + build_potential(g, spec)).tocsr()


def _forward_difference(values: np.ndarray, axis: int) -> np.ndarray:
    return np.diff(values, axis=axis)


def symbol_seminorms(spec: PotentialSpec, n: int, radius: int, max_order: int = 2) -> dict:
    """Largest ``|D^alpha v(mu)| <mu>^(gamma+|alpha|)`` over ``|mu_j| <= radius``.

    ``D_j v(mu) = v(mu + delta_j) - v(mu)``.  Returns a dict keyed by the
    multi-index ``alpha`` (``|alpha| <= max_order``); bounded values as the
    radius grows are the numerical signature of the symbol class.
    """
    coords = np.arange(-radius, radius + max_order + 1)
    mesh = np.stack(np.meshgrid(*([coords] * n), indexing="ij"), axis=-1)
    v = spec.profile(mesh)
    out = {}
    for order in range(max_order + 1):
        for alpha in _multi_indices(n, order):
            dv = v
            for axis, k in enumerate(alpha):
                for _ in range(k):
                    dv = _forward_difference(dv, axis)
            sl = tuple(slice(0, 2 * radius + 1) for _ in range(n))
            dv = dv[sl]
            weight = japanese_bracket(mesh[sl]) ** (spec.gamma + order)
            out[alpha] = float(np.max(np.abs(dv) * weight))
    return out


def _multi_indices(n: int, order: int):
    if n == 1:
        yield (order,)
        return
    for first in range(order, -1, -1):
        for rest in _multi_indices(n - 1, order - first):
            yield (first,) + rest


def write_triplets(A, path) -> None:
    """Write a sparse matrix as ``row col value`` lines (zero-based, header has the shape)."""
    coo = sp.coo_matrix(A)
    with open(path, "w") as fh:
        fh.write(f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {float(v)!r}\n")


def read_triplets(path) -> sp.csr_matrix:
    with open(path) as fh:
        header = fh.readline().lstrip("#").split()
        shape = (int(header[0]), int(header[1]))
        data = np.loadtxt(fh, ndmin=2)
    if data.size == 0:
        return sp.csr_matrix(shape)
    return sp.csr_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=shape)

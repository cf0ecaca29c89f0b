"""
Flat-band projector, compactly supported flat-band vectors and the
effective Hamiltonian ``P V P`` on tori.

On the fibre, the flat band ``-m`` is the kernel of ``h0(xi) + m``, i.e.
edge vectors ``x`` with ``sum_j a_j x_j = 0``.  Its orthogonal projector is

    M(xi) = 0 (+) (I - conj(a) a^T / r)

which does not depend on ``m``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .lattice import LatticeGraph, OutOfBounds
from .operators import PotentialSpec, potential_values
from .spectra import inertia_below
from .symbol import a_all, momentum_grid, r

__all__ = [
    "SingularPointError",
    "gamma_matrix",
    "M_symbol",
    "M_grid",
    "build_projector_torus",
    "LoopCochain",
    "build_loop_cochain",
    "loop_matrix",
    "effective_hamiltonian",
    "effective_count",
]

SINGULAR_TOL = 1e-14


class SingularPointError(ValueError):
    """``M`` is evaluated where ``r(xi) = 0`` (it is discontinuous there)."""


def gamma_matrix(coefficients: Sequence[float]) -> np.ndarray:
    """``diag(max(Gamma_0, 0), ..., max(Gamma_n, 0))``."""
    return np.diag(np.maximum(np.asarray(coefficients, dtype=float), 0.0))


def _edge_projector(vec: np.ndarray, rr: np.ndarray) -> np.ndarray:
    # I - conj(v) v^T / r on the edge block, zero vertex slot
    n = vec.shape[-1]
    out = np.zeros(vec.shape[:-1] + (n + 1, n + 1), dtype=complex)
    with np.errstate(invalid="ignore", divide="ignore"):
        block = -vec.conj()[..., :, None] * vec[..., None, :] / rr[..., None, None]
    block = block + np.eye(n)
    out[..., 1:, 1:] = block
    return out


def M_symbol(xi) -> np.ndarray:
    """Fibre projector onto the flat band at ``xi != 0``.

    Raises
    ------
    SingularPointError
        If any point has ``r(xi) = 0``.
    """
    xi = np.asarray(xi, dtype=float)
    rr = r(xi)
    if np.any(rr <= SINGULAR_TOL):
        raise SingularPointError("M is undefined at xi = 0")
    return _edge_projector(a_all(xi), rr)


def M_grid(xi) -> np.ndarray:
    """``M`` on a grid; at ``xi = 0`` the full eigenprojection ``diag(0, 1, ..., 1)``."""
    xi = np.asarray(xi, dtype=float)
    rr = r(xi)
    out = _edge_projector(a_all(xi), rr)
    sing = rr <= SINGULAR_TOL
    if np.any(sing):
        n = xi.shape[-1]
        out[sing] = np.diag(np.r_[0.0, np.ones(n)])
    return out


def _check_offset(g: LatticeGraph, grid_offset: Optional[str]) -> str:
    if not g.is_torus:
        raise TypeError("the projector is built on torus lattices only")
    natural = "half" if g.twisted else "none"
    if grid_offset is None:
        return natural
    if grid_offset != natural:
        raise ValueError(
            f"grid offset {grid_offset!r} needs a {'twisted' if grid_offset == 'half' else 'periodic'} torus"
        )
    return grid_offset


def build_projector_torus(
    g: LatticeGraph,
    grid_offset: Optional[str] = None,
    fibre: Callable[[np.ndarray], np.ndarray] = M_grid,
) -> np.ndarray:
    """Dense real matrix ``P = F^* diag(M(xi_k)) F`` on a torus.

    ``F`` is the unitary Fourier transform of each block component, taken
    at the vertex for the first slot and at the base point ``mu`` for edge
    ``mu e_j``.  A twisted torus pairs with the ``(k + 1/2)/q`` grid, a
    periodic one with ``k/q``.  ``fibre`` maps a grid of momenta to the
    fibre projectors (in the same Fourier convention as the operator).
    """
    offset = _check_offset(g, grid_offset)
    n, q = g.n, g.side
    xi = momentum_grid(n, q, offset).reshape(-1, n)
    Mk = fibre(xi)
    nv = g.num_vertices
    norm = 1.0 / np.sqrt(nv)

    comp_rows = [np.arange(nv)]
    comp_pts = [g.points]
    for j in range(n):
        rows = np.nonzero(g.edge_dir == j)[0]
        comp_rows.append(nv + rows)
        comp_pts.append(g.edge_base[rows])
    F = [np.exp(-2j * np.pi * (xi @ pts.T)) * norm for pts in comp_pts]

    P = np.zeros((g.dimension, g.dimension))
    imag = 0.0
    for c in range(n + 1):
        for d in range(n + 1):
            w = Mk[:, c, d]
            if not np.any(w):
                continue
            block = F[c].conj().T @ (w[:, None] * F[d])
            imag = max(imag, float(np.abs(block.imag).max()))
            P[np.ix_(comp_rows[c], comp_rows[d])] = block.real
    if imag > 1e-8:
        raise ArithmeticError(f"projector is not real (imaginary part {imag:.1e}); fibre convention mismatch")
    return P


# -- compactly supported flat-band vectors --------------------------------------


@dataclass(frozen=True)
class LoopCochain:
    """Circulation ``+1`` around the plaquette spanned by ``delta_i, delta_j`` at ``base``.

    ``edges`` are edge-block rows and ``values`` the integer entries (twist
    signs included).
    """

    base: tuple
    i: int
    j: int
    edges: np.ndarray
    values: np.ndarray

    def vector(self, g: LatticeGraph, dtype=np.int64) -> np.ndarray:
        """Embedding ``(0, g)`` into the full state space."""
        out = np.zeros(g.dimension, dtype=dtype)
        np.add.at(out, g.num_vertices + self.edges, self.values.astype(dtype))
        return out


def _plaquette(g: LatticeGraph, mu, i: int, j: int, pattern) -> LoopCochain:
    if i == j:
        raise ValueError("a plaquette needs two distinct directions")
    mu = tuple(int(x) for x in mu)
    di = tuple(int(k == i - 1) for k in range(g.n))
    dj = tuple(int(k == j - 1) for k in range(g.n))
    corners = {
        "mu": mu,
        "mu+i": tuple(a + b for a, b in zip(mu, di)),
        "mu+j": tuple(a + b for a, b in zip(mu, dj)),
    }
    rows, vals = [], []
    for where, direction, coeff in pattern(i, j):
        k, sign = g.edge_index(corners[where], direction)
        rows.append(k)
        vals.append(coeff * sign)
    return LoopCochain(mu, i, j, np.array(rows), np.array(vals, dtype=np.int64))


def _dirac_pattern(i, j):
    # mu -> mu+i -> mu+i+j -> mu+j -> mu
    return [("mu", i, 1), ("mu+i", j, 1), ("mu+j", i, -1), ("mu", j, -1)]


def build_loop_cochain(g: LatticeGraph, mu, i: int = 1, j: int = 2) -> LoopCochain:
    """Divergence-free plaquette cochain; ``(0, g)`` is an eigenvector of ``H0`` at ``-m``.

    Raises :class:`~diracflat.lattice.OutOfBounds` when the plaquette leaves a box.
    """
    if g.subdivided:
        raise TypeError("use laplace.midpoint_eigenvector on subdivided graphs")
    return _plaquette(g, mu, i, j, _dirac_pattern)


def loop_matrix(g: LatticeGraph, pattern=_dirac_pattern) -> sp.csr_matrix:
    """Sparse ``(num_edges, #plaquettes)`` matrix whose columns are the plaquette cochains.

    For ``n = 2`` there is one plaquette per lattice point; for ``n > 2`` all
    coordinate planes ``i < j`` are included (the columns are then dependent).
    On a box, plaquettes leaving the box are skipped.
    """
    cols = []
    for pt in g.points:
        for i in range(1, g.n + 1):
            for j in range(i + 1, g.n + 1):
                try:
                    cols.append(_plaquette(g, pt, i, j, pattern))
                except OutOfBounds:
                    continue
    rows = np.concatenate([c.edges for c in cols])
    vals = np.concatenate([c.values for c in cols]).astype(float)
    idx = np.repeat(np.arange(len(cols)), [len(c.edges) for c in cols])
    return sp.csr_matrix((vals, (rows, idx)), shape=(g.num_edges, len(cols)))


# -- effective Hamiltonian ------------------------------------------------------


def _diagonal(g: LatticeGraph, potential) -> np.ndarray:
    if isinstance(potential, PotentialSpec):
        return potential_values(g, potential)
    v = np.asarray(potential, dtype=float)
    if v.shape != (g.dimension,):
        raise ValueError(f"potential diagonal must have length {g.dimension}")
    return v


def effective_hamiltonian(
    g: LatticeGraph,
    potential: Union[PotentialSpec, np.ndarray],
    P: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Dense ``P V P`` on a torus; ``potential`` is a PotentialSpec or the diagonal of ``V``."""
    if P is None:
        P = build_projector_torus(g)
    v = _diagonal(g, potential)
    PVP = P @ (v[:, None] * P)
    return 0.5 * (PVP + PVP.T)


def effective_count(
    g: LatticeGraph,
    potential: Union[PotentialSpec, np.ndarray],
    lambdas,
    method: str = "auto",
    *,
    pattern=_dirac_pattern,
    fibre=M_grid,
    seed: int = 0,
) -> np.ndarray:
    """``n_+(lambda; PVP)``: eigenvalues of ``P V P`` strictly above each ``lambda``.

    ``method='loops'`` (needs ``n = 2`` and a twisted torus) uses the
    plaquette basis ``C`` of the flat band: the nonzero spectrum of ``PVP``
    is that of the pencil ``(C^T V C, C^T C)``, counted by sparse inertia.
    ``method='dense'`` assembles ``P`` and diagonalizes ``PVP``.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(lambdas <= 0):
        raise ValueError("lambda must be positive")
    if method == "auto":
        method = "loops" if (g.n == 2 and g.twisted) else "dense"
    v = _diagonal(g, potential)
    if method == "loops":
        if not (g.n == 2 and g.twisted):
            raise ValueError("the loop basis is a basis of the flat band only for n = 2 twisted tori")
        C = loop_matrix(g, pattern)
        Ve = sp.diags(v[g.num_vertices :])
        A = (C.T @ Ve @ C).tocsc()
        B = (C.T @ C).tocsc()
        k = C.shape[1]
        return np.array(
            [k - inertia_below(A - lam * B, 0.0, seed=seed + t) for t, lam in enumerate(lambdas)],
            dtype=np.int64,
        )
    if method == "dense":
        P = build_projector_torus(g, fibre=fibre)
        ev = sla.eigvalsh(effective_hamiltonian(g, v, P), check_finite=False)
        return np.array([np.count_nonzero(ev > lam) for lam in lambdas], dtype=np.int64)
    raise ValueError(f"unknown method {method!r}")

"""
Graph Laplacian of the subdivided Z^2 graph (one extra vertex on every edge).

State space layout is ``[lattice points | midpoints]`` with midpoint
``mu + delta_j/2`` stored in the row of the base edge ``mu e_j``.  With
``|B|`` the unsigned incidence matrix (edges x points),

    H~0 = [[4 I, -|B|^T], [-|B|, 2 I]].

Symbols follow the displayed convention ``a~_j = 1 + exp(2 pi i xi_j)``.
The real-space Fourier transform used for assembling projectors produces
the complex conjugate fibre, so :func:`realspace_fibre` conjugates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .asymptotics import AsymptoticPrediction, constant_C
from .flatband import SINGULAR_TOL, SingularPointError, effective_count
from .lattice import LatticeGraph, OutOfBounds
from .operators import PotentialSpec, potential_values
from .spectra import CountingCurve, _flag_box, _lambda_order, _metadata, sweep_counts
from .symbol import a_all, h0_symbol

__all__ = [
    "FLAT_VALUE",
    "a_tilde",
    "r_tilde",
    "laplace_symbol",
    "laplace_bands",
    "laplace_band_eigenvalues",
    "laplace_char_poly",
    "M_tilde",
    "M_tilde_grid",
    "realspace_fibre",
    "substitution_residual",
    "build_incidence",
    "build_subdivided_laplacian",
    "build_laplace_H",
    "MidpointEigenvector",
    "midpoint_eigenvector",
    "midpoint_loop_matrix",
    "laplace_counting_curve",
    "laplace_constant",
    "laplace_effective_count",
]

FLAT_VALUE = 2.0
UPPER = 3.0


def a_tilde(xi) -> np.ndarray:
    """``(a~_1, a~_2)`` stacked on the last axis."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != 2:
        raise ValueError("the subdivided graph lives on Z^2")
    return 1.0 + np.exp(2j * np.pi * xi)


def r_tilde(xi) -> np.ndarray:
    """``|a~_1|^2 + |a~_2|^2 = 4 cos^2(pi xi_1) + 4 cos^2(pi xi_2)``."""
    return (4.0 * np.cos(np.pi * np.asarray(xi, dtype=float)) ** 2).sum(axis=-1)


def laplace_symbol(xi) -> np.ndarray:
    """The 3 x 3 fibre matrix ``h~0(xi)``."""
    at = a_tilde(xi)
    out = np.zeros(at.shape[:-1] + (3, 3), dtype=complex)
    out[..., 0, 0] = 4.0
    out[..., 1, 1] = 2.0
    out[..., 2, 2] = 2.0
    out[..., 0, 1:] = -at
    out[..., 1:, 0] = -at.conj()
    return out


def laplace_bands(xi):
    """``(z~_-, z~_+) = 3 -/+ sqrt(1 + r~)``."""
    s = np.sqrt(1.0 + r_tilde(xi))
    return UPPER - s, UPPER + s


def laplace_band_eigenvalues(xi) -> np.ndarray:
    lo, hi = laplace_bands(xi)
    flat = np.full_like(lo, FLAT_VALUE)
    return np.sort(np.stack([lo, flat, hi], axis=-1), axis=-1)


def laplace_char_poly(xi, z):
    """``det(h~0 - z) = (2 - z)(z^2 - 6z + 8 - r~)``."""
    z = np.asarray(z)
    return (2.0 - z) * (z * z - 6.0 * z + 8.0 - r_tilde(xi))


def _mtilde(at: np.ndarray, rr: np.ndarray) -> np.ndarray:
    out = np.zeros(at.shape[:-1] + (3, 3), dtype=complex)
    a1, a2 = at[..., 0], at[..., 1]
    with np.errstate(invalid="ignore", divide="ignore"):
        out[..., 1, 1] = np.abs(a2) ** 2 / rr
        out[..., 2, 2] = np.abs(a1) ** 2 / rr
        out[..., 1, 2] = -a2 * a1.conj() / rr
        out[..., 2, 1] = -a1 * a2.conj() / rr
    return out


def M_tilde(xi) -> np.ndarray:
    """Flat-band fibre projector; undefined at ``xi = (1/2, 1/2)``."""
    rr = r_tilde(xi)
    if np.any(rr <= SINGULAR_TOL):
        raise SingularPointError("M~ is undefined at xi = (1/2, 1/2)")
    return _mtilde(a_tilde(xi), rr)


def M_tilde_grid(xi) -> np.ndarray:
    """``M~`` with the full eigenprojection ``diag(0, 1, 1)`` at the singular point."""
    rr = r_tilde(xi)
    out = _mtilde(a_tilde(xi), rr)
    sing = rr <= SINGULAR_TOL
    if np.any(sing):
        out[sing] = np.diag([0.0, 1.0, 1.0])
    return out


def realspace_fibre(xi) -> np.ndarray:
    """``M~`` in the Fourier convention of the real-space assembly (complex conjugate)."""
    return M_tilde_grid(xi).conj()


def substitution_residual(xi) -> float:
    """``max |(h~0 - 3) - h0|`` where ``h0`` has ``m = 1`` and ``a_j`` replaced by ``-a~_j``."""
    xi = np.asarray(xi, dtype=float)
    h = h0_symbol(xi, 1.0)
    at = a_tilde(xi)
    h[..., 0, 1:] = -at
    h[..., 1:, 0] = -at.conj()
    return float(np.abs(laplace_symbol(xi) - 3.0 * np.eye(3) - h).max())


# -- real space -----------------------------------------------------------------


def _require_subdivided(g: LatticeGraph) -> None:
    if not g.subdivided:
        raise TypeError("expected a SubdividedZ2 lattice")


def build_incidence(g: LatticeGraph) -> sp.csr_matrix:
    """Unsigned incidence ``|B|``: midpoint row ``mu e_j`` touches ``mu`` and ``mu + delta_j``."""
    ne, nv = g.num_edges, g.num_vertices
    rows = np.concatenate([np.arange(ne), np.arange(ne)])
    cols = np.concatenate([g.edge_head, g.edge_tail])
    vals = np.concatenate([g.edge_sign, np.ones(ne)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(ne, nv))


def build_subdivided_laplacian(g: LatticeGraph) -> sp.csr_matrix:
    """``H~0 = -Delta`` on the subdivided graph.

    On a box this is the principal submatrix of the infinite operator, so
    lattice points on the boundary keep diagonal 4.
    """
    _require_subdivided(g)
    B = build_incidence(g)
    nv, ne = g.num_vertices, g.num_edges
    return sp.bmat(
        [[4.0 * sp.identity(nv), -B.T], [-B, 2.0 * sp.identity(ne)]],
        format="csr",
    )


def build_laplace_H(g: LatticeGraph, spec: PotentialSpec) -> sp.csr_matrix:
    """``H~ = H~0 + V~`` with ``v~_0`` on points and ``v~_j`` on the midpoints ``mu + delta_j/2``."""
    _require_subdivided(g)
    return (build_subdivided_laplacian(g) + sp.diags(potential_values(g, spec))).tocsr()


@dataclass(frozen=True)
class MidpointEigenvector:
    """Alternating ``+-1`` on the four midpoints around the plaquette at ``base``.

    Values: ``+1`` at ``mu + (1/2, 0)``, ``-1`` at ``mu + (0, 1/2)``,
    ``-1`` at ``mu + (1, 1/2)`` and ``+1`` at ``mu + (1/2, 1)``.
    """

    base: tuple
    rows: np.ndarray
    values: np.ndarray

    def vector(self, g: LatticeGraph, dtype=np.int64) -> np.ndarray:
        out = np.zeros(g.dimension, dtype=dtype)
        np.add.at(out, g.num_vertices + self.rows, self.values.astype(dtype))
        return out


def _midpoint_pattern(i, j):
    return [("mu", i, 1), ("mu+i", j, -1), ("mu+j", i, 1), ("mu", j, -1)]


def midpoint_eigenvector(g: LatticeGraph, mu) -> MidpointEigenvector:
    """Finitely supported eigenvector of ``H~0`` at the flat value 2.

    Raises :class:`~diracflat.lattice.OutOfBounds` if a midpoint leaves the box.
    """
    _require_subdivided(g)
    mu = tuple(int(x) for x in mu)
    corners = {"mu": mu, "mu+i": (mu[0] + 1, mu[1]), "mu+j": (mu[0], mu[1] + 1)}
    rows, vals = [], []
    for where, direction, coeff in _midpoint_pattern(1, 2):
        k, sign = g.edge_index(corners[where], direction)
        rows.append(k)
        vals.append(coeff * sign)
    return MidpointEigenvector(mu, np.array(rows), np.array(vals, dtype=np.int64))


def midpoint_loop_matrix(g: LatticeGraph) -> sp.csr_matrix:
    """Columns are the midpoint eigenvectors (midpoint block only)."""
    from .flatband import loop_matrix

    _require_subdivided(g)
    return loop_matrix(g, _midpoint_pattern)


def laplace_counting_curve(
    g: LatticeGraph,
    spec: PotentialSpec,
    lambdas,
    *,
    seed: int = 0,
    H=None,
) -> CountingCurve:
    """``N~(lambda) = #eig(H~) in (2 + lambda, 3)``."""
    lam = _lambda_order(lambdas)
    if np.any(lam <= 0) or np.any(lam >= 1):
        raise ValueError("lambda samples must lie in (0, 1)")
    if H is None:
        H = build_laplace_H(g, spec)
    counts, times = sweep_counts(H, FLAT_VALUE + lam, UPPER, seed=seed)
    return CountingCurve(
        lambdas=lam,
        counts=counts,
        runtime_ms=times,
        flagged=_flag_box(g, lam, spec.gamma),
        metadata=_metadata(g, 1.0, spec, seed, model="laplace"),
    )


def laplace_constant(gamma: float, coefficients, q: int = 128) -> AsymptoticPrediction:
    """``C~`` from ``M~`` and ``Gamma~ = diag(max(Gamma~_j, 0))``."""
    return constant_C(2, gamma, coefficients, q=q, fibre=M_tilde_grid)


def laplace_effective_count(
    g: LatticeGraph,
    spec: PotentialSpec,
    lambdas,
    method: str = "auto",
    *,
    seed: int = 0,
) -> np.ndarray:
    """``n_+(lambda; P~ V~ P~)`` on a subdivided torus.

    The midpoint loops span the flat band only when the momentum grid avoids
    the singular point ``(1/2, 1/2)``, i.e. on twisted tori of even side.
    """
    _require_subdivided(g)
    if g.twisted and g.side % 2:
        if method == "loops":
            raise ValueError("odd twisted tori contain xi = (1/2, 1/2); use method='dense'")
        method = "dense"
    return effective_count(
        g, spec, lambdas, method, pattern=_midpoint_pattern, fibre=realspace_fibre, seed=seed
    )

"""
Momentum-space symbol of the discrete Dirac operator.

Points of the torus T^n = R^n / Z^n are given as arrays whose last axis has
length ``n``; every function broadcasts over leading axes so whole momentum
grids can be evaluated at once.  The Fourier convention is
``(F f)(xi) = sum_mu exp(-2 pi i xi.mu) f(mu)``, under which the real-space
operator becomes multiplication by

              [  m    a_1  ...  a_n ]
    h0(xi) =  [ a_1*  -m        0   ]
              [  :         ..       ]
              [ a_n*   0        -m  ]

with ``a_j(xi) = -1 + exp(-2 pi i xi_j)``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "PoleError",
    "reduce_point",
    "a",
    "a_all",
    "r",
    "r_partial",
    "h0_symbol",
    "BandSet",
    "bands",
    "band_eigenvalues",
    "char_poly",
    "resolvent_closed_form",
    "momentum_grid",
]


class PoleError(ZeroDivisionError):
    """``z`` is a pole of the closed-form resolvent (a point of the spectrum)."""


def reduce_point(xi) -> np.ndarray:
    """Coordinates reduced into ``[0, 1)``."""
    xi = np.asarray(xi, dtype=float)
    return xi - np.floor(xi)


def a(j: int, xi) -> np.ndarray:
    """``a_j(xi) = -1 + exp(-2 pi i xi_j)`` for a one-based direction ``j``."""
    xi = np.asarray(xi, dtype=float)
    n = xi.shape[-1]
    if not 1 <= j <= n:
        raise ValueError(f"direction must be in 1..{n}")
    return -1.0 + np.exp(-2j * np.pi * xi[..., j - 1])


def a_all(xi) -> np.ndarray:
    """All ``a_j`` stacked along the last axis."""
    xi = np.asarray(xi, dtype=float)
    return -1.0 + np.exp(-2j * np.pi * xi)


def _abs_a2(xi) -> np.ndarray:
    # |a_j|^2 = 4 sin^2(pi xi_j); the sine form is exact near xi_j = 0
    return 4.0 * np.sin(np.pi * np.asarray(xi, dtype=float)) ** 2


def r(xi) -> np.ndarray:
    """``r(xi) = sum_j |a_j(xi)|^2``, in ``[0, 4n]`` and zero only at ``xi = 0``."""
    return _abs_a2(xi).sum(axis=-1)


def r_partial(i: int, xi) -> np.ndarray:
    """``r_i = r - |a_i|^2``."""
    xi = np.asarray(xi, dtype=float)
    return r(xi) - _abs_a2(xi[..., i - 1])


def h0_symbol(xi, m: float) -> np.ndarray:
    """The ``(n+1) x (n+1)`` Hermitian fibre matrix ``h0(xi)``."""
    if m <= 0:
        raise ValueError("mass m must be positive")
    xi = np.asarray(xi, dtype=float)
    n = xi.shape[-1]
    out = np.zeros(xi.shape[:-1] + (n + 1, n + 1), dtype=complex)
    aj = a_all(xi)
    out[..., 0, 0] = m
    idx = np.arange(1, n + 1)
    out[..., idx, idx] = -m
    out[..., 0, 1:] = aj
    out[..., 1:, 0] = aj.conj()
    return out


class BandSet(NamedTuple):
    """Band functions ``z_-``, the flat value ``z_0 = -m`` (multiplicity n-1) and ``z_+``."""

    z_minus: np.ndarray
    z_flat: float
    z_plus: np.ndarray
    flat_multiplicity: int


def bands(xi, m: float) -> BandSet:
    xi = np.asarray(xi, dtype=float)
    zp = np.sqrt(m * m + r(xi))
    return BandSet(-zp, -float(m), zp, xi.shape[-1] - 1)


def band_eigenvalues(xi, m: float) -> np.ndarray:
    """Sorted eigenvalues of ``h0(xi)`` from the closed-form bands."""
    xi = np.asarray(xi, dtype=float)
    n = xi.shape[-1]
    b = bands(xi, m)
    flat = np.full(xi.shape[:-1] + (n - 1,), -float(m))
    ev = np.concatenate([b.z_minus[..., None], flat, b.z_plus[..., None]], axis=-1)
    return np.sort(ev, axis=-1)


def char_poly(xi, z, m: float):
    """``det(h0(xi) - z) = (-1)^n (m+z)^(n-1) (m^2 - z^2 + r(xi))``."""
    xi = np.asarray(xi, dtype=float)
    n = xi.shape[-1]
    z = np.asarray(z)
    return (-1) ** n * (m + z) ** (n - 1) * (m * m - z * z + r(xi))


def resolvent_closed_form(xi, z: complex, m: float) -> np.ndarray:
    """``(h0(xi) - z)^{-1}`` from the explicit cofactor formula.

    Raises :class:`PoleError` when ``(m+z)(m^2 - z^2 + r)`` vanishes.
    Only a single point ``xi`` (1-D array) is accepted.
    """
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 1:
        raise ValueError("resolvent_closed_form takes a single momentum point")
    n = xi.size
    aj = a_all(xi)
    abs2 = _abs_a2(xi)
    rr = abs2.sum()
    denom = (m + z) * (m * m - z * z + rr)
    if abs(denom) == 0.0:
        raise PoleError(f"z = {z} lies on the spectrum at xi = {xi}")
    zm = z + m
    out = np.empty((n + 1, n + 1), dtype=complex)
    out[0, 0] = zm * zm
    out[0, 1:] = aj * zm
    out[1:, 0] = aj.conj() * zm
    # off-diagonal edge block: entry (i, l) = a_l conj(a_i)
    out[1:, 1:] = aj.conj()[:, None] * aj[None, :]
    diag = z * z - m * m - (rr - abs2)
    out[np.arange(1, n + 1), np.arange(1, n + 1)] = diag
    return out / denom


def momentum_grid(n: int, q: int, offset: str = "half") -> np.ndarray:
    """The ``q^n`` grid ``k/q`` (``offset='none'``) or ``(k+1/2)/q`` (``'half'``).

    Returned with shape ``(q,)*n + (n,)`` in lexicographic ``k`` order.
    """
    if offset not in ("half", "none"):
        raise ValueError("offset must be 'half' or 'none'")
    shift = 0.5 if offset == "half" else 0.0
    k = (np.arange(q) + shift) / q
    mesh = np.meshgrid(*([k] * n), indexing="ij")
    return np.stack(mesh, axis=-1)

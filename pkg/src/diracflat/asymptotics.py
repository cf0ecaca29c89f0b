"""
Leading-order prediction ``N(lambda) ~ C tau_n lambda^(-n/gamma)`` and fits.

``C`` is the Brillouin-zone average of ``Tr((Gamma M(xi))^(n/gamma))``,
computed by the midpoint rule on the half-offset grid (which never touches
the singular point of ``M``) together with a second grid of twice the
resolution.  The integrand is bounded, so the two-grid Richardson value
``(4 C(2q) - C(q)) / 3`` is reported as the estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gamma as gamma_fn

from .flatband import M_grid, gamma_matrix
from .spectra import CountingCurve

__all__ = [
    "InsufficientData",
    "tau",
    "superlevel_count",
    "trace_fractional_power",
    "quadrature",
    "AsymptoticPrediction",
    "constant_C",
    "predicted_N",
    "FitResult",
    "fit_counting_curve",
    "trend_toward_one",
]

GAP_TOL = 1e-3
MAX_POINTS = 1e9


class InsufficientData(ValueError):
    """Too few usable samples for a log-log fit."""


def tau(n: int) -> float:
    """Volume of the unit ball in R^n, ``pi^(n/2) / Gamma(n/2 + 1)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(math.pi ** (n / 2) / gamma_fn(n / 2 + 1))


def _count_below(n: int, s) -> np.ndarray:
    """Lattice points of Z^n with ``|mu|^2 < s`` (``s`` array, elementwise)."""
    s = np.asarray(s, dtype=float)
    if n == 1:
        k = np.floor(np.sqrt(np.maximum(s, 0.0))).astype(np.int64)
        k = np.where(k * k >= s, k - 1, k)
        k = np.where((k + 1) ** 2 < s, k + 1, k)
        return np.where(s > 0, 2 * k + 1, 0)
    R = int(math.isqrt(int(max(float(np.max(s)), 0.0))) + 1)
    x = np.arange(-R, R + 1)
    return _count_below(n - 1, s[..., None] - (x * x)).sum(axis=-1)


def superlevel_count(n: int, gamma: float, lam: float) -> int:
    """``#{mu in Z^n : <mu>^(-gamma) > lam}`` by radius enumeration.

    >>> superlevel_count(2, 1.0, 0.5)
    9
    """
    if not 0 < lam <= 1:
        raise ValueError("lambda must lie in (0, 1]")
    if lam ** (-n / gamma) > MAX_POINTS:
        raise OverflowError("more than 1e9 lattice points requested")
    return int(_count_below(n, lam ** (-2.0 / gamma) - 1.0))


def trace_fractional_power(Gamma, M, p: float) -> np.ndarray:
    """``sum_i sigma_i^p`` over the spectrum of ``Gamma^(1/2) M Gamma^(1/2)``.

    ``Gamma`` is a diagonal matrix (or its diagonal) with non-negative
    entries; ``M`` may carry leading batch axes.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    g = np.asarray(Gamma, dtype=float)
    g = np.diag(g) if g.ndim == 2 else g
    if np.any(g < 0):
        raise ValueError("Gamma must be non-negative (apply max(., 0) first)")
    s = np.sqrt(g)
    S = s[:, None] * np.asarray(M) * s[None, :]
    sigma = np.linalg.eigvalsh(S)
    return (np.clip(sigma, 0.0, None) ** p).sum(axis=-1)


def _rank_one_trace(xi: np.ndarray, g: np.ndarray, p: float) -> np.ndarray:
    # n = 2: Gamma^(1/2) M Gamma^(1/2) has rank one, so the trace power is (Tr Gamma M)^p
    s = np.sin(np.pi * xi) ** 2
    tot = s.sum(axis=-1)
    t = (g[1] * s[..., 1] + g[2] * s[..., 0]) / tot
    return t**p


def quadrature(
    n: int,
    gamma: float,
    coefficients: Sequence[float],
    q: int,
    fibre: Optional[Callable] = None,
    chunk: int = 1 << 16,
) -> float:
    """Midpoint rule for ``C`` on the ``(k + 1/2)/q`` grid."""
    g = np.diag(gamma_matrix(coefficients))
    if len(g) != n + 1:
        raise ValueError(f"expected {n + 1} coefficients")
    p = n / gamma
    if not np.any(g[1:] > 0):
        return 0.0
    k = (np.arange(q) + 0.5) / q
    total = 0.0
    # iterate over the first coordinate in slabs to bound memory
    slab = max(1, chunk // q ** (n - 1))
    for start in range(0, q, slab):
        first = k[start : start + slab]
        mesh = np.meshgrid(first, *([k] * (n - 1)), indexing="ij")
        xi = np.stack(mesh, axis=-1).reshape(-1, n)
        if fibre is None and n == 2:
            vals = _rank_one_trace(xi, g, p)
        else:
            M = (fibre or M_grid)(xi)
            vals = trace_fractional_power(g, M, p)
        total += float(vals.sum())
    return total / q**n


@dataclass(frozen=True)
class AsymptoticPrediction:
    """Predicted leading term and quadrature diagnostics."""

    n: int
    gamma: float
    coefficients: tuple
    exponent: float
    tau: float
    C: float
    prefactor: float
    q: int
    C_coarse: float
    C_fine: float
    gap: float
    converged: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "gamma": self.gamma,
            "Gamma": list(self.coefficients),
            "exponent": self.exponent,
            "tau": self.tau,
            "C": self.C,
            "prefactor": self.prefactor,
            "q": self.q,
            "C_q": self.C_coarse,
            "C_2q": self.C_fine,
            "two_grid_gap": self.gap,
            "converged": self.converged,
        }


def constant_C(
    n: int,
    gamma: float,
    coefficients: Sequence[float],
    q: int = 128,
    fibre: Optional[Callable] = None,
) -> AsymptoticPrediction:
    """Accumulation constant ``C`` with the two-grid diagnostic.

    Parameters
    ----------
    n, gamma : dimension and decay rate
    coefficients : ``(Gamma_0, ..., Gamma_n)``; negative values are truncated to 0
    q : coarse grid side; the fine grid uses ``2q``
    fibre : callable returning fibre projectors on a batch of momenta
        (defaults to the Dirac ``M``).

    Examples
    --------
    >>> round(constant_C(2, 1.0, (0, 1, 1), q=16).C, 12)
    1.0
    """
    if q < 8:
        raise ValueError("q must be >= 8")
    if not 0 < gamma < n:
        raise ValueError("gamma must be < n and > 0")
    coarse = quadrature(n, gamma, coefficients, q, fibre)
    fine = quadrature(n, gamma, coefficients, 2 * q, fibre)
    C = (4.0 * fine - coarse) / 3.0
    gap = abs(coarse - fine) / abs(fine) if fine else 0.0
    t = tau(n)
    return AsymptoticPrediction(
        n=n,
        gamma=float(gamma),
        coefficients=tuple(float(c) for c in coefficients),
        exponent=n / gamma,
        tau=t,
        C=C,
        prefactor=C * t,
        q=q,
        C_coarse=coarse,
        C_fine=fine,
        gap=gap,
        converged=gap <= GAP_TOL,
    )


def predicted_N(pred: AsymptoticPrediction, lam) -> np.ndarray:
    """``C tau_n lambda^(-n/gamma)``."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("lambda must be positive")
    return pred.prefactor * lam ** (-pred.exponent)


@dataclass(frozen=True)
class FitResult:
    exponent_hat: float
    prefactor_hat: float
    r_squared: float
    used: np.ndarray = field(repr=False)
    ratios: Optional[np.ndarray] = field(default=None, repr=False)


def fit_counting_curve(
    curve: CountingCurve,
    prediction: Optional[AsymptoticPrediction] = None,
    min_count: int = 10,
    min_points: int = 5,
) -> FitResult:
    """Least squares of ``log N`` against ``log lambda``.

    The window drops the largest ``lambda`` and every flagged sample, and
    keeps samples with ``N >= min_count``.  ``exponent_hat`` is minus the
    slope and ``prefactor_hat`` is ``exp(intercept)``.  With a prediction,
    per-point ratios ``N lambda^p / (C tau_n)`` are attached for all samples.
    """
    lam = np.asarray(curve.lambdas, dtype=float)
    N = np.asarray(curve.counts, dtype=float)
    use = np.ones(len(lam), dtype=bool)
    if len(lam):
        use[np.argmax(lam)] = False
    use &= ~np.asarray(curve.flagged, dtype=bool)
    use &= N >= min_count
    if use.sum() < min_points:
        raise InsufficientData(
            f"{int(use.sum())} usable samples (need {min_points} with N >= {min_count})"
        )
    x, y = np.log(lam[use]), np.log(N[use])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    ratios = None
    if prediction is not None and prediction.prefactor > 0:
        ratios = curve.ratios(prediction.prefactor, prediction.exponent)
    return FitResult(-float(slope), float(math.exp(intercept)), r2, use, ratios)


def trend_toward_one(lambdas, ratios, k: int = 3) -> bool:
    """Mean ``|ratio - 1|`` over the ``k`` smallest ``lambda`` is at most that over the ``k`` largest."""
    lam = np.asarray(lambdas, dtype=float)
    dev = np.abs(np.asarray(ratios, dtype=float) - 1.0)
    order = np.argsort(lam)
    return bool(dev[order[:k]].mean() <= dev[order[-k:]].mean())

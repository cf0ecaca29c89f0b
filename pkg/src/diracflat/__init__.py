"""
Discrete Dirac operator on Z^n and the subdivided Z^2 Laplacian: symbols,
flat-band projectors, decaying perturbations and eigenvalue accumulation
at the flat band.
"""

from .asymptotics import (
    AsymptoticPrediction,
    InsufficientData,
    constant_C,
    fit_counting_curve,
    predicted_N,
    superlevel_count,
    tau,
    trace_fractional_power,
)
from .flatband import (
    SingularPointError,
    build_loop_cochain,
    build_projector_torus,
    effective_count,
    effective_hamiltonian,
    gamma_matrix,
    M_symbol,
)
from .lattice import Box, LatticeGraph, OutOfBounds, SubdividedZ2, Torus, build_lattice, edge_representative
from .operators import PotentialSpec, build_coboundary, build_H, build_H0, build_potential
from .spectra import CountingCurve, ShiftOnEigenvalue, count_interval, counting_curve, inertia_below
from .symbol import PoleError, a, bands, char_poly, h0_symbol, r, r_partial, resolvent_closed_form

__version__ = "0.1.0"

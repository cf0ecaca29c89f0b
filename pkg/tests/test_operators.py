import numpy as np
import pytest

from diracflat.lattice import Box, Torus, build_lattice
from diracflat.operators import (
    AdmissibilityError,
    PotentialSpec,
    build_coboundary,
    build_H,
    build_H0,
    build_potential,
    japanese_bracket,
    potential_values,
    read_triplets,
    symbol_seminorms,
    write_triplets,
)
from diracflat.spectra import dense_count_interval

from frozen import DENSE_COUNTS


def test_constants_in_kernel():
    g = build_lattice(2, Torus(5))
    assert np.abs(build_coboundary(g) @ np.ones(25)).max() == 0


def test_laplacian_degree():
    g = build_lattice(2, Torus(2))
    d = build_coboundary(g)
    assert np.all((d.T @ d).diagonal() == 4)
    g = build_lattice(2, Torus(4))
    d = build_coboundary(g)
    lap = (d.T @ d).toarray()
    assert np.all(np.diag(lap) == 4) and np.all(lap.sum(axis=1) == 0)


@pytest.mark.parametrize("geom", [Box(3), Torus(4), Torus(5, twisted=True)])
def test_adjointness(rng, geom):
    # single storage: <g1, g2>_1 with the 1/2 weight over both orientations is the plain sum
    g = build_lattice(2, geom)
    d = build_coboundary(g)
    f = rng.normal(size=g.num_vertices)
    e = rng.normal(size=g.num_edges)
    assert abs((d @ f) @ e - f @ (d.T @ e)) <= 1e-12 * np.linalg.norm(f) * np.linalg.norm(e) * 4


def test_adjoint_sums_incoming_minus_outgoing():
    g = build_lattice(2, Box(2))
    d = build_coboundary(g)
    e = np.zeros(g.num_edges)
    k, _ = g.edge_index((0, 0), 1)
    e[k] = 1.0
    out = d.T @ e
    assert out[g.vertex_index((1, 0))] == 1.0 and out[g.vertex_index((0, 0))] == -1.0


@pytest.mark.parametrize("geom", [Box(3), Torus(4), Torus(3, twisted=True)])
def test_supersymmetry(geom):
    g = build_lattice(2, geom)
    H = build_H0(g, 0.7)
    assert abs(H - H.T).max() == 0
    H2 = (H @ H).tocsr()
    nv = g.num_vertices
    off = H2[:nv, nv:]
    assert (abs(off).max() if off.nnz else 0.0) <= 1e-12


def test_H0_row_structure():
    g = build_lattice(2, Box(2))
    H = build_H0(g, 1.5).toarray()
    nv = g.num_vertices
    assert np.all(np.diag(H)[:nv] == 1.5) and np.all(np.diag(H)[nv:] == -1.5)
    assert set(np.unique(H[:nv, nv:])) <= {-1.0, 0.0, 1.0}


def test_torus_spectrum_in_bands():
    ev = np.linalg.eigvalsh(build_H0(build_lattice(2, Torus(3)), 1.0).toarray())
    assert np.all((np.abs(ev) >= 1 - 1e-12) & (np.abs(ev) <= 3 + 1e-12))


def test_mass_must_be_positive():
    with pytest.raises(ValueError):
        build_H0(build_lattice(2, Box(1)), 0.0)


def test_potential_values():
    spec = PotentialSpec(1.0, (0.5, 1.0, 2.0))
    g = build_lattice(2, Box(5))
    v = potential_values(g, spec)
    assert v[g.vertex_index((0, 0))] == 0.5
    k, _ = g.edge_index((3, 4), 1)
    assert v[g.num_vertices + k] == pytest.approx(1 / np.sqrt(26), abs=1e-15)
    k, _ = g.edge_index((0, 0), 2)
    assert v[g.num_vertices + k] == 2.0


def test_potential_torus_uses_minimal_image():
    g = build_lattice(2, Torus(6))
    v = potential_values(g, PotentialSpec(1.0, (1.0, 1.0, 1.0)))
    assert v[g.vertex_index((5, 0))] == pytest.approx(v[g.vertex_index((1, 0))])


@pytest.mark.parametrize(
    "gamma, coeffs",
    [(2.0, (0, 1, 1)), (0.0, (0, 1, 1)), (1.0, (1, 0, 0)), (1.0, (0, 1))],
)
def test_rejects_non_admissible(gamma, coeffs):
    with pytest.raises(AdmissibilityError):
        PotentialSpec(gamma, coeffs).validate(2)


def test_disabled_check_gives_H0():
    g = build_lattice(2, Box(2))
    spec = PotentialSpec(1.0, (0, 0, 0), check_admissible=False)
    assert abs(build_H(g, 1.0, spec) - build_H0(g, 1.0)).max() == 0


def test_perturbation_norm_bound(rng):
    g = build_lattice(2, Box(4))
    coeffs = tuple(rng.uniform(-2, 2, 3))
    spec = PotentialSpec(0.8, coeffs)
    diff = (build_H(g, 1.0, spec) - build_H0(g, 1.0)).toarray()
    assert np.linalg.norm(diff, 2) <= max(abs(c) for c in coeffs) + 1e-14


def test_eigenvalues_monotone_in_coupling():
    g = build_lattice(2, Box(3))
    H0 = build_H0(g, 1.0)
    V = build_potential(g, PotentialSpec(1.0, (1.0, 1.0, 1.0)))
    prev = None
    for s in np.linspace(0, 1, 6):
        ev = np.linalg.eigvalsh((H0 + s * V).toarray())
        if prev is not None:
            assert np.all(ev >= prev - 1e-12)
        prev = ev


@pytest.mark.parametrize("gamma", [0.5, 1.0, 1.7])
def test_symbol_class_seminorms_bounded(gamma):
    spec = PotentialSpec(gamma, (1, 1, 1))
    small = symbol_seminorms(spec, 2, 20)
    big = symbol_seminorms(spec, 2, 60)
    for alpha, val in big.items():
        assert val <= 1.05 * small[alpha] + 1e-12


def test_correction_term():
    spec = PotentialSpec(1.0, (0, 1, 1), correction=0.5)
    mu = np.array([[3, 4]])
    assert spec.profile(mu)[0] == pytest.approx(26**-0.5 + 0.5 * 26**-1.0)


def test_japanese_bracket():
    assert japanese_bracket([3, 4]) == pytest.approx(np.sqrt(26))


def test_triplet_roundtrip(tmp_path):
    g = build_lattice(2, Torus(3, twisted=True))
    H = build_H(g, 1.0, PotentialSpec(1.0, (0.1, 1.0, 0.5)))
    path = tmp_path / "H.txt"
    write_triplets(H, path)
    assert abs(read_triplets(path) - H).max() == 0


@pytest.mark.parametrize("config, expected", DENSE_COUNTS)
def test_dense_oracle_fixture(config, expected):
    L, m, gamma, G, lam = config
    H = build_H(build_lattice(2, Box(L)), m, PotentialSpec(gamma, G))
    assert dense_count_interval(H, -m + lam, 0.0) == expected

import numpy as np
import pytest

from diracflat.symbol import (
    PoleError,
    a,
    band_eigenvalues,
    bands,
    char_poly,
    h0_symbol,
    momentum_grid,
    r,
    r_partial,
    reduce_point,
    resolvent_closed_form,
)


@pytest.mark.parametrize(
    "xi1, expected",
    [(0.0, 0.0), (0.5, -2.0), (0.25, -1.0 - 1.0j)],
)
def test_a_values(xi1, expected):
    assert a(1, [xi1, 0.3]) == pytest.approx(expected, abs=1e-15)


def test_abs_a_identity(rng):
    xi = rng.random((100, 3))
    for j in (1, 2, 3):
        np.testing.assert_allclose(np.abs(a(j, xi)) ** 2, 4 * np.sin(np.pi * xi[:, j - 1]) ** 2, atol=1e-14)


def test_a_rejects_direction():
    with pytest.raises(ValueError):
        a(3, [0.1, 0.2])


@pytest.mark.parametrize(
    "xi, expected",
    [((0.0, 0.0), 0.0), ((0.5, 0.5), 8.0), ((0.5, 0.5, 0.5), 12.0), ((0.25, 0.25), 4.0)],
)
def test_r_values(xi, expected):
    assert r(xi) == pytest.approx(expected, abs=1e-14)


def test_r_partial(rng):
    xi = rng.random((20, 2))
    np.testing.assert_allclose(r_partial(1, xi), 4 * np.sin(np.pi * xi[:, 1]) ** 2, atol=1e-14)


def test_reduce_point():
    np.testing.assert_allclose(reduce_point([1.25, -0.25]), [0.25, 0.75])


def test_h0_at_zero():
    h = h0_symbol([0.0, 0.0], 1.0)
    np.testing.assert_allclose(h, np.diag([1.0, -1.0, -1.0]))


def test_h0_layout():
    xi = np.array([0.1, 0.3])
    h = h0_symbol(xi, 0.5)
    assert h[0, 0] == 0.5 and h[1, 1] == h[2, 2] == -0.5
    assert h[0, 2] == a(2, xi)
    np.testing.assert_allclose(h, h.conj().T)


def test_corner_eigenvalues():
    ev = np.linalg.eigvalsh(h0_symbol([0.5, 0.5], 1.0))
    np.testing.assert_allclose(ev, [-3.0, -1.0, 3.0], atol=1e-14)


@pytest.mark.parametrize("n, m", [(2, 1.0), (3, 0.4), (4, 2.0)])
def test_bands_match_eigensolver(rng, n, m):
    xi = rng.random((1000, n))
    ev = np.linalg.eigvalsh(h0_symbol(xi, m))
    assert np.abs(ev - band_eigenvalues(xi, m)).max() <= 1e-12


def test_band_range(rng):
    b = bands(rng.random((500, 2)), 1.0)
    np.testing.assert_allclose(b.z_minus, -b.z_plus)
    assert b.z_plus.min() >= 1.0 and b.z_plus.max() <= 3.0
    assert b.z_flat == -1.0 and b.flat_multiplicity == 1


def test_char_poly_roots():
    xi = np.array([0.2, 0.7])
    assert char_poly(xi, -1.0, 1.0) == 0.0
    zp = bands(xi, 1.0).z_plus
    assert abs(char_poly(xi, zp, 1.0)) < 1e-12


@pytest.mark.parametrize("n", [2, 3])
def test_char_poly_matches_det(rng, n):
    for _ in range(200):
        xi = rng.random(n)
        z = complex(rng.normal(), rng.normal())
        det = np.linalg.det(h0_symbol(xi, 0.8) - z * np.eye(n + 1))
        cp = char_poly(xi, z, 0.8)
        assert abs(cp - det) <= 1e-10 * max(1.0, abs(det))


def test_resolvent_in_gap_is_minus_inverse(rng):
    xi = rng.random(2)
    R = resolvent_closed_form(xi, 0.0, 1.0)
    np.testing.assert_allclose(R, np.linalg.inv(h0_symbol(xi, 1.0)), atol=1e-12)


def test_resolvent_conjugate_symmetry(rng):
    xi = rng.random(3)
    np.testing.assert_allclose(resolvent_closed_form(xi, 1j, 1.0).conj().T, resolvent_closed_form(xi, -1j, 1.0), atol=1e-14)


def test_resolvent_corner():
    xi = np.array([0.5, 0.5])
    R = resolvent_closed_form(xi, 2j, 1.0)
    np.testing.assert_allclose(R, np.linalg.inv(h0_symbol(xi, 1.0) - 2j * np.eye(3)), atol=1e-10)


def test_resolvent_pole():
    with pytest.raises(PoleError):
        resolvent_closed_form(np.array([0.3, 0.1]), -1.0, 1.0)


def test_momentum_grid():
    g = momentum_grid(2, 4, "half")
    assert g.shape == (4, 4, 2)
    np.testing.assert_allclose(g[0, 1], [0.125, 0.375])
    assert momentum_grid(2, 3, "none")[0, 0].tolist() == [0.0, 0.0]
    with pytest.raises(ValueError):
        momentum_grid(2, 3, "quarter")

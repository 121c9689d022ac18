"""Lie-group core: exp/log, (co)adjoint calculus, tau normalization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from epaut.errors import CutLocusError
from epaut.groups import CircleGroup, Rotation3Group, hat, make_group, unhat

RNG = np.random.default_rng(20240811)

U1 = CircleGroup()
SO3 = Rotation3Group()


def so3_vectors(n):
    return RNG.uniform(-1.5, 1.5, size=(n, 3))


# ---------------------------------------------------------------- exponential


def test_exp_identity_cases():
    assert np.allclose(SO3.exp(np.zeros(3)), np.eye(3))
    assert U1.exp(np.array([0.0])) == 0.0
    # abelian exponential is additive
    assert np.isclose(U1.exp(np.array([np.pi])), np.pi)


def test_exp_quarter_turn_matches_series_oracle():
    xi = np.array([0.0, 0.0, np.pi / 2])
    # truncated matrix-power series, 30 terms
    K = hat(xi)
    term = np.eye(3)
    series = np.eye(3)
    for k in range(1, 30):
        term = term @ K / k
        series = series + term
    assert np.allclose(SO3.exp(xi), series, atol=1e-14)
    # explicit quarter turn about the third axis
    expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    assert np.allclose(SO3.exp(xi), expected, atol=1e-14)


def test_log_roundtrip_inside_injectivity_radius():
    xi = so3_vectors(100)
    # keep |xi| < pi - 0.1
    xi *= ((np.pi - 0.1) * RNG.uniform(0.05, 1.0, 100) / np.linalg.norm(xi, axis=-1))[:, None]
    assert np.allclose(SO3.log(SO3.exp(xi)), xi, atol=1e-10)
    g = SO3.exp(xi)
    assert np.allclose(SO3.exp(SO3.log(g)), g, atol=1e-10)


def test_log_identity_and_cut_locus():
    assert np.allclose(SO3.log(np.eye(3)), 0.0)
    with pytest.raises(CutLocusError):
        SO3.log(SO3.exp(np.array([np.pi, 0.0, 0.0])))


def test_orthogonality_of_exp():
    g = SO3.exp(so3_vectors(50))
    err = np.swapaxes(g, -1, -2) @ g - np.eye(3)
    assert np.max(np.abs(err)) < 1e-12


# ------------------------------------------------------------------- brackets


def test_bracket_structure_constants():
    e = np.eye(3)
    assert np.allclose(SO3.ad(e[0], e[1]), e[2])
    assert np.allclose(SO3.ad(e[1], e[2]), e[0])
    assert U1.ad(np.array([0.3]), np.array([1.2])) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_bracket_antisymmetry_and_jacobi(seed):
    rng = np.random.default_rng(seed)
    x, y, z = rng.normal(size=(3, 3))
    assert np.allclose(SO3.ad(x, y), -SO3.ad(y, x), atol=1e-14)
    cyc = SO3.ad(SO3.ad(x, y), z) + SO3.ad(SO3.ad(y, z), x) + SO3.ad(SO3.ad(z, x), y)
    assert np.allclose(cyc, 0.0, atol=1e-13)


# ----------------------------------------------------------- duality identities


def test_coadjoint_duality_against_matrix_conjugation():
    # <coAd(g, s), xi> = <s, Ad_g xi>, Ad computed by explicit conjugation
    g = SO3.random(RNG, (100,))
    xi = so3_vectors(100)
    s = so3_vectors(100)
    conj = unhat(g @ hat(xi) @ np.swapaxes(g, -1, -2))
    assert np.allclose(SO3.Ad(g, xi), conj, atol=1e-12)
    lhs = SO3.pair(SO3.coAd(g, s), xi)
    rhs = SO3.pair(s, SO3.Ad(g, xi))
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_infinitesimal_coadjoint_duality():
    xi, eta, s = so3_vectors(50), so3_vectors(50), so3_vectors(50)
    lhs = SO3.pair(SO3.coad(xi, s), eta)
    rhs = SO3.pair(s, SO3.ad(xi, eta))
    assert np.allclose(lhs, rhs, atol=1e-13)


def test_abelian_coadjoint_is_identity():
    s = np.array([0.7])
    assert np.allclose(U1.coAd(np.array(1.3), s), s)
    assert np.allclose(SO3.coAd(np.eye(3), np.array([1.0, 2.0, 3.0])), [1.0, 2.0, 3.0])


# ------------------------------------------------------------- musical maps, tau


def test_sharp_flat_roundtrip_on_basis():
    for grp in (U1, SO3):
        eye = np.eye(grp.dim_o)
        for a in range(grp.dim_o):
            assert np.allclose(grp.flat(grp.sharp(eye[a])), eye[a])


def test_tau_positive_definite():
    xi = so3_vectors(50)
    vals = SO3.tau(xi, xi)
    assert np.all(vals > 0)
    assert U1.tau(np.array([0.5]), np.array([0.5])) > 0


def test_tau_ad_invariance():
    g = SO3.random(RNG, (100,))
    xi, eta = so3_vectors(100), so3_vectors(100)
    res = SO3.tau(SO3.Ad(g, xi), SO3.Ad(g, eta)) - SO3.tau(xi, eta)
    assert np.max(np.abs(res)) < 1e-12


def test_unit_haar_volume():
    # Riemannian volume of the tau metric, computed by independent quadrature
    # of the exponential-coordinates Jacobian det = 2(1-cos t)/t^2.
    c = SO3.tau_scale
    vol, _ = quad(lambda t: 8 * np.pi * (1 - np.cos(t)), 0.0, np.pi)
    assert abs(c**1.5 * vol - 1.0) < 1e-12
    # circle: length of the circle under tau
    assert abs(np.sqrt(U1.tau_scale) * 2 * np.pi - 1.0) < 1e-14


# ------------------------------------------------------------------ dexp, misc


def test_dexp_right_matches_finite_differences():
    xi = so3_vectors(20)
    dxi = so3_vectors(20)
    eps = 1e-6
    gp = SO3.exp(xi + eps * dxi)
    gm = SO3.exp(xi - eps * dxi)
    fd = (gp - gm) / (2 * eps) @ SO3.inverse(SO3.exp(xi))
    assert np.allclose(hat(SO3.dexp_right(xi, dxi)), fd, atol=1e-8)
    # u(1): trivial
    assert np.allclose(U1.dexp_right(np.array([0.4]), np.array([0.2])), [0.2])


def test_project_restores_orthogonality():
    g = SO3.exp(so3_vectors(10)) + 1e-8 * RNG.normal(size=(10, 3, 3))
    p = SO3.project(g)
    assert np.max(np.abs(np.swapaxes(p, -1, -2) @ p - np.eye(3))) < 1e-12
    assert np.allclose(np.linalg.det(p), 1.0)


def test_compose_inverse():
    g1, g2 = SO3.random(RNG, (5,)), SO3.random(RNG, (5,))
    assert np.allclose(SO3.compose(g1, SO3.inverse(g1)), np.broadcast_to(np.eye(3), (5, 3, 3)), atol=1e-14)
    assert np.allclose(SO3.compose(g1, g2), g1 @ g2)
    assert np.isclose(U1.compose(0.5, 0.7), 1.2)


def test_factory():
    assert make_group("u1").kind == "circle"
    assert make_group("SO3").kind == "rotation3"
    with pytest.raises(ValueError):
        make_group("su2")

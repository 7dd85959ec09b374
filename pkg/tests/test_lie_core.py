import numpy as np
import numpy.testing as npt
import pytest

from liebundles import lie_core as lc
from liebundles.errors import NumericalDomainError, UsageError

from conftest import GROUPS, NONABELIAN, e, h3, h3_coords, rodrigues, skew, so3


def brute_coAd(g, mu):
    """Solve <coAd(g) mu, e_j> = <mu, Ad(g^-1) e_j> over the basis."""
    G = lc.get_group(g.group)
    gi = lc.inverse(g)
    A = np.eye(G.dim)
    b = np.array([np.dot(mu, lc.Ad(gi, e(j, G.dim))) for j in range(G.dim)])
    return np.linalg.solve(A, b)


def brute_coad(G, xi, mu):
    return np.array([np.dot(mu, lc.ad(G, xi, e(j, G.dim))) for j in range(G.dim)])


# --- group operations -------------------------------------------------------


@pytest.mark.parametrize("gid", GROUPS)
def test_identity_and_inverse(gid, rng):
    G = lc.get_group(gid)
    for _ in range(20):
        g = lc.random_element(G, rng)
        npt.assert_allclose(lc.group_mul(lc.identity(G), g).matrix, g.matrix, atol=1e-15)
        npt.assert_allclose(lc.group_mul(lc.inverse(g), g).matrix, np.eye(G.matrix_size), atol=1e-12)


def test_h3_product_matches_unipotent_matrices():
    p = lc.group_mul(h3(1.0, 2.0, 3.0), h3(-0.5, 4.0, 0.25))
    npt.assert_allclose(h3_coords(p), [0.5, 6.0, 3.0 + 0.25 + 1.0 * 4.0], atol=1e-15)


def test_r3_product_adds():
    G = lc.get_group("r3")
    x, y = lc.exp(G, np.array([1.0, 2.0, 3.0])), lc.exp(G, np.array([-4.0, 0.5, 0.0]))
    npt.assert_allclose(lc.group_mul(x, y).matrix[:3, 3], [-3.0, 2.5, 3.0], atol=1e-15)


def test_mismatched_groups_rejected():
    with pytest.raises(UsageError):
        lc.group_mul(lc.identity(lc.get_group("so3")), lc.identity(lc.get_group("h3")))


def test_unknown_group_rejected():
    with pytest.raises(UsageError):
        lc.get_group("so4")


# --- exp --------------------------------------------------------------------


@pytest.mark.parametrize("gid", GROUPS)
def test_exp_zero_is_identity(gid):
    G = lc.get_group(gid)
    assert np.array_equal(lc.exp(G, np.zeros(G.dim)).matrix, np.eye(G.matrix_size))


def test_so3_exp_quarter_turn_about_z():
    R = lc.exp(lc.get_group("so3"), 0.5 * np.pi * e(2)).matrix
    npt.assert_allclose(R @ e(0), e(1), atol=1e-15)
    npt.assert_allclose(R, rodrigues(0.5 * np.pi * e(2)), atol=1e-15)


def test_so3_exp_matches_rodrigues(rng):
    G = lc.get_group("so3")
    for _ in range(20):
        w = rng.normal(size=3)
        npt.assert_allclose(lc.exp(G, w).matrix, rodrigues(w), atol=1e-13)


def test_h3_exp_closed_form():
    a, b, c = 0.7, -1.3, 2.1
    g = lc.exp(lc.get_group("h3"), np.array([a, b, c]))
    npt.assert_allclose(h3_coords(g), [a, b, c + a * b / 2], atol=1e-15)


@pytest.mark.parametrize("gid", GROUPS)
def test_exp_lands_in_group(gid, rng):
    G = lc.get_group(gid)
    for _ in range(20):
        assert lc.closure_residual(lc.exp(G, lc.random_algebra(G, rng, 3.0))) < 1e-12


# --- Ad, coAd, ad, coad -----------------------------------------------------


def test_Ad_examples():
    G = lc.get_group("so3")
    g = lc.exp(G, 0.5 * np.pi * e(2))
    npt.assert_allclose(lc.Ad(g, e(0)), e(1), atol=1e-15)
    npt.assert_allclose(lc.Ad(lc.identity(G), e(0)), e(0))
    R = lc.get_group("r3")
    npt.assert_allclose(lc.Ad(lc.exp(R, np.ones(3)), e(1)), e(1))


def test_Ad_is_conjugation_of_hat_matrices(rng):
    for gid in NONABELIAN:
        G = lc.get_group(gid)
        g, xi = lc.random_element(G, rng), lc.random_algebra(G, rng)
        lhs = lc.hat(G, lc.Ad(g, xi))
        npt.assert_allclose(lhs, g.matrix @ lc.hat(G, xi) @ lc.inverse(g).matrix, atol=1e-13)


@pytest.mark.parametrize("gid", GROUPS)
def test_Ad_of_product_composes_left(gid, rng):
    G = lc.get_group(gid)
    for _ in range(10):
        g, h, xi = lc.random_element(G, rng), lc.random_element(G, rng), lc.random_algebra(G, rng)
        npt.assert_allclose(lc.Ad(lc.group_mul(g, h), xi), lc.Ad(g, lc.Ad(h, xi)), atol=1e-12)


def test_coAd_examples(rng):
    G = lc.get_group("so3")
    g = lc.exp(G, 0.5 * np.pi * e(2))
    npt.assert_allclose(lc.coAd(g, e(0)), brute_coAd(g, e(0)), atol=1e-15)
    npt.assert_allclose(lc.coAd(lc.identity(G), e(1)), e(1))
    R = lc.get_group("r3")
    npt.assert_allclose(lc.coAd(lc.exp(R, np.ones(3)), e(2)), e(2))


@pytest.mark.parametrize("gid", GROUPS)
def test_coAd_pairing_identity(gid, rng):
    G = lc.get_group(gid)
    for _ in range(100):
        g, mu, xi = lc.random_element(G, rng), rng.normal(size=3), lc.random_algebra(G, rng)
        lhs = lc.pair(lc.coAd(g, mu), xi)
        assert abs(lhs - lc.pair(mu, lc.Ad(lc.inverse(g), xi))) <= 1e-10


def test_ad_examples():
    S, H = lc.get_group("so3"), lc.get_group("h3")
    npt.assert_allclose(lc.ad(S, e(0), e(1)), e(2))
    npt.assert_allclose(lc.ad(H, e(0), e(1)), e(2))
    npt.assert_allclose(lc.ad(H, e(0), e(2)), 0.0)
    npt.assert_allclose(lc.ad(S, e(1), e(1)), 0.0)


def test_ad_is_commutator_and_cross_product(rng):
    G = lc.get_group("so3")
    x, y = rng.normal(size=3), rng.normal(size=3)
    npt.assert_allclose(lc.ad(G, x, y), np.cross(x, y), atol=1e-15)
    npt.assert_allclose(skew(lc.ad(G, x, y)), skew(x) @ skew(y) - skew(y) @ skew(x), atol=1e-14)


def test_coad_examples():
    S, H = lc.get_group("so3"), lc.get_group("h3")
    npt.assert_allclose(lc.coad(S, e(0), e(1)), -e(2), atol=1e-15)
    npt.assert_allclose(lc.coad(H, e(0), e(2)), e(1), atol=1e-15)
    npt.assert_allclose(lc.coad(S, np.zeros(3), e(1)), 0.0)


@pytest.mark.parametrize("gid", GROUPS)
def test_coad_duality_over_basis(gid):
    G = lc.get_group(gid)
    for i in range(3):
        for j in range(3):
            npt.assert_allclose(lc.coad(G, e(i), e(j)), brute_coad(G, e(i), e(j)), atol=1e-15)


@pytest.mark.parametrize("gid", GROUPS)
def test_structure_constants(gid):
    C = lc.get_group(gid).structure_constants
    npt.assert_array_equal(C, -np.transpose(C, (1, 0, 2)))
    # cyclic Jacobi sum over all basis triples
    J = (np.einsum("ijl,lkm->ijkm", C, C) + np.einsum("jkl,lim->ijkm", C, C)
         + np.einsum("kil,ljm->ijkm", C, C))
    assert np.max(np.abs(J)) <= 1e-12


@pytest.mark.parametrize("gid", GROUPS)
def test_Ad_is_a_Lie_algebra_automorphism(gid, rng):
    G = lc.get_group(gid)
    for _ in range(20):
        g = lc.random_element(G, rng)
        x, y = lc.random_algebra(G, rng), lc.random_algebra(G, rng)
        lhs = lc.Ad(g, lc.ad(G, x, y))
        npt.assert_allclose(lhs, lc.ad(G, lc.Ad(g, x), lc.Ad(g, y)), atol=1e-9)


def test_coad_generator_is_minus_coad_and_cross_product(rng):
    G = lc.get_group("so3")
    x, m = rng.normal(size=3), rng.normal(size=3)
    npt.assert_allclose(lc.coad_generator(G, x, m), -lc.coad(G, x, m), atol=1e-15)
    npt.assert_allclose(lc.coad_generator(G, x, m), np.cross(x, m), atol=1e-15)


# --- Ad to ad and gradients -------------------------------------------------


def test_check_Ad_to_ad_examples():
    S, H = lc.get_group("so3"), lc.get_group("h3")
    assert lc.check_Ad_to_ad(S, np.zeros(3), e(1)) == 0.0
    assert lc.check_Ad_to_ad(S, e(0), e(1)) <= 1e-6
    assert lc.check_Ad_to_ad(H, e(0), e(2)) <= 1e-12


@pytest.mark.parametrize("gid", GROUPS)
def test_check_Ad_to_ad_random(gid, rng):
    G = lc.get_group(gid)
    for _ in range(20):
        assert lc.check_Ad_to_ad(G, lc.random_algebra(G, rng), rng.normal(size=3)) <= 1e-6


def test_rt_gradient_examples(rng):
    S = lc.get_group("so3")
    g = lc.random_element(S, rng)
    npt.assert_allclose(lc.rt_gradient(lambda x: 2.0, g), 0.0)
    expected = [np.trace(skew(e(i)) @ g.matrix) for i in range(3)]
    npt.assert_allclose(lc.rt_gradient(lambda x: np.trace(x.matrix), g), expected, atol=1e-9)
    R = lc.get_group("r3")
    a = np.array([0.3, -1.0, 2.0])
    x = lc.exp(R, rng.normal(size=3))
    npt.assert_allclose(lc.rt_gradient(lambda y: y.matrix[:3, 3] @ a, x), a, atol=1e-9)


def test_rt_gradient_rejects_non_finite():
    g = lc.identity(lc.get_group("so3"))
    with pytest.raises(NumericalDomainError):
        lc.rt_gradient(lambda x: np.inf, g)


def test_normalize_restores_orthogonality(rng):
    G = lc.get_group("so3")
    g = lc.random_element(G, rng)
    noisy = lc.element(G, g.matrix + 1e-7 * rng.normal(size=(3, 3)))
    fixed = lc.normalize(noisy)
    assert lc.closure_residual(fixed) <= 1e-12
    assert abs(np.linalg.det(fixed.matrix) - 1.0) <= 1e-12

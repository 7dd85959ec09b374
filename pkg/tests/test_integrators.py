import numpy as np
import numpy.testing as npt
import pytest

from liebundles import dynamics as dy
from liebundles import expr as ex
from liebundles import integrators as it
from liebundles import iterated_bundles as ib
from liebundles import lie_core as lc
from liebundles.errors import IntegrationAbort, UsageError

from conftest import INERTIA, NONABELIAN, RIGID_BODY_H, rk4, rodrigues, skew

HEAVY_TOP = RIGID_BODY_H + " + 0.7*g[2, 0] - 0.2*g[1, 2]"


def test_constant_hamiltonian_is_stationary(rng):
    for form in ("HAM_TcG", "HAM_TsTG", "HAM_TTcG", "LP"):
        space = dy.get_formulation(form).space
        p = ib.random_point(space, "so3", rng)
        traj = it.integrate(form, ex.constant(space, 1.0), p, it.Scheme("rkmk4", 0.1, 1.0))
        for q in traj.points:
            npt.assert_array_equal(ib.flatten(q.slots[1:] if ib.has_group(space) else q.slots),
                                   ib.flatten(p.slots[1:] if ib.has_group(space) else p.slots))


def test_lie_poisson_matches_plain_rk4():
    H = ex.parse(RIGID_BODY_H, "g*")
    mu0 = np.array([0.3, -1.1, 0.8])
    traj = it.integrate("LP", H, ib.make_point("g*", "so3", mu0), it.Scheme("rkmk4", 1e-2, 1.0))
    ref = rk4(lambda m: np.cross(m / INERTIA, m), mu0, 1e-2, 100)
    got = np.array([q["mu"] for q in traj.points])
    npt.assert_allclose(got, ref, atol=1e-14)


def test_group_slot_matches_matrix_ode():
    """Heavy-top-like flow on TcG against RK4 on the raw 3x3 matrix and momentum."""
    H = ex.parse(HEAVY_TOP, "TcG")
    G = lc.get_group("so3")
    g0 = lc.exp(G, np.array([0.2, 0.5, -0.4]))
    mu0 = np.array([0.3, -1.1, 0.8])
    p0 = ib.make_point("TcG", "so3", g0, mu0)

    def f(y):
        g, mu = lc.element(G, y[:9].reshape(3, 3)), y[9:]
        q = ib.make_point("TcG", "so3", g, mu)
        gdot, mudot = dy.hamiltonian_vf("HAM_TcG", H, q)
        return np.concatenate([(skew(gdot) @ g.matrix).ravel(), mudot])

    ref = rk4(f, np.concatenate([g0.matrix.ravel(), mu0]), 1e-4, 10000)[-1]
    traj = it.integrate("HAM_TcG", H, p0, it.Scheme("rkmk4", 1e-3, 1.0))
    end = traj.points[-1]
    npt.assert_allclose(end["g"].matrix.ravel(), ref[:9], atol=1e-9)
    npt.assert_allclose(end["mu"], ref[9:], atol=1e-9)


def test_free_rotation_about_principal_axis():
    H = ex.parse(RIGID_BODY_H, "TcG")
    G = lc.get_group("so3")
    mu0 = np.array([0.0, 0.0, 1.5])
    traj = it.integrate("HAM_TcG", H, ib.make_point("TcG", "so3", lc.identity(G), mu0),
                        it.Scheme("rkmk4", 0.1, 2.0))
    # omega = mu / I = (0, 0, 0.5) is constant and g(t) = exp(t omega)
    npt.assert_allclose(traj.points[-1]["g"].matrix, rodrigues(np.array([0.0, 0.0, 1.0])), atol=1e-13)
    npt.assert_allclose(traj.points[-1]["mu"], mu0, atol=1e-15)


def test_casimir_drift():
    H = ex.parse(RIGID_BODY_H, "g*")
    mu0 = np.array([0.3, -1.1, 0.8])
    traj = it.integrate("LP", H, ib.make_point("g*", "so3", mu0), it.Scheme("rkmk4", 1e-3, 10.0))
    report = it.drift_report(traj, {"casimir": lambda q: q["mu"] @ q["mu"], "energy": H.value})
    assert report["casimir"] <= 1e-8
    assert report["energy"] <= 1e-8


def test_casimir_sphere_near_unstable_axis():
    H = ex.parse(RIGID_BODY_H, "g*")
    mu0 = np.array([1.0, 0.01, 0.0])
    traj = it.integrate("LP", H, ib.make_point("g*", "so3", mu0), it.Scheme("rkmk4", 1e-3, 10.0))
    radius = np.array([np.linalg.norm(q["mu"]) for q in traj.points])
    assert np.max(np.abs(radius - np.linalg.norm(mu0))) <= 1e-8


def order_estimate(form, obs, p0, h, T):
    ends = [it.integrate(form, obs, p0, it.Scheme("rkmk4", h / 2**k, T)).points[-1] for k in range(3)]
    vecs = [np.concatenate([q["g"].matrix.ravel(), ib.flatten(q.slots[1:])]) for q in ends]
    e1, e2 = np.linalg.norm(vecs[0] - vecs[1]), np.linalg.norm(vecs[1] - vecs[2])
    return np.log2(e1 / e2)


@pytest.mark.parametrize("gid", NONABELIAN)
def test_rkmk4_is_fourth_order(gid, rng):
    H = ex.parse(RIGID_BODY_H + " + 0.5*quadratic_form(nu) + 0.3*pair(mu, nu) + 0.4*g[0, 2]", "TsTG")
    p0 = ib.random_point("TsTG", gid, rng)
    assert order_estimate("HAM_TsTG", H, p0, 0.1, 1.0) >= 3.8


def test_lie_euler_is_first_order(rng):
    H = ex.parse(HEAVY_TOP, "TcG")
    p0 = ib.random_point("TcG", "so3", rng)
    ends = [it.integrate("HAM_TcG", H, p0, it.Scheme("lie_euler", 0.01 / 2**k, 1.0)).points[-1] for k in range(3)]
    vec = [np.concatenate([q["g"].matrix.ravel(), q["mu"]]) for q in ends]
    rate = np.log2(np.linalg.norm(vec[0] - vec[1]) / np.linalg.norm(vec[1] - vec[2]))
    assert 0.9 <= rate <= 1.1


def test_rkmk4_beats_lie_euler_on_energy(rng):
    H = ex.parse(HEAVY_TOP, "TcG")
    p0 = ib.random_point("TcG", "so3", rng)
    drift = {}
    for name in it.SCHEMES:
        traj = it.integrate("HAM_TcG", H, p0, it.Scheme(name, 1e-2, 5.0))
        drift[name] = it.drift_report(traj, {"energy": H.value})["energy"]
    assert drift["rkmk4"] * 1e4 <= drift["lie_euler"]


def test_lagrangian_energy_drift(rng):
    L = ex.parse("quadratic_form(xi, [0.5, 1, 1.5]) + 0.5*quadratic_form(nu) + 0.2*pair(mu, xi)", "TTcG")
    p0 = ib.random_point("TTcG", "h3", rng)
    traj = it.integrate("EL_TTcG", L, p0, it.Scheme("rkmk4", 1e-3, 2.0))
    report = it.drift_report(traj, {"energy": lambda s: dy.energy_invariant("EL_TTcG", L, s)})
    assert report["energy"] <= 1e-8


def test_deterministic(rng):
    H = ex.parse(HEAVY_TOP, "TcG")
    p0 = ib.random_point("TcG", "so3", rng)
    a = it.integrate("HAM_TcG", H, p0, it.Scheme("rkmk4", 1e-2, 1.0))
    b = it.integrate("HAM_TcG", H, p0, it.Scheme("rkmk4", 1e-2, 1.0))
    for p, q in zip(a.points, b.points):
        assert np.array_equal(ib.flatten(p.slots[1:]), ib.flatten(q.slots[1:]))
        assert np.array_equal(p["g"].matrix, q["g"].matrix)


@pytest.mark.parametrize("gid", NONABELIAN)
def test_group_slot_stays_on_group(gid, rng):
    H = ex.parse(HEAVY_TOP.replace("g[2, 0]", "g[0, 2]"), "TcG")
    traj = it.integrate("HAM_TcG", H, ib.random_point("TcG", gid, rng), it.Scheme("rkmk4", 1e-2, 10.0))
    assert max(lc.closure_residual(q["g"]) for q in traj.points) <= 1e-9


def test_grid_and_length():
    H = ex.parse(RIGID_BODY_H, "g*")
    traj = it.integrate("LP", H, ib.make_point("g*", "so3", np.ones(3)), it.Scheme("rkmk4", 0.1, 1.0))
    assert len(traj) == 11
    npt.assert_allclose(traj.times, np.linspace(0.0, 1.0, 11), atol=1e-15)


def test_blow_up_aborts_with_last_good_index():
    # x'' = 4 x^3 escapes in finite time from x = 1
    H = ex.parse("0.5*mu[0]**2 - g[0, 3]**4", "TcG")
    G = lc.get_group("r3")
    p0 = ib.make_point("TcG", "r3", lc.exp(G, np.array([1.0, 0.0, 0.0])), np.zeros(3))
    with pytest.raises(IntegrationAbort) as err:
        it.integrate("HAM_TcG", H, p0, it.Scheme("rkmk4", 0.01, 10.0))
    assert 0 < err.value.last_index < 1000


@pytest.mark.parametrize("args", [("rk45", 0.1, 1.0), ("rkmk4", 0.0, 1.0), ("rkmk4", -0.1, 1.0),
                                  ("rkmk4", float("nan"), 1.0), ("rkmk4", 0.1, 0.01)])
def test_scheme_validation(args):
    with pytest.raises(UsageError):
        it.Scheme(*args)


def test_initial_point_on_wrong_space(rng):
    with pytest.raises(UsageError):
        it.integrate("HAM_TcG", ex.parse("mu[0]", "TcG"), ib.random_point("TsTG", "so3", rng),
                     it.Scheme("rkmk4", 0.1, 1.0))


def test_dexpinv_truncation_against_series(rng):
    G = lc.get_group("so3")
    theta = 1e-2 * rng.normal(size=3)
    u = rng.normal(size=3)
    # dexp_theta v = v + [theta, v]/2 + [theta, [theta, v]]/6 + ...
    v = it.dexpinv(G, theta, u)
    a = lc.ad(G, theta, v)
    back = v + 0.5 * a + lc.ad(G, theta, a) / 6.0 + lc.ad(G, theta, lc.ad(G, theta, a)) / 24.0
    assert np.max(np.abs(back - u)) <= 1e-8

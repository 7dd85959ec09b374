import numpy as np
import numpy.testing as npt
import pytest

from liebundles import expr as ex
from liebundles import iterated_bundles as ib
from liebundles import lie_core as lc
from liebundles.errors import ExpressionError, UsageError

from conftest import RIGID_BODY_H, INERTIA, NONABELIAN, skew


def test_quadratic_form_is_rigid_body_energy(rng):
    h = ex.parse("0.5*quadratic_form(mu, [1,2,3])", "TcG")
    p = ib.random_point("TcG", "so3", rng)
    mu = p["mu"]
    assert h.value(p) == pytest.approx(0.5 * np.sum(mu**2 / np.array([1.0, 0.5, 1.0 / 3.0])), rel=1e-14)


def test_pair_on_ttcg(rng):
    p = ib.random_point("TTcG", "so3", rng)
    assert ex.parse("pair(mu, xi)", "TTcG").value(p) == pytest.approx(p["mu"] @ p["xi"], rel=1e-14)


def test_three_term_gradient(rng):
    obs = ex.parse("mu[0]*nu[1] - xi[2]", "TTcG")
    p = ib.random_point("TTcG", "so3", rng)
    npt.assert_allclose(obs.grad("nu", p), [0.0, p["mu"][0], 0.0], atol=1e-15)
    npt.assert_allclose(obs.grad("xi", p), [0.0, 0.0, -1.0], atol=1e-15)
    npt.assert_allclose(obs.grad("mu", p), [p["nu"][1], 0.0, 0.0], atol=1e-15)


def test_constant_has_zero_gradients(rng):
    obs = ex.constant("TsTG", 2.5)
    p = ib.random_point("TsTG", "se2", rng)
    assert obs.value(p) == 2.5
    for gvec in obs.grads(p):
        npt.assert_array_equal(gvec, 0.0)


def test_rigid_body_gradient(rng):
    h = ex.parse(RIGID_BODY_H, "TcG")
    p = ib.random_point("TcG", "so3", rng)
    npt.assert_allclose(h.grad("mu", p), p["mu"] / INERTIA, rtol=1e-14)


def test_trace_gradient_is_right_trivialized(rng):
    obs = ex.parse("trace_g", "TcG")
    p = ib.random_point("TcG", "so3", rng)
    g = p["g"].matrix
    expected = [np.trace(skew(np.eye(3)[i]) @ g) for i in range(3)]
    npt.assert_allclose(obs.grad("g", p), expected, atol=1e-14)
    npt.assert_allclose(obs.grad("g", p, fd=True), expected, atol=1e-9)


SOURCES = [
    "0.5*quadratic_form(mu, [1, 2, 3])",
    "pair(mu, xi) - 3*nu[2]**2 + 1.5e-3",
    "(mu[0] + xi[1])*(nu[2] - 2)/4",
    "-mu[1]**3 + trace_g*g[0, 2]",
    "quadratic_form(nu) + pair(nu, xi)*mu[0]",
]


@pytest.mark.parametrize("source", SOURCES)
def test_round_trip(source):
    tree = ex.parse(source, "TTcG")
    again = ex.parse(tree.source, "TTcG")
    assert again == tree
    assert again.source == tree.source


@pytest.mark.parametrize("source,column", [("mu[0] +* 2", 8), ("foo[1]", 1), ("exp(mu[0])", 1),
                                           ("mu[0]**mu[1]", 8), ("mu[0] @ xi", None)])
def test_rejections(source, column):
    with pytest.raises(ExpressionError) as err:
        ex.parse(source, "TTcG")
    if column is not None:
        assert err.value.column == column
        assert err.value.line == 1


def test_unknown_slot_for_space():
    with pytest.raises(ExpressionError):
        ex.parse("nu[0]", "TcG")
    with pytest.raises(ExpressionError):
        ex.parse("g[0, 0]", "g*")


def test_out_of_range_index_rejected_at_evaluation(rng):
    obs = ex.parse("mu[3]", "TcG")
    with pytest.raises(ExpressionError):
        obs.value(ib.random_point("TcG", "so3", rng))


def test_wrong_space_point(rng):
    with pytest.raises(UsageError):
        ex.parse("mu[0]", "TcG").value(ib.random_point("TsTG", "so3", rng))


def random_cubic(space, group, rng):
    names = [n for n, k in zip(ib.slot_names(space), ib.slot_kinds(space)) if k != "G"]
    m = lc.get_group(group).matrix_size
    terms = []
    for _ in range(6):
        a, b, c = (f"{rng.choice(names)}[{rng.integers(0, 3)}]" for _ in range(3))
        terms.append(f"{rng.normal():.4f}*{a}*{b}*{c}")
    if ib.has_group(space):
        i, j = rng.integers(0, m, 2)
        terms.append(f"{rng.normal():.4f}*g[{i}, {j}]*{names[0]}[0]")
    return ex.parse(" + ".join(terms), space)


def fd_grad(obs, p, slot, h=1e-6):
    names = ib.slot_names(p.space)
    G = lc.get_group(p.group)
    out = np.zeros(3)
    for i in range(3):
        d = np.zeros(3)
        d[i] = h
        if slot == "g":
            plus = p.replace(g=lc.group_mul(lc.exp(G, d), p["g"]))
            minus = p.replace(g=lc.group_mul(lc.exp(G, -d), p["g"]))
        else:
            plus, minus = p.replace(**{slot: p[slot] + d}), p.replace(**{slot: p[slot] - d})
        out[i] = (obs.value(plus) - obs.value(minus)) / (2 * h)
    assert slot in names
    return out


@pytest.mark.parametrize("space", ib.BUNDLE_SPACES + ("gxg*xg*", "g*xg"))
def test_gradients_match_central_differences(space, rng):
    for gid in NONABELIAN:
        for _ in range(4):
            obs = random_cubic(space, gid, rng)
            p = ib.random_point(space, gid, rng)
            for slot, gvec in zip(ib.slot_names(space), obs.grads(p)):
                ref = fd_grad(obs, p, slot)
                scale = max(1.0, np.max(np.abs(ref)))
                assert np.max(np.abs(gvec - ref)) / scale <= 1e-6


def test_polynomial_flag():
    assert ex.parse("mu[0]**2*xi[1]", "TTcG").is_polynomial
    assert not ex.parse("1/(1 + mu[0]**2)", "TTcG").is_polynomial

"""Subgroup actions, momentum maps, coadjoint actions and reduction checks.

Actions are right actions, ``act(act(p, s1), s2) == act(p, s1 * s2)``, with
subgroup products

* ``G``: ``h1 h2``; ``g`` and ``g*``: addition;
* ``Gg``: ``(h1, e1)(h2, e2) = (h1 h2, e1 + Ad(h1) e2)``;
* ``Gg*``: ``(h1, l1)(h2, l2) = (h1 h2, l1 + coAd(h1) l2)``.

Every symplectic action has a momentum map whose components generate it
through the space's two-form; those are the values returned by
:func:`momentum`.  ``printed=True`` returns the alternative closed forms
(spatial momenta) that agree with them at ``g = e`` only where noted in the
catalog.

Tangent-lift actions (``*_lift`` and ``TG_G``) act on velocity phase spaces;
their conserved quantities are Noether momenta of a Lagrangian flow state.
"""

from dataclasses import dataclass, field, replace
import math
import re

import numpy as np

from . import dynamics as dy
from . import integrators as it
from . import iterated_bundles as ib
from . import lie_core as lc
from .errors import ContractError, ScenarioError, UsageError
from .expr import parse

SUBGROUPS = ("G", "g", "g*", "Gg", "Gg*")


def _ops(G):
    def cg(x, m):
        return lc.coad_generator(G, x, m)

    return cg


def _AdT(g, m):
    return lc.Ad_matrix(g).T @ m


def _Ad_inv(g, x):
    return lc.Ad(lc.inverse(g), x)


def _right(g, h):
    return lc.group_mul(g, h)


# --- action displays ---------------------------------------------------------
# each takes (G, p, s) and returns the new slot dict


def _a_translate(G, p, s):
    return {"g": _right(p["g"], s)}


def _a_tstg_g(G, p, s):
    return {"xi": p["xi"] + lc.Ad(p["g"], s)}


def _a_tstg_Gg(G, p, s):
    h, e = s
    return {"g": _right(p["g"], h), "xi": p["xi"] + lc.Ad(p["g"], e)}


def _a_tstsg_gs(G, p, s):
    return {"mu": p["mu"] + lc.coAd(p["g"], s)}


def _a_tstsg_Ggs(G, p, s):
    h, lam = s
    return {"g": _right(p["g"], h), "mu": p["mu"] + lc.coAd(p["g"], lam)}


def _a_ttcg_g2(G, p, s):
    return {"xi": p["xi"] + s}


def _a_ttcg_psi(G, p, s):
    return {"mu": p["mu"] + s}


def _a_ttcg_phi(G, p, s):
    return {"nu": p["nu"] + s}


def _a_ttcg_Gg2(G, p, s):
    h, e = s
    ae = lc.Ad(p["g"], e)
    return {"g": _right(p["g"], h), "xi": p["xi"] + ae, "nu": p["nu"] - _ops(G)(ae, p["mu"])}


def _a_ttcg_Gg1(G, p, s):
    # the nu correction makes the shift of mu symplectic for the Tulczyjew form
    h, lam = s
    m = lc.coAd(p["g"], lam)
    return {"g": _right(p["g"], h), "mu": p["mu"] + m, "nu": p["nu"] - _ops(G)(p["xi"], m)}


def _a_ttcg_g1_lift(G, p, s):
    return {"mu": p["mu"] + lc.coAd(p["g"], s)}


def _a_ttcg_Gg1_lift(G, p, s):
    h, lam = s
    return {"g": _right(p["g"], h), "mu": p["mu"] + lc.coAd(p["g"], lam)}


# --- momentum displays -------------------------------------------------------
# Hamiltonian ones take (G, p); Noether ones take (G, p, momenta by velocity slot)


def _j_tstg_G(G, p):
    return (_AdT(p["g"], p["mu"] - _ops(G)(p["xi"], p["nu"])),)


def _j_tstsg_G(G, p):
    return (_AdT(p["g"], p["nu"] + _ops(G)(p["xi"], p["mu"])),)


def _ttcg_spatial(G, p):
    return p["nu"] + _ops(G)(p["xi"], p["mu"])


MOMENTA = {
    "TcG_G": lambda G, p: (_AdT(p["g"], p["mu"]),),
    "TsTG_G": _j_tstg_G,
    "TsTG_g": lambda G, p: (_AdT(p["g"], p["nu"]),),
    "TsTG_Gg": lambda G, p: _j_tstg_G(G, p) + (_AdT(p["g"], p["nu"]),),
    "TsTsG_G": _j_tstsg_G,
    "TsTsG_g*": lambda G, p: (_Ad_inv(p["g"], p["xi"]),),
    "TsTsG_Gg*": lambda G, p: _j_tstsg_G(G, p) + (_Ad_inv(p["g"], p["xi"]),),
    "TTcG_G": lambda G, p: (_AdT(p["g"], p["nu"]),),
    "TTcG_g2": lambda G, p: (p["mu"].copy(),),
    "TTcG_g1*_psi": lambda G, p: (-p["xi"],),
    "TTcG_Gg2": lambda G, p: (_AdT(p["g"], p["nu"]), _AdT(p["g"], p["mu"])),
    "TTcG_Gg1*": lambda G, p: (_AdT(p["g"], p["nu"]), -_Ad_inv(p["g"], p["xi"])),
}

PRINTED_MOMENTA = {
    "TcG_G": lambda G, p: (p["mu"].copy(),),
    "TsTG_G": lambda G, p: (p["mu"].copy(),),
    "TsTG_g": lambda G, p: (p["nu"].copy(),),
    "TsTG_Gg": lambda G, p: (p["mu"].copy(), p["nu"].copy()),
    "TsTsG_G": lambda G, p: (p["nu"].copy(),),
    "TsTsG_g*": lambda G, p: (p["xi"].copy(),),
    "TsTsG_Gg*": lambda G, p: (p["nu"].copy(), p["xi"].copy()),
    "TTcG_G": lambda G, p: (_ttcg_spatial(G, p),),
    "TTcG_g2": lambda G, p: (p["mu"].copy(),),
    "TTcG_g1*_psi": lambda G, p: (-p["xi"],),
    "TTcG_Gg2": lambda G, p: (_ttcg_spatial(G, p), p["mu"].copy()),
    "TTcG_Gg1*": lambda G, p: (_ttcg_spatial(G, p), -p["xi"]),
}


def _noether_ttcg_G(G, p, m):
    return (_AdT(p["g"], m["xi"] + _ops(G)(m["nu"], p["mu"])),)


NOETHER = {
    "TG_G": lambda G, p, m: (_AdT(p["g"], m["xi"]),),
    "TTcG_G_lift": _noether_ttcg_G,
    "TTcG_g1*_lift": lambda G, p, m: (_Ad_inv(p["g"], m["nu"]),),
    "TTcG_Gg1*_lift": lambda G, p, m: _noether_ttcg_G(G, p, m) + (_Ad_inv(p["g"], m["nu"]),),
}


@dataclass(frozen=True)
class Action:
    id: str
    space: str
    subgroup: str
    kind: str  # "symplectic", "non-symplectic" or "lift"
    display: object


ACTIONS = {a.id: a for a in (
    Action("TcG_G", "TcG", "G", "symplectic", _a_translate),
    Action("TsTG_G", "TsTG", "G", "symplectic", _a_translate),
    Action("TsTG_g", "TsTG", "g", "symplectic", _a_tstg_g),
    Action("TsTG_Gg", "TsTG", "Gg", "symplectic", _a_tstg_Gg),
    Action("TsTsG_G", "TsTsG", "G", "symplectic", _a_translate),
    Action("TsTsG_g*", "TsTsG", "g*", "symplectic", _a_tstsg_gs),
    Action("TsTsG_Gg*", "TsTsG", "Gg*", "symplectic", _a_tstsg_Ggs),
    Action("TTcG_G", "TTcG", "G", "symplectic", _a_translate),
    Action("TTcG_g2", "TTcG", "g", "symplectic", _a_ttcg_g2),
    Action("TTcG_g1*_psi", "TTcG", "g*", "symplectic", _a_ttcg_psi),
    Action("TTcG_g3*_phi", "TTcG", "g*", "non-symplectic", _a_ttcg_phi),
    Action("TTcG_Gg2", "TTcG", "Gg", "symplectic", _a_ttcg_Gg2),
    Action("TTcG_Gg1*", "TTcG", "Gg*", "symplectic", _a_ttcg_Gg1),
    Action("TG_G", "TG", "G", "lift", _a_translate),
    Action("TTcG_G_lift", "TTcG", "G", "lift", _a_translate),
    Action("TTcG_g1*_lift", "TTcG", "g*", "lift", _a_ttcg_g1_lift),
    Action("TTcG_Gg1*_lift", "TTcG", "Gg*", "lift", _a_ttcg_Gg1_lift),
)}

ACTION_IDS = tuple(ACTIONS)


def get_action(aid):
    if isinstance(aid, Action):
        return aid
    try:
        return ACTIONS[aid]
    except KeyError:
        raise UsageError(f"unknown action {aid!r}; expected one of {list(ACTIONS)}") from None


# --- subgroup elements -------------------------------------------------------


def _vector(G, v, what):
    v = np.asarray(v, dtype=float)
    if v.shape != (G.dim,):
        raise UsageError(f"{what} needs {G.dim} entries, got shape {v.shape}")
    return v


def _elem(G, h):
    if not isinstance(h, lc.GroupElement):
        raise UsageError("expected a group element")
    if h.group != G.id:
        raise UsageError(f"group mismatch: {h.group} vs {G.id}")
    return h


def check_element(kind, group, s):
    """Validate and normalize a subgroup element of ``kind``."""
    G = lc.get_group(group)
    if kind == "G":
        return _elem(G, s)
    if kind in ("g", "g*"):
        return _vector(G, s, f"an element of {kind}")
    if kind in ("Gg", "Gg*"):
        if not (isinstance(s, tuple) and len(s) == 2):
            raise UsageError(f"an element of {kind} is a pair (group element, vector)")
        return _elem(G, s[0]), _vector(G, s[1], f"the vector part of {kind}")
    raise UsageError(f"unknown subgroup {kind!r}; expected one of {SUBGROUPS}")


def subgroup_identity(kind, group):
    G = lc.get_group(group)
    zero = np.zeros(G.dim)
    return {"G": lc.identity(G), "g": zero, "g*": zero, "Gg": (lc.identity(G), zero),
            "Gg*": (lc.identity(G), zero)}[kind]


def subgroup_mul(kind, group, s1, s2):
    s1, s2 = check_element(kind, group, s1), check_element(kind, group, s2)
    if kind == "G":
        return lc.group_mul(s1, s2)
    if kind in ("g", "g*"):
        return s1 + s2
    twist = lc.Ad if kind == "Gg" else lc.coAd
    return lc.group_mul(s1[0], s2[0]), s1[1] + twist(s1[0], s2[1])


def subgroup_exp(kind, group, direction, t=1.0):
    """Subgroup element ``exp(t * direction)``; pairs take ``(zeta, vector)`` directions."""
    G = lc.get_group(group)
    if kind == "G":
        return lc.exp(G, t * _vector(G, direction, "direction"))
    if kind in ("g", "g*"):
        return t * _vector(G, direction, "direction")
    # the vector part of exp is not t*v, but any curve with this velocity will do
    z, v = direction
    return lc.exp(G, t * _vector(G, z, "direction")), t * _vector(G, v, "direction")


def random_subgroup_element(kind, group, rng, scale=1.0, isotropy=None):
    """Random element; ``isotropy`` (a basis of algebra vectors) restricts the G part."""
    G = lc.get_group(group)

    def rot():
        if isotropy is None:
            return lc.random_element(G, rng, scale)
        c = scale * rng.standard_normal(len(isotropy))
        return lc.exp(G, sum((ci * k for ci, k in zip(c, isotropy)), np.zeros(G.dim)))

    if kind == "G":
        return rot()
    if kind in ("g", "g*"):
        return scale * rng.standard_normal(G.dim)
    return rot(), scale * rng.standard_normal(G.dim)


# --- act / momentum ------------------------------------------------------------


def act(aid, p, s):
    """Apply action ``aid`` to ``p`` (a point, or a Lagrangian flow state's point) by ``s``."""
    a = get_action(aid)
    if p.space != a.space:
        raise UsageError(f"{a.id} acts on {a.space}, point is on {p.space}")
    G = lc.get_group(p.group)
    s = check_element(a.subgroup, p.group, s)
    return p.replace(**a.display(G, p, s))


def momentum(aid, x, printed=False):
    """Momentum value of ``aid`` at ``x``.

    ``x`` is a point for symplectic actions and a :class:`dynamics.FlowState`
    for tangent lifts (Noether momenta read the fiber momenta).
    """
    a = get_action(aid)
    if a.kind == "non-symplectic":
        raise ContractError(f"{a.id} is not symplectic and has no momentum map")
    if a.kind == "lift":
        if not isinstance(x, dy.FlowState):
            raise UsageError(f"{a.id} is a tangent lift; its momentum needs a Lagrangian flow state")
        p = x.point
        names = [n for n in ib.slot_names(p.space) if n in ("xi", "nu")]
        m = dict(zip(names, x.momenta))
        if p.space != a.space:
            raise UsageError(f"{a.id} acts on {a.space}, state is on {p.space}")
        return NOETHER[a.id](lc.get_group(p.group), p, m)
    p = x.point if isinstance(x, dy.FlowState) else x
    if p.space != a.space:
        raise UsageError(f"{a.id} acts on {a.space}, point is on {p.space}")
    table = PRINTED_MOMENTA if printed else MOMENTA
    return table[a.id](lc.get_group(p.group), p)


def _generator_matrix(a, p, h=1e-4):
    """Columns: right-trivialized velocities of the action along each subgroup basis direction."""
    G = lc.get_group(p.group)
    n = G.dim
    parts = 2 if a.subgroup in ("Gg", "Gg*") else 1
    cols = []
    for k in range(parts):
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            d = (e, np.zeros(n)) if k == 0 else (np.zeros(n), e)
            direction = d if parts == 2 else e

            def curve(t, direction=direction):
                return act(a, p, subgroup_exp(a.subgroup, p.group, direction, t))

            cols.append(ib.flatten(ib.right_velocity(curve, 0.0, h)))
    return np.column_stack(cols)


def _fd_gradient(f, p, h=1e-6):
    G = lc.get_group(p.group)
    out = []
    for name, s in zip(ib.slot_names(p.space), p.slots):
        if isinstance(s, lc.GroupElement):
            out.append(lc.rt_gradient(lambda g, name=name: f(p.replace(**{name: g})), s))
            continue
        d = np.zeros(G.dim)
        for i in range(G.dim):
            e = np.zeros(G.dim)
            e[i] = h
            d[i] = (f(p.replace(**{name: s + e})) - f(p.replace(**{name: s - e}))) / (2 * h)
        out.append(d)
    return ib.flatten(out)


def momentum_generator_residual(aid, p):
    """Max deviation of ``dJ`` from the differential forced by ``i_X Omega = -dJ``.

    ``X`` runs over the infinitesimal generators of the action; small values
    mean the momentum components generate the action.
    """
    a = get_action(aid)
    space = p.space
    W = ib.two_form_matrix(space, p)
    R = ib.rivf_matrix(space, p)
    X = _generator_matrix(a, p)
    err = 0.0
    for col in range(X.shape[1]):
        gen = np.linalg.solve(R, X[:, col])
        required = -np.linalg.solve(R.T, W.T @ gen)

        def comp(q, col=col):
            return np.concatenate(momentum(a, q))[col]

        err = max(err, float(np.max(np.abs(required - _fd_gradient(comp, p)))))
    return err


def action_law_residual(aid, p, s1, s2):
    """``|act(act(p, s1), s2) - act(p, s1 s2)|``."""
    a = get_action(aid)
    lhs = act(a, act(a, p, s1), s2)
    rhs = act(a, p, subgroup_mul(a.subgroup, p.group, s1, s2))
    return point_distance(lhs, rhs)


def point_distance(p, q):
    return max(float(np.linalg.norm((a.matrix - b.matrix) if isinstance(a, lc.GroupElement) else a - b))
               for a, b in zip(p.slots, q.slots))


# --- symplecticity witnesses ------------------------------------------------


def pullback_residual(point_map, p, gen1, gen2, space_in, space_out, form_in=None, form_out=None):
    """``Omega_out(F_* X, F_* Y)(F p) - Omega_in(X, Y)(p)``; ``form_in=False`` drops the second term."""
    fo = form_out or ib.FORM_OF_SPACE[space_out]
    q = point_map(p)
    a = ib.pushforward(point_map, p, gen1, space_in, space_out)
    b = ib.pushforward(point_map, p, gen2, space_in, space_out)
    out = ib.eval_two_form(fo, q, a, b)
    if form_in is False:
        return abs(out)
    fi = form_in or ib.FORM_OF_SPACE[space_in]
    return abs(out - ib.eval_two_form(fi, p, gen1, gen2))


def action_pullback_residual(aid, p, s, gen1, gen2):
    """Deviation of ``act(., s)`` from preserving the space's two-form on one pair of vectors."""
    a = get_action(aid)
    return pullback_residual(lambda q: act(a, q, s), p, gen1, gen2, a.space, a.space)


def symplectic_witness(aid, group, samples=20, seed=0):
    """Max pullback residual over random points, vectors and subgroup elements."""
    a = get_action(aid)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        p = ib.random_point(a.space, group, rng)
        s = random_subgroup_element(a.subgroup, group, rng)
        x = ib.random_generator(a.space, group, rng)
        y = ib.random_generator(a.space, group, rng)
        worst = max(worst, action_pullback_residual(a, p, s, x, y))
    return worst


def emb1(p):
    """``(g, mu) -> (g, mu, 0, 0)``: the zero section of the fibration over ``TcG``."""
    z = np.zeros_like(p["mu"])
    return ib.BundlePoint("TTcG", p.group, (p["g"], p["mu"].copy(), z, z.copy()))


def emb2(p):
    """``(g, nu) -> (g, 0, 0, nu)``."""
    z = np.zeros_like(p["mu"])
    return ib.BundlePoint("TTcG", p.group, (p["g"], z, z.copy(), p["mu"].copy()))


def embedding_residual(which, p, gen1, gen2):
    """Emb1: ``|Emb1^* Omega_TTcG|``; Emb2: ``|Emb2^* Omega_TTcG - Omega_TcG|``."""
    if which == "Emb1":
        return pullback_residual(emb1, p, gen1, gen2, "TcG", "TTcG", form_in=False)
    if which == "Emb2":
        return pullback_residual(emb2, p, gen1, gen2, "TcG", "TTcG")
    raise UsageError(f"unknown embedding {which!r}; expected Emb1 or Emb2")


# --- coadjoint actions ---------------------------------------------------------


def _dual_pair(G, d):
    if not (isinstance(d, tuple) and len(d) == 2):
        raise UsageError("dual point of a semidirect group is a pair of vectors")
    return _vector(G, d[0], "dual point"), _vector(G, d[1], "dual point")


def coadjoint_action(kind, group, element, dual):
    """Coadjoint action of ``G`` on g*, ``Gg`` on g* x g*, ``Gg*`` on g* x g.

    * ``G``: ``coAd(g) mu``.
    * ``Gg``, element ``(g, xi)``: ``(coAd(g) mu + cg(xi, coAd(g) nu), coAd(g) nu)``.
    * ``Gg*``, element ``(g, lam)`` at ``(nu, xi)``: ``(coAd(g) nu - cg(Ad(g) xi, lam), Ad(g) xi)``.

    Satisfies ``A(k1 k2) = A(k1) A(k2)`` for the subgroup products above.
    """
    G = lc.get_group(group)
    if kind not in ("G", "Gg", "Gg*"):
        raise UsageError(f"coadjoint action defined for G, Gg, Gg*; got {kind!r}")
    k = check_element(kind, group, element)
    cg = _ops(G)
    if kind == "G":
        return lc.coAd(k, _vector(G, dual, "dual point"))
    g, v = k
    a, b = _dual_pair(G, dual)
    if kind == "Gg":
        n = lc.coAd(g, b)
        return lc.coAd(g, a) + cg(v, n), n
    x = lc.Ad(g, b)
    return lc.coAd(g, a) - cg(x, v), x


def coadjoint_generator(kind, group, direction, dual):
    """Infinitesimal coadjoint action: ``d/dt A(exp(t direction)) dual`` at 0."""
    G = lc.get_group(group)
    cg = _ops(G)
    if kind == "G":
        return cg(_vector(G, direction, "direction"), _vector(G, dual, "dual point"))
    z, v = direction
    a, b = _dual_pair(G, dual)
    if kind == "Gg":
        return cg(z, a) + cg(v, b), cg(z, b)
    if kind == "Gg*":
        return cg(z, a) - cg(b, v), lc.ad(G, z, b)
    raise UsageError(f"coadjoint action defined for G, Gg, Gg*; got {kind!r}")


def _dual_distance(a, b):
    if isinstance(a, tuple):
        return max(float(np.linalg.norm(x - y)) for x, y in zip(a, b))
    return float(np.linalg.norm(a - b))


def coadjoint_law_residual(kind, group, k1, k2, dual):
    lhs = coadjoint_action(kind, group, subgroup_mul(kind, group, k1, k2), dual)
    rhs = coadjoint_action(kind, group, k1, coadjoint_action(kind, group, k2, dual))
    return _dual_distance(lhs, rhs)


def coadjoint_generator_residual(kind, group, direction, dual, h=1e-5):
    """Central-difference derivative of the action against :func:`coadjoint_generator`."""
    plus = coadjoint_action(kind, group, subgroup_exp(kind, group, direction, h), dual)
    minus = coadjoint_action(kind, group, subgroup_exp(kind, group, direction, -h), dual)
    gen = coadjoint_generator(kind, group, direction, dual)
    if isinstance(plus, tuple):
        fd = tuple((a - b) / (2 * h) for a, b in zip(plus, minus))
    else:
        fd = (plus - minus) / (2 * h)
    return _dual_distance(fd, gen)


def isotropy_check(kind, group, element, dual, tol=1e-10):
    """True iff ``element`` fixes ``dual`` under the coadjoint action, within ``tol``."""
    return _dual_distance(coadjoint_action(kind, group, element, dual), dual) <= tol


def isotropy_algebra(group, mu, tol=1e-10):
    """Orthonormal basis of ``{zeta : cg(zeta, mu) = 0}``, the algebra of ``G_mu``."""
    G = lc.get_group(group)
    M = np.column_stack([lc.coad_generator(G, e, np.asarray(mu, dtype=float)) for e in np.eye(G.dim)])
    _, sv, vt = np.linalg.svd(M)
    rank = int(np.sum(sv > tol * max(1.0, sv[0] if sv.size else 1.0)))
    return [vt[i] for i in range(rank, G.dim)]


# --- orbit and reduced forms ---------------------------------------------------

ORBIT_FORMS = {
    "KKS": "kks",
    "Symp/Gxg": "omega_orbit_gxg",
    "SymOr": "omega_orbit_gsxg",
    "RedOhmT*TG": "omega_red_tstg",
    "RedOhmT*T*G": "omega_red_tstsg",
    "reduced-Tulczyjew": "omega_red_ttcg",
}


def _orbit_kernel(form, p):
    """Labels whose tangent vector on the orbit vanishes at ``p``."""
    G = lc.get_group(p.group)
    z = np.zeros(G.dim)
    if form == "kks":
        return [(k,) for k in isotropy_algebra(p.group, p.slots[0])]
    if form == "omega_orbit_gxg":
        return _kernel_labels(lambda lab: ib.flatten(coadjoint_generator("Gg", p.group, lab, p.slots)), G, 2)
    if form == "omega_orbit_gsxg":
        # label (lam, eta) generates the curve (exp(t eta), t lam)
        return _kernel_labels(lambda lab: ib.flatten(coadjoint_generator("Gg*", p.group, (lab[1], lab[0]), p.slots)),
                              G, 2)
    iso = isotropy_algebra(p.group, p.slots[0])
    return [(k, z, z) for k in iso]


def _kernel_labels(fn, G, parts, tol=1e-10):
    n = G.dim * parts
    M = np.column_stack([fn(ib.unflatten(e, parts)) for e in np.eye(n)])
    _, sv, vt = np.linalg.svd(M)
    rank = int(np.sum(sv > tol * max(1.0, sv[0])))
    return [ib.unflatten(vt[i], parts) for i in range(rank, n)]


def _orbit_space_point(form, group, rng):
    space = ib.TWO_FORMS[form]
    return ib.random_point(space, group, rng)


def orbit_form_check(form, group="so3", samples=100, seed=0):
    """Antisymmetry, kernel and potential checks for an orbit or reduced two-form.

    Returns a dict of maximal residuals:

    * ``antisymmetry``: ``|w(a, b) + w(b, a)|``.
    * ``kernel``: ``|w(k, b)|`` for labels ``k`` whose orbit tangent vanishes,
      i.e. the form is well defined on tangent vectors.
    * ``kks_value`` (KKS only): ``|w(x, y) + <mu, [x, y]>|``.
    * ``theta_chi1``/``theta_chi2`` (reduced Tulczyjew only): the potentials of
      the Tulczyjew space against the reduced potentials along the projection
      ``(g, mu, xi, nu) -> (nu + cg(xi, mu), mu, xi)``; ``theta_1`` is taken with
      superscripts ``(nu + cg(xi, mu), -xi, 0, 0)``.
    """
    if form in ORBIT_FORMS:
        form = ORBIT_FORMS[form]
    if form not in ORBIT_FORMS.values():
        raise UsageError(f"unknown orbit form {form!r}; expected one of {list(ORBIT_FORMS)}")
    G = lc.get_group(group)
    rng = np.random.default_rng(seed)
    space = ib.TWO_FORMS[form]
    out = {"antisymmetry": 0.0, "kernel": 0.0}
    if form == "kks":
        out["kks_value"] = 0.0
    if form == "omega_red_ttcg":
        out["theta_chi1"] = 0.0
        out["theta_chi2"] = 0.0
    for _ in range(samples):
        p = _orbit_space_point(form, group, rng)
        a = ib.random_generator(space, group, rng)
        b = ib.random_generator(space, group, rng)
        w = ib.eval_two_form(form, p, a, b)
        out["antisymmetry"] = max(out["antisymmetry"], abs(w + ib.eval_two_form(form, p, b, a)))
        for k in _orbit_kernel(form, p):
            out["kernel"] = max(out["kernel"], abs(ib.eval_two_form(form, p, k, b)))
        if form == "kks":
            expected = -np.dot(p.slots[0], lc.ad(G, a[0], b[0]))
            out["kks_value"] = max(out["kks_value"], abs(w - expected))
        if form == "omega_red_ttcg":
            r1, r2 = tulczyjew_potential_residuals(ib.random_point("TTcG", group, rng),
                                                   ib.random_generator("TTcG", group, rng))
            out["theta_chi1"] = max(out["theta_chi1"], r1)
            out["theta_chi2"] = max(out["theta_chi2"], r2)
    return out


def tulczyjew_projection(p):
    """``(g, mu, xi, nu) -> (lam, mu, xi)`` with ``lam = nu + cg(xi, mu)``."""
    G = lc.get_group(p.group)
    lam = _ttcg_spatial(G, p)
    return ib.BundlePoint("Olam_g*xg", p.group, (lam, p["mu"].copy(), p["xi"].copy()))


def tulczyjew_potential_residuals(p, gen):
    """``|theta_i(X) - chi_i(pi_* X)|`` for i = 1, 2 at a TTcG point."""
    q = tulczyjew_projection(p)
    eta, ups, zeta, _ = gen
    red = (eta, ups, zeta)
    z = np.zeros_like(eta)
    t1 = ib.eval_one_form("theta1_ttcg", (q.slots[0], -p["xi"], z, z), gen, None)
    t2 = ib.eval_one_form("theta2_ttcg", None, gen, p)
    c1 = ib.eval_one_form("chi1", None, red, q)
    c2 = ib.eval_one_form("chi2", None, red, q)
    return abs(t1 - c1), abs(t2 - c2)


# --- reduction scenarios -------------------------------------------------------

_ISO = re.compile(r"^(?P<aid>[^@]+)@isotropy\((?P<slot>\w+)\)$")
_COLUMN = re.compile(r"^g\[:,\s*(?P<col>\d+)\]$")

SCENARIO_KEYS = ("id", "group", "formulation", "observable", "reduced_formulation", "reduced_observable",
                 "projection", "actions", "initial", "seed", "scale", "T", "h", "scheme",
                 "tol_drift", "tol_mismatch", "invariance_samples")


@dataclass(frozen=True)
class Scenario:
    """A reduction diagram to check numerically.

    ``projection`` maps each reduced slot to a full-space slot name or to a
    group column ``"g[:, k]"``.  ``actions`` lists action ids under which the
    observable must be invariant; ``"id@isotropy(slot)"`` restricts the group
    part to the coadjoint isotropy of the initial value of ``slot``.
    ``initial`` overrides slots of a seeded random initial point.
    """

    id: str
    group: str
    formulation: str
    observable: str
    reduced_formulation: str
    reduced_observable: str
    projection: dict
    actions: tuple
    initial: dict = field(default_factory=dict)
    seed: int = 0
    scale: float = 0.5
    T: float = 5.0
    h: float = 1e-3
    scheme: str = "rkmk4"
    tol_drift: float = 1e-6
    tol_mismatch: float = 1e-6
    invariance_samples: int = 20


def scenario_from_dict(d):
    """Build a :class:`Scenario` from config keys; unknown keys are rejected."""
    if not isinstance(d, dict):
        raise UsageError("a scenario is a mapping")
    unknown = sorted(set(d) - set(SCENARIO_KEYS))
    if unknown:
        raise UsageError(f"unknown scenario keys {unknown}; allowed: {list(SCENARIO_KEYS)}")
    required = ("id", "group", "formulation", "observable", "reduced_formulation", "projection", "actions")
    missing = [k for k in required if k not in d]
    if missing:
        raise UsageError(f"scenario is missing keys {missing}")
    kw = dict(d)
    kw.setdefault("reduced_observable", kw["observable"])
    kw["actions"] = tuple(kw["actions"])
    kw["projection"] = dict(kw["projection"])
    kw["initial"] = dict(kw.get("initial", {}))
    for key in ("T", "h", "scale", "tol_drift", "tol_mismatch"):
        if key in kw:
            kw[key] = float(kw[key])
    return Scenario(**kw)


@dataclass
class ReductionReport:
    scenario_id: str
    momentum_drift: float
    trajectory_mismatch: float
    passed: bool
    invariance_residual: float = 0.0
    steps: int = 0

    def as_dict(self):
        return {"scenario_id": self.scenario_id, "momentum_drift": self.momentum_drift,
                "trajectory_mismatch": self.trajectory_mismatch, "pass": self.passed}


def _parse_action(entry):
    m = _ISO.match(entry)
    if m:
        return get_action(m.group("aid")), m.group("slot")
    return get_action(entry), None


def _initial_point(sc, space):
    G = lc.get_group(sc.group)
    rng = np.random.default_rng(sc.seed)
    p = ib.random_point(space, G.id, rng, sc.scale)
    if sc.initial:
        unknown = set(sc.initial) - set(ib.slot_names(space))
        if unknown:
            raise UsageError(f"initial values for unknown slots {sorted(unknown)}")
        changes = {}
        for name, v in sc.initial.items():
            if name == "g":
                changes[name] = lc.element(G, np.asarray(v, dtype=float))
            else:
                changes[name] = _vector(G, v, f"initial {name}")
        p = p.replace(**changes)
    return p


def project(sc, p, red_space):
    """Reduced point from a full point through ``sc.projection``."""
    slots = []
    for name, kind in zip(ib.slot_names(red_space), ib.slot_kinds(red_space)):
        if name not in sc.projection:
            raise UsageError(f"projection does not cover reduced slot {name!r}")
        src = sc.projection[name]
        m = _COLUMN.match(src)
        if m:
            slots.append(p["g"].matrix[:, int(m.group("col"))].copy())
        elif kind == "G":
            slots.append(p[src])
        else:
            slots.append(np.asarray(p[src], dtype=float).copy())
    return ib.BundlePoint(red_space, p.group, tuple(slots))


def invariance_residual(sc, obs, p0, rng):
    """Max ``|H(act(p, s)) - H(p)|`` over sampled points and subgroup elements."""
    worst = 0.0
    space = dy.get_formulation(sc.formulation).space
    for entry in sc.actions:
        a, iso_slot = _parse_action(entry)
        if a.space != space:
            raise ScenarioError(f"action {a.id} acts on {a.space}, scenario lives on {space}")
        iso = isotropy_algebra(sc.group, p0[iso_slot]) if iso_slot else None
        for _ in range(sc.invariance_samples):
            p = ib.random_point(space, sc.group, rng)
            if iso_slot:
                p = p.replace(**{iso_slot: p0[iso_slot]})
            s = random_subgroup_element(a.subgroup, sc.group, rng, isotropy=iso)
            v = obs.value(p)
            worst = max(worst, abs(obs.value(act(a, p, s)) - v) / max(1.0, abs(v)))
    return worst


def _momentum_monitor(entry, group, p0):
    a, iso_slot = _parse_action(entry)
    if iso_slot is None:
        return lambda x: np.concatenate(momentum(a, x))
    basis = isotropy_algebra(group, p0[iso_slot])
    if a.subgroup != "G":
        raise ScenarioError("isotropy restriction applies to G actions only")
    return lambda x: np.array([np.dot(momentum(a, x)[0], k) for k in basis])


def _state_point(s):
    return s.point if isinstance(s, dy.FlowState) else s


def verify_reduction(sc, invariance_tol=1e-9):
    """Integrate the full and reduced flows and compare.

    Raises :class:`ScenarioError` when the observable is not invariant under
    the scenario's actions.
    """
    if isinstance(sc, dict):
        sc = scenario_from_dict(sc)
    full = dy.get_formulation(sc.formulation)
    red = dy.get_formulation(sc.reduced_formulation)
    obs = parse(sc.observable, full.space)
    red_obs = parse(sc.reduced_observable, red.space)
    p0 = _initial_point(sc, full.space)
    inv = invariance_residual(sc, obs, p0, np.random.default_rng(sc.seed + 1))
    if inv > invariance_tol:
        raise ScenarioError(f"{sc.id}: observable is not invariant under {list(sc.actions)} "
                            f"(residual {inv:.3e})")
    scheme = it.Scheme(sc.scheme, sc.h, sc.T)
    monitors = {e: _momentum_monitor(e, sc.group, p0) for e in sc.actions}
    traj = it.integrate(full, obs, p0, scheme, monitors)
    rtraj = it.integrate(red, red_obs, project(sc, p0, red.space), scheme)
    mismatch = 0.0
    for s, r in zip(traj.states, rtraj.states):
        mismatch = max(mismatch, point_distance(project(sc, _state_point(s), red.space), _state_point(r)))
    drift = 0.0
    for vals in traj.monitors.values():
        drift = max(drift, float(np.max(np.linalg.norm(vals - vals[0], axis=1))) if vals.size else 0.0)
    passed = bool(drift <= sc.tol_drift and mismatch <= sc.tol_mismatch
                  and math.isfinite(drift) and math.isfinite(mismatch))
    return ReductionReport(sc.id, drift, mismatch, passed, inv, len(traj) - 1)


# --- shipped scenario suite ------------------------------------------------------

_I = "[0.5, 0.25, 0.16666666666666666]"
_J = "[0.4, 0.3, 0.2]"


def _sc(sid, form, src, red_form, red_src, projection, actions, **kw):
    return Scenario(sid, kw.pop("group", "so3"), form, src, red_form, red_src, projection, tuple(actions), **kw)


def _same(*names):
    return {n: n for n in names}


SCENARIOS = {s.id: s for s in (
    _sc("TcG_G/LP", "HAM_TcG", f"quadratic_form(mu, {_I})", "LP", f"quadratic_form(mu, {_I})",
        _same("mu"), ["TcG_G"]),
    _sc("TsTG_G", "HAM_TsTG", f"quadratic_form(mu, {_I}) + 0.3*pair(xi, nu) + 0.2*quadratic_form(xi)",
        "HAM_TsTG/G", f"quadratic_form(mu, {_I}) + 0.3*pair(xi, nu) + 0.2*quadratic_form(xi)",
        _same("xi", "mu", "nu"), ["TsTG_G"]),
    _sc("TsTG_g", "HAM_TsTG", f"quadratic_form(mu, {_I}) + 0.3*pair(mu, nu) + quadratic_form(nu, {_J}) + 0.2*g[0, 2]",
        "HAM_TsTG/g", f"quadratic_form(mu, {_I}) + 0.3*pair(mu, nu) + quadratic_form(nu, {_J}) + 0.2*g[0, 2]",
        _same("g", "mu", "nu"), ["TsTG_g"]),
    _sc("TsTG_Gg", "HAM_TsTG", f"quadratic_form(mu, {_I}) + 0.3*pair(mu, nu) + quadratic_form(nu, {_J})",
        "LP_g*xg*", f"quadratic_form(mu, {_I}) + 0.3*pair(mu, nu) + quadratic_form(nu, {_J})",
        _same("mu", "nu"), ["TsTG_Gg", "TsTG_G", "TsTG_g"]),
    _sc("TsTsG_G", "HAM_TsTsG", f"quadratic_form(nu, {_I}) + 0.3*pair(mu, xi) + 0.2*quadratic_form(mu)",
        "HAM_TsTsG/G", f"quadratic_form(nu, {_I}) + 0.3*pair(mu, xi) + 0.2*quadratic_form(mu)",
        _same("mu", "nu", "xi"), ["TsTsG_G"]),
    _sc("TsTsG_g*", "HAM_TsTsG", f"quadratic_form(nu, {_I}) + 0.3*pair(nu, xi) + quadratic_form(xi, {_J}) + 0.2*g[1, 0]",
        "HAM_TsTsG/g*", f"quadratic_form(nu, {_I}) + 0.3*pair(nu, xi) + quadratic_form(xi, {_J}) + 0.2*g[1, 0]",
        _same("g", "nu", "xi"), ["TsTsG_g*"]),
    _sc("TsTsG_Gg*", "HAM_TsTsG", f"quadratic_form(nu, {_I}) + 0.3*pair(nu, xi) + quadratic_form(xi, {_J})",
        "LP_g*xg", f"quadratic_form(nu, {_I}) + 0.3*pair(nu, xi) + quadratic_form(xi, {_J})",
        _same("nu", "xi"), ["TsTsG_Gg*", "TsTsG_G", "TsTsG_g*"]),
    _sc("TTcG_G", "HAM_TTcG", f"quadratic_form(nu, {_I}) + 0.3*pair(mu, xi) + 0.2*quadratic_form(mu)",
        "HAM_TTcG/G", f"quadratic_form(nu, {_I}) + 0.3*pair(mu, xi) + 0.2*quadratic_form(mu)",
        _same("mu", "xi", "nu"), ["TTcG_G"]),
    _sc("TTcG_g2", "HAM_TTcG", f"quadratic_form(nu, {_I}) + 0.3*pair(mu, nu) + 0.2*g[0, 1]",
        "HAM_TTcG/g2", f"quadratic_form(nu, {_I}) + 0.3*pair(mu, nu) + 0.2*g[0, 1]",
        _same("g", "mu", "nu"), ["TTcG_g2"]),
    _sc("TTcG_g1*", "HAM_TTcG", f"quadratic_form(nu, {_I}) + 0.3*pair(xi, nu) + 0.2*g[2, 1]",
        "HAM_TTcG/g1*", f"quadratic_form(nu, {_I}) + 0.3*pair(xi, nu) + 0.2*g[2, 1]",
        _same("g", "xi", "nu"), ["TTcG_g1*_psi"]),
    _sc("TTcG_Gg2", "HAM_TTcG", f"quadratic_form(mu, {_I}) + 0.5*pair(mu, nu)**2",
        "HAM_TTcG/Gg2", f"quadratic_form(mu, {_I}) + 0.5*pair(mu, nu)**2",
        _same("mu", "nu"), ["TTcG_Gg2"]),
    _sc("TTcG_Gg1*", "HAM_TTcG", f"quadratic_form(xi, {_I}) + 0.5*pair(xi, nu)**2",
        "HAM_TTcG/Gg1*", f"quadratic_form(xi, {_I}) + 0.5*pair(xi, nu)**2",
        _same("xi", "nu"), ["TTcG_Gg1*"]),
    _sc("TTcG_nu/LP", "HAM_TTcG", f"quadratic_form(nu, {_I})", "LP", f"quadratic_form(mu, {_I})",
        {"mu": "nu"}, ["TTcG_G", "TTcG_g2", "TTcG_g1*_psi"]),
    # stage 1 by g2 freezes mu; stage 2 by the isotropy group of mu = e3
    _sc("HRBS_g2_then_Gmu", "HAM_TTcG", f"quadratic_form(nu, {_I}) + 0.7*g[2, 2]",
        "LP_g*xg*", f"quadratic_form(mu, {_I}) + 0.7*nu[2]",
        {"mu": "nu", "nu": "g[:, 2]"}, ["TTcG_g2", "TTcG_G@isotropy(mu)"],
        initial={"mu": [0.0, 0.0, 1.0]}),
    _sc("EL_TG/EP", "EL_TG", f"quadratic_form(xi, {_I})", "EP", f"quadratic_form(xi, {_I})",
        _same("xi"), ["TG_G"]),
    _sc("EL_TTcG/EP_gg*", "EL_TTcG", f"quadratic_form(xi, {_I}) + quadratic_form(nu, {_J}) + 0.1*pair(xi, nu)",
        "EP_gg*", f"quadratic_form(xi, {_I}) + quadratic_form(nu, {_J}) + 0.1*pair(xi, nu)",
        _same("xi", "nu"), ["TTcG_G_lift", "TTcG_Gg1*_lift"], T=2.0),
    # the unit-weight nu term keeps the fiber derivative invertible and decouples on so3
    _sc("EL_TTcG/EP", "EL_TTcG", f"quadratic_form(xi, {_I}) + 0.5*quadratic_form(nu)",
        "EP", f"quadratic_form(xi, {_I})", _same("xi"), ["TTcG_G_lift"], T=2.0),
    _sc("EL_TTcG/EL_Ggg*", "EL_TTcG", f"quadratic_form(xi, {_I}) + quadratic_form(nu, {_J}) + 0.2*g[0, 2]",
        "EL_Ggg*", f"quadratic_form(xi, {_I}) + quadratic_form(nu, {_J}) + 0.2*g[0, 2]",
        _same("g", "xi", "nu"), ["TTcG_g1*_lift"], T=2.0),
    _sc("EL_TTcG/EL_Gg", "EL_TTcG", f"quadratic_form(xi, {_I}) + 0.5*quadratic_form(nu) + 0.2*g[0, 2]",
        "EL_Gg", f"quadratic_form(xi, {_I}) + 0.2*g[0, 2]", _same("g", "xi"), ["TTcG_g1*_lift"], T=2.0),
    _sc("EL_TTcG/EL_g*gg*", "EL_TTcG",
        f"quadratic_form(xi, {_I}) + quadratic_form(nu, {_J}) + 0.2*pair(mu, xi) + 0.1*quadratic_form(mu)",
        "EL_g*gg*", f"quadratic_form(xi, {_I}) + quadratic_form(nu, {_J}) + 0.2*pair(mu, xi) + 0.1*quadratic_form(mu)",
        _same("mu", "xi", "nu"), ["TTcG_G_lift"], T=2.0),
    _sc("TsTG_Gg/R3", "HAM_TsTG", f"quadratic_form(mu, {_I}) + 0.3*pair(mu, nu) + quadratic_form(nu, {_J})",
        "LP_g*xg*", f"quadratic_form(mu, {_I}) + 0.3*pair(mu, nu) + quadratic_form(nu, {_J})",
        _same("mu", "nu"), ["TsTG_Gg"], group="r3"),
)}


def get_scenario(sid):
    try:
        return SCENARIOS[sid]
    except KeyError:
        raise UsageError(f"unknown scenario {sid!r}; expected one of {list(SCENARIOS)}") from None


def with_overrides(sc, **kw):
    return replace(sc, **kw)

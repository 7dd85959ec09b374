"""Trivialized iterated bundles of a matrix Lie group.

A point is a :class:`BundlePoint`: a space id, a group id and a tuple of slot
values in the space's declared order.  Group slots hold a
:class:`~liebundles.lie_core.GroupElement`; every other slot is a length-n array.

Sign convention: ``cg(xi, mu)`` below is ``lie_core.coad_generator``, the
derivative of ``coAd(exp(t xi), mu)``.  It is the infinitesimal coadjoint term
that appears in every group law, right-invariant field, two-form and flat map
of this module.

Tangent and cotangent tuples use right-trivialized coordinates: the group slot
of a tangent tuple is ``dg/dt g^-1``; the group slot of a cotangent tuple pairs
with that algebra element.  All other slots pair componentwise.
"""

from dataclasses import dataclass

import numpy as np

from . import lie_core as lc
from .errors import UsageError

# slot kinds: "G" group, "g" algebra, "g*" dual
SPACES = {
    "TG": (("g", "G"), ("xi", "g")),
    "TcG": (("g", "G"), ("mu", "g*")),
    "TsTG": (("g", "G"), ("xi", "g"), ("mu", "g*"), ("nu", "g*")),
    "TsTsG": (("g", "G"), ("mu", "g*"), ("nu", "g*"), ("xi", "g")),
    "TTcG": (("g", "G"), ("mu", "g*"), ("xi", "g"), ("nu", "g*")),
    "Gg": (("g", "G"), ("xi", "g"), ("mu", "g*")),
    "Gg*g*": (("g", "G"), ("mu", "g*"), ("nu", "g*")),
    "gg*g*": (("xi", "g"), ("mu", "g*"), ("nu", "g*")),
    # reduced spaces; no group law, used by observables, brackets and orbit forms
    "g*": (("mu", "g*"),),
    "g": (("xi", "g"),),
    "g*xg*": (("mu", "g*"), ("nu", "g*")),
    "g*xg": (("nu", "g*"), ("xi", "g")),
    "gxg*": (("xi", "g"), ("nu", "g*")),
    "gxg*xg*": (("xi", "g"), ("mu", "g*"), ("nu", "g*")),
    "g*xg*xg": (("mu", "g*"), ("nu", "g*"), ("xi", "g")),
    "g*xgxg*": (("mu", "g*"), ("xi", "g"), ("nu", "g*")),
    "Gxg*xg": (("g", "G"), ("nu", "g*"), ("xi", "g")),
    "Gxgxg*": (("g", "G"), ("xi", "g"), ("nu", "g*")),
    "Omu_gxg*": (("mu", "g*"), ("xi", "g"), ("nu", "g*")),
    "Omu_gxg": (("mu", "g*"), ("nu", "g*"), ("xi", "g")),
    "Olam_g*xg": (("lam", "g*"), ("mu", "g*"), ("xi", "g")),
}

BUNDLE_SPACES = ("TG", "TcG", "TsTG", "TsTsG", "TTcG")
SUBGROUP_SPACES = ("Gg", "Gg*g*", "gg*g*")
GROUP_SPACES = BUNDLE_SPACES + SUBGROUP_SPACES


def slot_names(space):
    return tuple(name for name, _ in _slot_layout(space))


def slot_kinds(space):
    return tuple(kind for _, kind in _slot_layout(space))


def _slot_layout(space):
    try:
        return SPACES[space]
    except KeyError:
        raise UsageError(f"unknown space id {space!r}") from None


def has_group(space):
    return slot_kinds(space)[0] == "G"


@dataclass(frozen=True, eq=False)
class BundlePoint:
    space: str
    group: str
    slots: tuple

    def __getitem__(self, name):
        return self.slots[slot_names(self.space).index(name)]

    def replace(self, **changes):
        names = slot_names(self.space)
        slots = list(self.slots)
        for k, v in changes.items():
            slots[names.index(k)] = v
        return BundlePoint(self.space, self.group, tuple(slots))


def make_point(space, group, *slots):
    kinds = slot_kinds(space)
    if len(slots) != len(kinds):
        raise UsageError(f"{space} has {len(kinds)} slots, got {len(slots)}")
    G = lc.get_group(group)
    out = []
    for kind, value in zip(kinds, slots):
        if kind == "G":
            if not isinstance(value, lc.GroupElement):
                value = lc.element(G, value)
            elif value.group != G.id:
                raise UsageError(f"group mismatch: {value.group} vs {G.id}")
            out.append(value)
        else:
            v = np.array(value, dtype=float)
            if v.shape != (G.dim,):
                raise UsageError(f"slot of kind {kind} needs {G.dim} entries, got {v.shape}")
            out.append(v)
    return BundlePoint(space, G.id, tuple(out))


def identity_point(space, group):
    G = lc.get_group(group)
    return BundlePoint(space, G.id, tuple(lc.identity(G) if k == "G" else np.zeros(G.dim) for k in slot_kinds(space)))


def random_point(space, group, rng, scale=1.0):
    G = lc.get_group(group)
    slots = []
    for kind in slot_kinds(space):
        slots.append(lc.random_element(G, rng, scale) if kind == "G" else scale * rng.standard_normal(G.dim))
    return BundlePoint(space, G.id, tuple(slots))


def random_generator(space, group, rng, scale=1.0):
    G = lc.get_group(group)
    return tuple(scale * rng.standard_normal(G.dim) for _ in slot_kinds(space))


def flatten(tup):
    return np.concatenate([np.asarray(t, dtype=float) for t in tup])


def unflatten(vec, nslots):
    return tuple(np.array(part) for part in np.split(np.asarray(vec, dtype=float), nslots))


def flat_coordinates(p):
    """Point as one vector: group matrix entries followed by linear slots."""
    return np.concatenate([s.matrix.ravel() if isinstance(s, lc.GroupElement) else s for s in p.slots])


def _check(space, *points):
    for p in points:
        if p.space != space:
            raise UsageError(f"point lives in {p.space}, expected {space}")
    if len({p.group for p in points}) > 1:
        raise UsageError("points over different groups")


# --- group laws -------------------------------------------------------------


def bundle_mul(space, p, q):
    """Group multiplication ``p . q`` of the trivialized space."""
    _check(space, p, q)
    G = lc.get_group(p.group)

    def cg(x, m):
        return lc.coad_generator(G, x, m)

    if space == "gg*g*":
        x, m1, m2 = p.slots
        y, n1, n2 = q.slots
        slots = (x + y, m1 + n1 + cg(x, n2), m2 + n2)
        return BundlePoint(space, p.group, slots)

    g, h = p.slots[0], q.slots[0]
    gh = lc.group_mul(g, h)
    A = lc.Ad_matrix(g)
    Ast = lc.coAd_matrix(g)
    if space == "TG":
        slots = (gh, p.slots[1] + A @ q.slots[1])
    elif space == "TcG":
        slots = (gh, p.slots[1] + Ast @ q.slots[1])
    elif space == "TsTG":
        _, x, m1, m2 = p.slots
        _, y, n1, n2 = q.slots
        cn2 = Ast @ n2
        slots = (gh, x + A @ y, m1 + Ast @ n1 + cg(x, cn2), m2 + cn2)
    elif space == "TsTsG":
        _, m1, m2, x = p.slots
        _, n1, n2, y = q.slots
        Ay = A @ y
        slots = (gh, m1 + Ast @ n1, m2 + Ast @ n2 - cg(Ay, m1), x + Ay)
    elif space == "TTcG":
        _, m1, x, m2 = p.slots
        _, n1, y, n2 = q.slots
        Ay = A @ y
        slots = (gh, m1 + Ast @ n1, x + Ay, m2 + Ast @ n2 - cg(Ay, m1))
    elif space == "Gg":
        _, x, m = p.slots
        _, y, n = q.slots
        slots = (gh, x + A @ y, m + Ast @ n)
    elif space == "Gg*g*":
        _, m1, m2 = p.slots
        _, n1, n2 = q.slots
        slots = (gh, m1 + Ast @ n1, m2 + Ast @ n2)
    else:
        raise UsageError(f"{space} carries no group law")
    return BundlePoint(space, p.group, slots)


def bundle_inverse(space, p):
    """Inverse element; the linear slots are solved from ``p . q = e``."""
    G = lc.get_group(p.group)
    kinds = slot_kinds(space)
    group_slot = [lc.inverse(p.slots[0])] if kinds[0] == "G" else []
    nlin = len(kinds) - len(group_slot)

    def lin_part(lin):
        q = BundlePoint(space, p.group, tuple(group_slot) + unflatten(lin, nlin))
        r = bundle_mul(space, p, q)
        return flatten(r.slots[len(group_slot):])

    c = lin_part(np.zeros(nlin * G.dim))
    M = np.column_stack([lin_part(e) - c for e in np.eye(nlin * G.dim)])
    lin = np.linalg.solve(M, -c)
    return BundlePoint(space, p.group, tuple(group_slot) + unflatten(lin, nlin))


def exp_curve(space, group, gen, t):
    """A curve through the identity with velocity ``gen``: ``(exp(t gen_0), t gen_1, ...)``."""
    G = lc.get_group(group)
    kinds = slot_kinds(space)
    slots = []
    for kind, v in zip(kinds, gen):
        slots.append(lc.exp(G, t * np.asarray(v, dtype=float)) if kind == "G" else t * np.asarray(v, dtype=float))
    return BundlePoint(space, G.id, tuple(slots))


def translate(space, gen, p, t):
    """``exp_curve(gen, t) . p``; its t-derivative at 0 is ``rivf(space, gen, p)``."""
    return bundle_mul(space, exp_curve(space, p.group, gen, t), p)


def displace(p, tangent, t):
    """Move ``p`` along a right-trivialized tangent tuple to first order in ``t``.

    The group slot moves by ``exp(t v) g``; linear slots move additively.
    """
    G = lc.get_group(p.group)
    slots = []
    for s, v in zip(p.slots, tangent):
        if isinstance(s, lc.GroupElement):
            slots.append(lc.group_mul(lc.exp(G, t * np.asarray(v)), s))
        else:
            slots.append(s + t * np.asarray(v))
    return BundlePoint(p.space, p.group, tuple(slots))


def right_velocity(curve, t, h=1e-4):
    """Right-trivialized velocity of a curve of points by the five-point central stencil.

    Fourth-order truncation at ``h = 1e-4`` keeps the error near 1e-11, where
    the two-point stencil at 1e-6 is rounding-limited near 1e-10.
    """
    pp2, pp1, pm1, pm2 = (curve(t + k * h) for k in (2, 1, -1, -2))
    p0 = curve(t)
    G = lc.get_group(p0.group)

    def diff(a, b, c, d):
        return (-a + 8.0 * b - 8.0 * c + d) / (12.0 * h)

    out = []
    for a, b, c, d, z in zip(pp2.slots, pp1.slots, pm1.slots, pm2.slots, p0.slots):
        if isinstance(z, lc.GroupElement):
            m = diff(a.matrix, b.matrix, c.matrix, d.matrix) @ lc.inverse(z).matrix
            out.append(lc.vee(G, m))
        else:
            out.append(diff(a, b, c, d))
    return tuple(out)


# --- right-invariant vector fields -----------------------------------------


def rivf(space, gen, p):
    """Right-invariant vector field generated by ``gen``, evaluated at ``p``."""
    _check(space, p)
    G = lc.get_group(p.group)

    def cg(x, m):
        return lc.coad_generator(G, x, m)

    def ad(x, y):
        return lc.ad(G, x, y)

    gen = tuple(np.asarray(v, dtype=float) for v in gen)
    if space == "TG":
        x2, x3 = gen
        return (x2, x3 + ad(x2, p.slots[1]))
    if space == "TcG":
        x, n = gen
        return (x, n + cg(x, p.slots[1]))
    if space == "TsTG":
        e1, e2, n1, n2 = gen
        _, x, m1, m2 = p.slots
        return (e1, e2 + ad(e1, x), n1 + cg(e1, m1) + cg(e2, m2), n2 + cg(e1, m2))
    if space == "TsTsG":
        e1, n1, n2, e2 = gen
        _, m1, m2, x = p.slots
        return (e1, n1 + cg(e1, m1), n2 + cg(e1, m2) - cg(x, n1), e2 + ad(e1, x))
    if space == "TTcG":
        e1, n1, e2, n2 = gen
        _, m1, x, m2 = p.slots
        return (e1, n1 + cg(e1, m1), e2 + ad(e1, x), n2 + cg(e1, m2) - cg(x, n1))
    if space == "Gg":
        e, z, n = gen
        _, x, m = p.slots
        return (e, z + ad(e, x), n + cg(e, m))
    if space == "Gg*g*":
        e, n1, n2 = gen
        _, m1, m2 = p.slots
        return (e, n1 + cg(e, m1), n2 + cg(e, m2))
    if space == "gg*g*":
        e, n1, n2 = gen
        _, _, m2 = p.slots
        return (e, n1 + cg(e, m2), n2)
    raise UsageError(f"{space} carries no group law")


def rivf_matrix(space, p):
    """Matrix of the linear map ``flatten(gen) -> flatten(rivf(gen, p))``."""
    G = lc.get_group(p.group)
    k = len(slot_kinds(space))
    cols = [flatten(rivf(space, unflatten(e, k), p)) for e in np.eye(k * G.dim)]
    return np.column_stack(cols)


def generator_of(space, p, tangent):
    """Inverse of :func:`rivf`: the generator whose field equals ``tangent`` at ``p``."""
    return unflatten(np.linalg.solve(rivf_matrix(space, p), flatten(tangent)), len(tangent))


# --- forms ------------------------------------------------------------------

TWO_FORMS = {
    "omega_tcg": "TcG",
    "omega_tstg": "TsTG",
    "omega_tstsg": "TsTsG",
    "omega_ttcg": "TTcG",
    "omega_ttcg_printed": "TTcG",
    "kks": "g*",
    "omega_orbit_gxg": "g*xg*",
    "omega_orbit_gsxg": "g*xg",
    "omega_red_tstg": "Omu_gxg*",
    "omega_red_tstsg": "Omu_gxg",
    "omega_red_ttcg": "Olam_g*xg",
}

ONE_FORMS = {
    "theta_tcg": "TcG",
    "theta_tstg": "TsTG",
    "theta_tstsg": "TsTsG",
    "theta1_ttcg": "TTcG",
    "theta2_ttcg": "TTcG",
    "theta2_ttcg_printed": "TTcG",
    "chi1": "Olam_g*xg",
    "chi2": "Olam_g*xg",
}


def eval_two_form(form, p, gen1, gen2):
    """Value of a two-form on two generator tuples at ``p``.

    Bundle forms take generators of right-invariant fields.  ``omega_ttcg`` is
    the structure whose Hamiltonian fields have ``(g, nu)`` and ``(xi, mu)`` as
    conjugate pairs; ``omega_ttcg_printed`` is an alternative closed form kept
    for comparison (its Hamiltonian fields do not conserve the TTcG momenta).  Orbit forms take
    the algebra/dual labels of their tangent vectors:

    * ``kks``: ``(xi,)``, the vector ``-coad(xi, mu)`` on the orbit of ``mu``.
    * ``omega_orbit_gxg``: ``(eta, zeta)`` at ``(mu, nu)``.
    * ``omega_orbit_gsxg``: ``(lam, eta)`` at ``(nu, xi)``.
    * ``omega_red_tstg``: ``(eta, zeta, lam)`` at ``(mu, xi, nu)``.
    * ``omega_red_tstsg``: ``(eta, lam, zeta)`` at ``(mu, nu, xi)``, ``lam`` in g.
    * ``omega_red_ttcg``: ``(eta, ups, zeta)`` at ``(lam, mu, xi)``.
    """
    try:
        space = TWO_FORMS[form]
    except KeyError:
        raise UsageError(f"unknown two-form id {form!r}") from None
    _check(space, p)
    G = lc.get_group(p.group)
    P = np.dot

    def cg(x, m):
        return lc.coad_generator(G, x, m)

    def br(x, y):
        return lc.ad(G, x, y)

    a = tuple(np.asarray(v, dtype=float) for v in gen1)
    b = tuple(np.asarray(v, dtype=float) for v in gen2)
    s = p.slots
    if form == "omega_tcg":
        (x1, n1), (x2, n2) = a, b
        return P(n1, x2) - P(n2, x1) - P(s[1], br(x1, x2))
    if form == "omega_tstg":
        (x1, x2, m1, m2), (e1, e2, n1, n2) = a, b
        _, _, l1, l2 = s
        return (P(m1 + cg(x1, l1) + cg(x2, l2), e1) - P(n1, x1)
                + P(m2 + cg(x1, l2), e2) - P(n2, x2))
    if form == "omega_tstsg":
        (x1, m1, m2, x2), (e1, n1, n2, e2) = a, b
        _, l1, l2, z = s
        return (P(m2 + cg(x1, l2) - cg(z, m1), e1) - P(m1, e2)
                + P(-n2 + cg(z, n1), x1) + P(n1, x2))
    if form in ("omega_ttcg", "omega_ttcg_printed"):
        (x2, n2, x3, n3), (y2, k2, y3, k3) = a, b
        _, mu, x, nu = s
        base = P(n3, y2) - P(k3, x2) - P(nu, br(x2, y2)) + P(x, cg(y2, n2) - cg(x2, k2))
        if form == "omega_ttcg_printed":
            return base - P(n2, y3) + P(k2, x3)
        # (mu, xi) velocities enter as a canonical pair
        return base + P(n2 + cg(x2, mu), y3 + br(y2, x)) - P(k2 + cg(y2, mu), x3 + br(x2, x))
    if form == "kks":
        (x,), (y,) = a, b
        return -P(s[0], br(x, y))
    if form == "omega_orbit_gxg":
        (e, z), (eb, zb) = a, b
        mu, nu = s
        return P(mu, br(eb, e)) + P(nu, br(eb, z) - br(e, zb))
    if form == "omega_orbit_gsxg":
        (lam, e), (lamb, eb) = a, b
        nu, x = s
        # KKS form of G x g*: vanishes on the isotropy labels of (nu, xi)
        return P(nu, br(eb, e)) - P(x, cg(e, lamb) - cg(eb, lam))
    if form == "omega_red_tstg":
        (e, z, lam), (eb, zb, lamb) = a, b
        return P(lam, zb) - P(lamb, z) - P(s[0], br(e, eb))
    if form == "omega_red_tstsg":
        (e, lam, z), (eb, lamb, zb) = a, b
        return P(z, lamb) - P(zb, lam) - P(s[0], br(e, eb))
    (e, u, z), (eb, ub, zb) = a, b
    return P(u, zb) - P(ub, z) - P(s[0], br(e, eb))


def eval_one_form(form, params, gen, p):
    """Value of a one-form on a generator tuple.

    ``params`` is the superscript tuple of the parametrized forms
    (``theta_tcg``: ``(lam, eta)``; ``theta_tstg``: ``(nu1, nu2, eta1, eta2)``;
    ``theta_tstsg``: ``(nu1, eta1, eta2, nu2)``; ``theta1_ttcg``:
    ``(lam2, eta2, lam3, eta3)``).  ``theta2_ttcg``, ``chi1`` and ``chi2`` read
    the point instead and ignore ``params``.  ``theta2_ttcg`` is a potential of
    ``omega_ttcg``; ``theta2_ttcg_printed`` carries the opposite sign on its
    bracket term and is kept for comparison only.  ``chi1``/``chi2`` take the
    generator ``(eta, ups, zeta)`` at the point ``(lam, mu, xi)``.
    """
    try:
        space = ONE_FORMS[form]
    except KeyError:
        raise UsageError(f"unknown one-form id {form!r}") from None
    if p is not None:
        _check(space, p)
    P = np.dot
    gen = tuple(np.asarray(v, dtype=float) for v in gen)
    if form == "theta_tcg":
        lam, eta = params
        x, n = gen
        return P(lam, x) + P(n, eta)
    if form == "theta_tstg":
        n1, n2, e1, e2 = params
        x1, x2, m1, m2 = gen
        return P(n1, x1) + P(n2, x2) + P(m1, e1) + P(m2, e2)
    if form == "theta_tstsg":
        n1, e1, e2, n2 = params
        x1, m1, m2, x2 = gen
        return P(n1, x1) + P(m1, e1) + P(m2, e2) + P(n2, x2)
    if form == "theta1_ttcg":
        l2, e2, l3, e3 = params
        x2, n2, x3, n3 = gen
        return P(l2, x2) + P(n2, e2) + P(l3, x3) + P(n3, e3)
    G = lc.get_group(p.group)
    if form in ("theta2_ttcg", "theta2_ttcg_printed"):
        _, mu, x, nu = p.slots
        x2, _, x3, _ = gen
        sign = 1.0 if form == "theta2_ttcg_printed" else -1.0
        return P(mu, x3) + P(nu, x2) + sign * P(mu, lc.ad(G, x, x2))
    lam, mu, x = p.slots
    e, u, z = gen
    if form == "chi1":
        return P(lam, e) - P(u, x)
    return P(lam, e) + P(mu, z)


def flat(space, p, gen):
    """Musical map of the space's two-form applied to the field of ``gen``.

    Returns the covector ``a`` with ``<a, rivf(space, gen2, p)> =
    eval_two_form(omega_space, p, gen, gen2)`` in right-trivialized
    coordinates (see module docstring).
    """
    _check(space, p)
    G = lc.get_group(p.group)

    def cg(x, m):
        return lc.coad_generator(G, x, m)

    gen = tuple(np.asarray(v, dtype=float) for v in gen)
    if space == "TcG":
        x, n = gen
        return (n, -x)
    if space == "TsTG":
        e1, e2, l1, l2 = gen
        x = p.slots[1]
        return (l1 - cg(x, l2), l2, -e1, -e2)
    if space == "TsTsG":
        e1, n1, n2, e2 = gen
        m1 = p.slots[1]
        return (n2 + cg(e2, m1), e2, -e1, -n1)
    if space == "TTcG":
        x2, n2, x3, n3 = gen
        _, mu, x, _ = p.slots
        return (n3 - cg(x, n2), -x3 - lc.ad(G, x2, x), n2 + cg(x2, mu), -x2)
    raise UsageError(f"no flat map for {space}")


def flat_ttcg_printed(p, gen):
    """Flat map of ``omega_ttcg_printed``: ``(nu3 + cg(xi3, mu), xi3, -nu2, -xi2)``."""
    _check("TTcG", p)
    G = lc.get_group(p.group)
    x2, n2, x3, n3 = (np.asarray(v, dtype=float) for v in gen)
    return (n3 + lc.coad_generator(G, x3, p.slots[1]), x3, -n2, -x2)


FORM_OF_SPACE = {"TcG": "omega_tcg", "TsTG": "omega_tstg", "TsTsG": "omega_tstsg", "TTcG": "omega_ttcg"}


def flat_pairing(space, p, gen1, gen2):
    """``<flat(space, p, gen1), rivf(space, gen2, p)>``."""
    a = flat(space, p, gen1)
    v = rivf(space, gen2, p)
    return float(sum(np.dot(x, y) for x, y in zip(a, v)))


def two_form_matrix(space, p):
    """Matrix ``W`` with ``W[i, j] = Omega(e_i, e_j)`` over flattened generator bases."""
    G = lc.get_group(p.group)
    k = len(slot_kinds(space))
    basis = [unflatten(e, k) for e in np.eye(k * G.dim)]
    form = FORM_OF_SPACE[space]
    return np.array([[eval_two_form(form, p, a, b) for b in basis] for a in basis])


# --- symplectomorphisms -----------------------------------------------------


def sigma_TTcG_to_TsTG(p):
    """``(g, mu, xi, nu) -> (g, xi, nu + cg(xi, mu), mu)``."""
    _check("TTcG", p)
    G = lc.get_group(p.group)
    g, mu, x, nu = p.slots
    return BundlePoint("TsTG", p.group, (g, x.copy(), nu + lc.coad_generator(G, x, mu), mu.copy()))


def sigma_inverse(q):
    _check("TsTG", q)
    G = lc.get_group(q.group)
    g, x, m1, m2 = q.slots
    return BundlePoint("TTcG", q.group, (g, m2.copy(), x.copy(), m1 - lc.coad_generator(G, x, m2)))


def omega_flat_map_TTcG_to_TsTsG(p):
    """``(g, mu, xi, nu) -> (g, mu, nu + cg(xi, mu), -xi)``."""
    _check("TTcG", p)
    G = lc.get_group(p.group)
    g, mu, x, nu = p.slots
    return BundlePoint("TsTsG", p.group, (g, mu.copy(), nu + lc.coad_generator(G, x, mu), -x))


def omega_flat_map_inverse(q):
    _check("TsTsG", q)
    G = lc.get_group(q.group)
    g, m1, m2, z = q.slots
    x = -z
    return BundlePoint("TTcG", q.group, (g, m1.copy(), x, m2 - lc.coad_generator(G, x, m1)))


def pushforward(point_map, p, gen, space_in, space_out, h=1e-4):
    """Generator on the target space of ``D(point_map)`` applied to ``rivf(gen)``.

    Differentiates the map along the right-invariant flow of ``gen`` with
    :func:`right_velocity`.
    """
    vel = right_velocity(lambda t: point_map(translate(space_in, gen, p, t)), 0.0, h)
    return generator_of(space_out, point_map(p), vel)

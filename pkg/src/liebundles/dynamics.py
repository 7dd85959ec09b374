"""Equations of motion on the trivialized bundles, as explicit vector fields.

Every field is evaluated from slot gradients of an observable (see
:mod:`liebundles.expr`).  Tangent tuples follow the slot order of the
formulation's space; the group slot of a tangent tuple is ``dg/dt g^-1``.

Hamiltonian formulations on the full bundles are the four displays below,
written with ``cg = lie_core.coad_generator`` and ``[.,.] = ad``:

* ``HAM_TcG``: ``g' = H_mu``, ``mu' = -H_g + cg(H_mu, mu)``.
* ``HAM_TsTG`` on ``(g, xi, mu, nu)``: ``g' = H_mu``, ``xi' = H_nu - [xi, H_mu]``,
  ``mu' = -H_g - cg(xi, H_xi) + cg(H_mu, mu) + cg(H_nu, nu)``,
  ``nu' = -H_xi + cg(H_mu, nu)``.
* ``HAM_TsTsG`` on ``(g, mu, nu, xi)``: ``g' = H_nu``, ``mu' = H_xi + cg(H_nu, mu)``,
  ``nu' = cg(H_mu, mu) + cg(H_nu, nu) - H_g - cg(xi, H_xi)``,
  ``xi' = -H_mu + [H_nu, xi]``.
* ``HAM_TTcG`` on ``(g, mu, xi, nu)``: ``g' = E_nu``, ``mu' = -E_xi``,
  ``xi' = E_mu``, ``nu' = cg(E_nu, nu) - E_g``.

Each is the field ``X`` with ``i_X Omega = -dH`` for the space's two-form.
Reduced formulations (Lie-Poisson and the partially reduced spaces) are
restrictions: the observable must not depend on the dropped slots, and the
kept components of the parent display do not read them.

Lagrangian formulations run in momentum form.  With ``pi = L_xi`` on ``TG``:
``g' = xi``, ``pi' = L_g + cg(xi, pi)``.  On ``TTcG`` with base ``(g, mu)``,
velocities ``(xi, nu)`` and momenta ``(p, q) = (E_xi, E_nu)``:
``g' = xi``, ``mu' = nu + cg(xi, mu)``,
``p' = E_g - cg(E_mu, mu) + cg(xi, p) - cg(q, nu)``, ``q' = E_mu + [xi, q]``.
"""

from dataclasses import dataclass

import numpy as np
import sympy as sp

from . import iterated_bundles as ib
from . import lie_core as lc
from .errors import NumericalDomainError, RegularityError, UsageError
from .expr import _arg_symbols, from_sympy, point_vector, slot_symbols


@dataclass(frozen=True)
class Formulation:
    id: str
    space: str
    role: str  # "hamiltonian" or "lagrangian"
    parent: str  # full display evaluated for this formulation
    slots: tuple  # parent slot name of each slot of ``space``

    @property
    def velocity_slots(self):
        """Slots whose momenta are evolved (Lagrangian formulations only)."""
        if self.role != "lagrangian":
            return ()
        vel = _LAGRANGIAN_PARENTS[self.parent][1]
        return tuple(n for n, m in zip(ib.slot_names(self.space), self.slots) if m in vel)

    @property
    def base_slots(self):
        vel = self.velocity_slots
        return tuple(n for n in ib.slot_names(self.space) if n not in vel)


def _f(fid, space, role, parent, slots=None):
    return fid, Formulation(fid, space, role, parent, tuple(slots or ib.slot_names(space)))


FORMULATIONS = dict([
    _f("HAM_TcG", "TcG", "hamiltonian", "HAM_TcG"),
    _f("LP", "g*", "hamiltonian", "HAM_TcG", ("mu",)),
    _f("HAM_TsTG", "TsTG", "hamiltonian", "HAM_TsTG"),
    _f("HAM_TsTG/G", "gxg*xg*", "hamiltonian", "HAM_TsTG"),
    _f("HAM_TsTG/g", "Gg*g*", "hamiltonian", "HAM_TsTG"),
    _f("LP_g*xg*", "g*xg*", "hamiltonian", "HAM_TsTG"),
    _f("HAM_TsTsG", "TsTsG", "hamiltonian", "HAM_TsTsG"),
    _f("HAM_TsTsG/G", "g*xg*xg", "hamiltonian", "HAM_TsTsG"),
    _f("HAM_TsTsG/g*", "Gxg*xg", "hamiltonian", "HAM_TsTsG"),
    _f("LP_g*xg", "g*xg", "hamiltonian", "HAM_TsTsG"),
    _f("HAM_TTcG", "TTcG", "hamiltonian", "HAM_TTcG"),
    _f("HAM_TTcG/G", "g*xgxg*", "hamiltonian", "HAM_TTcG"),
    _f("HAM_TTcG/g2", "Gg*g*", "hamiltonian", "HAM_TTcG"),
    _f("HAM_TTcG/g1*", "Gxgxg*", "hamiltonian", "HAM_TTcG"),
    _f("HAM_TTcG/Gg2", "g*xg*", "hamiltonian", "HAM_TTcG"),
    _f("HAM_TTcG/Gg1*", "gxg*", "hamiltonian", "HAM_TTcG"),
    _f("EL_TG", "TG", "lagrangian", "EL_TG"),
    _f("EP", "g", "lagrangian", "EL_TG"),
    _f("EL_TTcG", "TTcG", "lagrangian", "EL_TTcG"),
    _f("EP_gg*", "gxg*", "lagrangian", "EL_TTcG"),
    _f("EL_Ggg*", "Gxgxg*", "lagrangian", "EL_TTcG"),
    _f("EL_Gg", "TG", "lagrangian", "EL_TTcG"),
    _f("EL_g*gg*", "g*xgxg*", "lagrangian", "EL_TTcG"),
])

_PARENT_SPACE = {"HAM_TcG": "TcG", "HAM_TsTG": "TsTG", "HAM_TsTsG": "TsTsG", "HAM_TTcG": "TTcG",
                 "EL_TG": "TG", "EL_TTcG": "TTcG"}

# parent -> (base slots, velocity slots)
_LAGRANGIAN_PARENTS = {"EL_TG": (("g",), ("xi",)), "EL_TTcG": (("g", "mu"), ("xi", "nu"))}


def get_formulation(form):
    """Formulation by id.

    Exact ids win; otherwise a case-insensitive match is accepted when unique
    (``"ham_ttcg"`` works, ``"ham_tstg/g"`` is ambiguous).
    """
    if isinstance(form, Formulation):
        return form
    if form in FORMULATIONS:
        return FORMULATIONS[form]
    hits = [v for k, v in FORMULATIONS.items() if k.lower() == str(form).lower()]
    if len(hits) == 1:
        return hits[0]
    raise UsageError(f"unknown formulation {form!r}; expected one of {sorted(FORMULATIONS)}")


# --- parent displays --------------------------------------------------------


def _ops(group):
    G = lc.get_group(group)

    def cg(x, m):
        return lc.coad_generator(G, x, m)

    def ad(x, y):
        return lc.ad(G, x, y)

    return cg, ad


def _ham_display(parent, group, s, d):
    cg, ad = _ops(group)
    if parent == "HAM_TcG":
        return {"g": d["mu"], "mu": -d["g"] + cg(d["mu"], s["mu"])}
    if parent == "HAM_TsTG":
        xi, mu, nu = s["xi"], s["mu"], s["nu"]
        Hg, Hx, Hm, Hn = d["g"], d["xi"], d["mu"], d["nu"]
        return {"g": Hm, "xi": Hn - ad(xi, Hm),
                "mu": -Hg - cg(xi, Hx) + cg(Hm, mu) + cg(Hn, nu),
                "nu": -Hx + cg(Hm, nu)}
    if parent == "HAM_TsTsG":
        mu, nu, xi = s["mu"], s["nu"], s["xi"]
        Hg, Hm, Hn, Hx = d["g"], d["mu"], d["nu"], d["xi"]
        return {"g": Hn, "mu": Hx + cg(Hn, mu),
                "nu": cg(Hm, mu) + cg(Hn, nu) - Hg - cg(xi, Hx),
                "xi": -Hm + ad(Hn, xi)}
    Eg, Em, Ex, En = d["g"], d["mu"], d["xi"], d["nu"]
    return {"g": En, "mu": -Ex, "xi": Em, "nu": cg(En, s["nu"]) - Eg}


def _lag_display(parent, group, s, d):
    """Base-slot rates and momentum rates; ``d`` holds the Lagrangian's gradients."""
    cg, ad = _ops(group)
    if parent == "EL_TG":
        xi, p = s["xi"], d["xi"]
        return {"g": xi}, {"xi": d["g"] + cg(xi, p)}
    mu, xi, nu = s["mu"], s["xi"], s["nu"]
    Eg, Em, p, q = d["g"], d["mu"], d["xi"], d["nu"]
    base = {"g": xi, "mu": nu + cg(xi, mu)}
    mom = {"xi": Eg - cg(Em, mu) + cg(xi, p) - cg(q, nu), "nu": Em + ad(xi, q)}
    return base, mom


def _lift(f, p, values):
    """Parent-slot dicts of point values and per-slot vectors; dropped slots are zero."""
    G = lc.get_group(p.group)
    s = {name: np.zeros(G.dim) for name in ib.slot_names(_PARENT_SPACE[f.parent])}
    for name, v in zip(f.slots, p.slots):
        s[name] = v
    d = {name: np.zeros(G.dim) for name in s}
    for name, v in zip(f.slots, values):
        d[name] = np.asarray(v, dtype=float)
    return s, d


def _check_obs(f, obs, p, role):
    if f.role != role:
        raise UsageError(f"{f.id} is a {f.role} formulation")
    if obs.space != f.space:
        raise UsageError(f"{f.id} needs an observable on {f.space}, got one on {obs.space}")
    if p.space != f.space:
        raise UsageError(f"{f.id} lives on {f.space}, point is on {p.space}")


def _finite(vals):
    for v in vals:
        if not np.all(np.isfinite(v)):
            raise NumericalDomainError("vector field evaluated to a non-finite value")
    return vals


# --- Hamiltonian fields -----------------------------------------------------


def hamiltonian_vf(form, H, p):
    """Hamiltonian vector field of ``H`` at ``p`` as a tangent tuple."""
    f = get_formulation(form)
    _check_obs(f, H, p, "hamiltonian")
    return hamiltonian_vf_from_grads(f, p, H.grads(p))


def hamiltonian_vf_from_grads(form, p, grads):
    """Same field, from precomputed slot gradients (group slot right-trivialized)."""
    f = get_formulation(form)
    s, d = _lift(f, p, grads)
    out = _ham_display(f.parent, p.group, s, d)
    return _finite(tuple(out[name] for name in f.slots))


def energy_rate(form, H, p):
    """``dH/dt`` along the field of ``H``: the pairing of gradients with velocities."""
    grads = H.grads(p)
    vel = hamiltonian_vf_from_grads(form, p, grads)
    return float(sum(np.dot(a, b) for a, b in zip(grads, vel)))


def combined_TsTG_residual(H, traj_points, h):
    """Residual of the second-order form of ``HAM_TsTG`` along a sampled trajectory.

    With ``w = cg(xi, nu) - mu`` the flow satisfies ``w' - cg(H_mu, w) = H_g``
    and ``g' = H_mu``.  ``traj_points`` are samples at spacing ``h``; returns one
    residual norm per interior sample (central differences).
    """
    pts = list(traj_points)
    if len(pts) < 3:
        raise UsageError("need at least three samples")
    if H.space != "TsTG":
        raise UsageError("observable must live on TsTG")
    G = lc.get_group(pts[0].group)
    cg, _ = _ops(G.id)
    w = [cg(q["xi"], q["nu"]) - q["mu"] for q in pts]
    out = []
    for k in range(1, len(pts) - 1):
        Hg, _, Hm, _ = H.grads(pts[k])
        dw = (w[k + 1] - w[k - 1]) / (2.0 * h)
        r1 = dw - cg(Hm, w[k]) - Hg
        dg = (pts[k + 1]["g"].matrix - pts[k - 1]["g"].matrix) / (2.0 * h) @ lc.inverse(pts[k]["g"]).matrix
        r2 = lc.vee(G, dg) - Hm
        out.append(float(np.sqrt(r1 @ r1 + r2 @ r2)))
    return np.array(out)


# --- Lagrangian flows -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FlowState:
    """A point of a Lagrangian space plus the momenta of its velocity slots."""

    point: ib.BundlePoint
    momenta: tuple


def momenta_of(form, L, p):
    """``dL/d(velocity)`` for each velocity slot of the formulation."""
    f = get_formulation(form)
    _check_obs(f, L, p, "lagrangian")
    names = ib.slot_names(f.space)
    grads = L.grads(p)
    return tuple(grads[names.index(n)] for n in f.velocity_slots)


def flow_state(form, L, p):
    return FlowState(p, momenta_of(form, L, p))


def _velocity_jacobian(L, f, group):
    key = ("velocity_jacobian", f.space, f.velocity_slots, lc.get_group(group).id)
    fn = L._cache.get(key)
    if fn is None:
        c = L.compiled(group)
        syms = slot_symbols(f.space, group)
        vel_syms = [s for n in f.velocity_slots for s in syms[n]]
        rows = [e for n in f.velocity_slots for e in c.grad_exprs[n]]
        M = sp.Matrix([[sp.diff(r, v) for v in vel_syms] for r in rows])
        fn = sp.lambdify([_arg_symbols(f.space, group)], M, "numpy")
        L._cache[key] = fn
    return fn


def recover_velocities(form, L, guess, momenta, tol=1e-13, max_iter=50):
    """Point with base slots of ``guess`` and velocities solving ``dL/dv = momenta``.

    Newton iteration started from ``guess``'s velocities; one step is exact
    for quadratic velocity dependence.
    """
    f = get_formulation(form)
    _check_obs(f, L, guess, "lagrangian")
    names = ib.slot_names(f.space)
    vel = f.velocity_slots
    target = ib.flatten(momenta)
    jac = _velocity_jacobian(L, f, guess.group)
    p = guess
    for _ in range(max_iter):
        grads = L.grads(p)
        r = ib.flatten([grads[names.index(n)] for n in vel]) - target
        if np.max(np.abs(r)) <= tol * (1.0 + np.max(np.abs(target))):
            return p
        J = np.asarray(jac(point_vector(p)), dtype=float)
        if not np.all(np.isfinite(J)) or np.linalg.cond(J) > 1e12:
            raise RegularityError(f"{f.id}: fiber derivative of the Lagrangian is singular")
        step = np.linalg.solve(J, r)
        v = ib.flatten([p[n] for n in vel]) - step
        p = p.replace(**dict(zip(vel, ib.unflatten(v, len(vel)))))
    raise RegularityError(f"{f.id}: velocity recovery did not converge")


def lagrangian_flow(form, L, s):
    """Rates of a :class:`FlowState`: ``(base slot rates, momentum rates)``.

    Velocities are recovered from ``s.momenta`` first (``s.point``'s velocity
    slots serve as the initial guess).  The group-slot rate is the algebra
    element ``dg/dt g^-1``.
    """
    f = get_formulation(form)
    p = recover_velocities(f, L, s.point, s.momenta)
    return lagrangian_rates(f, L, p)


def lagrangian_rates(form, L, p):
    """Rates at a point whose velocities are already consistent with its momenta."""
    f = get_formulation(form)
    _check_obs(f, L, p, "lagrangian")
    s, d = _lift(f, p, L.grads(p))
    base, mom = _lag_display(f.parent, p.group, s, d)
    names = ib.slot_names(f.space)
    to_parent = dict(zip(names, f.slots))
    base_rates = tuple(base[to_parent[n]] for n in f.base_slots)
    mom_rates = tuple(mom[to_parent[n]] for n in f.velocity_slots)
    return _finite(base_rates), _finite(mom_rates)


def legendre(L, p, form="EL_TG"):
    """Fiber momenta and the Hamiltonian value ``sum <pi, v> - L`` at ``p``."""
    f = get_formulation(form)
    mom = momenta_of(f, L, p)
    vel = [p[n] for n in f.velocity_slots]
    return mom, float(sum(np.dot(a, b) for a, b in zip(mom, vel)) - L.value(p))


def energy_invariant(form, L, s):
    """``sum <dL/dv, v> - L`` at a :class:`FlowState` or point (conserved by the flow)."""
    f = get_formulation(form)
    if f.role != "lagrangian":
        raise UsageError("energy_invariant is defined for Lagrangian formulations only")
    p = s.point if isinstance(s, FlowState) else s
    return legendre(L, p, f)[1]


def legendre_hamiltonian(L):
    """Hamiltonian on ``TcG`` from a Lagrangian on ``TG`` quadratic in ``xi``.

    Solves ``mu = L_xi`` for ``xi`` symbolically; raises
    :class:`RegularityError` when that linear system is singular.
    """
    if L.space != "TG":
        raise UsageError("legendre_hamiltonian needs a Lagrangian on TG")

    def build(gid):
        src = slot_symbols("TG", gid)
        dst = slot_symbols("TcG", gid)
        expr = L.sympy_expr(gid)
        xi = src["xi"]
        eqs = [sp.diff(expr, x) - m for x, m in zip(xi, dst["mu"])]
        A, b = sp.linear_eq_to_matrix(eqs, xi)
        if A.det() == 0:
            raise RegularityError("Lagrangian is not regular in xi")
        sol = A.LUsolve(b)
        subs = dict(zip(xi, sol))
        H = sum(m * v for m, v in zip(dst["mu"], sol)) - expr.xreplace(subs)
        return sp.simplify(H)

    return from_sympy("TcG", build)

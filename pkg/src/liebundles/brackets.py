"""Poisson brackets on the trivialized bundles and their reduced spaces.

Each bracket is a bilinear expression in the slot gradients of two
observables.  Formulas are written once with tensor contractions over the
structure constants, so the same code evaluates numerically at a point and
symbolically over :func:`expr.slot_symbols` (which is how nested brackets for
the Jacobi check are built).

``SIGN[id]`` relates a bracket to the flow it generates:
``dF/dt = SIGN[id] * {F, H}`` along the paired formulation's field.
"""

from dataclasses import dataclass

import numpy as np
import sympy as sp

from . import dynamics as dy
from . import iterated_bundles as ib
from . import lie_core as lc
from .errors import UsageError
from .expr import from_sympy, parse, pullback, slot_symbols

# --- generic algebra ---------------------------------------------------------


def _ad(C, x, y):
    return np.tensordot(np.tensordot(C, x, axes=([0], [0])), y, axes=([0], [0]))


def _cg(C, x, m):
    return -np.tensordot(np.tensordot(C, x, axes=([0], [0])), m, axes=([1], [0]))


def _pair(a, b):
    return np.dot(a, b)


# --- formulas ----------------------------------------------------------------
# s: point slots, a/b: gradients of the first/second observable, C: structure constants


def _canonical_tcg(C, s, a, b):
    return _pair(a["g"], b["mu"]) - _pair(b["g"], a["mu"]) + _pair(s["mu"], _ad(C, a["mu"], b["mu"]))


def _lie_poisson(C, s, a, b):
    return _pair(s["mu"], _ad(C, a["mu"], b["mu"]))


def _semidirect_g2(C, s, a, b):
    # Lie-Poisson bracket of g x g* (semidirect) on (mu, nu)
    return _pair(s["mu"], _ad(C, a["mu"], b["mu"])) + _pair(
        s["nu"], _ad(C, a["mu"], b["nu"]) - _ad(C, b["mu"], a["nu"]))


def _red_g_gsgs(C, s, a, b):
    xi = s["xi"]
    return (_pair(a["xi"], b["nu"]) - _pair(b["xi"], a["nu"])
            - _pair(_cg(C, xi, b["xi"]), a["mu"]) + _pair(_cg(C, xi, a["xi"]), b["mu"])
            + _semidirect_g2(C, s, a, b))


def _red_G_gsgs(C, s, a, b):
    return _pair(a["g"], b["mu"]) - _pair(b["g"], a["mu"]) + _semidirect_g2(C, s, a, b)


def _xi_term(C, s, a, b):
    return _pair(s["xi"], _cg(C, a["nu"], b["xi"]) - _cg(C, b["nu"], a["xi"]))


def _xi_term_printed(C, s, a, b):
    # both coadjoint subscripts read the first observable, so the term cancels
    return _pair(s["xi"], _cg(C, a["nu"], b["xi"]) - _cg(C, a["nu"], b["xi"]))


def _red_gs_gsg(C, s, a, b):
    return (_pair(a["mu"], b["xi"]) - _pair(b["mu"], a["xi"]) + _pair(s["nu"], _ad(C, a["nu"], b["nu"]))
            + _xi_term(C, s, a, b)
            + _pair(s["mu"], _ad(C, a["mu"], b["nu"]) - _ad(C, b["mu"], a["nu"])))


def _red_G_gsg(C, s, a, b):
    return (_pair(a["g"], b["nu"]) - _pair(b["g"], a["nu"]) + _xi_term(C, s, a, b)
            + _pair(s["nu"], _ad(C, a["nu"], b["nu"])))


def _lp_gsg(C, s, a, b):
    return _pair(s["nu"], _ad(C, a["nu"], b["nu"])) + _xi_term(C, s, a, b)


def _lp_gsg_printed(C, s, a, b):
    return _pair(s["nu"], _ad(C, a["nu"], b["nu"])) + _xi_term_printed(C, s, a, b)


def _ttcg_G(C, s, a, b):
    return _pair(a["xi"], b["mu"]) - _pair(b["xi"], a["mu"]) + _pair(s["nu"], _ad(C, a["nu"], b["nu"]))


def _ttcg_G_printed(C, s, a, b):
    # canonical (mu, xi) part oriented as for xi' = -E_mu
    return _pair(b["xi"], a["mu"]) - _pair(a["xi"], b["mu"]) + _pair(s["nu"], _ad(C, a["nu"], b["nu"]))


def _ttcg_g2(C, s, a, b):
    return _pair(a["g"], b["nu"]) - _pair(b["g"], a["nu"]) + _pair(s["nu"], _ad(C, a["nu"], b["nu"]))


def _ttcg_g1_printed(C, s, a, b):
    # canonical part reversed relative to the Lie-Poisson part
    return _pair(b["g"], a["nu"]) - _pair(a["g"], b["nu"]) + _pair(s["nu"], _ad(C, a["nu"], b["nu"]))


def _nu_lie_poisson(C, s, a, b):
    return _pair(s["nu"], _ad(C, a["nu"], b["nu"]))


@dataclass(frozen=True)
class Bracket:
    id: str
    space: str
    formula: object
    printed: object  # formula as displayed, when it differs
    flow: str  # formulation whose fields this bracket generates


BRACKETS = {b.id: b for b in (
    Bracket("CAN_TcG", "TcG", _canonical_tcg, None, "HAM_TcG"),
    Bracket("LP_g*", "g*", _lie_poisson, None, "LP"),
    Bracket("RED_g_g*g*", "gxg*xg*", _red_g_gsgs, None, "HAM_TsTG/G"),
    Bracket("RED_G_g*g*", "Gg*g*", _red_G_gsgs, None, "HAM_TsTG/g"),
    Bracket("LP_g*xg*", "g*xg*", _semidirect_g2, None, "LP_g*xg*"),
    Bracket("ORB_Omu_g*", "g*xg*", _semidirect_g2, None, "LP_g*xg*"),
    Bracket("RED_g*_g*g", "g*xg*xg", _red_gs_gsg, None, "HAM_TsTsG/G"),
    Bracket("RED_G_g*g", "Gxg*xg", _red_G_gsg, None, "HAM_TsTsG/g*"),
    Bracket("LP_g*xg", "g*xg", _lp_gsg, _lp_gsg_printed, "LP_g*xg"),
    Bracket("RED_TTcG_G", "g*xgxg*", _ttcg_G, _ttcg_G_printed, "HAM_TTcG/G"),
    Bracket("RED_TTcG_g2", "Gg*g*", _ttcg_g2, None, "HAM_TTcG/g2"),
    Bracket("RED_TTcG_g1*", "Gxgxg*", _ttcg_g2, _ttcg_g1_printed, "HAM_TTcG/g1*"),
    Bracket("RED_TTcG_Gg2", "g*xg*", _nu_lie_poisson, None, "HAM_TTcG/Gg2"),
    Bracket("RED_TTcG_Gg1*", "gxg*", _nu_lie_poisson, None, "HAM_TTcG/Gg1*"),
    Bracket("ORB_Omu_g2*", "g*xg*", _semidirect_g2, None, "LP_g*xg*"),
)}

BRACKET_IDS = tuple(BRACKETS)

# dF/dt = SIGN * {F, H} along the paired flow; fixed by bracket_flow_consistency
SIGN = {
    "CAN_TcG": 1, "LP_g*": 1, "RED_g_g*g*": 1, "RED_G_g*g*": 1, "LP_g*xg*": 1,
    "ORB_Omu_g*": 1, "RED_g*_g*g": 1, "RED_G_g*g": 1, "LP_g*xg": 1,
    "RED_TTcG_G": 1, "RED_TTcG_g2": 1, "RED_TTcG_g1*": 1, "RED_TTcG_Gg2": 1,
    "RED_TTcG_Gg1*": 1, "ORB_Omu_g2*": 1,
}


def get_bracket(bid):
    if isinstance(bid, Bracket):
        return bid
    try:
        return BRACKETS[bid]
    except KeyError:
        raise UsageError(f"unknown bracket {bid!r}; expected one of {list(BRACKETS)}") from None


def _formula(b, printed):
    if printed and b.printed is not None:
        return b.printed
    return b.formula


def _check(b, *obs):
    for o in obs:
        if o.space != b.space:
            raise UsageError(f"{b.id} acts on observables over {b.space}, got one over {o.space}")


def _vector_slots(p):
    return {n: v for n, k, v in zip(ib.slot_names(p.space), ib.slot_kinds(p.space), p.slots) if k != "G"}


def eval_bracket(bid, F, K, p, printed=False):
    """``{F, K}`` at ``p``.  ``printed=True`` selects the displayed variant where it differs."""
    b = get_bracket(bid)
    _check(b, F, K)
    if p.space != b.space:
        raise UsageError(f"{b.id} lives on {b.space}, point is on {p.space}")
    names = ib.slot_names(b.space)
    a = dict(zip(names, F.grads(p)))
    c = dict(zip(names, K.grads(p)))
    C = lc.get_group(p.group).structure_constants
    return float(_formula(b, printed)(C, _vector_slots(p), a, c))


def bracket_observable(bid, F, K, printed=False):
    """``{F, K}`` as an observable, built symbolically per group."""
    b = get_bracket(bid)
    _check(b, F, K)
    names = ib.slot_names(b.space)
    kinds = ib.slot_kinds(b.space)

    def build(gid):
        C = lc.get_group(gid).structure_constants.astype(object)
        syms = slot_symbols(b.space, gid)
        s = {n: np.array(syms[n], dtype=object) for n, k in zip(names, kinds) if k != "G"}
        ga = F.compiled(gid).grad_exprs
        gc = K.compiled(gid).grad_exprs
        a = {n: np.array(ga[n], dtype=object) for n in names}
        c = {n: np.array(gc[n], dtype=object) for n in names}
        return sp.expand(_formula(b, printed)(C, s, a, c))

    return from_sympy(b.space, build)


def _require_polynomial(*obs):
    for o in obs:
        if not o.is_polynomial:
            raise UsageError("nested brackets need polynomial observables")


def jacobi_residual(bid, F, K, L, p, printed=False):
    """``|{F,{K,L}} + {K,{L,F}} + {L,{F,K}}|`` at ``p`` from exact nested brackets."""
    _require_polynomial(F, K, L)
    total = 0.0
    for x, y, z in ((F, K, L), (K, L, F), (L, F, K)):
        total += eval_bracket(bid, x, bracket_observable(bid, y, z, printed), p, printed)
    return abs(total)


def product(F, K):
    """Pointwise product of two observables on the same space."""
    if F.space != K.space:
        raise UsageError("observables live on different spaces")
    return from_sympy(F.space, lambda gid: F.sympy_expr(gid) * K.sympy_expr(gid))


def antisymmetry_residual(bid, F, K, p, printed=False):
    return abs(eval_bracket(bid, F, K, p, printed) + eval_bracket(bid, K, F, p, printed))


def leibniz_residual(bid, F, Gobs, K, p, printed=False):
    """``|{F G, K} - F {G, K} - G {F, K}|`` at ``p``."""
    lhs = eval_bracket(bid, product(F, Gobs), K, p, printed)
    rhs = F.value(p) * eval_bracket(bid, Gobs, K, p, printed) + Gobs.value(p) * eval_bracket(bid, F, K, p, printed)
    return abs(lhs - rhs)


def time_derivative(form, F, H, p):
    """``dF/dt`` along the Hamiltonian field of ``H``; the group gradient pairs with ``g' g^-1``."""
    X = dy.hamiltonian_vf(form, H, p)
    return float(sum(np.dot(d, x) for d, x in zip(F.grads(p), X)))


def bracket_flow_consistency(bid, H, F, p, form=None, printed=False):
    """``|dF/dt - s {F, H}|`` along the flow of ``H``; ``form`` must be the paired formulation."""
    b = get_bracket(bid)
    f = dy.get_formulation(form or b.flow)
    if f.id != b.flow:
        raise UsageError(f"{b.id} pairs with {b.flow}, not {f.id}")
    return abs(time_derivative(f, F, H, p) - SIGN[b.id] * eval_bracket(b, F, H, p, printed))


def immersion_residual(bid_full, bid_reduced, F, K, p, projection):
    """Bracket of pulled-back observables against the reduced bracket at the projected point.

    ``F`` and ``K`` live on the reduced space; ``projection`` maps slot names of
    the full space to those of the reduced space (dropped slots omitted).
    """
    full, red = get_bracket(bid_full), get_bracket(bid_reduced)
    _check(red, F, K)
    def mapping(syms, gid):
        return {dst: syms[src] for src, dst in projection.items()}

    Fp, Kp = pullback(F, full.space, mapping), pullback(K, full.space, mapping)
    inverse = {dst: src for src, dst in projection.items()}
    q = ib.BundlePoint(red.space, p.group, tuple(p[inverse[n]] for n in ib.slot_names(red.space)))
    return abs(eval_bracket(full, Fp, Kp, p) - eval_bracket(red, F, K, q))


# --- property suite ---------------------------------------------------------

TOLERANCES = {"antisymmetry": 1e-10, "leibniz": 1e-9, "jacobi": 1e-7, "flow": 1e-8}
TESTS = tuple(TOLERANCES)


def random_observable(space, group, rng):
    """Random polynomial of degree <= 2 in the slot coordinates, with one cross-slot term."""
    m = lc.get_group(group).matrix_size
    names, kinds = ib.slot_names(space), ib.slot_kinds(space)
    c = lambda: f"{rng.normal():.6f}"
    terms = []
    for n, k in zip(names, kinds):
        if k == "G":
            i, j, a, b = rng.integers(0, m, 4)
            terms.append(f"{c()}*g[{i}, {j}] + {c()}*g[{a}, {b}]*g[{j}, {i}]")
        else:
            i, j = rng.integers(0, 3, 2)
            terms.append(f"{c()}*{n}[{i}] + {c()}*{n}[{j}]*{n}[{i}]")
    vec = [n for n, k in zip(names, kinds) if k != "G"]
    if len(vec) >= 2:
        terms.append(f"{c()}*{vec[0]}[1]*{vec[-1]}[2]")
    if "G" in kinds and vec:
        terms.append(f"{c()}*g[{m - 1}, 0]*{vec[0]}[0]")
    return parse(" + ".join(terms), space)


def bracket_suite(bid, group, samples=5, seed=0, printed=False, tests=TESTS):
    """Max residual of each property over ``samples`` random points and observables.

    Returns rows ``{bracket_id, group, printed, test, max_residual, tolerance, pass}``.
    """
    b = get_bracket(bid)
    unknown = set(tests) - set(TESTS)
    if unknown:
        raise UsageError(f"unknown bracket tests {sorted(unknown)}; expected a subset of {list(TESTS)}")
    rng = np.random.default_rng(seed)
    worst = dict.fromkeys(tests, 0.0)
    for _ in range(samples):
        p = ib.random_point(b.space, group, rng)
        F, K, L = (random_observable(b.space, group, rng) for _ in range(3))
        run = {
            "antisymmetry": lambda: antisymmetry_residual(b, F, K, p, printed),
            "leibniz": lambda: leibniz_residual(b, F, K, L, p, printed),
            "jacobi": lambda: jacobi_residual(b, F, K, L, p, printed),
            "flow": lambda: bracket_flow_consistency(b, K, F, p, printed=printed),
        }
        for t in tests:
            worst[t] = max(worst[t], float(run[t]()))
    return [
        {"bracket_id": b.id, "group": group, "printed": bool(printed), "test": t,
         "max_residual": worst[t], "tolerance": TOLERANCES[t], "pass": worst[t] <= TOLERANCES[t]}
        for t in tests
    ]

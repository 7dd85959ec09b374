"""A small expression language for scalar observables on bundle spaces.

Grammar (Python expression syntax, checked against a whitelist)::

    expr   := expr (+|-|*|/) expr | -expr | +expr | expr ** INT | (expr) | atom
    atom   := NUMBER | SLOT[i] | g[i, j] | trace_g
            | quadratic_form(SLOT) | quadratic_form(SLOT, [w0, w1, ...])
            | pair(SLOT, SLOT)

``SLOT`` is any non-group slot of the observable's space (``mu``, ``nu``,
``xi``, ``lam``); ``g[i, j]`` and ``trace_g`` read the group slot's matrix.
Indices are 0-based.

Parsed trees compile to sympy, so every derivative is exact.  Gradients with
respect to a dual slot are algebra vectors and conversely; the group-slot
gradient is the right-trivialized one, ``d/dt f(exp(t e_i) g)``.
"""

import ast
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import sympy as sp

from . import iterated_bundles as ib
from . import lie_core as lc
from .errors import ExpressionError, NumericalDomainError, UsageError

# --- tree -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Coord:
    slot: str
    index: int


@dataclass(frozen=True)
class GEntry:
    row: int
    col: int


@dataclass(frozen=True)
class TraceG:
    pass


@dataclass(frozen=True)
class QuadForm:
    slot: str
    weights: tuple  # empty means unit weights


@dataclass(frozen=True)
class Pair:
    a: str
    b: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int


_BINOPS = {ast.Add: "+", ast.Sub: "-", ast.Mult: "*", ast.Div: "/"}


def to_source(node):
    """Render a tree as source text that parses back to an equal tree."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Coord):
        return f"{node.slot}[{node.index}]"
    if isinstance(node, GEntry):
        return f"g[{node.row}, {node.col}]"
    if isinstance(node, TraceG):
        return "trace_g"
    if isinstance(node, QuadForm):
        if not node.weights:
            return f"quadratic_form({node.slot})"
        return f"quadratic_form({node.slot}, [{', '.join(repr(float(w)) for w in node.weights)}])"
    if isinstance(node, Pair):
        return f"pair({node.a}, {node.b})"
    if isinstance(node, Neg):
        return f"-({to_source(node.arg)})"
    if isinstance(node, Pow):
        return f"({to_source(node.base)}) ** {node.exponent}"
    return f"({to_source(node.left)} {node.op} {to_source(node.right)})"


def _is_polynomial(node):
    if isinstance(node, BinOp):
        if node.op == "/":
            return _is_polynomial(node.left) and isinstance(node.right, Num)
        return _is_polynomial(node.left) and _is_polynomial(node.right)
    if isinstance(node, Neg):
        return _is_polynomial(node.arg)
    if isinstance(node, Pow):
        return _is_polynomial(node.base)
    return True


# --- parsing ----------------------------------------------------------------


class _Builder:
    def __init__(self, space):
        self.space = space
        names = ib.slot_names(space)
        kinds = ib.slot_kinds(space)
        self.vector_slots = {n for n, k in zip(names, kinds) if k != "G"}
        self.has_group = "G" in kinds

    def fail(self, msg, node):
        raise ExpressionError(msg, getattr(node, "lineno", None), getattr(node, "col_offset", -1) + 1)

    def slot_name(self, node):
        if not isinstance(node, ast.Name):
            self.fail("expected a slot name", node)
        if node.id not in self.vector_slots:
            self.fail(f"unknown slot {node.id!r} for space {self.space}", node)
        return node.id

    def int_literal(self, node):
        if isinstance(node, ast.Constant) and type(node.value) is int and node.value >= 0:
            return node.value
        self.fail("expected a non-negative integer literal", node)

    def number(self, node):
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = self.number(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Constant) and type(node.value) in (int, float):
            return float(node.value)
        self.fail("expected a numeric literal", node)

    def group_node(self, node):
        if not self.has_group:
            self.fail(f"space {self.space} has no group slot", node)

    def build(self, node):
        if isinstance(node, ast.Expression):
            return self.build(node.body)
        if isinstance(node, ast.Constant):
            if type(node.value) not in (int, float):
                self.fail("only numeric literals are allowed", node)
            return Num(float(node.value))
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Pow):
                return Pow(self.build(node.left), self.int_literal(node.right))
            op = _BINOPS.get(type(node.op))
            if op is None:
                self.fail("unsupported operator", node)
            return BinOp(op, self.build(node.left), self.build(node.right))
        if isinstance(node, ast.UnaryOp):
            if isinstance(node.op, ast.USub):
                arg = self.build(node.operand)
                return Num(-arg.value) if isinstance(arg, Num) else Neg(arg)
            if isinstance(node.op, ast.UAdd):
                return self.build(node.operand)
            self.fail("unsupported unary operator", node)
        if isinstance(node, ast.Subscript):
            return self.subscript(node)
        if isinstance(node, ast.Name):
            if node.id == "trace_g":
                self.group_node(node)
                return TraceG()
            self.fail(f"unknown name {node.id!r}", node)
        if isinstance(node, ast.Call):
            return self.call(node)
        self.fail(f"unsupported syntax {type(node).__name__}", node)

    def subscript(self, node):
        if not isinstance(node.value, ast.Name):
            self.fail("only slot names can be indexed", node)
        idx = node.slice
        if node.value.id == "g":
            self.group_node(node)
            if not (isinstance(idx, ast.Tuple) and len(idx.elts) == 2):
                self.fail("group entries are written g[i, j]", node)
            return GEntry(self.int_literal(idx.elts[0]), self.int_literal(idx.elts[1]))
        return Coord(self.slot_name(node.value), self.int_literal(idx))

    def call(self, node):
        if not isinstance(node.func, ast.Name) or node.keywords:
            self.fail("unsupported call", node)
        fn, args = node.func.id, node.args
        if fn == "trace_g" and not args:
            self.group_node(node)
            return TraceG()
        if fn == "pair" and len(args) == 2:
            return Pair(self.slot_name(args[0]), self.slot_name(args[1]))
        if fn == "quadratic_form" and len(args) in (1, 2):
            slot = self.slot_name(args[0])
            if len(args) == 1:
                return QuadForm(slot, ())
            if not isinstance(args[1], ast.List):
                self.fail("weights must be a list literal", args[1])
            return QuadForm(slot, tuple(self.number(w) for w in args[1].elts))
        self.fail(f"unknown function {fn!r} or wrong argument count", node)


def parse(source, space):
    """Parse ``source`` into an :class:`Observable` on ``space``."""
    ib.slot_names(space)
    if not isinstance(source, str) or not source.strip():
        raise ExpressionError("empty expression", 1, 1)
    try:
        tree = ast.parse(source.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"syntax error: {exc.msg}", exc.lineno, exc.offset) from None
    return Observable(space, _Builder(space).build(tree))


# --- compilation ------------------------------------------------------------


def slot_symbols(space, group):
    """Sympy symbols per slot: a matrix of entries for the group slot, a vector otherwise."""
    G = lc.get_group(group)
    out = {}
    for name, kind in zip(ib.slot_names(space), ib.slot_kinds(space)):
        if kind == "G":
            m = G.matrix_size
            out[name] = sp.Matrix(m, m, lambda a, b: sp.Symbol(f"g_{a}_{b}", real=True))
        else:
            out[name] = [sp.Symbol(f"{name}_{i}", real=True) for i in range(G.dim)]
    return out


def _to_sympy(node, syms, G):
    if isinstance(node, Num):
        return sp.Float(node.value) if node.value != int(node.value) else sp.Integer(int(node.value))
    if isinstance(node, Coord):
        if node.index >= G.dim:
            raise ExpressionError(f"index {node.index} out of range for {node.slot} (dimension {G.dim})")
        return syms[node.slot][node.index]
    if isinstance(node, GEntry):
        m = G.matrix_size
        if node.row >= m or node.col >= m:
            raise ExpressionError(f"g[{node.row}, {node.col}] outside the {m}x{m} representation")
        return syms["g"][node.row, node.col]
    if isinstance(node, TraceG):
        return syms["g"].trace()
    if isinstance(node, QuadForm):
        w = node.weights or (1.0,) * G.dim
        if len(w) != G.dim:
            raise ExpressionError(f"quadratic_form needs {G.dim} weights, got {len(w)}")
        return sum(_to_sympy(Num(wi), syms, G) * s**2 for wi, s in zip(w, syms[node.slot]))
    if isinstance(node, Pair):
        return sum(a * b for a, b in zip(syms[node.a], syms[node.b]))
    if isinstance(node, Neg):
        return -_to_sympy(node.arg, syms, G)
    if isinstance(node, Pow):
        return _to_sympy(node.base, syms, G) ** node.exponent
    left, right = _to_sympy(node.left, syms, G), _to_sympy(node.right, syms, G)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    return left / right


def symbolic_gradients(space, group, expr):
    """Exact slot gradients of a sympy expression; the group slot is right-trivialized."""
    G = lc.get_group(group)
    syms = slot_symbols(space, group)
    grads = {}
    for name, kind in zip(ib.slot_names(space), ib.slot_kinds(space)):
        if kind == "G":
            gm = syms[name]
            dm = gm.applyfunc(lambda s: sp.diff(expr, s))
            comps = []
            for i in range(G.dim):
                Ei = sp.Matrix(G.basis[i]) * gm
                comps.append(sp.expand(sum(dm[a, b] * Ei[a, b] for a in range(gm.rows) for b in range(gm.cols))))
            grads[name] = comps
        else:
            grads[name] = [sp.diff(expr, s) for s in syms[name]]
    return grads


def _arg_symbols(space, group):
    syms = slot_symbols(space, group)
    flat = []
    for name in ib.slot_names(space):
        s = syms[name]
        flat.extend(list(s) if isinstance(s, sp.Matrix) else s)
    return flat


def point_vector(p):
    """Concatenated numeric arguments matching :func:`_arg_symbols` order."""
    return ib.flat_coordinates(p)


@dataclass(frozen=True)
class _Compiled:
    expr: object
    value_fn: object
    grad_fns: dict
    grad_exprs: dict
    all_grads_fn: object


@dataclass(frozen=True, eq=False)
class Observable:
    """Scalar function on a bundle space.

    Built by :func:`parse` (``tree`` set) or from a sympy expression per group
    (``symbolic`` set, used for nested brackets).
    """

    space: str
    tree: object = None
    symbolic: object = None  # group id -> sympy expression, as a dict or a callable
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __eq__(self, other):
        if not isinstance(other, Observable):
            return NotImplemented
        if self.tree is not None:
            return self.space == other.space and self.tree == other.tree
        return self is other

    __hash__ = object.__hash__

    @cached_property
    def source(self):
        return to_source(self.tree) if self.tree is not None else None

    @property
    def is_polynomial(self):
        if self.tree is not None:
            return _is_polynomial(self.tree)
        if callable(self.symbolic):
            return self.sympy_expr("so3").is_polynomial()
        return all(sp.sympify(e).is_polynomial() for e in self.symbolic.values())

    def sympy_expr(self, group):
        return self.compiled(group).expr

    def compiled(self, group):
        gid = lc.get_group(group).id
        c = self._cache.get(gid)
        if c is None:
            if self.tree is not None:
                expr = _to_sympy(self.tree, slot_symbols(self.space, gid), lc.get_group(gid))
            else:
                try:
                    expr = self.symbolic(gid) if callable(self.symbolic) else self.symbolic[gid]
                except KeyError:
                    raise UsageError(f"observable has no expression for group {gid}") from None
            expr = sp.sympify(expr)
            args = _arg_symbols(self.space, gid)
            grads = symbolic_gradients(self.space, gid, expr)
            grad_fns = {k: sp.lambdify([args], v, "numpy") for k, v in grads.items()}
            stacked = [e for name in ib.slot_names(self.space) for e in grads[name]]
            all_fn = sp.lambdify([args], stacked, "numpy", cse=True)
            c = _Compiled(expr, sp.lambdify([args], expr, "numpy"), grad_fns, grads, all_fn)
            self._cache[gid] = c
        return c

    def value(self, p):
        self._check(p)
        v = float(self.compiled(p.group).value_fn(point_vector(p)))
        if not np.isfinite(v):
            raise NumericalDomainError("observable evaluated to a non-finite value")
        return v

    def __call__(self, p):
        return self.value(p)

    def grad(self, slot, p, fd=False):
        return grad(self, slot, p, fd=fd)

    def grads(self, p):
        """All slot gradients in slot order (exact; group slot right-trivialized)."""
        self._check(p)
        c = self.compiled(p.group)
        out = np.asarray(c.all_grads_fn(point_vector(p)), dtype=float)
        if not np.all(np.isfinite(out)):
            raise NumericalDomainError("non-finite gradient")
        return tuple(np.split(out, len(ib.slot_names(self.space))))

    def referenced_slots(self, group="so3"):
        expr = self.sympy_expr(group)
        names = {str(s).split("_")[0] for s in expr.free_symbols}
        return {n for n in ib.slot_names(self.space) if n in names}

    def _check(self, p):
        if p.space != self.space:
            raise UsageError(f"observable lives on {self.space}, point on {p.space}")


def from_sympy(space, exprs):
    """Observable from ``{group_id: sympy expression}`` over :func:`slot_symbols`.

    ``exprs`` may also be a callable ``group_id -> expression``, evaluated lazily.
    """
    return Observable(space, symbolic=exprs if callable(exprs) else dict(exprs))


def grad(obs, slot, p, fd=False):
    """Gradient of ``obs`` with respect to ``slot`` at ``p``.

    The group slot delegates to :func:`lie_core.rt_gradient`; ``fd=True``
    forces its finite-difference path, otherwise the exact chain-rule value
    is supplied as the analytic gradient.
    """
    obs._check(p)
    names = ib.slot_names(p.space)
    if slot not in names:
        raise UsageError(f"space {p.space} has no slot {slot!r}")
    c = obs.compiled(p.group)
    x = point_vector(p)
    G = lc.get_group(p.group)
    if ib.slot_kinds(p.space)[names.index(slot)] == "G":
        g = p[slot]
        if fd:
            def f(h):
                return obs.value(p.replace(**{slot: h}))
            return lc.rt_gradient(f, g)
        return lc.rt_gradient(None, g, analytic=lambda _: _broadcast(c.grad_fns[slot](x), G.dim))
    out = _broadcast(c.grad_fns[slot](x), G.dim)
    if not np.all(np.isfinite(out)):
        raise NumericalDomainError(f"non-finite gradient in slot {slot}")
    return out


def _broadcast(vals, n):
    out = np.asarray(vals, dtype=float)
    return out if out.shape == (n,) else np.broadcast_to(out, (n,)).copy()


def constant(space, value=0.0):
    return parse(repr(float(value)), space)


# --- symbolic algebra helpers -----------------------------------------------


def sym_ad(group, x, y):
    """``ad(x, y)`` for sequences of sympy expressions (structure-constant contraction)."""
    C = lc.get_group(group).structure_constants
    n = len(C)
    return [sum(x[i] * y[j] * _c(C[i, j, k]) for i in range(n) for j in range(n) if C[i, j, k]) for k in range(n)]


def sym_cg(group, x, m):
    """``coad_generator(x, m)`` for sequences of sympy expressions."""
    C = lc.get_group(group).structure_constants
    n = len(C)
    return [-sum(x[i] * m[k] * _c(C[i, j, k]) for i in range(n) for k in range(n) if C[i, j, k]) for j in range(n)]


def _c(v):
    return sp.Integer(int(v)) if float(v).is_integer() else sp.Float(v)


def pullback(obs, space, mapping):
    """Observable ``obs o map`` on ``space``.

    ``mapping(syms, group)`` receives :func:`slot_symbols` of ``space`` and
    returns, per slot of ``obs.space``, the sympy value (a matrix for the
    group slot, a list otherwise).
    """
    def build(gid):
        src = slot_symbols(obs.space, gid)
        dst = mapping(slot_symbols(space, gid), gid)
        subs = {}
        for name, sym in src.items():
            val = dst[name]
            if isinstance(sym, sp.Matrix):
                subs.update({sym[a, b]: val[a, b] for a in range(sym.rows) for b in range(sym.cols)})
            else:
                subs.update(dict(zip(sym, val)))
        return obs.sympy_expr(gid).xreplace(subs)

    return from_sympy(space, build)

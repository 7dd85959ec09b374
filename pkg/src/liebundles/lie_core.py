"""Concrete matrix Lie groups and their adjoint/coadjoint machinery.

Conventions (fixed for the whole package):

* ``ad(xi, eta)`` is the matrix commutator ``[xi^, eta^]`` read back in the basis.
* ``Ad(g, xi) = g xi^ g^-1``, so ``Ad(gh) = Ad(g) Ad(h)``.
* ``coAd(g, mu)`` is defined by ``<coAd(g, mu), xi> = <mu, Ad(g^-1, xi)>``.
* ``coad(xi, mu)`` is the transpose of ``ad(xi, .)``:
  ``<coad(xi, mu), eta> = <mu, ad(xi, eta)>``.
* ``coad_generator(xi, mu) = d/dt coAd(exp(t xi), mu)|_0 = -coad(xi, mu)``.
* Velocities are right-trivialized: ``dg/dt = xi g`` and ``g <- exp(h xi) g``.

Basis choices:

* so3: ``e_i`` is the hat map of the i-th unit vector, ``[e1, e2] = e3``.
* se2: ``e1`` rotation generator, ``e2``/``e3`` x/y translations, in 3x3
  homogeneous form.
* h3: ``e1 = E01``, ``e2 = E12``, ``e3 = E02`` (strictly upper-triangular units).
  Element coordinates ``(a, b, c)`` are the matrix ``[[1, a, c], [0, 1, b], [0, 0, 1]]``.
* r3: translations in 4x4 homogeneous form.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NumericalDomainError, UsageError

H_FD = 1e-6
SO3_DRIFT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GroupDescriptor:
    id: str
    dim: int
    matrix_size: int
    basis: np.ndarray  # (dim, m, m)
    structure_constants: np.ndarray  # C[i, j, k]: [e_i, e_j] = sum_k C[i, j, k] e_k

    def __repr__(self):
        return f"GroupDescriptor({self.id!r})"


@dataclass(frozen=True, eq=False)
class GroupElement:
    group: str
    matrix: np.ndarray

    def __repr__(self):
        return f"GroupElement({self.group!r}, {self.matrix.tolist()})"


def _so3_basis():
    b = np.zeros((3, 3, 3))
    for i in range(3):
        v = np.zeros(3)
        v[i] = 1.0
        b[i] = _skew(v)
    return b


def _skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def _unit(m, i, j):
    e = np.zeros((m, m))
    e[i, j] = 1.0
    return e


def _build(gid, basis):
    n, m, _ = basis.shape
    flat = basis.reshape(n, -1).T
    pinv = np.linalg.pinv(flat)
    C = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            comm = basis[i] @ basis[j] - basis[j] @ basis[i]
            C[i, j] = pinv @ comm.ravel()
    C = np.round(C, 12) + 0.0
    return GroupDescriptor(gid, n, m, basis, C)


@lru_cache(maxsize=None)
def get_group(gid):
    """Descriptor for ``"so3"``, ``"se2"``, ``"h3"`` or ``"r3"``."""
    if isinstance(gid, GroupDescriptor):
        return gid
    if gid == "so3":
        return _build("so3", _so3_basis())
    if gid == "se2":
        rot = np.zeros((3, 3))
        rot[0, 1], rot[1, 0] = -1.0, 1.0
        return _build("se2", np.array([rot, _unit(3, 0, 2), _unit(3, 1, 2)]))
    if gid == "h3":
        return _build("h3", np.array([_unit(3, 0, 1), _unit(3, 1, 2), _unit(3, 0, 2)]))
    if gid == "r3":
        return _build("r3", np.array([_unit(4, i, 3) for i in range(3)]))
    raise UsageError(f"unknown group id {gid!r}; expected one of {GROUP_IDS}")


GROUP_IDS = ("so3", "se2", "h3", "r3")


def _group_of(G):
    return G if isinstance(G, GroupDescriptor) else get_group(G)


@lru_cache(maxsize=None)
def _vee_matrix(gid):
    G = get_group(gid)
    return np.linalg.pinv(G.basis.reshape(G.dim, -1).T)


def hat(G, xi):
    G = _group_of(G)
    return np.tensordot(np.asarray(xi, dtype=float), G.basis, axes=1)


def vee(G, M):
    G = _group_of(G)
    return _vee_matrix(G.id) @ np.asarray(M).ravel()


def identity(G):
    G = _group_of(G)
    return GroupElement(G.id, np.eye(G.matrix_size))


def element(G, matrix):
    G = _group_of(G)
    matrix = np.array(matrix, dtype=float)
    if matrix.shape != (G.matrix_size, G.matrix_size):
        raise UsageError(f"{G.id} elements are {G.matrix_size}x{G.matrix_size}, got {matrix.shape}")
    return GroupElement(G.id, matrix)


def _check_same(g, h):
    if g.group != h.group:
        raise UsageError(f"group mismatch: {g.group} vs {h.group}")


def group_mul(g, h):
    _check_same(g, h)
    return GroupElement(g.group, g.matrix @ h.matrix)


def inverse(g):
    m = g.matrix
    if g.group == "so3":
        return GroupElement(g.group, m.T.copy())
    if g.group == "h3":
        a, b, c = m[0, 1], m[1, 2], m[0, 2]
        return GroupElement(g.group, np.array([[1.0, -a, a * b - c], [0.0, 1.0, -b], [0.0, 0.0, 1.0]]))
    if g.group == "r3":
        inv = np.eye(4)
        inv[:3, 3] = -m[:3, 3]
        return GroupElement(g.group, inv)
    if g.group == "se2":
        R = m[:2, :2]
        inv = np.eye(3)
        inv[:2, :2] = R.T
        inv[:2, 2] = -R.T @ m[:2, 2]
        return GroupElement(g.group, inv)
    return GroupElement(g.group, np.linalg.inv(m))


def _so3_exp(w):
    th = np.sqrt(w @ w)
    K = _skew(w)
    if th < 1e-6:
        th2 = th * th
        a = 1.0 - th2 / 6.0 + th2 * th2 / 120.0
        b = 0.5 - th2 / 24.0 + th2 * th2 / 720.0
    else:
        a = np.sin(th) / th
        b = (1.0 - np.cos(th)) / (th * th)
    return np.eye(3) + a * K + b * (K @ K)


def _se2_exp(x):
    th, vx, vy = x
    c, s = np.cos(th), np.sin(th)
    if abs(th) < 1e-6:
        th2 = th * th
        a = 1.0 - th2 / 6.0
        b = th / 2.0 - th * th2 / 24.0
    else:
        a = s / th
        b = (1.0 - c) / th
    V = np.array([[a, -b], [b, a]])
    m = np.eye(3)
    m[:2, :2] = [[c, -s], [s, c]]
    m[:2, 2] = V @ np.array([vx, vy])
    return m


def exp(G, xi):
    """Matrix exponential of the representation of ``xi`` (closed form per group)."""
    G = _group_of(G)
    xi = np.asarray(xi, dtype=float)
    if G.id == "so3":
        m = _so3_exp(xi)
    elif G.id == "se2":
        m = _se2_exp(xi)
    elif G.id == "h3":
        a, b, c = xi
        m = np.array([[1.0, a, c + 0.5 * a * b], [0.0, 1.0, b], [0.0, 0.0, 1.0]])
    else:
        m = np.eye(4)
        m[:3, 3] = xi
    return GroupElement(G.id, m)


def Ad_matrix(g):
    G = get_group(g.group)
    gi = inverse(g).matrix
    conj = np.einsum("ab,ibc,cd->iad", g.matrix, G.basis, gi)
    return _vee_matrix(G.id) @ conj.reshape(G.dim, -1).T


def Ad(g, xi):
    return Ad_matrix(g) @ np.asarray(xi, dtype=float)


def coAd_matrix(g):
    return Ad_matrix(inverse(g)).T


def coAd(g, mu):
    return coAd_matrix(g) @ np.asarray(mu, dtype=float)


def ad_matrix(G, xi):
    """Matrix ``M`` with ``ad(xi, eta) = M @ eta``."""
    G = _group_of(G)
    return np.einsum("i,ijk->kj", np.asarray(xi, dtype=float), G.structure_constants)


def ad(G, xi, eta):
    G = _group_of(G)
    return np.einsum("i,j,ijk->k", xi, eta, G.structure_constants)


def coad(G, xi, mu):
    G = _group_of(G)
    return np.einsum("i,k,ijk->j", xi, mu, G.structure_constants)


def coad_generator(G, xi, mu):
    """Infinitesimal coadjoint action ``d/dt coAd(exp(t xi), mu)`` at ``t = 0``."""
    return -coad(G, xi, mu)


def pair(mu, xi):
    return float(np.dot(mu, xi))


def normalize(g, tol=SO3_DRIFT_TOL):
    """Project rotation blocks back onto SO(n) when orthogonality drift exceeds ``tol``."""
    if g.group == "so3":
        R = g.matrix
        if np.max(np.abs(R.T @ R - np.eye(3))) > tol:
            U, _, Vt = np.linalg.svd(R)
            return GroupElement(g.group, U @ Vt)
    elif g.group == "se2":
        R = g.matrix[:2, :2]
        if np.max(np.abs(R.T @ R - np.eye(2))) > tol:
            U, _, Vt = np.linalg.svd(R)
            m = g.matrix.copy()
            m[:2, :2] = U @ Vt
            return GroupElement(g.group, m)
    return g


def closure_residual(g):
    """Distance of ``g`` from its group's representation constraints."""
    m = g.matrix
    if g.group == "so3":
        return max(np.max(np.abs(m.T @ m - np.eye(3))), abs(np.linalg.det(m) - 1.0))
    if g.group == "se2":
        R = m[:2, :2]
        return max(np.max(np.abs(R.T @ R - np.eye(2))), abs(np.linalg.det(R) - 1.0), np.max(np.abs(m[2] - [0, 0, 1])))
    if g.group == "h3":
        mask = np.tril(np.ones((3, 3)))
        return np.max(np.abs((m - np.eye(3)) * mask))
    lower = m.copy()
    lower[:3, 3] = 0.0
    return np.max(np.abs(lower - np.eye(4)))


def rt_gradient(f, g, h_fd=H_FD, analytic=None):
    """Right-trivialized gradient: component i is ``d/dt f(exp(t e_i) g)`` at 0.

    ``analytic``, when given, is called as ``analytic(g)`` and returned directly.
    """
    if analytic is not None:
        out = np.asarray(analytic(g), dtype=float)
    else:
        G = get_group(g.group)
        out = np.empty(G.dim)
        for i in range(G.dim):
            e = np.zeros(G.dim)
            e[i] = h_fd
            fp = f(group_mul(exp(G, e), g))
            fm = f(group_mul(exp(G, -e), g))
            out[i] = (fp - fm) / (2.0 * h_fd)
    if not np.all(np.isfinite(out)):
        raise NumericalDomainError("non-finite value in rt_gradient")
    return out


def check_Ad_to_ad(G, xi, mu, h=1e-5, path=None):
    """``|| d/dt coAd(path(t), mu)|_0 + coad(xi, mu) ||`` by central differences.

    ``path`` defaults to ``t -> exp(t xi)``.
    """
    G = _group_of(G)
    if path is None:
        def path(t):
            return exp(G, t * np.asarray(xi, dtype=float))
    d = (coAd(path(h), mu) - coAd(path(-h), mu)) / (2.0 * h)
    return float(np.linalg.norm(d + coad(G, xi, mu)))


def random_algebra(G, rng, scale=1.0):
    G = _group_of(G)
    return scale * rng.standard_normal(G.dim)


def random_element(G, rng, scale=1.0):
    G = _group_of(G)
    return exp(G, random_algebra(G, rng, scale))

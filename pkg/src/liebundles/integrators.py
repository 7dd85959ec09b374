"""Fixed-step Lie-group integrators for the formulations in :mod:`dynamics`.

A state is a group element (or ``None``) plus a flat vector of linear
coordinates.  The group slot is advanced multiplicatively,
``g <- exp(theta) g``; linear slots by the matching Runge-Kutta tableau.

``rkmk4`` is the Runge-Kutta-Munthe-Kaas method built on classical RK4.  Stage
velocities are pulled back through ``dexp^-1`` truncated after the
``[theta, [theta, u]]`` term, which is all fourth order needs.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import dynamics as dy
from . import iterated_bundles as ib
from . import lie_core as lc
from .errors import IntegrationAbort, NumericalDomainError, RegularityError, UsageError

SCHEMES = ("lie_euler", "rkmk4")


@dataclass(frozen=True)
class Scheme:
    name: str
    h: float
    T: float

    def __post_init__(self):
        if self.name not in SCHEMES:
            raise UsageError(f"unknown scheme {self.name!r}; expected one of {SCHEMES}")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise UsageError("step size must be positive and finite")
        if not (self.T >= self.h and math.isfinite(self.T)):
            raise UsageError("duration must be finite and at least one step")

    @property
    def steps(self):
        # tolerate T/h landing a rounding error below an integer
        return int(math.floor(self.T / self.h + 1e-9))


@dataclass
class Trajectory:
    """Uniform-grid samples; ``states`` hold points or :class:`dynamics.FlowState`."""

    times: np.ndarray
    states: list
    monitors: dict = field(default_factory=dict)
    reprojections: int = 0

    def __len__(self):
        return len(self.states)

    @property
    def points(self):
        return [s.point if isinstance(s, dy.FlowState) else s for s in self.states]


# --- systems ----------------------------------------------------------------


class HamiltonianSystem:
    def __init__(self, form, H, p0):
        self.form = dy.get_formulation(form)
        if p0.space != self.form.space:
            raise UsageError(f"{self.form.id} lives on {self.form.space}, initial point on {p0.space}")
        self.H = H
        self.template = p0
        self.has_group = ib.has_group(p0.space)
        self.nslots = len(p0.slots) - int(self.has_group)

    def initial(self):
        p = self.template
        g = p.slots[0] if self.has_group else None
        return g, self._lin(p)

    def _lin(self, p):
        lin = p.slots[1:] if self.has_group else p.slots
        return ib.flatten(lin) if lin else np.zeros(0)

    def point(self, g, y):
        lin = ib.unflatten(y, self.nslots) if self.nslots else ()
        slots = ((g,) if self.has_group else ()) + tuple(lin)
        return ib.BundlePoint(self.template.space, self.template.group, slots)

    def rhs(self, g, y):
        vel = dy.hamiltonian_vf(self.form, self.H, self.point(g, y))
        if self.has_group:
            return vel[0], ib.flatten(vel[1:]) if self.nslots else np.zeros(0)
        return None, ib.flatten(vel)

    def state(self, g, y):
        return self.point(g, y)


class LagrangianSystem:
    """Evolves base slots and velocity momenta; velocities are re-solved at every stage."""

    def __init__(self, form, L, s0):
        self.form = dy.get_formulation(form)
        if isinstance(s0, ib.BundlePoint):
            s0 = dy.flow_state(self.form, L, s0)
        if s0.point.space != self.form.space:
            raise UsageError(f"{self.form.id} lives on {self.form.space}, initial point on {s0.point.space}")
        self.L = L
        self.s0 = s0
        self.names = ib.slot_names(self.form.space)
        self.has_group = ib.has_group(self.form.space)
        self.lin_base = tuple(n for n in self.form.base_slots if n != "g" or not self.has_group)
        self.vel = self.form.velocity_slots
        self.guess = s0.point  # last solved point; warm start for velocity recovery

    def initial(self):
        p = self.s0.point
        g = p["g"] if self.has_group else None
        parts = [p[n] for n in self.lin_base] + list(self.s0.momenta)
        return g, ib.flatten(parts)

    def split(self, g, y):
        k = len(self.lin_base)
        parts = ib.unflatten(y, k + len(self.vel))
        changes = dict(zip(self.lin_base, parts[:k]))
        if self.has_group:
            changes["g"] = g
        return self.guess.replace(**changes), parts[k:]

    def solve(self, g, y):
        guess, mom = self.split(g, y)
        p = dy.recover_velocities(self.form, self.L, guess, mom)
        self.guess = p
        return p, mom

    def rhs(self, g, y):
        p, _ = self.solve(g, y)
        base, mom_rates = dy.lagrangian_rates(self.form, self.L, p)
        rates = dict(zip(self.form.base_slots, base))
        xi = rates["g"] if self.has_group else None
        parts = [rates[n] for n in self.lin_base] + list(mom_rates)
        return xi, ib.flatten(parts)

    def state(self, g, y):
        p, mom = self.solve(g, y)
        return dy.FlowState(p, tuple(mom))


def make_system(form, obs, p0):
    f = dy.get_formulation(form)
    if f.role == "hamiltonian":
        return HamiltonianSystem(f, obs, p0)
    return LagrangianSystem(f, obs, p0)


# --- steppers ---------------------------------------------------------------


def dexpinv(G, theta, u):
    """``dexp_theta^-1 u`` through the double-bracket term."""
    a = lc.ad(G, theta, u)
    return u - 0.5 * a + lc.ad(G, theta, a) / 12.0


def _advance(G, g, theta):
    return None if g is None else lc.group_mul(lc.exp(G, theta), g)


def lie_euler_step(system, G, g, y, h):
    xi, dy_ = system.rhs(g, y)
    return _advance(G, g, None if xi is None else h * xi), y + h * dy_


def rkmk4_step(system, G, g, y, h):
    has_g = g is not None
    zero = np.zeros(G.dim)

    def stage(theta, yy):
        xi, k = system.rhs(_advance(G, g, theta) if has_g else None, yy)
        return (dexpinv(G, theta, xi) if has_g else None), k

    u1, k1 = stage(zero, y)
    u2, k2 = stage(0.5 * h * u1 if has_g else None, y + 0.5 * h * k1)
    u3, k3 = stage(0.5 * h * u2 if has_g else None, y + 0.5 * h * k2)
    u4, k4 = stage(h * u3 if has_g else None, y + h * k3)
    y_new = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not has_g:
        return None, y_new
    theta = h / 6.0 * (u1 + 2.0 * u2 + 2.0 * u3 + u4)
    return _advance(G, g, theta), y_new


_STEPPERS = {"lie_euler": lie_euler_step, "rkmk4": rkmk4_step}


def integrate(form, obs, p0, scheme, monitors=None):
    """Integrate ``form`` for observable ``obs`` from ``p0``.

    ``p0`` is a point (momenta are computed for Lagrangian runs) or a
    :class:`dynamics.FlowState`.  ``monitors`` maps names to callables on the
    recorded state.  Raises :class:`IntegrationAbort` on a non-finite state.
    """
    if not isinstance(scheme, Scheme):
        raise UsageError("scheme must be a Scheme")
    system = make_system(form, obs, p0)
    group = (p0.point if isinstance(p0, dy.FlowState) else p0).group
    G = lc.get_group(group)
    step = _STEPPERS[scheme.name]
    n = scheme.steps
    g, y = system.initial()
    states = [system.state(g, y)]
    reproj = 0
    for k in range(n):
        try:
            g_new, y_new = step(system, G, g, y, scheme.h)
            if not np.all(np.isfinite(y_new)) or (g_new is not None and not np.all(np.isfinite(g_new.matrix))):
                raise NumericalDomainError("non-finite state")
            if g_new is not None:
                g_proj = lc.normalize(g_new)
                reproj += g_proj is not g_new
                g_new = g_proj
            state = system.state(g_new, y_new)
        except (NumericalDomainError, RegularityError, FloatingPointError, OverflowError) as exc:
            raise IntegrationAbort(f"step {k + 1}: {exc}", k) from exc
        g, y = g_new, y_new
        states.append(state)
    traj = Trajectory(scheme.h * np.arange(n + 1), states, reprojections=reproj)
    for name, fn in (monitors or {}).items():
        traj.monitors[name] = np.array([fn(s) for s in states])
    return traj


def drift_report(traj, monitors=None):
    """Per-monitor ``max |value(t) - value(0)|``.

    ``monitors`` (name -> callable on states) are evaluated and stored first;
    without it the trajectory's recorded monitor channels are used.
    """
    for name, fn in (monitors or {}).items():
        traj.monitors[name] = np.array([fn(s) for s in traj.states])
    out = {}
    for name, vals in traj.monitors.items():
        vals = np.asarray(vals, dtype=float)
        d = vals - vals[0]
        out[name] = float(np.max(np.abs(d))) if d.size else 0.0
    return out

"""Equations of motion of the curved n-body problem and their integration.

The acceleration of body ``i`` is

    sum_{j != i} m_j (q_j - sigma (q_i.q_j) q_i) / (sigma - sigma (q_i.q_j)^2)^(3/2)
        - sigma (v_i.v_i) q_i

with ``.`` the signed product of :mod:`curvednbody.geometry`.  Integration is
done with an embedded Runge-Kutta 5(4) pair (Dormand-Prince) or fixed-step
classical RK4; after every accepted step positions are rescaled onto the
manifold and velocities are made tangent again.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import LengthMismatch, OffManifold, SingularConfiguration, StepUnderflow
from .geometry import (
    CurvatureSign,
    as_sigma,
    dot_sigma,
    project_position,
    project_velocity,
    wedge_bivector,
)

if TYPE_CHECKING:
    from .rotopulsator import RotopulsatorSpec

log = logging.getLogger(__name__)

COLLISION_EPS = 1e-12
STATE_TOL = 1e-9


@dataclass(eq=False)
class SystemState:
    """Positions, velocities and masses of ``n`` bodies at time ``t``.

    ``positions`` and ``velocities`` have shape (n, 4).  Construction checks
    that every body is on the manifold and moving tangentially to it (within
    ``STATE_TOL``); the stored arrays are read-only copies.
    """

    t: float
    positions: np.ndarray
    velocities: np.ndarray
    masses: np.ndarray
    sigma: CurvatureSign

    def __post_init__(self):
        self.t = float(self.t)
        self.sigma = as_sigma(self.sigma)
        self.positions = _frozen(np.atleast_2d(np.array(self.positions, dtype=float)))
        self.velocities = _frozen(np.atleast_2d(np.array(self.velocities, dtype=float)))
        self.masses = _frozen(np.atleast_1d(np.array(self.masses, dtype=float)))
        n = self.masses.shape[0]
        if n < 1:
            raise LengthMismatch("a state needs at least one body")
        if self.positions.shape != (n, 4) or self.velocities.shape != (n, 4):
            raise LengthMismatch(
                f"expected ({n}, 4) positions and velocities, got "
                f"{self.positions.shape} and {self.velocities.shape}"
            )
        if not np.all(self.masses > 0):
            raise ValueError("all masses must be positive")
        if not (np.all(np.isfinite(self.positions)) and np.all(np.isfinite(self.velocities))):
            raise OffManifold("non-finite coordinates")
        # absolute tolerance, widened by the Euclidean magnitudes involved
        qmag = np.einsum("ij,ij->i", self.positions, self.positions)
        vmag = np.sqrt(np.einsum("ij,ij->i", self.velocities, self.velocities))
        norm = np.abs(dot_sigma(self.positions, self.positions, self.sigma) - self.sigma)
        if np.any(norm > STATE_TOL * np.maximum(1.0, qmag)):
            raise OffManifold(f"body {int(norm.argmax())} is off the manifold by {norm.max():.3e}")
        tang = np.abs(dot_sigma(self.positions, self.velocities, self.sigma))
        if np.any(tang > STATE_TOL * np.maximum(1.0, np.sqrt(qmag) * vmag)):
            raise OffManifold(f"velocity of body {int(tang.argmax())} is not tangent ({tang.max():.3e})")
        if self.sigma == CurvatureSign.HYPERBOLOID and np.any(self.positions[:, 3] <= 0):
            raise OffManifold("hyperboloid bodies must have x4 > 0 (upper sheet)")

    @property
    def n(self) -> int:
        return self.masses.shape[0]

    def __eq__(self, other):
        if not isinstance(other, SystemState):
            return NotImplemented
        return (
            self.t == other.t
            and self.sigma == other.sigma
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.velocities, other.velocities)
            and np.array_equal(self.masses, other.masses)
        )


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass
class Diagnostics:
    max_constraint_residual: float
    max_tangency_residual: float
    wedge: np.ndarray
    shape_deviation: float = 0.0
    rho_sq_phi_dot: Optional[float] = None


@dataclass
class IntegratorOptions:
    """Integrator settings.

    ``method`` is ``"rk45"`` (adaptive Dormand-Prince) or ``"rk4"`` (fixed
    step ``h0``, defaulting to ``sample_dt``).  ``sample_dt`` defaults to
    one thousandth of the integration span.
    """

    method: str = "rk45"
    rtol: float = 1e-10
    atol: float = 1e-12
    h0: Optional[float] = None
    sample_dt: Optional[float] = None
    min_step: float = 1e-14
    collision_eps: float = COLLISION_EPS
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.method not in ("rk45", "rk4"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.h0 is not None and self.h0 <= 0:
            raise ValueError("h0 must be positive")
        if self.sample_dt is not None and self.sample_dt <= 0:
            raise ValueError("sample_dt must be positive")


@dataclass
class IntegratorStats:
    steps_accepted: int = 0
    steps_rejected: int = 0
    min_step: float = math.inf


@dataclass
class Trajectory:
    states: list
    diagnostics: list
    stats: IntegratorStats = field(default_factory=IntegratorStats)
    spec: Optional["RotopulsatorSpec"] = None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(zip(self.states, self.diagnostics))


def _accelerations(Q, V, masses, sigma, collision_eps=COLLISION_EPS):
    s = float(sigma)
    n = Q.shape[0]
    J = np.array([1.0, 1.0, 1.0, s])
    chords = (Q * J) @ Q.T
    denom = s - s * chords**2
    if n > 1:
        off = ~np.eye(n, dtype=bool)
        if np.any(denom[off] <= collision_eps):
            bad = np.where(off, denom, np.inf)
            i, j = np.unravel_index(np.argmin(bad), bad.shape)
            i, j = sorted((int(i), int(j)))
            raise SingularConfiguration(i, j, abs(float(denom[i, j])))
        np.fill_diagonal(denom, 1.0)
        w = masses[None, :] / denom**1.5
        np.fill_diagonal(w, 0.0)
    else:
        w = np.zeros((1, 1))
    speed2 = np.einsum("ij,ij->i", V * J, V)
    return w @ Q - s * ((w * chords).sum(axis=1) + speed2)[:, None] * Q


def accelerations(state: SystemState, collision_eps: float = COLLISION_EPS) -> np.ndarray:
    """Accelerations of all bodies, shape (n, 4).

    Raises:
        SingularConfiguration: if ``sigma - sigma (q_i.q_j)^2 <= collision_eps``
            for some pair (collision, or antipodal bodies on the sphere).
    """
    return _accelerations(state.positions, state.velocities, state.masses, state.sigma, collision_eps)


def diagnostics_of(state: SystemState, spec: Optional["RotopulsatorSpec"] = None) -> Diagnostics:
    """Residuals and monitored quantities of a single state.

    ``shape_deviation`` is filled only when a polygonal ``spec`` is given, and
    ``rho_sq_phi_dot`` only for the hyperbolic classes; it is read off body 0
    as ``q4 v3 - q3 v4``.
    """
    q, v, s = state.positions, state.velocities, state.sigma
    constraint = float(np.max(np.abs(dot_sigma(q, q, s) - s)))
    tangency = float(np.max(np.abs(dot_sigma(q, v, s))))
    wedge = wedge_bivector(q, v, state.masses)
    shape = 0.0
    rho_sq_phi_dot = None
    if spec is not None:
        from .rotopulsator import shape_deviation

        shape = shape_deviation(state, spec)
        if spec.kind.is_hyperbolic:
            rho_sq_phi_dot = float(q[0, 3] * v[0, 2] - q[0, 2] * v[0, 3])
    return Diagnostics(constraint, tangency, wedge, shape, rho_sq_phi_dot)


# Dormand-Prince 5(4) tableau.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_E = _DP_B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


class _System:
    """First-order form y = (Q, V) flattened, with projection."""

    def __init__(self, state: SystemState, collision_eps: float):
        self.n = state.n
        self.masses = np.asarray(state.masses)
        self.sigma = state.sigma
        self.eps = collision_eps

    def split(self, y):
        n4 = 4 * self.n
        return y[:n4].reshape(self.n, 4), y[n4:].reshape(self.n, 4)

    def f(self, y):
        Q, V = self.split(y)
        A = _accelerations(Q, V, self.masses, self.sigma, self.eps)
        return np.concatenate([V.ravel(), A.ravel()])

    def project(self, y):
        Q, V = self.split(y)
        Q = project_position(Q, self.sigma)
        V = project_velocity(Q, V, self.sigma)
        return np.concatenate([Q.ravel(), V.ravel()])


def _sample_times(t0: float, t_end: float, dt: float) -> np.ndarray:
    k = np.arange(1, int(math.floor((t_end - t0) / dt)) + 2)
    times = t0 + k * dt
    times = times[times < t_end - 1e-12 * max(1.0, abs(t_end))]
    return np.append(times, t_end)


def _rms(x):
    return math.sqrt(float(np.mean(x * x)))


def _initial_step(sys_, t, y, f0, opts, span):
    sc = opts.atol + opts.rtol * np.abs(y)
    d0, d1 = _rms(y / sc), _rms(f0 / sc)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = sys_.f(y + h0 * f0)
    d2 = _rms((f1 - f0) / sc) / h0
    dmax = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if dmax <= 1e-15 else (0.01 / dmax) ** 0.2
    return min(100 * h0, h1, span)


def _dopri_step(sys_, y, h):
    k = np.empty((7, y.size))
    k[0] = sys_.f(y)
    for s in range(1, 7):
        k[s] = sys_.f(y + h * (np.asarray(_DP_A[s]) @ k[:s]))
    y_new = y + h * (_DP_B @ k)
    err = h * (_DP_E @ k)
    return y_new, err


def _rk4_step(sys_, y, h):
    k1 = sys_.f(y)
    k2 = sys_.f(y + 0.5 * h * k1)
    k3 = sys_.f(y + 0.5 * h * k2)
    k4 = sys_.f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(
    state: SystemState,
    t_end: float,
    opts: Optional[IntegratorOptions] = None,
    spec: Optional["RotopulsatorSpec"] = None,
) -> Trajectory:
    """Integrate the equations of motion from ``state`` to ``t_end``.

    Samples are emitted at ``state.t + k * sample_dt`` and at ``t_end``;
    steps are shortened to land on sample times exactly, so no interpolation
    is involved.  The initial state is the first sample.

    Raises:
        SingularConfiguration: propagated from the force evaluation.
        StepUnderflow: when the adaptive step drops below ``opts.min_step``.
    """
    opts = opts or IntegratorOptions()
    t0 = state.t
    if not t_end > t0:
        raise ValueError("t_end must exceed the initial time")
    dt = opts.sample_dt or (t_end - t0) / 1000.0
    sys_ = _System(state, opts.collision_eps)
    stats = IntegratorStats()
    y = np.concatenate([state.positions.ravel(), state.velocities.ravel()])
    _accelerations(state.positions, state.velocities, sys_.masses, sys_.sigma, opts.collision_eps)

    states = [state]
    diags = [diagnostics_of(state, spec)]

    def emit(t, y):
        Q, V = sys_.split(y)
        st = SystemState(t, Q.copy(), V.copy(), sys_.masses, sys_.sigma)
        states.append(st)
        diags.append(diagnostics_of(st, spec))

    t = t0
    if opts.method == "rk4":
        h_fixed = opts.h0 or dt
        for target in _sample_times(t0, t_end, dt):
            nsub = max(1, math.ceil((target - t) / h_fixed - 1e-9))
            hh = (target - t) / nsub
            for _ in range(nsub):
                y = sys_.project(_rk4_step(sys_, y, hh))
                stats.steps_accepted += 1
            stats.min_step = min(stats.min_step, hh)
            t = target
            emit(t, y)
        return Trajectory(states, diags, stats, spec)

    h = opts.h0 or _initial_step(sys_, t, y, sys_.f(y), opts, t_end - t0)
    for target in _sample_times(t0, t_end, dt):
        while t < target:
            if h < opts.min_step:
                raise StepUnderflow(t, h, opts.min_step)
            if stats.steps_accepted + stats.steps_rejected >= opts.max_steps:
                raise StepUnderflow(t, h, opts.min_step)
            landing = h >= target - t
            h_try = target - t if landing else h
            y_new, err = _dopri_step(sys_, y, h_try)
            scale = opts.atol + opts.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err_norm = _rms(err / scale)
            if not math.isfinite(err_norm):
                err_norm = math.inf
            if err_norm <= 1.0:
                y = sys_.project(y_new)
                t = target if landing else t + h_try
                stats.steps_accepted += 1
                stats.min_step = min(stats.min_step, h_try)
                factor = 5.0 if err_norm == 0 else min(5.0, max(0.2, 0.9 * err_norm**-0.2))
                # keep the controller's step when a landing clipped it
                h = max(h, h_try * factor) if landing else h_try * factor
            else:
                stats.steps_rejected += 1
                h = h_try * max(0.2, 0.9 * err_norm**-0.2) if math.isfinite(err_norm) else 0.2 * h_try
        emit(t, y)
    log.debug("integrate: %d accepted, %d rejected steps", stats.steps_accepted, stats.steps_rejected)
    return Trajectory(states, diags, stats, spec)

"""Polygonal rotopulsator configurations and their algebraic residuals.

Elliptic classes put body ``i`` at ``(r cos(theta + a_i), r sin(theta + a_i), z1, z2)``
with ``z1, z2`` shared by all bodies.  The hyperbolic class replaces the last
two coordinates by ``rho (sinh(phi + b_i), cosh(phi + b_i))`` on the
hyperboloid; with all ``b_i`` equal it is the shared-z negative elliptic
configuration, and the builders produce bit-identical states in that case.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .dynamics import SystemState
from .errors import DegenerateSize, LengthMismatch, OffManifold, SingularPair
from .geometry import CurvatureSign, as_sigma

TWO_PI = 2.0 * math.pi
SINGULAR_EPS = 1e-12


class RotopulsatorClass(str, Enum):
    POSITIVE_ELLIPTIC = "PositiveElliptic"
    NEGATIVE_ELLIPTIC = "NegativeElliptic"
    NEGATIVE_HYPERBOLIC = "NegativeHyperbolic"
    NEGATIVE_ELLIPTIC_HYPERBOLIC = "NegativeEllipticHyperbolic"

    @property
    def sigma(self) -> CurvatureSign:
        if self is RotopulsatorClass.POSITIVE_ELLIPTIC:
            return CurvatureSign.SPHERE
        return CurvatureSign.HYPERBOLOID

    @property
    def is_hyperbolic(self) -> bool:
        return self in (
            RotopulsatorClass.NEGATIVE_HYPERBOLIC,
            RotopulsatorClass.NEGATIVE_ELLIPTIC_HYPERBOLIC,
        )


def regular_polygon(n: int) -> np.ndarray:
    return TWO_PI * np.arange(n) / n


@dataclass(frozen=True)
class RotopulsatorSpec:
    """Class tag plus initial values of the ansatz scalars.

    ``alpha`` defaults to the regular polygon and ``beta`` to all zeros.  The
    elliptic fields (``r0``, ``z1_0``, ...) are used by the elliptic classes,
    the hyperbolic ones (``rho0``, ``phi0``, ...) by the hyperbolic classes;
    ``theta0``/``thetadot0`` are shared.
    """

    kind: RotopulsatorClass
    n: int
    masses: tuple = ()
    alpha: Optional[tuple] = None
    r0: float = 0.5
    rdot0: float = 0.0
    theta0: float = 0.0
    thetadot0: float = 0.0
    z1_0: float = 0.0
    z1dot0: float = 0.0
    z2_sign: int = 1
    beta: Optional[tuple] = None
    rho0: float = math.sqrt(2.0)
    rhodot0: float = 0.0
    phi0: float = 0.0
    phidot0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", RotopulsatorClass(self.kind))
        n = int(self.n)
        if n < 2:
            raise ValueError("a rotopulsator needs n >= 2 bodies")
        object.__setattr__(self, "n", n)
        masses = self.masses if len(np.atleast_1d(self.masses)) else (1.0,)
        masses = np.atleast_1d(np.asarray(masses, dtype=float))
        if masses.size == 1:
            masses = np.full(n, masses[0])
        if masses.size != n:
            raise LengthMismatch(f"{masses.size} masses for {n} bodies")
        if not np.all(masses > 0):
            raise ValueError("masses must be positive")
        object.__setattr__(self, "masses", tuple(float(m) for m in masses))
        if self.alpha is not None:
            alpha = tuple(float(a) for a in self.alpha)
            if len(alpha) != n:
                raise LengthMismatch(f"{len(alpha)} phase offsets for {n} bodies")
            if alpha[0] < 0 or alpha[-1] >= TWO_PI or any(b <= a for a, b in zip(alpha, alpha[1:])):
                raise ValueError("alpha must be strictly increasing in [0, 2*pi)")
            object.__setattr__(self, "alpha", alpha)
        if self.beta is not None:
            beta = tuple(float(b) for b in self.beta)
            if len(beta) != n:
                raise LengthMismatch(f"{len(beta)} boost offsets for {n} bodies")
            object.__setattr__(self, "beta", beta)
        if self.z2_sign not in (1, -1):
            raise ValueError("z2_sign must be +1 or -1")
        if self.kind.sigma == CurvatureSign.HYPERBOLOID and self.z2_sign != 1:
            raise OffManifold("only the upper sheet (z2_sign=+1) is supported on the hyperboloid")

    @property
    def sigma(self) -> CurvatureSign:
        return self.kind.sigma

    @property
    def alphas(self) -> np.ndarray:
        return regular_polygon(self.n) if self.alpha is None else np.array(self.alpha)

    @property
    def betas(self) -> np.ndarray:
        return np.zeros(self.n) if self.beta is None else np.array(self.beta)


def _elliptic_bodies(r, rdot, angles, thetadot, z1, z1dot, z2_sign, sigma):
    s = float(sigma)
    z1 = np.broadcast_to(np.asarray(z1, dtype=float), angles.shape)
    z1dot = np.broadcast_to(np.asarray(z1dot, dtype=float), angles.shape)
    z2sq = s * (s - r * r - z1 * z1)
    if np.any(z2sq < 0):
        raise OffManifold(f"r^2 + z1^2 = {float(np.max(r * r + z1 * z1)):.6g} exceeds 1 on the sphere")
    z2 = z2_sign * np.sqrt(z2sq)
    num = r * rdot + z1 * z1dot
    zero = z2 == 0
    if np.any(zero & (num != 0)):
        raise OffManifold("at z2 = 0 the rates must satisfy r r' + z1 z1' = 0")
    z2dot = np.where(zero, 0.0, -s * num / np.where(zero, 1.0, z2))
    c, sn = np.cos(angles), np.sin(angles)
    Q = np.stack([r * c, r * sn, z1, z2], axis=1)
    V = np.stack([rdot * c - r * thetadot * sn, rdot * sn + r * thetadot * c, z1dot, z2dot], axis=1)
    return Q, V


def build_polygonal_elliptic(spec: RotopulsatorSpec, sigma=None, t: float = 0.0) -> SystemState:
    """Build the shared-z elliptic configuration described by ``spec``.

    ``z2`` and its rate are solved from the manifold constraint, so the state
    is exactly on the manifold.

    Raises:
        OffManifold: ``r0^2 + z1_0^2 > 1`` on the sphere.
        DegenerateSize: ``r0 <= 0``.
    """
    sigma = spec.sigma if sigma is None else as_sigma(sigma)
    if spec.kind.is_hyperbolic or spec.sigma != sigma:
        raise ValueError(f"{spec.kind.value} is not an elliptic class for sigma={int(sigma)}")
    if spec.r0 <= 0:
        raise DegenerateSize(f"r0 = {spec.r0} must be positive")
    if sigma == CurvatureSign.SPHERE and spec.n == 2 and spec.r0 >= 1 - 1e-6:
        warnings.warn("n=2 on the sphere with r near 1: bodies are nearly antipodal", stacklevel=2)
    Q, V = _elliptic_bodies(
        spec.r0, spec.rdot0, spec.theta0 + spec.alphas, spec.thetadot0,
        spec.z1_0, spec.z1dot0, spec.z2_sign, sigma,
    )
    return SystemState(t, Q, V, spec.masses, sigma)


def build_negative_hyperbolic(spec: RotopulsatorSpec, t: float = 0.0) -> SystemState:
    """Build the hyperboloid configuration with shared ``rho`` and offsets ``beta``.

    The planar radius is ``sqrt(rho^2 - 1)``.  Distinct ``beta`` values are
    allowed so that residual checks can be run on them.

    Raises:
        DegenerateSize: ``rho0 <= 1``.
    """
    if spec.sigma != CurvatureSign.HYPERBOLOID:
        raise ValueError("hyperbolic configurations live on the hyperboloid")
    rho, rhodot = spec.rho0, spec.rhodot0
    if rho <= 1.0:
        raise DegenerateSize(f"rho0 = {rho} leaves no planar radius (need rho > 1)")
    w = math.sqrt(rho * rho - 1.0)
    wdot = rho * rhodot / w
    boost = spec.phi0 + spec.betas
    z1 = rho * np.sinh(boost)
    z1dot = rhodot * np.sinh(boost) + rho * spec.phidot0 * np.cosh(boost)
    Q, V = _elliptic_bodies(
        w, wdot, spec.theta0 + spec.alphas, spec.thetadot0, z1, z1dot, 1, CurvatureSign.HYPERBOLOID
    )
    return SystemState(t, Q, V, spec.masses, CurvatureSign.HYPERBOLOID)


def build(spec: RotopulsatorSpec, t: float = 0.0) -> SystemState:
    if spec.kind.is_hyperbolic:
        return build_negative_hyperbolic(spec, t)
    return build_polygonal_elliptic(spec, spec.sigma, t)


def chord_matrix(state: SystemState) -> np.ndarray:
    """Matrix of pairwise signed products ``q_i . q_j`` (exactly symmetric)."""
    Q = state.positions
    J = np.array([1.0, 1.0, 1.0, float(state.sigma)])
    C = (Q * J) @ Q.T
    return np.triu(C) + np.triu(C, 1).T


def shape_deviation(state: SystemState, spec: Optional[RotopulsatorSpec] = None) -> float:
    """Largest spread of chord values within a cyclic gap class.

    Zero for an exact regular polygon with shared z; ``spec`` is accepted for
    interface symmetry and is not otherwise needed.
    """
    C = chord_matrix(state)
    n = state.n
    idx = np.arange(n)
    worst = 0.0
    for gap in range(1, n // 2 + 1):
        vals = C[idx, (idx + gap) % n]
        worst = max(worst, float(vals.max() - vals.min()))
    return worst


@dataclass
class CriterionResiduals:
    b: np.ndarray
    tangential: np.ndarray
    b_spread: float = field(init=False)

    def __post_init__(self):
        self.b_spread = float(np.max(self.b) - np.min(self.b))


def _gap_terms(one_minus_cos, sin_gap, r, sigma):
    if np.any(one_minus_cos < SINGULAR_EPS):
        raise SingularPair("coincident phase offsets (1 - cos = 0)")
    size = 2.0 - float(sigma) * r * r * one_minus_cos
    if np.any(size < SINGULAR_EPS):
        raise SingularPair(f"2 - sigma r^2 (1 - cos) vanishes at r = {r}")
    size = size**1.5
    return one_minus_cos**-0.5 / size, sin_gap / (one_minus_cos**1.5 * size)


def criterion_coefficients(n: int, r: float, sigma) -> tuple[np.ndarray, np.ndarray]:
    """Per-gap coefficients of the regular-polygon criterion sums.

    Returns arrays ``g, h`` indexed by gap ``k = 1..n-1`` (position ``k-1``)
    such that ``b_i = sum_k m_{i+k} g_k`` and ``tangential_i = sum_k m_{i+k} h_k``.
    Gaps ``k`` and ``n-k`` are evaluated from the same reduced angle, so
    ``g`` is exactly symmetric and ``h`` exactly antisymmetric.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    k = np.arange(1, n)
    kk = np.minimum(k, n - k)
    one_minus_cos = 2.0 * np.sin(math.pi * kk / n) ** 2
    sin_gap = np.sign(n - 2 * k) * np.sin(TWO_PI * kk / n)
    return _gap_terms(one_minus_cos, sin_gap, r, sigma)


def _is_regular(alpha: np.ndarray) -> bool:
    n = alpha.size
    return bool(np.allclose(np.diff(alpha), TWO_PI / n, rtol=0.0, atol=1e-12))


def criterion_residuals(masses: Sequence[float], r: float, sigma, alpha=None) -> CriterionResiduals:
    """Evaluate ``b_i`` and the tangential sums for phase offsets ``alpha``.

    ``alpha=None`` (or a regular polygon) uses the cyclic-gap form, in which
    equal masses cancel exactly.  Sums are accumulated with ``math.fsum``.

    Raises:
        SingularPair: a denominator drops below 1e-12.
    """
    m = np.asarray(masses, dtype=float)
    n = m.size
    sigma = as_sigma(sigma)
    if r <= 0:
        raise ValueError("r must be positive")
    if alpha is not None:
        alpha = np.asarray(alpha, dtype=float)
        if alpha.size != n:
            raise LengthMismatch(f"{alpha.size} phase offsets for {n} masses")
        if np.any(np.diff(alpha) <= 0):
            raise ValueError("alpha must be strictly increasing")
    b = np.empty(n)
    tang = np.empty(n)
    if alpha is None or _is_regular(alpha):
        g, h = criterion_coefficients(n, r, sigma)
        for i in range(n):
            mj = m[(i + np.arange(1, n)) % n]
            b[i] = math.fsum(mj * g)
            tang[i] = math.fsum(mj * h)
    else:
        for i in range(n):
            others = np.arange(n) != i
            delta = alpha[others] - alpha[i]
            g, h = _gap_terms(2.0 * np.sin(delta / 2) ** 2, np.sin(delta), r, sigma)
            b[i] = math.fsum(m[others] * g)
            tang[i] = math.fsum(m[others] * h)
    return CriterionResiduals(b, tang)


def hyperbolic_phase_residual(masses, rho: float, beta, chords, i: int) -> float:
    """Boost-direction residual of body ``i`` for a shared-``rho`` configuration.

    Returns ``sum_{j != i} m_j rho sinh(b_j - b_i) / ((q_i.q_j)^2 - 1)^(3/2)``,
    which must vanish for an actual solution.  At the index of the smallest
    ``b`` every term is nonnegative.

    Raises:
        SingularPair: ``(q_i.q_j)^2 - 1 <= 1e-12`` for some ``j``.
    """
    m = np.asarray(masses, dtype=float)
    beta = np.asarray(beta, dtype=float)
    chords = np.asarray(chords, dtype=float)
    others = np.arange(m.size) != i
    gap = chords[i, others] ** 2 - 1.0
    if np.any(gap <= SINGULAR_EPS):
        raise SingularPair(f"(q_i.q_j)^2 - 1 vanishes for body {i}")
    terms = m[others] * rho * np.sinh(beta[others] - beta[i]) / gap**1.5
    return math.fsum(terms)

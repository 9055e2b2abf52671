"""Numerical certificates for the structural results on polygonal rotopulsators.

* :func:`lemma1_drift` -- constancy of ``rho^2 phi'`` along hyperbolic runs.
* :func:`theorem1_certificate` -- distinct boost offsets cannot solve the
  boost-direction equation (the residual at the smallest offset is positive).
* :func:`mass_kernel` -- the masses compatible with the criterion equations at
  several radii, i.e. the numerical nullspace of the stacked linear system.
* :func:`rotopulsator_regression` -- recover ``r(t)``, ``theta(t)`` and the
  shape deviation from an integrated trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dynamics import IntegratorOptions, Trajectory, integrate
from .equilibria import EquilibriumProblem, angular_speed_squared
from .errors import NotHyperbolicClass
from .geometry import CurvatureSign, as_sigma, bivector_component
from .rotopulsator import (
    RotopulsatorClass,
    RotopulsatorSpec,
    build,
    build_negative_hyperbolic,
    chord_matrix,
    criterion_coefficients,
    hyperbolic_phase_residual,
    shape_deviation,
)

NULL_RTOL = 1e-10
DEFAULT_R_SAMPLES = {CurvatureSign.SPHERE: (0.3, 0.7), CurvatureSign.HYPERBOLOID: (0.5, 2.0)}


def _hyperbolic_spec(traj: Trajectory) -> RotopulsatorSpec:
    if traj.spec is None or not traj.spec.kind.is_hyperbolic:
        raise NotHyperbolicClass("trajectory carries no hyperbolic ansatz")
    return traj.spec


def rho_sq_phi_dot_series(traj: Trajectory) -> np.ndarray:
    """``rho^2 phi'`` per sample, read off body 0 as ``q4 v3 - q3 v4``."""
    _hyperbolic_spec(traj)
    return np.array([s.positions[0, 3] * s.velocities[0, 2] - s.positions[0, 2] * s.velocities[0, 3] for s in traj.states])


def lemma1_drift(traj: Trajectory) -> float:
    """Largest deviation of ``rho^2 phi'`` from its initial value."""
    series = rho_sq_phi_dot_series(traj)
    return float(np.max(np.abs(series - series[0])))


def wedge_lemma_mismatch(traj: Trajectory) -> float:
    """Largest ``|W_34 + (sum m) rho^2 phi'|`` over the samples."""
    series = rho_sq_phi_dot_series(traj)
    total = float(np.sum(traj.states[0].masses))
    w34 = np.array([bivector_component(d.wedge, 3, 4) for d in traj.diagnostics])
    return float(np.max(np.abs(w34 + total * series)))


def theorem1_residuals(n: int, trials: int, seed: int) -> np.ndarray:
    """Phase residual at the smallest offset for ``trials`` random configurations.

    Each trial draws its own generator from ``SeedSequence(seed).spawn``, so
    results depend only on ``(n, trials, seed)`` and the trial index.
    """
    if n < 2 or trials < 1:
        raise ValueError("need n >= 2 and trials >= 1")
    out = np.empty(trials)
    for k, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.default_rng(child)
        while True:
            beta = rng.uniform(-1.0, 1.0, n)
            if np.unique(beta).size == n:
                break
        spec = RotopulsatorSpec(
            RotopulsatorClass.NEGATIVE_HYPERBOLIC,
            n,
            masses=tuple(rng.uniform(0.1, 5.0, n)),
            rho0=rng.uniform(1.01, 5.0),
            beta=tuple(beta),
            phi0=rng.uniform(-1.0, 1.0),
            theta0=rng.uniform(0.0, 2 * math.pi),
        )
        state = build_negative_hyperbolic(spec)
        i = int(np.argmin(beta))
        out[k] = hyperbolic_phase_residual(state.masses, spec.rho0, beta, chord_matrix(state), i)
    return out


def theorem1_certificate(n: int, trials: int, seed: int) -> bool:
    """True iff every sampled min-offset residual exceeds 1e-12."""
    return bool(np.all(theorem1_residuals(n, trials, seed) > 1e-12))


@dataclass
class MassKernelReport:
    n: int
    sigma: CurvatureSign
    r_samples: tuple
    matrix_rows: int
    kernel_dim: int
    kernel_basis: np.ndarray
    second_smallest_sv: float
    singular_values: np.ndarray

    @property
    def largest_sv(self) -> float:
        return float(self.singular_values[0])


def mass_kernel_matrix(n: int, sigma, r_samples: Sequence[float], include_b_equality: bool = False) -> np.ndarray:
    """Stack the criterion equations as rows of a linear map acting on masses."""
    rows = []
    for r in r_samples:
        g, h = criterion_coefficients(n, r, sigma)
        tang = np.zeros((n, n))
        bmat = np.zeros((n, n))
        for i in range(n):
            cols = (i + np.arange(1, n)) % n
            tang[i, cols] = h
            bmat[i, cols] = g
        rows.append(tang)
        if include_b_equality:
            rows.append(bmat[:-1] - bmat[1:])
    return np.vstack(rows)


def mass_kernel(n: int, sigma, r_samples: Optional[Sequence[float]] = None, include_b_equality: bool = False) -> MassKernelReport:
    """Numerical nullspace of the criterion system in the unknown masses.

    Singular values below ``1e-10`` times the largest count as zero.
    ``second_smallest_sv`` is the smallest singular value kept outside the
    kernel, i.e. the gap that separates the nullspace from the rest; with a
    one-dimensional kernel it is literally the second smallest value.
    """
    sigma = as_sigma(sigma)
    if n < 3:
        raise ValueError("mass_kernel needs n >= 3")
    r_samples = tuple(DEFAULT_R_SAMPLES[sigma] if r_samples is None else r_samples)
    if len(set(r_samples)) < 2:
        raise ValueError("need at least two distinct radius samples")
    M = mass_kernel_matrix(n, sigma, r_samples, include_b_equality)
    _, sv, vt = np.linalg.svd(M)
    rank = int(np.sum(sv > NULL_RTOL * sv[0]))
    return MassKernelReport(
        n=n,
        sigma=sigma,
        r_samples=r_samples,
        matrix_rows=M.shape[0],
        kernel_dim=n - rank,
        kernel_basis=vt[rank:],
        second_smallest_sv=float(sv[rank - 1]),
        singular_values=sv,
    )


@dataclass
class RegressionResult:
    max_shape_deviation: float
    r_series: np.ndarray
    theta_series: np.ndarray
    times: np.ndarray


def rotopulsator_regression(traj: Trajectory) -> RegressionResult:
    """Fit the polygonal ansatz scalars to every sample of ``traj``.

    ``r`` is the root-mean-square planar radius and ``theta`` the circular
    mean of ``atan2(q2, q1) - alpha_i``, unwrapped in time.
    """
    n = traj.states[0].n
    alpha = traj.spec.alphas if traj.spec is not None else 2 * np.pi * np.arange(n) / n
    r_series = np.empty(len(traj))
    theta = np.empty(len(traj))
    worst = 0.0
    for k, state in enumerate(traj.states):
        q = state.positions
        r_series[k] = math.sqrt(float(np.mean(q[:, 0] ** 2 + q[:, 1] ** 2)))
        angles = np.arctan2(q[:, 1], q[:, 0]) - alpha
        theta[k] = math.atan2(np.sum(np.sin(angles)), np.sum(np.cos(angles)))
        worst = max(worst, shape_deviation(state, traj.spec))
    return RegressionResult(worst, r_series, np.unwrap(theta), traj.times)


# Reference runs shared by the CLI suites and the acceptance tests.
REFERENCE_OPTIONS = IntegratorOptions(rtol=1e-12, atol=1e-14)


def equilibrium_speed(n: int, r: float, sigma) -> float:
    """Angular speed of the equal-mass regular n-gon relative equilibrium at radius ``r``."""
    hi = 2.0 * r if as_sigma(sigma) < 0 else min(2.0 * r, 0.999)
    prob = EquilibriumProblem(n, 1.0, sigma, 1.0, (0.5 * r, hi))
    return math.sqrt(angular_speed_squared(r, prob)[0])


def polygon_run_spec(sigma) -> RotopulsatorSpec:
    """Equal-mass triangle with r(0)=0.6, r'(0)=0.05, z1(0)=0.

    On the sphere theta'(0)=1.  On the hyperboloid theta'(0) is the
    relative-equilibrium speed at r=0.6, which keeps the orbit bound.
    """
    sigma = as_sigma(sigma)
    if sigma == CurvatureSign.SPHERE:
        return RotopulsatorSpec(RotopulsatorClass.POSITIVE_ELLIPTIC, 3, r0=0.6, rdot0=0.05, thetadot0=1.0)
    return RotopulsatorSpec(
        RotopulsatorClass.NEGATIVE_ELLIPTIC, 3, r0=0.6, rdot0=0.05, thetadot0=equilibrium_speed(3, 0.6, sigma)
    )


def elliptic_hyperbolic_run_spec() -> RotopulsatorSpec:
    """Equal-beta triangle on the hyperboloid with rho, phi and r all varying."""
    rho0 = 1.2
    w0 = math.sqrt(rho0 * rho0 - 1.0)
    return RotopulsatorSpec(
        RotopulsatorClass.NEGATIVE_ELLIPTIC_HYPERBOLIC, 3,
        rho0=rho0, rhodot0=0.05, phidot0=0.3,
        thetadot0=equilibrium_speed(3, w0, CurvatureSign.HYPERBOLOID),
    )


def run_reference(spec: RotopulsatorSpec, t_end: float, sample_dt: Optional[float] = None) -> Trajectory:
    opts = IntegratorOptions(rtol=REFERENCE_OPTIONS.rtol, atol=REFERENCE_OPTIONS.atol, sample_dt=sample_dt)
    return integrate(build(spec), t_end, opts, spec)

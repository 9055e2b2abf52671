"""Polygonal relative equilibria: interaction kernel, monotonicity, root counting.

A regular n-gon of equal masses at planar radius ``r`` with shared ``z``
rotating rigidly at angular speed ``A`` solves the equations of motion iff

    A^2 = sum_{k=1}^{n-1} m_{i+k} (1 - cos(2 pi k / n)) f(2 r sin(pi k / n)),
    f(x) = (x^2 - sigma x^4 / 4)^(-3/2),

(for ``1 - sigma r^2 != 0``).  Uniqueness of the radius for a given ``A``
follows when ``x f(x)`` is decreasing over every chord argument ``x <= 2 r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError
from .geometry import CurvatureSign, as_sigma

# Squared location of the sign change of d/dx (x f(x)) on the sphere.  The
# closed form below and the finite-difference scan in `locate_xf_sign_change`
# both put it at 8/5; tests keep them in agreement.
XF_THRESHOLD_SQ = 8.0 / 5.0
CLAIMED_THRESHOLD_SQ = 5.0 / 8.0

R_BOUNDS = {
    # r bound as printed alongside the uniqueness statement
    "stated": 2.0 / 5.0 * math.sqrt(5.0),
    # 4 r^2 < 5/8
    "from_5_8": math.sqrt(CLAIMED_THRESHOLD_SQ / 4.0),
    # 4 r^2 < 8/5, the verified window
    "from_8_5": math.sqrt(XF_THRESHOLD_SQ / 4.0),
}


def f_kernel(x, sigma):
    """Interaction kernel ``(x^2 - sigma x^4 / 4)^(-3/2)``.

    Raises:
        DomainError: ``x <= 0``, or ``x >= 2`` on the sphere.
    """
    xa = np.asarray(x, dtype=float)
    s = float(as_sigma(sigma))
    base = xa * xa - s * xa**4 / 4.0
    if np.any(xa <= 0) or np.any(base <= 0):
        raise DomainError(f"f(x) needs x > 0 (and x < 2 on the sphere), got {x}")
    out = base**-1.5
    return float(out) if out.ndim == 0 else out


def xf_derivative(x, sigma):
    """Closed form of ``d/dx (x f(x))``.

    With ``x f(x) = x^-2 (1 - sigma x^2/4)^(-3/2)`` this is
    ``x^-3 (1 - sigma x^2/4)^(-5/2) (5 sigma x^2 / 4 - 2)``.
    """
    f_kernel(x, sigma)
    xa = np.asarray(x, dtype=float)
    s = float(as_sigma(sigma))
    u = 1.0 - s * xa * xa / 4.0
    out = xa**-3 * u**-2.5 * (1.25 * s * xa * xa - 2.0)
    return float(out) if out.ndim == 0 else out


def xf_finite_difference(x: float, sigma, step: float = 1e-6) -> float:
    """Central difference of ``x f(x)``; the oracle for :func:`xf_derivative`."""
    def xf(y):
        return y * f_kernel(y, sigma)

    return (xf(x + step) - xf(x - step)) / (2.0 * step)


def bisect_root(func: Callable[[float], float], lo: float, hi: float, rtol: float = 1e-12, max_iter: int = 200) -> float:
    """Bisection on a sign-changing bracket ``[lo, hi]``.

    Stops once the bracket width is below ``rtol`` times its midpoint.
    """
    flo, fhi = func(lo), func(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError("bracket does not straddle a sign change")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= rtol * abs(mid) or mid in (lo, hi):
            break
        fmid = func(mid)
        if fmid == 0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def locate_xf_sign_change(sigma=CurvatureSign.SPHERE, tol: float = 1e-6, points: int = 4000) -> list:
    """Brackets where the finite-difference slope of ``x f(x)`` changes sign.

    Scans ``(0, 2)`` on the sphere (``(0, 10]`` on the hyperboloid) and
    refines each sign change by bisection to width ``tol``.  Returns a list
    of ``(lo, hi)`` brackets.
    """
    s = as_sigma(sigma)
    upper = 2.0 if s == CurvatureSign.SPHERE else 10.0
    grid = np.linspace(0.0, upper, points + 1)[1:]
    if s == CurvatureSign.SPHERE:
        grid = grid[:-1]

    def slope(x):
        step = min(1e-6, 0.5 * x)
        if s == CurvatureSign.SPHERE:
            step = min(step, 0.5 * (upper - x))
        return xf_finite_difference(x, s, step)

    signs = np.sign([slope(x) for x in grid])
    brackets = []
    for a, b, sa, sb in zip(grid[:-1], grid[1:], signs[:-1], signs[1:]):
        if sa != sb:
            lo, hi, slo = a, b, sa
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if np.sign(slope(mid)) == slo:
                    lo = mid
                else:
                    hi = mid
            brackets.append((lo, hi))
    return brackets


def monotonicity_report(tol: float = 1e-6) -> dict:
    """Locate the sphere's monotonicity threshold and compare candidates.

    The returned dict records the bracket, its squared midpoint, which of
    5/8 and 8/5 it matches, and the three candidate radius bounds.
    """
    brackets = locate_xf_sign_change(CurvatureSign.SPHERE, tol)
    hyper = locate_xf_sign_change(CurvatureSign.HYPERBOLOID, tol)
    out = {
        "sphere_sign_changes": len(brackets),
        "hyperboloid_sign_changes": len(hyper),
        "candidates_sq": {"5/8": CLAIMED_THRESHOLD_SQ, "8/5": XF_THRESHOLD_SQ},
        "r_bounds": dict(R_BOUNDS),
    }
    if len(brackets) == 1:
        lo, hi = brackets[0]
        mid = 0.5 * (lo + hi)
        out.update(
            bracket=[lo, hi],
            threshold=mid,
            threshold_sq=mid * mid,
            matches={
                "5/8": abs(mid * mid - CLAIMED_THRESHOLD_SQ) <= 2 * mid * (hi - lo) + 1e-9,
                "8/5": abs(mid * mid - XF_THRESHOLD_SQ) <= 2 * mid * (hi - lo) + 1e-9,
            },
        )
    return out


def safe_r_max() -> float:
    """Largest radius searched on the sphere: inside the verified window and below 1."""
    return min(0.99 * math.sqrt(XF_THRESHOLD_SQ) / 2.0, 0.999)


@dataclass
class EquilibriumProblem:
    """Search for a rigidly rotating regular n-gon with angular speed ``A``.

    Unequal masses are only accepted with ``diagnostic=True``.
    """

    n: int
    masses: Sequence[float]
    sigma: CurvatureSign
    A: float
    r_range: Optional[tuple] = None
    diagnostic: bool = False

    def __post_init__(self):
        self.n = int(self.n)
        if self.n < 2:
            raise ValueError("n must be at least 2")
        self.sigma = as_sigma(self.sigma)
        m = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if m.size == 1:
            m = np.full(self.n, m[0])
        if m.size != self.n or not np.all(m > 0):
            raise ValueError(f"need {self.n} positive masses")
        self.masses = tuple(float(x) for x in m)
        if not self.A > 0:
            raise ValueError("angular speed A must be positive")
        if not self.equal_masses and not self.diagnostic:
            raise ValueError("unequal masses are only supported in diagnostic mode")
        lo, hi = self.r_range if self.r_range is not None else self.default_range(self.sigma)
        lo, hi = float(lo), float(hi)
        if not 0 < lo < hi:
            raise DomainError(f"invalid radius range ({lo}, {hi})")
        if self.sigma == CurvatureSign.SPHERE and hi >= 1.0:
            raise DomainError(f"on the sphere the radius must stay below 1 (got r_max={hi})")
        self.r_range = (lo, hi)

    @staticmethod
    def default_range(sigma) -> tuple:
        if as_sigma(sigma) == CurvatureSign.SPHERE:
            return (1e-3, safe_r_max())
        return (1e-3, 50.0)

    @property
    def equal_masses(self) -> bool:
        return len(set(self.masses)) == 1


def angular_speed_squared(r: float, prob: EquilibriumProblem, i: int = 0) -> tuple[float, float]:
    """Squared angular speed at radius ``r`` and the tangential force residual.

    Both are evaluated for body ``i`` of the regular polygon; the tangential
    residual ``sum_k m_{i+k} sin(2 pi k/n) f(x_k)`` vanishes for equal masses.
    """
    n = prob.n
    m = np.asarray(prob.masses)
    k = np.arange(1, n)
    kk = np.minimum(k, n - k)
    half = np.sin(math.pi * kk / n)
    x = 2.0 * r * half
    f = f_kernel(x, prob.sigma)
    f = np.atleast_1d(f)
    mj = m[(i + k) % n]
    sin_gap = np.sign(n - 2 * k) * np.sin(2.0 * math.pi * kk / n)
    asq = math.fsum(mj * 2.0 * half * half * f)
    tang = math.fsum(mj * sin_gap * f)
    return asq, tang


@dataclass
class EquilibriumReport:
    roots: list
    monotone_certificate: bool
    bracket_tol: float
    r_range: tuple
    asq_range: tuple = (math.nan, math.nan)
    tangential_residual: float = 0.0
    diagnostic: bool = False
    r_bounds: dict = field(default_factory=dict)

    @property
    def root_count(self) -> int:
        return len(self.roots)

    def to_dict(self) -> dict:
        return {
            "roots": list(self.roots),
            "root_count": self.root_count,
            "monotone_certificate": self.monotone_certificate,
            "bracket_tol": self.bracket_tol,
            "r_range": list(self.r_range),
            "asq_range": list(self.asq_range),
            "tangential_residual": self.tangential_residual,
            "diagnostic": self.diagnostic,
            "r_bounds": dict(self.r_bounds),
        }


def solve_equilibrium(prob: EquilibriumProblem, grid_points: int = 2048, bracket_tol: float = 1e-12) -> EquilibriumReport:
    """Find every radius in ``prob.r_range`` whose angular speed is ``prob.A``.

    Scans a log-spaced grid, brackets each sign change of ``A^2(r) - A^2``
    and bisects it to relative width ``bracket_tol``.  In diagnostic mode
    (unequal masses) no roots are sought; the largest tangential residual on
    the grid is reported instead.
    """
    lo, hi = prob.r_range
    grid = np.geomspace(lo, hi, max(grid_points, 2048))
    values = [angular_speed_squared(r, prob) for r in grid]
    asq = np.array([v[0] for v in values])
    if prob.equal_masses:
        tangential = float(np.max(np.abs([v[1] for v in values])))
    else:
        tangential = max(abs(angular_speed_squared(r, prob, i)[1]) for r in grid for i in range(prob.n))
    monotone = bool(np.all(np.diff(asq) < 0))
    r_bounds = dict(R_BOUNDS) if prob.sigma == CurvatureSign.SPHERE else {}
    report = EquilibriumReport(
        roots=[],
        monotone_certificate=monotone,
        bracket_tol=bracket_tol,
        r_range=(lo, hi),
        asq_range=(float(asq.min()), float(asq.max())),
        tangential_residual=tangential,
        diagnostic=not prob.equal_masses,
        r_bounds=r_bounds,
    )
    if report.diagnostic:
        return report

    target = prob.A * prob.A
    resid = asq - target

    def func(r):
        return angular_speed_squared(r, prob)[0] - target

    roots = []
    for k in range(grid.size - 1):
        if resid[k] == 0:
            roots.append(float(grid[k]))
        elif resid[k] * resid[k + 1] < 0:
            roots.append(bisect_root(func, float(grid[k]), float(grid[k + 1]), bracket_tol))
    if resid[-1] == 0:
        roots.append(float(grid[-1]))
    report.roots = sorted(roots)
    assert not (monotone and report.root_count > 1), "monotone A^2(r) cannot have two roots"
    return report

"""Signed inner product and the constraint manifold M^3_sigma in R^4.

Points live on ``x1^2 + x2^2 + x3^2 + sigma*x4^2 = sigma``: the unit 3-sphere
for ``sigma = +1`` and the upper sheet of the unit 3-hyperboloid for
``sigma = -1``.  Vectors are plain numpy arrays whose last axis has length 4;
every function broadcasts over leading axes.
"""

from __future__ import annotations

from enum import IntEnum
from typing import Sequence

import numpy as np

from .errors import LengthMismatch, NotProjectable

# (a, b) coordinate pairs of a bivector, 0-based, in storage order.
BIVECTOR_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
BIVECTOR_LABELS = tuple(f"{a + 1}{b + 1}" for a, b in BIVECTOR_PAIRS)


class CurvatureSign(IntEnum):
    SPHERE = 1
    HYPERBOLOID = -1


def as_sigma(value) -> CurvatureSign:
    """Coerce ``value`` to a :class:`CurvatureSign`; only +1 and -1 are accepted."""
    if isinstance(value, CurvatureSign):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise ValueError(f"sigma must be +1 or -1, got {value!r}")
    try:
        as_float = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"sigma must be +1 or -1, got {value!r}") from None
    if as_float not in (1.0, -1.0):
        raise ValueError(f"sigma must be +1 or -1, got {value!r}")
    return CurvatureSign(int(as_float))


def metric(sigma) -> np.ndarray:
    """Diagonal of the signed form, ``(1, 1, 1, sigma)``."""
    return np.array([1.0, 1.0, 1.0, float(as_sigma(sigma))])


def dot_sigma(x, y, sigma) -> np.ndarray | float:
    """Signed product ``x1*y1 + x2*y2 + x3*y3 + sigma*x4*y4``.

    Args:
        x, y: arrays of shape (..., 4).
        sigma: curvature sign.

    Returns:
        Array of shape (...); a Python float for single vectors.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = float(as_sigma(sigma))
    out = x[..., 0] * y[..., 0] + x[..., 1] * y[..., 1] + x[..., 2] * y[..., 2] + s * (x[..., 3] * y[..., 3])
    if np.ndim(out) == 0:
        return float(out)
    return out


def rot_T(x: float) -> np.ndarray:
    """Planar rotation by angle ``x``."""
    c, s = np.cos(x), np.sin(x)
    return np.array([[c, -s], [s, c]])


def boost_S(x: float) -> np.ndarray:
    """Hyperbolic rotation (boost) with rapidity ``x``."""
    c, s = np.cosh(x), np.sinh(x)
    return np.array([[c, s], [s, c]])


def project_position(q, sigma) -> np.ndarray:
    """Rescale ``q`` along its ray so that it lies on the manifold.

    Raises:
        NotProjectable: if ``q`` is zero (sphere), or is not timelike with
            positive fourth coordinate (hyperboloid).
    """
    q = np.asarray(q, dtype=float)
    s = as_sigma(sigma)
    norm = dot_sigma(q, q, s)
    if s == CurvatureSign.SPHERE:
        if np.any(np.asarray(norm) <= 0.0):
            raise NotProjectable("cannot project the zero vector onto the sphere")
    else:
        if np.any(np.asarray(norm) >= 0.0) or np.any(q[..., 3] <= 0.0):
            raise NotProjectable(
                "hyperboloid projection needs q.q < 0 and x4 > 0 (upper sheet)"
            )
    scale = 1.0 / np.sqrt(s * np.asarray(norm))
    return q * scale[..., None] if q.ndim > 1 else q * float(scale)


def project_velocity(q, v, sigma) -> np.ndarray:
    """Remove the normal part of ``v`` at the manifold point ``q``."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    s = float(as_sigma(sigma))
    coef = s * np.asarray(dot_sigma(q, v, sigma))
    return v - coef[..., None] * q if q.ndim > 1 else v - float(coef) * q


def wedge_bivector(positions: Sequence, velocities: Sequence, masses: Sequence) -> np.ndarray:
    """Mass-weighted bivector ``sum_i m_i q_i ^ v_i``.

    Component ``(a, b)`` is ``sum_i m_i (q_ia v_ib - q_ib v_ia)``; the six
    components are returned in :data:`BIVECTOR_PAIRS` order.
    """
    q = np.atleast_2d(np.asarray(positions, dtype=float))
    v = np.atleast_2d(np.asarray(velocities, dtype=float))
    m = np.atleast_1d(np.asarray(masses, dtype=float))
    if not (q.shape == v.shape and q.shape[0] == m.shape[0]):
        raise LengthMismatch(
            f"positions {q.shape}, velocities {v.shape}, masses {m.shape} disagree"
        )
    return np.array([np.sum(m * (q[:, a] * v[:, b] - q[:, b] * v[:, a])) for a, b in BIVECTOR_PAIRS])


def bivector_component(bivector, a: int, b: int) -> float:
    """Component ``(a, b)`` of a bivector, 1-based indices, antisymmetric."""
    if a == b:
        return 0.0
    lo, hi = sorted((a - 1, b - 1))
    value = float(bivector[BIVECTOR_PAIRS.index((lo, hi))])
    return value if a < b else -value

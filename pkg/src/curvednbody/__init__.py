"""Rotopulsating orbits of the curved n-body problem on S^3 and H^3."""

__version__ = "0.1.0"

from .geometry import CurvatureSign, dot_sigma, project_position, project_velocity, wedge_bivector
from .dynamics import IntegratorOptions, SystemState, Trajectory, accelerations, integrate
from .rotopulsator import RotopulsatorClass, RotopulsatorSpec, build

__all__ = [
    "CurvatureSign",
    "IntegratorOptions",
    "RotopulsatorClass",
    "RotopulsatorSpec",
    "SystemState",
    "Trajectory",
    "accelerations",
    "build",
    "dot_sigma",
    "integrate",
    "project_position",
    "project_velocity",
    "wedge_bivector",
]

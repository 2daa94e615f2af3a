from .base import SURFACE_TOLERANCE, Hypersurface
from .diagnostics import Box, lipschitz_quotient_estimate
from .hyperplane import Hyperplane
from .pointset import PointSet1D
from .sphere import Sphere


def project(surface: Hypersurface, x):
    """Nearest point(s) on ``surface``."""
    return surface.project(x)


def unit_normal(surface: Hypersurface, xi):
    """Oriented unit normal of ``surface`` at ``xi``."""
    return surface.unit_normal(xi)


def signed_distance(surface: Hypersurface, x):
    """Oriented signed distance from ``surface``."""
    return surface.signed_distance(x)


def in_band(surface: Hypersurface, x, eps: float):
    """Whether ``x`` lies within distance ``eps`` of ``surface``."""
    return surface.in_band(x, eps)


def segment_crosses(surface: Hypersurface, x, y):
    """Number of intersections of the segment ``[x, y]`` with ``surface``."""
    return surface.segment_crosses(x, y)


__all__ = [
    "SURFACE_TOLERANCE",
    "Hypersurface",
    "Hyperplane",
    "PointSet1D",
    "Sphere",
    "Box",
    "lipschitz_quotient_estimate",
    "project",
    "unit_normal",
    "signed_distance",
    "in_band",
    "segment_crosses",
]

"""
eqlab Core Package

The eqlab package tracks static equilibria of convex curves and surfaces and
of their polygonal and polyhedral discretizations, and co-evolves both counts
under geometric flows.
"""

import logging

__version__ = "0.1.0"

from .curve_core import (  # noqa: E402
    Ellipse,
    GraphArc,
    PolarFourier,
    PolylineSpline,
    SmoothCurve,
    equilibrium_counts,
    global_equilibria,
)
from .discretize import count_local, flocks, partition  # noqa: E402
from .errors import EqlabError  # noqa: E402
from .meshes import TriMesh, load_mesh, solid_centroid  # noqa: E402
from .surface3d import Ellipsoid, classify_equilibria  # noqa: E402


def equilibria(curve: SmoothCurve, n: int, offset: float = 0.0) -> dict:
    """Count smooth and polygonal equilibria about the curve's centroid.

    Args:
        curve: A closed convex curve.
        n: Number of polygon segments.
        offset: Mesh offset in [0, 1).

    Returns:
        dict: S, U of the curve and S_delta, U_delta, flocks of its n-gon.

    Raises:
        EqlabError: If the curve or the polygon is degenerate.
    """
    o = curve.centroid()
    s, u = equilibrium_counts(global_equilibria(curve, o))
    poly = partition(curve, n, offset)
    local = count_local(poly, o)
    return {
        "S": s,
        "U": u,
        "S_delta": local.S,
        "U_delta": local.U,
        "flocks": len(flocks(local, poly)),
    }


def version() -> str:
    """Return the current eqlab version string.

    Returns:
      str: The eqlab version string. Will not be empty.
    """
    return f"eqlab {__version__}"


logging.getLogger(__name__).addHandler(logging.NullHandler())
__all__ = [
    "Ellipse",
    "Ellipsoid",
    "EqlabError",
    "GraphArc",
    "PolarFourier",
    "PolylineSpline",
    "SmoothCurve",
    "TriMesh",
    "classify_equilibria",
    "count_local",
    "equilibria",
    "flocks",
    "global_equilibria",
    "load_mesh",
    "partition",
    "solid_centroid",
    "version",
]

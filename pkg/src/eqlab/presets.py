"""
Shape Presets

Textual shape and mesh sources accepted by the CLI and by config files:

- ``ellipse:a,b`` and ``circle:R``
- ``sevenfold`` (alias ``fig4``): rho(phi) = 1 + 0.01 cos 7phi + 0.012 cos(2phi + 0.3) + 0.008 cos(3phi + 1.1)
- ``fourfold`` (alias ``fig6``): rho(phi) = 1 + 0.02 cos 4phi + 0.004 cos(2phi + 0.5) + 0.003 sin(3phi + 0.2)
- a path to a curve JSON document
- ``ellipsoid:a,b,c`` or ``ellipsoid:a,b,c:freq`` and OFF/OBJ mesh paths
"""

import math
from pathlib import Path
from typing import Optional, Sequence, Tuple

from .curve_core import Ellipse, PolarFourier, SmoothCurve, circle, load_curve
from .errors import ConfigError
from .meshes import TriMesh, load_mesh
from .surface3d import Ellipsoid

DEFAULT_ELLIPSOID_FREQ = 51

# (frequency, amplitude, phase) of amp * cos(k phi + phase)
SEVENFOLD_TERMS = ((7, 0.01, 0.0), (2, 0.012, 0.3), (3, 0.008, 1.1))
FOURFOLD_TERMS = ((4, 0.02, 0.0), (2, 0.004, 0.5), (3, 0.003, 0.2 - math.pi / 2.0))
ALIASES = {"fig4": "sevenfold", "fig6": "fourfold"}


def harmonics(c0: float, terms: Sequence[Tuple[int, float, float]]) -> PolarFourier:
    """PolarFourier radius c0 + sum amp * cos(k phi + phase)."""
    m = max(k for k, _, _ in terms)
    cos = [0.0] * m
    sin = [0.0] * m
    for k, amp, phase in terms:
        cos[k - 1] += amp * math.cos(phase)
        sin[k - 1] -= amp * math.sin(phase)
    return PolarFourier(c0, cos, sin)


def parse_floats(text: str, count: Optional[int] = None, field: str = "shape") -> Tuple[float, ...]:
    try:
        values = tuple(float(x) for x in text.split(","))
    except ValueError as e:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}", field=field) from e
    if count is not None and len(values) != count:
        raise ConfigError(f"expected {count} numbers, got {len(values)}", field=field)
    return values


def shape_from_spec(spec: str) -> SmoothCurve:
    """Build a curve from a preset name or a JSON path.

    Raises:
        ConfigError: Unknown preset or malformed parameters.
    """
    name, _, args = spec.partition(":")
    name = ALIASES.get(name, name)
    if name == "ellipse":
        a, b = parse_floats(args, 2)
        return Ellipse(a, b)
    if name == "circle":
        (r,) = parse_floats(args or "1", 1)
        return circle(r)
    if name == "sevenfold":
        return harmonics(1.0, SEVENFOLD_TERMS)
    if name == "fourfold":
        return harmonics(1.0, FOURFOLD_TERMS)
    if Path(spec).suffix.lower() == ".json":
        if not Path(spec).exists():
            raise ConfigError(f"curve file {spec!r} not found", field="shape")
        return load_curve(spec)
    raise ConfigError(f"unknown shape {spec!r}", field="shape")


def mesh_from_spec(spec: str) -> Tuple[TriMesh, Optional[Ellipsoid]]:
    """Build a mesh and, for ellipsoid presets, the smooth surface it samples.

    Raises:
        ConfigError: Unknown preset or malformed parameters.
    """
    name, _, args = spec.partition(":")
    if name == "ellipsoid":
        axes, _, freq = args.partition(":")
        a, b, c = parse_floats(axes, 3, field="mesh")
        surface = Ellipsoid(a, b, c)
        f = int(freq) if freq else DEFAULT_ELLIPSOID_FREQ
        return surface.mesh(f), surface
    if Path(spec).suffix.lower() in (".off", ".obj"):
        if not Path(spec).exists():
            raise ConfigError(f"mesh file {spec!r} not found", field="mesh")
        return load_mesh(spec), None
    raise ConfigError(f"unknown mesh {spec!r}", field="mesh")

"""
eqlab Error Hierarchy

Base: EqlabError
├── ConfigError (experiment configuration, presets, usage)
├── CurveError (smooth curve representation)
│   ├── UnsupportedOrderError
│   ├── DegenerateParametrizationError
│   ├── CurvatureVanishesError
│   └── NotConvexError
├── DiscretizationError (polygons and local equilibria)
│   ├── TooCoarseError
│   ├── NongenericConfigurationError
│   ├── OnEvoluteError
│   └── ParameterRangeError
├── EventError (evolute crossings)
│   ├── CuspPointError
│   ├── NontransverseCrossingError
│   └── InconsistentEventLogError
├── FlowError (curve evolution)
│   ├── StabilityBoundError
│   └── ShapeVanishedError
├── AnalysisError (flock scaling and rate profiles)
│   ├── OrderTooHighError
│   └── ClassificationFailureError
└── MeshError (triangulated surfaces)
    ├── MeshLoadError
    ├── DegenerateSolidError
    └── ReferencePointError
"""

from typing import Any, Dict, Optional

import numpy as np


def render_value(value: Any) -> str:
    """Context text; numpy scalars as plain numbers, arrays as lists."""
    if isinstance(value, np.ndarray):
        value = value.tolist()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(render_value(v) for v in value) + "]"
    return str(value)


class EqlabError(Exception):
    """Base exception for all eqlab errors."""

    def __init__(self, message: str, ctx: Optional[Dict[str, Any]] = None):
        self.message = message
        self.context = ctx or {}
        super().__init__(message)

    def __str__(self) -> str:
        ctx = ((k, v) for k, v in self.context.items() if v is not None)
        ctx_str = "".join(f"\n  {k}: {render_value(v)}" for k, v in ctx)
        return f"{self.message}{ctx_str}"


class ConfigError(EqlabError):
    """Invalid experiment configuration."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(f"Config Error: {message}", {"field": field})
        self.field = field


class CurveError(EqlabError):
    """Base class for smooth curve errors."""

    def __init__(self, message: str, ctx: Optional[Dict[str, Any]] = None):
        super().__init__(f"Curve Error: {message}", ctx)


class UnsupportedOrderError(CurveError):
    """Requested derivative order exceeds the curve's smoothness."""

    def __init__(self, order: int, available: int, kind: str):
        super().__init__(
            f"derivative order {order} not available",
            {"available": available, "kind": kind},
        )
        self.order = order
        self.available = available


class DegenerateParametrizationError(CurveError):
    """Tangent vector vanishes."""

    def __init__(self, tau: float):
        super().__init__("zero tangent vector", {"tau": tau})
        self.tau = tau


class CurvatureVanishesError(CurveError):
    """Curvature too small for an evolute point."""

    def __init__(self, tau: float, kappa: float):
        super().__init__("curvature vanishes", {"tau": tau, "kappa": kappa})
        self.tau = tau


class NotConvexError(CurveError):
    """Curve or polygon fails the strict convexity check."""

    def __init__(self, message: str, ctx: Optional[Dict[str, Any]] = None):
        super().__init__(f"not convex: {message}", ctx)


class DiscretizationError(EqlabError):
    """Base class for discretization errors."""

    def __init__(self, message: str, ctx: Optional[Dict[str, Any]] = None):
        super().__init__(f"Discretization Error: {message}", ctx)


class TooCoarseError(DiscretizationError):
    """Too few segments for a closed polygon."""

    def __init__(self, n: int, minimum: int = 3):
        super().__init__(f"need at least {minimum} segments", {"n": n})


class NongenericConfigurationError(DiscretizationError):
    """An inner product fell inside the tie band.

    The caller decides the tie-break, usually by shifting the mesh offset.
    """

    def __init__(self, feature: str, index: int, value: float):
        super().__init__(
            f"nongeneric {feature} at index {index}",
            {"feature": feature, "index": index, "value": value},
        )
        self.feature = feature
        self.index = index


class OnEvoluteError(DiscretizationError):
    """Reference point lies on the evolute or caustic."""

    def __init__(self, factor: float):
        super().__init__("reference point on evolute", {"factor": factor})


class ParameterRangeError(DiscretizationError):
    """Parameter outside the admissible domain."""

    def __init__(self, name: str, value: Any, allowed: str):
        super().__init__(
            f"{name} out of range", {"value": value, "allowed": allowed}
        )


class EventError(EqlabError):
    """Base class for evolute crossing errors."""

    def __init__(self, message: str, ctx: Optional[Dict[str, Any]] = None):
        super().__init__(f"Event Error: {message}", ctx)


class CuspPointError(EventError):
    """Side classification requested at an evolute cusp."""

    def __init__(self, tau: float):
        super().__init__("evolute cusp", {"tau": tau})
        self.tau = tau


class NontransverseCrossingError(EventError):
    """N jumped by something other than two at refined tolerance."""

    def __init__(self, t: float, jump: int):
        super().__init__(
            "nontransverse or degenerate crossing", {"t": t, "jump": jump}
        )
        self.t = t
        self.jump = jump


class InconsistentEventLogError(EventError):
    """Event log drives N below two."""

    def __init__(self, t: float, value: int):
        super().__init__("equilibrium count below 2", {"t": t, "N": value})


class FlowError(EqlabError):
    """Base class for flow integration errors."""

    def __init__(self, message: str, ctx: Optional[Dict[str, Any]] = None):
        super().__init__(f"Flow Error: {message}", ctx)


class StabilityBoundError(FlowError):
    """Explicit scheme step above the stability bound."""

    def __init__(self, dt: float, bound: float, suggested: float):
        super().__init__(
            "time step above stability bound",
            {"dt": dt, "bound": bound, "suggested": suggested},
        )
        self.suggested = suggested


class ShapeVanishedError(FlowError):
    """Erosion distance reaches the inradius."""

    def __init__(self, dt: float, inradius: float):
        super().__init__("shape vanishes", {"dt": dt, "inradius": inradius})


class AnalysisError(EqlabError):
    """Base class for flock analysis errors."""

    def __init__(self, message: str, ctx: Optional[Dict[str, Any]] = None):
        super().__init__(f"Analysis Error: {message}", ctx)


class OrderTooHighError(AnalysisError):
    """All distance derivatives up to the supported order vanish."""

    def __init__(self, tau: float, max_order: int):
        super().__init__(
            "degeneracy order too high", {"tau": tau, "max_order": max_order}
        )


class ClassificationFailureError(AnalysisError):
    """Fitted exponent matches no admissible case."""

    def __init__(self, slope: float, admissible: Any):
        super().__init__(
            "fitted slope matches no case", {"slope": slope, "admissible": admissible}
        )
        self.slope = slope


class MeshError(EqlabError):
    """Base class for mesh errors."""

    def __init__(self, message: str, ctx: Optional[Dict[str, Any]] = None):
        super().__init__(f"Mesh Error: {message}", ctx)


class MeshLoadError(MeshError):
    """Mesh file or mesh topology rejected."""

    def __init__(self, message: str, feature: Optional[str] = None, **ctx: Any):
        super().__init__(message, {"feature": feature, **ctx})
        self.feature = feature


class DegenerateSolidError(MeshError):
    """Enclosed volume too small."""

    def __init__(self, volume: float):
        super().__init__("degenerate solid", {"volume": volume})


class ReferencePointError(MeshError):
    """Reference point not strictly inside the body."""

    def __init__(self, point: Any, ctx: Optional[Dict[str, Any]] = None):
        super().__init__("reference point outside body", {"point": point, **(ctx or {})})

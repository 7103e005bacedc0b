"""
Smooth Convex Curves

Analytic closed convex plane curves with exact derivatives, their signed
curvature, evolutes and the critical points of the distance function from a
reference point. All curves are stored counterclockwise so that the signed
curvature is negative everywhere and an equilibrium at distance rho is stable
exactly when 1 + kappa * rho > 0.
"""

import json
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.optimize import brentq, minimize_scalar

from .errors import (
    ConfigError,
    CurvatureVanishesError,
    DegenerateParametrizationError,
    NotConvexError,
    ParameterRangeError,
    UnsupportedOrderError,
)
from .planar import contains, lamina_centroid, signed_area

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

MAX_ORDER = 4
DEFAULT_SCAN_SAMPLES = 4096
DEFAULT_ROOT_RTOL = 1e-12
DEFAULT_DEGENERACY_TOL = 1e-7
DEFAULT_CUSP_TOL = 1e-9


class Stability(str, Enum):
    """Type of an equilibrium point."""

    STABLE = "S"
    UNSTABLE = "U"
    SADDLE = "H"
    DEGENERATE = "D"


class EvolutePointKind(str, Enum):
    GENERAL = "general"
    CUSP = "cusp"
    CROSSING = "crossing"


class SmoothCurve(ABC):
    """A smooth plane curve r(tau) on [lower, upper] with exact derivatives.

    Subclasses implement `_derivative`, which receives parameters already
    reduced to the domain.

    Attributes:
        kind: Short name used in JSON documents.
        lower: Start of the parameter domain.
        upper: End of the parameter domain.
        smoothness: Highest derivative order that `eval` provides.
        closed: Whether the curve is periodic on its domain.
    """

    kind: str = "curve"
    smoothness: int = MAX_ORDER
    closed: bool = True

    def __init__(self, lower: float, upper: float):
        self.lower = float(lower)
        self.upper = float(upper)

    @property
    def period(self) -> float:
        return self.upper - self.lower

    @abstractmethod
    def _derivative(self, tau: np.ndarray, order: int) -> np.ndarray:
        """Return the order-th derivative at each tau as an (..., 2) array."""

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """JSON document describing this curve."""

    def eval(self, tau: ArrayLike, order: int = 0) -> np.ndarray:
        """Evaluate r(tau) or one of its tau-derivatives.

        Args:
            tau: Scalar or array of parameters. Closed curves accept any real
                value and wrap it into the domain.
            order: Derivative order, 0 to 4.

        Returns:
            A (2,) vector for scalar tau, otherwise an (n, 2) array.

        Raises:
            UnsupportedOrderError: If order exceeds the available smoothness.
            ParameterRangeError: If tau falls outside an open curve's domain.
        """
        if order < 0 or order > min(self.smoothness, MAX_ORDER):
            raise UnsupportedOrderError(order, min(self.smoothness, MAX_ORDER), self.kind)
        t = np.asarray(tau, dtype=float)
        if self.closed:
            t = self.lower + np.mod(t - self.lower, self.period)
        else:
            slack = 1e-12 * self.period
            if np.any(t < self.lower - slack) or np.any(t > self.upper + slack):
                raise ParameterRangeError(
                    "tau", float(np.min(t)), f"[{self.lower}, {self.upper}]"
                )
        return self._derivative(t, order)

    def sample(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        """Parameters and points of n uniform samples (endpoint excluded if closed)."""
        if self.closed:
            taus = self.lower + self.period * np.arange(n) / n
        else:
            taus = np.linspace(self.lower, self.upper, n)
        return taus, self.eval(taus)

    @cached_property
    def scale(self) -> float:
        """Diameter estimate; all tolerances are relative to it."""
        _, pts = self.sample(256)
        diff = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", diff, diff))))

    def centroid(self, samples: int = 4096) -> np.ndarray:
        """Lamina centroid of the enclosed region."""
        _, pts = self.sample(samples)
        return lamina_centroid(pts)

    def contains(self, q: ArrayLike, samples: int = 1024) -> bool:
        if not self.closed:
            return True
        _, pts = self.sample(samples)
        return contains(pts, np.asarray(q, dtype=float))

    def check_convex(self, samples: int = DEFAULT_SCAN_SAMPLES) -> None:
        """Raise NotConvexError unless kappa < 0 on a dense sample."""
        taus, _ = self.sample(samples)
        kappa = signed_curvature(self, taus)
        if np.any(kappa >= 0.0):
            bad = int(np.argmax(kappa >= 0.0))
            raise NotConvexError(
                "signed curvature changes sign", {"tau": float(taus[bad])}
            )


def _unit_derivatives(phi: np.ndarray, order: int) -> np.ndarray:
    """order-th derivative of (cos phi, sin phi)."""
    shift = phi + order * (math.pi / 2.0)
    return np.stack([np.cos(shift), np.sin(shift)], axis=-1)


class Ellipse(SmoothCurve):
    """Axis-aligned ellipse r(tau) = (a cos tau, b sin tau), tau in [0, 2 pi]."""

    kind = "ellipse"

    def __init__(self, a: float, b: float):
        if a <= 0 or b <= 0:
            raise ParameterRangeError("semi-axis", (a, b), "positive")
        super().__init__(0.0, 2.0 * math.pi)
        self.a = float(a)
        self.b = float(b)

    def _derivative(self, tau: np.ndarray, order: int) -> np.ndarray:
        u = _unit_derivatives(tau, order)
        return u * np.array([self.a, self.b])

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "a": self.a, "b": self.b}

    def centroid(self, samples: int = 4096) -> np.ndarray:
        return np.zeros(2)

    def __repr__(self) -> str:
        return f"Ellipse(a={self.a}, b={self.b})"


class PolarFourier(SmoothCurve):
    """Star-shaped curve rho(phi) (cos phi, sin phi) with a Fourier radius.

    rho(phi) = c0 + sum_j cos[j-1] cos(j phi) + sin[j-1] sin(j phi)
    """

    kind = "polar_fourier"

    def __init__(
        self,
        c0: float,
        cos: Sequence[float] = (),
        sin: Sequence[float] = (),
        check: bool = True,
    ):
        super().__init__(0.0, 2.0 * math.pi)
        m = max(len(cos), len(sin))
        self.c0 = float(c0)
        self.cos = np.zeros(m)
        self.sin = np.zeros(m)
        self.cos[: len(cos)] = cos
        self.sin[: len(sin)] = sin
        self._freq = np.arange(1, m + 1, dtype=float)
        if check:
            taus = self.lower + self.period * np.arange(DEFAULT_SCAN_SAMPLES) / DEFAULT_SCAN_SAMPLES
            if np.any(self.radius(taus) <= 0.0):
                raise NotConvexError("radius must stay positive")
            self.check_convex()

    def radius(self, phi: ArrayLike, order: int = 0) -> np.ndarray:
        """order-th derivative of rho at phi."""
        p = np.asarray(phi, dtype=float)
        out = np.full(p.shape, self.c0 if order == 0 else 0.0)
        if self._freq.size:
            arg = np.multiply.outer(p, self._freq) + order * (math.pi / 2.0)
            weight = self._freq**order
            out = out + np.sum(
                weight * (self.cos * np.cos(arg) + self.sin * np.sin(arg)), axis=-1
            )
        return out

    def _derivative(self, tau: np.ndarray, order: int) -> np.ndarray:
        total = np.zeros(tau.shape + (2,))
        for m in range(order + 1):
            rho_m = self.radius(tau, m)
            total += math.comb(order, m) * rho_m[..., None] * _unit_derivatives(tau, order - m)
        return total

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "c0": self.c0,
            "cos": self.cos.tolist(),
            "sin": self.sin.tolist(),
        }

    def __repr__(self) -> str:
        return f"PolarFourier(c0={self.c0}, modes={self._freq.size})"


def circle(radius: float = 1.0) -> PolarFourier:
    return PolarFourier(radius)


class PolylineSpline(SmoothCurve):
    """Periodic quintic spline through closed polyline samples.

    Samples are reoriented counterclockwise and placed at uniform parameters
    on [0, 2 pi].
    """

    kind = "polyline_spline"
    DEGREE = 5

    def __init__(self, points: Sequence[Sequence[float]], check: bool = True):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < self.DEGREE + 2:
            raise ParameterRangeError("points", pts.shape, f"(m >= {self.DEGREE + 2}, 2)")
        if np.allclose(pts[0], pts[-1]):
            pts = pts[:-1]
        if signed_area(pts) < 0:
            pts = pts[::-1].copy()
        super().__init__(0.0, 2.0 * math.pi)
        self.points = pts
        knots = np.linspace(0.0, 2.0 * math.pi, len(pts) + 1)
        closed = np.vstack([pts, pts[:1]])
        self._spline = make_interp_spline(knots, closed, k=self.DEGREE, bc_type="periodic")
        self.smoothness = self.DEGREE - 1
        if check:
            self.check_convex()

    def _derivative(self, tau: np.ndarray, order: int) -> np.ndarray:
        return np.asarray(self._spline(tau, nu=order))

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "points": self.points.tolist()}


class GraphArc(SmoothCurve):
    """Open arc of the graph y = f(x), f a polynomial, for |x| <= half_width.

    The arc runs right to left (x = -tau) so that it turns counterclockwise
    about the points beneath it, matching the orientation of closed curves.

    Args:
        coefficients: f(x) = sum_i coefficients[i] * x**i.
        half_width: Half-length of the x interval.
    """

    kind = "graph_arc"
    closed = False

    def __init__(self, coefficients: Sequence[float], half_width: float = 0.5):
        super().__init__(-half_width, half_width)
        self.coefficients = np.asarray(coefficients, dtype=float)
        self._poly = np.polynomial.Polynomial(self.coefficients)

    @classmethod
    def normal_form(
        cls, rho0: float = 1.0, a: float = 0.0, b: float = 0.0, half_width: float = 0.5
    ) -> "GraphArc":
        """y = rho0 - x^2/(2 rho0) + a x^3 + b x^4; the origin sits on its evolute."""
        return cls([rho0, 0.0, -1.0 / (2.0 * rho0), a, b], half_width)

    @classmethod
    def parabola(cls, rho: float, kappa: float, half_width: float = 0.5) -> "GraphArc":
        """y = rho + (kappa/2) x^2, curvature kappa at the apex above the origin."""
        return cls([rho, 0.0, kappa / 2.0], half_width)

    def _derivative(self, tau: np.ndarray, order: int) -> np.ndarray:
        x = -tau
        y = self._poly.deriv(order)(x) if order else self._poly(x)
        y = y * (-1.0) ** order
        if order == 0:
            xs = x
        elif order == 1:
            xs = np.full(tau.shape, -1.0)
        else:
            xs = np.zeros(tau.shape)
        return np.stack([xs, np.broadcast_to(y, tau.shape)], axis=-1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "coefficients": self.coefficients.tolist(),
            "half_width": self.upper,
        }


def curve_from_dict(doc: Dict[str, Any]) -> SmoothCurve:
    """Build a curve from its JSON document.

    Raises:
        ConfigError: Unknown kind or missing field.
    """
    kind = doc.get("kind")
    try:
        if kind == "ellipse":
            return Ellipse(doc["a"], doc["b"])
        if kind == "polar_fourier":
            return PolarFourier(doc["c0"], doc.get("cos", ()), doc.get("sin", ()))
        if kind == "polyline_spline":
            return PolylineSpline(doc["points"])
        if kind == "graph_arc":
            return GraphArc(doc["coefficients"], doc.get("half_width", 0.5))
    except KeyError as e:
        raise ConfigError(f"missing curve field {e.args[0]!r}", field=e.args[0]) from e
    raise ConfigError(f"unknown curve kind {kind!r}", field="kind")


def load_curve(path: Union[str, Path]) -> SmoothCurve:
    return curve_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _cross(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _speed(curve: SmoothCurve, tau: ArrayLike, d1: np.ndarray) -> np.ndarray:
    speed = np.hypot(d1[..., 0], d1[..., 1])
    if np.any(speed <= 1e-14 * curve.scale):
        bad = np.atleast_1d(np.asarray(tau, dtype=float))
        raise DegenerateParametrizationError(float(bad[int(np.argmin(np.atleast_1d(speed)))]))
    return speed


def signed_curvature(curve: SmoothCurve, tau: ArrayLike) -> np.ndarray:
    """Signed curvature, negative on convex curves.

    kappa = -(x' y'' - y' x'') / (x'^2 + y'^2)^(3/2) for the counterclockwise
    parametrization.

    Raises:
        DegenerateParametrizationError: If the tangent vector vanishes.
    """
    d1 = curve.eval(tau, 1)
    d2 = curve.eval(tau, 2)
    speed = _speed(curve, tau, d1)
    return -_cross(d1, d2) / speed**3


def curvature_derivative(curve: SmoothCurve, tau: ArrayLike) -> np.ndarray:
    """d kappa / d tau."""
    d1 = curve.eval(tau, 1)
    d2 = curve.eval(tau, 2)
    d3 = curve.eval(tau, 3)
    speed = _speed(curve, tau, d1)
    dot12 = np.sum(d1 * d2, axis=-1)
    return -(_cross(d1, d3) / speed**3 - 3.0 * _cross(d1, d2) * dot12 / speed**5)


def inward_normal(curve: SmoothCurve, tau: ArrayLike) -> np.ndarray:
    d1 = curve.eval(tau, 1)
    speed = _speed(curve, tau, d1)
    t = d1 / speed[..., None]
    return np.stack([-t[..., 1], t[..., 0]], axis=-1)


def evolute(curve: SmoothCurve, tau: ArrayLike) -> np.ndarray:
    """Centre of the osculating circle, E = r - n / kappa.

    Raises:
        CurvatureVanishesError: If |kappa| * scale falls below 1e-12.
    """
    kappa = signed_curvature(curve, tau)
    small = np.abs(kappa) * curve.scale < 1e-12
    if np.any(small):
        taus = np.atleast_1d(np.asarray(tau, dtype=float))
        k = np.atleast_1d(kappa)
        i = int(np.argmax(np.atleast_1d(small)))
        raise CurvatureVanishesError(float(taus[i]), float(k[i]))
    return curve.eval(tau) - inward_normal(curve, tau) / kappa[..., None]


def classify_evolute_point(
    curve: SmoothCurve,
    tau: float,
    tol: float = DEFAULT_CUSP_TOL,
    samples: int = 2048,
) -> EvolutePointKind:
    """Cusp when kappa' vanishes, Crossing when another parameter maps to E(tau).

    Curves of constant curvature report every point as a cusp and log a
    warning, since their evolute collapses to a point.
    """
    taus, _ = curve.sample(samples)
    kappa = np.abs(signed_curvature(curve, taus))
    kp_all = np.abs(curvature_derivative(curve, taus))
    if np.max(kp_all) <= tol * np.max(kappa):
        logger.warning("constant curvature: evolute degenerates to a point")
        return EvolutePointKind.CUSP
    kp = abs(float(curvature_derivative(curve, tau)))
    if kp <= tol * float(np.max(kappa)):
        return EvolutePointKind.CUSP

    target = evolute(curve, tau)
    pts = evolute(curve, taus)
    gap = np.abs(np.mod(taus - tau + curve.period / 2, curve.period) - curve.period / 2)
    far = gap > 0.05 * curve.period
    if not np.any(far):
        return EvolutePointKind.GENERAL
    dist = np.linalg.norm(pts - target, axis=1)
    dist[~far] = np.inf
    i = int(np.argmin(dist))
    if dist[i] > 1e-3 * curve.scale:
        return EvolutePointKind.GENERAL
    step = curve.period / samples
    res = minimize_scalar(
        lambda s: float(np.linalg.norm(evolute(curve, s) - target)),
        bounds=(taus[i] - step, taus[i] + step),
        method="bounded",
        options={"xatol": 1e-12 * curve.period},
    )
    if res.fun < 1e-7 * curve.scale:
        return EvolutePointKind.CROSSING
    return EvolutePointKind.GENERAL


@dataclass(frozen=True)
class SmoothEquilibrium:
    """A critical point of tau -> |r(tau) - o|."""

    tau: float
    position: Tuple[float, float]
    stability: Stability
    rho: float
    kappa: float
    order: int = 2

    @property
    def factor(self) -> float:
        """1 + kappa * rho; positive at stable points."""
        return 1.0 + self.kappa * self.rho


def distance_jet(curve: SmoothCurve, o: ArrayLike, tau: float) -> np.ndarray:
    """Exact derivatives h, h', ..., h'''' of h(tau) = |r(tau) - o|^2.

    h and |r - o| share their first nonvanishing derivative order at a
    critical point, with the same sign.
    """
    o = np.asarray(o, dtype=float)
    r = [curve.eval(tau, m) for m in range(MAX_ORDER + 1)]
    r[0] = r[0] - o
    return np.array(
        [
            sum(math.comb(n, m) * float(np.dot(r[m], r[n - m])) for m in range(n + 1))
            for n in range(MAX_ORDER + 1)
        ]
    )


def first_nonzero_order(
    curve: SmoothCurve,
    o: ArrayLike,
    tau: float,
    tol: float = DEFAULT_DEGENERACY_TOL,
) -> Tuple[Optional[int], float]:
    """Order and value of the first nonvanishing derivative of h at tau.

    Orders 2..4 use exact derivatives; order 5 uses a Richardson-extrapolated
    central difference of h''''. Returns (None, 0.0) when all vanish.
    """
    jet = distance_jet(curve, o, tau)
    unit = curve.scale**2
    for n in range(2, MAX_ORDER + 1):
        if abs(jet[n]) > tol * unit:
            return n, float(jet[n])

    def h4(s: float) -> float:
        return float(distance_jet(curve, o, s)[4])

    step = 1e-3 * curve.period
    d_coarse = (h4(tau + step) - h4(tau - step)) / (2.0 * step)
    d_fine = (h4(tau + step / 2) - h4(tau - step / 2)) / step
    h5 = (4.0 * d_fine - d_coarse) / 3.0
    if abs(h5) > 100.0 * tol * unit:
        return 5, h5
    return None, 0.0


def _stability_from_order(order: int, value: float) -> Stability:
    if order % 2:
        return Stability.DEGENERATE
    return Stability.STABLE if value > 0 else Stability.UNSTABLE


def _g(curve: SmoothCurve, o: np.ndarray, tau: ArrayLike) -> np.ndarray:
    return np.sum((curve.eval(tau) - o) * curve.eval(tau, 1), axis=-1)


def global_equilibria(
    curve: SmoothCurve,
    o: ArrayLike,
    *,
    detect_degenerate: bool = False,
    window: Optional[Tuple[float, float]] = None,
    samples: int = DEFAULT_SCAN_SAMPLES,
    degeneracy_tol: float = DEFAULT_DEGENERACY_TOL,
) -> List[SmoothEquilibrium]:
    """All critical points of the distance from o, sorted by parameter.

    The function g(tau) = <r - o, r'> is scanned on uniform samples, sign
    changes are bracketed and polished with Brent's method to a relative
    parameter tolerance of 1e-12.

    Args:
        curve: The curve.
        o: Reference point, strictly inside closed curves.
        detect_degenerate: Estimate the order of points with 1 + kappa rho ~ 0
            and look for tangential zeros of g between samples.
        window: Optional parameter sub-interval to scan instead of the domain.
        samples: Number of scan samples.
        degeneracy_tol: Relative threshold for vanishing derivatives.

    Returns:
        Equilibria in increasing parameter order.

    Raises:
        ParameterRangeError: If o is not inside a closed curve.
    """
    o = np.asarray(o, dtype=float)
    if window is None and curve.closed and not curve.contains(o):
        raise ParameterRangeError("o", o.tolist(), "interior of the curve")
    lo, hi = window if window is not None else (curve.lower, curve.upper)
    periodic = curve.closed and window is None
    if periodic:
        taus = lo + (hi - lo) * np.arange(samples + 1) / samples
    else:
        taus = np.linspace(lo, hi, samples)
    g = _g(curve, o, taus)
    span = hi - lo
    xtol = DEFAULT_ROOT_RTOL * span

    def gs(s: float) -> float:
        return float(_g(curve, o, s))

    roots: List[float] = []
    count = samples if periodic else samples - 1
    for i in range(count):
        if g[i] == 0.0:
            roots.append(float(taus[i]))
        elif g[i] * g[i + 1] < 0.0:
            roots.append(brentq(gs, taus[i], taus[i + 1], xtol=xtol))
    if not periodic and g[-1] == 0.0:
        roots.append(float(taus[-1]))

    if detect_degenerate:
        roots.extend(_tangential_zeros(curve, o, taus, g, roots, xtol))

    out: List[SmoothEquilibrium] = []
    for tau in roots:
        if periodic:
            tau = curve.lower + math.fmod(tau - curve.lower, curve.period)
        out.append(_label(curve, o, tau, detect_degenerate, degeneracy_tol))
    out.sort(key=lambda e: e.tau)
    logger.debug("found %d equilibria for o=%s", len(out), o.tolist())
    return out


def _tangential_zeros(
    curve: SmoothCurve,
    o: np.ndarray,
    taus: np.ndarray,
    g: np.ndarray,
    known: List[float],
    xtol: float,
) -> List[float]:
    """Zeros of g that touch the axis between samples without a sign change."""
    absg = np.abs(g)
    found: List[float] = []
    unit = curve.scale**2
    step = taus[1] - taus[0]
    for i in range(1, len(taus) - 1):
        if not (absg[i] <= absg[i - 1] and absg[i] <= absg[i + 1]):
            continue
        if g[i - 1] * g[i + 1] < 0 or absg[i] > 1e-4 * unit:
            continue
        if any(abs(taus[i] - k) < 2 * step for k in known):
            continue
        res = minimize_scalar(
            lambda s: float(_g(curve, o, s)) ** 2,
            bounds=(taus[i - 1], taus[i + 1]),
            method="bounded",
            options={"xatol": xtol},
        )
        if math.sqrt(res.fun) < 1e-9 * unit:
            found.append(float(res.x))
    return found


def _label(
    curve: SmoothCurve,
    o: np.ndarray,
    tau: float,
    detect_degenerate: bool,
    tol: float,
) -> SmoothEquilibrium:
    point = curve.eval(tau)
    rho = float(np.linalg.norm(point - o))
    kappa = float(signed_curvature(curve, tau))
    factor = 1.0 + kappa * rho
    order, stability = 2, (Stability.STABLE if factor > 0 else Stability.UNSTABLE)
    if detect_degenerate and abs(factor) < math.sqrt(tol):
        k, value = first_nonzero_order(curve, o, tau, tol)
        if k is None:
            order, stability = 6, Stability.DEGENERATE
        else:
            order, stability = k, _stability_from_order(k, value)
    return SmoothEquilibrium(
        tau=float(tau),
        position=(float(point[0]), float(point[1])),
        stability=stability,
        rho=rho,
        kappa=kappa,
        order=order,
    )


def equilibrium_counts(eqs: Sequence[SmoothEquilibrium]) -> Tuple[int, int]:
    """(S, U) of a list of smooth equilibria."""
    s = sum(1 for e in eqs if e.stability is Stability.STABLE)
    u = sum(1 for e in eqs if e.stability is Stability.UNSTABLE)
    return s, u


def count_normals(curve: SmoothCurve, q: ArrayLike, samples: int = 1 << 16) -> int:
    """Number of normal lines through q, by brute-force sign counting of g."""
    taus = curve.lower + curve.period * np.arange(samples + 1) / samples
    g = _g(curve, np.asarray(q, dtype=float), taus)
    return int(np.sum(g[:-1] * g[1:] < 0.0) + np.sum(g[:-1] == 0.0))

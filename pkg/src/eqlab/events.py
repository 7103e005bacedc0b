"""
Evolute Crossings

The evolute of a curve separates regions of the plane with different numbers
of normals. A reference point that crosses it creates (C-type) or annihilates
(A-type) a pair of equilibria. This module samples evolutes, classifies points
against them, locates crossings along trajectories and rebuilds N(t) from an
event log. It also builds the line arrangement that plays the same role for
polygons.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from .curve_core import (
    SmoothCurve,
    SmoothEquilibrium,
    curvature_derivative,
    evolute,
    global_equilibria,
    inward_normal,
    signed_curvature,
)
from .discretize import Polygonization
from .errors import (
    CuspPointError,
    InconsistentEventLogError,
    NontransverseCrossingError,
)

logger = logging.getLogger(__name__)

CurveFamily = Union[SmoothCurve, Callable[[float], SmoothCurve]]
PointPath = Callable[[float], Sequence[float]]

DEFAULT_TIME_RTOL = 1e-9
DEFAULT_CUSP_GUARD = 1e-4
DEFAULT_SIDE_TOL = 1e-12


class Side(str, Enum):
    CONVEX = "convex"
    CONCAVE = "concave"
    ON_CURVE = "on_curve"


class EventKind(str, Enum):
    CREATION = "C"
    ANNIHILATION = "A"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class EvoluteCurve:
    """Sampled evolute with its cusp parameters (zeros of kappa')."""

    taus: np.ndarray
    points: np.ndarray
    cusps: np.ndarray
    source: SmoothCurve = field(repr=False, compare=False)

    def turning(self, i: int, window: int = 5) -> np.ndarray:
        """Three-point turning signs over `window` samples starting at i."""
        m = len(self.points)
        idx = [(i + j) % m for j in range(window)]
        p = self.points[idx]
        e0, e1 = p[1:-1] - p[:-2], p[2:] - p[1:-1]
        return np.sign(e0[:, 0] * e1[:, 1] - e0[:, 1] * e1[:, 0])

    def locally_convex(self, i: int, window: int = 5) -> bool:
        signs = self.turning(i, window)
        return bool(np.all(signs == signs[0]) and signs[0] != 0)

    def near_cusp(self, tau: float, guard: float = DEFAULT_CUSP_GUARD) -> bool:
        if self.cusps.size == 0:
            return False
        p = self.source.period
        gap = np.abs(np.mod(self.cusps - tau + p / 2, p) - p / 2)
        return bool(np.min(gap) < guard)


def evolute_curve(curve: SmoothCurve, samples: int = 4096) -> EvoluteCurve:
    """Sample E(tau) and locate its cusps by bracketing sign changes of kappa'."""
    taus, _ = curve.sample(samples)
    kp = curvature_derivative(curve, taus)
    cusps: List[float] = []
    ext_taus = np.append(taus, taus[0] + curve.period) if curve.closed else taus
    ext_kp = np.append(kp, kp[0]) if curve.closed else kp
    for i in range(len(ext_taus) - 1):
        if ext_kp[i] == 0.0:
            cusps.append(float(ext_taus[i]))
        elif ext_kp[i] * ext_kp[i + 1] < 0.0:
            root = brentq(
                lambda s: float(curvature_derivative(curve, s)),
                ext_taus[i],
                ext_taus[i + 1],
                xtol=1e-13 * curve.period,
            )
            cusps.append(root if not curve.closed else curve.lower + math.fmod(root - curve.lower, curve.period))
    return EvoluteCurve(taus, evolute(curve, taus), np.array(sorted(cusps)), curve)


def side_of_evolute(
    e: Union[EvoluteCurve, SmoothCurve],
    tau0: float,
    q: Sequence[float],
    tol: float = DEFAULT_SIDE_TOL,
) -> Side:
    """Classify q against the osculating parabola of the evolute at E(tau0).

    With R = -1/kappa the radius of curvature, E' = R' N and the evolute bends
    toward -sign(R') T. Points beyond the parabola on that side lie on the
    convex side.

    Raises:
        CuspPointError: If tau0 is a cusp of the evolute.
    """
    curve = e.source if isinstance(e, EvoluteCurve) else e
    if isinstance(e, EvoluteCurve) and e.near_cusp(tau0, 1e-9):
        raise CuspPointError(tau0)
    kappa = float(signed_curvature(curve, tau0))
    kp = float(curvature_derivative(curve, tau0))
    if abs(kp) <= 1e-9 * abs(kappa):
        raise CuspPointError(tau0)
    radius = -1.0 / kappa
    d_radius = kp / kappa**2
    speed = float(np.linalg.norm(curve.eval(tau0, 1)))
    normal = inward_normal(curve, tau0)
    tangent = np.array([normal[1], -normal[0]])
    center = evolute(curve, tau0)
    along = math.copysign(1.0, d_radius) * normal
    bend = -math.copysign(1.0, d_radius) * tangent
    k_e = speed / (radius * abs(d_radius))
    rel = np.asarray(q, dtype=float) - center
    u = float(np.dot(rel, along))
    w = float(np.dot(rel, bend))
    offset = w - 0.5 * k_e * u * u
    if abs(offset) <= tol * curve.scale:
        return Side.ON_CURVE
    return Side.CONVEX if offset > 0.0 else Side.CONCAVE


@dataclass(frozen=True)
class CrossingEvent:
    """A change of N(o(t)) at time t_star caused by crossing E(tau0)."""

    t: float
    tau: float
    kind: EventKind
    jump: int
    side_before: Optional[Side] = None
    side_after: Optional[Side] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"t": self.t, "tau": self.tau, "kind": self.kind.value}


def _family(curve_family: CurveFamily) -> Callable[[float], SmoothCurve]:
    if isinstance(curve_family, SmoothCurve):
        return lambda t: curve_family
    return curve_family


def _merging_pair(eqs: List[SmoothEquilibrium], period: float) -> float:
    """Midpoint of the two cyclically adjacent equilibria closest in parameter."""
    taus = np.array([e.tau for e in eqs])
    gaps = np.mod(np.roll(taus, -1) - taus, period)
    i = int(np.argmin(gaps))
    return float(taus[i] + gaps[i] / 2.0)


def detect_crossings(
    curve_family: CurveFamily,
    o_path: PointPath,
    t_grid: Sequence[float],
    samples: int = 4096,
    time_rtol: float = DEFAULT_TIME_RTOL,
    cusp_guard: float = DEFAULT_CUSP_GUARD,
) -> List[CrossingEvent]:
    """Locate and classify all jumps of N(o(t)) on a time grid.

    Each jump between consecutive grid times is bisected until the bracket is
    at most time_rtol * (t_max - t_min). The kind follows the jump sign and is
    cross-checked against side_of_evolute just before and after t_star.
    Crossings within cusp_guard of an evolute cusp are reported as degenerate.

    Raises:
        NontransverseCrossingError: If a refined jump is not +-2 or the sides
            contradict its sign.
    """
    at = _family(curve_family)
    grid = np.asarray(t_grid, dtype=float)
    span = float(grid[-1] - grid[0])

    def eqs_at(t: float) -> List[SmoothEquilibrium]:
        return global_equilibria(at(t), o_path(t), samples=samples)

    counts = [len(eqs_at(t)) for t in grid]
    events: List[CrossingEvent] = []
    for i in range(len(grid) - 1):
        if counts[i] == counts[i + 1]:
            continue
        tl, tr = float(grid[i]), float(grid[i + 1])
        nl, nr = counts[i], counts[i + 1]
        while tr - tl > time_rtol * span:
            mid = 0.5 * (tl + tr)
            nm = len(eqs_at(mid))
            if nm == nl:
                tl = mid
            else:
                tr, nr = mid, nm
        jump = nr - nl
        t_star = 0.5 * (tl + tr)
        if abs(jump) != 2:
            raise NontransverseCrossingError(t_star, jump)
        curve = at(t_star)
        more = eqs_at(tr) if jump > 0 else eqs_at(tl)
        tau0 = _merging_pair(more, curve.period)
        ev = evolute_curve(curve)
        if ev.near_cusp(tau0, cusp_guard):
            logger.info("degenerate crossing at t=%.9g near cusp tau=%.6g", t_star, tau0)
            events.append(CrossingEvent(t_star, tau0, EventKind.DEGENERATE, jump))
            continue
        h = min(1e-5 * span, 0.25 * (tr - float(grid[i])), 0.25 * (float(grid[i + 1]) - tl))
        h = max(h, 10.0 * time_rtol * span)
        before = side_of_evolute(at(t_star - h), tau0, o_path(t_star - h))
        after = side_of_evolute(at(t_star + h), tau0, o_path(t_star + h))
        kind = EventKind.CREATION if jump > 0 else EventKind.ANNIHILATION
        expected = (Side.CONVEX, Side.CONCAVE) if jump > 0 else (Side.CONCAVE, Side.CONVEX)
        if (before, after) != expected:
            raise NontransverseCrossingError(t_star, jump)
        logger.info("%s event at t=%.9g tau=%.6g", kind.value, t_star, tau0)
        events.append(CrossingEvent(t_star, tau0, kind, jump, before, after))
    return events


def event_counts(events: Sequence[CrossingEvent]) -> Tuple[int, int]:
    """(c, a): creation and annihilation counts, degenerate events excluded."""
    c = sum(1 for e in events if e.kind is EventKind.CREATION)
    a = sum(1 for e in events if e.kind is EventKind.ANNIHILATION)
    return c, a


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous piecewise-constant t -> N(t)."""

    times: Tuple[float, ...]
    values: Tuple[int, ...]

    def __call__(self, t: float) -> int:
        k = int(np.searchsorted(np.asarray(self.times), t, side="right"))
        return self.values[k]

    @property
    def final(self) -> int:
        return self.values[-1]


def reconstruct_N(n0: int, events: Sequence[CrossingEvent]) -> StepFunction:
    """N(t) = N(0) + 2 (c - a); degenerate events contribute their raw jump.

    Raises:
        InconsistentEventLogError: If the count would drop below 2.
    """
    times: List[float] = []
    values = [n0]
    value = n0
    for e in sorted(events, key=lambda x: x.t):
        if e.kind is EventKind.CREATION:
            value += 2
        elif e.kind is EventKind.ANNIHILATION:
            value -= 2
        else:
            value += e.jump
        if value < 2:
            raise InconsistentEventLogError(e.t, value)
        times.append(e.t)
        values.append(value)
    return StepFunction(tuple(times), tuple(values))


@dataclass(frozen=True)
class PolygonEvolute:
    """Oriented lines perpendicular to each edge at both of its endpoints.

    N^Delta grows when a point crosses a line from its right to its left:
    a stable edge and an unstable vertex appear together, so each crossing
    carries weight 2 (weight 1 for lines at the free ends of open chains).
    """

    points: np.ndarray
    directions: np.ndarray
    edges: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.points)

    def signed_crossings(self, q0: Sequence[float], q1: Sequence[float]) -> np.ndarray:
        """+1 / -1 / 0 per line for the segment [q0, q1]."""
        d = self.directions
        s0 = d[:, 0] * (q0[1] - self.points[:, 1]) - d[:, 1] * (q0[0] - self.points[:, 0])
        s1 = d[:, 0] * (q1[1] - self.points[:, 1]) - d[:, 1] * (q1[0] - self.points[:, 0])
        return ((s0 < 0) & (s1 > 0)).astype(int) - ((s0 > 0) & (s1 < 0)).astype(int)

    def predict_change(self, q0: Sequence[float], q1: Sequence[float]) -> int:
        """Predicted N^Delta(q1) - N^Delta(q0) for reference points inside the polygon."""
        return int(np.sum(self.weights * self.signed_crossings(q0, q1)))


def polygon_evolute(poly: Polygonization) -> PolygonEvolute:
    """Arrangement of the polygon's edge normals.

    The normal at p_j is oriented outward and the normal at p_{j+1} inward,
    so that crossing either from right to left adds equilibria.
    """
    v = poly.vertices
    nxt = np.roll(v, -1, axis=0) if poly.closed else v[1:]
    cur = v if poly.closed else v[:-1]
    e = nxt - cur
    e = e / np.linalg.norm(e, axis=1)[:, None]
    outward = np.stack([e[:, 1], -e[:, 0]], axis=1)
    m = len(e)
    points = np.concatenate([cur, nxt])
    directions = np.concatenate([outward, -outward])
    edges = np.concatenate([np.arange(m), np.arange(m)])
    weights = np.full(2 * m, 2)
    if not poly.closed:
        weights[0] = 1
        weights[2 * m - 1] = 1
    return PolygonEvolute(points, directions, edges, weights)

"""
Curve Flows

Curve-shortening flow through the tangent-angle heat equation, Eikonal
inward flow as exact polygon erosion, and the co-evolution of the global
equilibrium count N(t) with the polygonal count N^Delta(t).

Every state is kept at unit perimeter. The renormalized clock `t` advances by
the nominal step; `t_physical` follows the unscaled shape.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import HalfspaceIntersection

from .curve_core import PolylineSpline, SmoothCurve
from .discretize import LocalEquilibriumSet, Polygonization, count_local, flocks, grid_extrema_1d
from .errors import (
    FlowError,
    NongenericConfigurationError,
    ParameterRangeError,
    ShapeVanishedError,
    StabilityBoundError,
)
from .planar import lamina_centroid, perimeter, signed_area

logger = logging.getLogger(__name__)

DEFAULT_FLOW_N = 512
DEFAULT_MESH_N = 128
DEFAULT_EIKONAL_DT = 1e-3
DEFAULT_PERSISTENCE = 3
DEFAULT_PEAK_N = 1 << 17
DEFAULT_SPIKE_RATIO = 3.0
DEFAULT_SPIKE_WINDOW = 0.05
CSF_SAFETY = 0.25
TWO_PI = 2.0 * math.pi


class FlowKind(str, Enum):
    CSF = "csf"
    EIKONAL = "eikonal"


def resample_closed(points: np.ndarray, n: int, start: float = 0.0) -> np.ndarray:
    """n points equally spaced by arc length along a closed polyline.

    Args:
        points: (m, 2) closed polyline, first vertex not repeated.
        n: Number of output points.
        start: Shift of the first sample, in units of the output spacing.
    """
    pts = np.vstack([points, points[:1]])
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    targets = np.mod((start + np.arange(n)) * total / n, total)
    return np.stack([np.interp(targets, s, pts[:, 0]), np.interp(targets, s, pts[:, 1])], axis=1)


def tangent_angles(points: np.ndarray) -> np.ndarray:
    """Unwrapped direction angles of the edges p_i -> p_{i+1}."""
    e = np.roll(points, -1, axis=0) - points
    return np.unwrap(np.arctan2(e[:, 1], e[:, 0]))


def normalize_perimeter(points: np.ndarray) -> Tuple[np.ndarray, float]:
    """Scale about the lamina centroid to unit perimeter; returns (points, old perimeter)."""
    length = perimeter(points)
    c = lamina_centroid(points)
    return c + (points - c) / length, length


@dataclass(frozen=True)
class FlowState:
    """A unit-perimeter convex polygon under evolution.

    Attributes:
        vertices: (n, 2) counterclockwise vertices.
        alpha: Unwrapped tangent angles of the edges.
        t: Renormalized time.
        c: Flow coefficient.
        size: Perimeter the shape would have without renormalization.
        t_physical: Time of the unscaled flow.
    """

    vertices: np.ndarray
    alpha: np.ndarray
    t: float = 0.0
    c: float = 1.0
    size: float = 1.0
    t_physical: float = 0.0

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def spacing(self) -> float:
        return perimeter(self.vertices) / self.n

    @property
    def centroid(self) -> np.ndarray:
        return lamina_centroid(self.vertices)

    def is_convex(self) -> bool:
        """Tangent angle strictly increasing around the polygon."""
        turns = np.diff(np.append(self.alpha, self.alpha[0] + TWO_PI))
        return bool(np.all(turns > 0.0))

    @classmethod
    def from_points(cls, points: np.ndarray, n: Optional[int] = None, c: float = 1.0) -> "FlowState":
        """Resample to n equal arc-length vertices and scale to unit perimeter."""
        pts = np.asarray(points, dtype=float)
        if signed_area(pts) < 0:
            pts = pts[::-1].copy()
        if n is not None:
            pts = resample_closed(pts, n)
        if len(pts) < 3:
            raise ParameterRangeError("n", len(pts), ">= 3")
        pts, length = normalize_perimeter(pts)
        return cls(pts, tangent_angles(pts), 0.0, c, length, 0.0)

    @classmethod
    def from_curve(cls, curve: SmoothCurve, n: int = DEFAULT_FLOW_N, c: float = 1.0) -> "FlowState":
        _, pts = curve.sample(8 * n)
        return cls.from_points(pts, n, c)


def csf_bound(state: FlowState) -> float:
    """Largest stable explicit step, spacing^2 / (2c)."""
    return state.spacing**2 / (2.0 * state.c)


def default_csf_dt(state: FlowState) -> float:
    return CSF_SAFETY * state.spacing**2 / state.c


def csf_step(state: FlowState, dt: float) -> FlowState:
    """One explicit Euler step of alpha_t = c alpha_ss on the unit-perimeter polygon.

    The updated angles are integrated into edge vectors, closed up by
    removing the mean edge defect, translated so that the first vertex moves
    along its inward normal, resampled to equal arc length and renormalized.

    Raises:
        StabilityBoundError: If dt exceeds spacing^2 / (2c).
    """
    ds = state.spacing
    bound = csf_bound(state)
    if dt > bound:
        raise StabilityBoundError(dt, bound, default_csf_dt(state))
    a = state.alpha
    prev = np.roll(a, 1)
    prev[0] -= TWO_PI
    nxt = np.roll(a, -1)
    nxt[-1] += TWO_PI
    alpha = a + state.c * dt * (nxt - 2.0 * a + prev) / ds**2

    edges = ds * np.stack([np.cos(alpha), np.sin(alpha)], axis=1)
    edges -= edges.sum(axis=0) / state.n
    turn0 = a[0] - (a[-1] - TWO_PI)
    mid = 0.5 * (a[0] + a[-1] - TWO_PI)
    inward = np.array([-math.sin(mid), math.cos(mid)])
    start = state.vertices[0] + state.c * dt * (turn0 / ds) * inward
    pts = start + np.vstack([np.zeros(2), np.cumsum(edges[:-1], axis=0)])

    pts = resample_closed(pts, state.n)
    pts, length = normalize_perimeter(pts)
    return FlowState(
        pts,
        tangent_angles(pts),
        state.t + dt,
        state.c,
        state.size * length,
        state.t_physical + dt * state.size**2,
    )


def chebyshev_center(points: np.ndarray) -> Tuple[np.ndarray, float]:
    """Center and radius of the largest inscribed disc of a convex CCW polygon."""
    e = np.roll(points, -1, axis=0) - points
    normals = np.stack([e[:, 1], -e[:, 0]], axis=1)
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    offsets = np.sum(normals * points, axis=1)
    a_ub = np.hstack([normals, np.ones((len(points), 1))])
    res = linprog(
        c=[0.0, 0.0, -1.0],
        A_ub=a_ub,
        b_ub=offsets,
        bounds=[(None, None), (None, None), (0.0, None)],
        method="highs",
    )
    if not res.success:
        raise FlowError("inscribed disc not found", {"status": res.status})
    return np.asarray(res.x[:2]), float(res.x[2])


def eikonal_step(points: np.ndarray, dt: float, tol: float = 1e-12) -> np.ndarray:
    """Inner parallel polygon at distance dt (unit inward speed, no renormalization).

    Each supporting half-plane is moved inward by dt and the half-planes are
    intersected; edges that shrink to nothing disappear.

    Raises:
        ShapeVanishedError: If dt reaches the inradius.
    """
    pts = np.asarray(points, dtype=float)
    if signed_area(pts) < 0:
        pts = pts[::-1].copy()
    center, radius = chebyshev_center(pts)
    if dt >= radius:
        raise ShapeVanishedError(dt, radius)
    e = np.roll(pts, -1, axis=0) - pts
    normals = np.stack([e[:, 1], -e[:, 0]], axis=1)
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    offsets = np.sum(normals * pts, axis=1) - dt
    halfspaces = np.hstack([normals, -offsets[:, None]])
    verts = HalfspaceIntersection(halfspaces, center).intersections
    angles = np.arctan2(verts[:, 1] - center[1], verts[:, 0] - center[0])
    verts = verts[np.argsort(angles)]
    scale = float(np.max(np.linalg.norm(verts - center, axis=1)))
    keep = np.linalg.norm(verts - np.roll(verts, 1, axis=0), axis=1) > tol * scale
    out = verts[keep]
    if len(out) < len(pts):
        logger.debug("eikonal step dropped %d edges", len(pts) - len(out))
    return out


def eikonal_advance(state: FlowState, dt: float) -> FlowState:
    """Erode by dt, then renormalize to unit perimeter."""
    eroded = eikonal_step(state.vertices, dt)
    pts, length = normalize_perimeter(eroded)
    return FlowState(
        pts,
        tangent_angles(pts),
        state.t + dt,
        state.c,
        state.size * length,
        state.t_physical + dt * state.size,
    )


def eikonal_polar_rate(radii: np.ndarray) -> np.ndarray:
    """Radial speed dr/dt = -sqrt(r^2 + r_phi^2) / r of unit inward normal motion.

    Args:
        radii: r(phi) sampled at uniform angles on [0, 2 pi).
    """
    r = np.asarray(radii, dtype=float)
    k = np.fft.rfftfreq(len(r), d=1.0 / len(r))
    r_phi = np.fft.irfft(1j * k * np.fft.rfft(r), n=len(r))
    return -np.sqrt(r * r + r_phi * r_phi) / r


def global_counts(points: np.ndarray, o: np.ndarray) -> Tuple[int, int]:
    """(S, U): minima and maxima of the cyclic vertex-distance sequence from o."""
    dist = np.linalg.norm(points - o, axis=1)
    minima, maxima = grid_extrema_1d(dist, periodic=True)
    return int(minima.size), int(maxima.size)


def refine(points: np.ndarray, n: int, offset: float = 0.0, smooth: bool = False) -> np.ndarray:
    """n vertices along a state.

    Smooth states are sampled from a spline through their vertices, polygons
    are resampled by arc length.
    """
    if not smooth:
        return resample_closed(points, n, offset)
    spline = PolylineSpline(points, check=False)
    return spline.eval(spline.period * (np.arange(n) + offset) / n)


def local_counts(
    points: np.ndarray,
    o: np.ndarray,
    mesh_n: int,
    offset: float,
    retries: int = 3,
    smooth: bool = False,
) -> LocalEquilibriumSet:
    """count_local on a refinement of the state; nongeneric meshes are nudged."""
    attempt = 0
    while True:
        mesh = Polygonization.from_points(refine(points, mesh_n, offset, smooth))
        try:
            return count_local(mesh, o)
        except NongenericConfigurationError:
            if attempt == retries:
                raise
            attempt += 1
            offset = math.fmod(offset + 1e-6, 1.0)


def flock_peak(
    points: np.ndarray, o: np.ndarray, n: int = DEFAULT_PEAK_N, offset: float = 0.0, smooth: bool = True
) -> int:
    """Size S + U of the largest flock on an n-vertex refinement of the state."""
    eqs = local_counts(points, o, n, offset, smooth=smooth)
    return max((len(f.features) for f in flocks(eqs)), default=0)


class FlickerFilter:
    """Commit a change of N only after it persists for `persistence` records."""

    def __init__(self, persistence: int = DEFAULT_PERSISTENCE):
        self.persistence = max(1, persistence)
        self.committed: Optional[int] = None
        self._pending: Optional[int] = None
        self._run = 0
        self.discarded = 0

    def update(self, raw: int) -> int:
        if self.committed is None:
            self.committed = raw
            return raw
        if raw == self.committed:
            if self._pending is not None:
                self.discarded += 1
                logger.warning("discarded flickering N jump to %d", self._pending)
            self._pending, self._run = None, 0
            return self.committed
        if raw != self._pending:
            self._pending, self._run = raw, 0
        self._run += 1
        if self._run >= self.persistence:
            self.committed = raw
            self._pending, self._run = None, 0
        return self.committed


@dataclass(frozen=True)
class FlowRecord:
    t: float
    N: int
    S_global: int
    U_global: int
    N_delta: int
    S_delta: int
    U_delta: int
    event: str
    t_physical: float
    N_peak: int = 0
    centroid: Tuple[float, float] = (0.0, 0.0)

    def to_row(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "N": self.N,
            "S_global": self.S_global,
            "U_global": self.U_global,
            "N_delta": self.N_delta,
            "S_delta": self.S_delta,
            "U_delta": self.U_delta,
            "event": self.event,
            "t_physical": self.t_physical,
            "N_peak": self.N_peak,
        }


@dataclass
class CoEvolutionSeries:
    """Recorded N(t), N^Delta(t) and event annotations of one flow run."""

    kind: FlowKind
    records: List[FlowRecord] = field(default_factory=list)
    stop_reason: str = "steps"

    COLUMNS = (
        "t", "N", "S_global", "U_global", "N_delta", "S_delta", "U_delta", "event", "t_physical", "N_peak",
    )

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def rows(self) -> List[Dict[str, Any]]:
        return [r.to_row() for r in self.records]

    def event_counts(self) -> Dict[str, int]:
        events = [r.event for r in self.records]
        return {"A": events.count("A"), "C": events.count("C")}

    def centroid_path(self) -> np.ndarray:
        return np.array([r.centroid for r in self.records])

    def span(self, window: float = DEFAULT_SPIKE_WINDOW) -> int:
        """Number of records in a fraction `window` of the run."""
        return max(1, math.ceil(window * len(self.records)))

    def spikes(
        self, ratio: float = DEFAULT_SPIKE_RATIO, window: float = DEFAULT_SPIKE_WINDOW
    ) -> List[int]:
        """Records whose N_peak reaches `ratio` times its median over the preceding `window`."""
        return resonance_spikes(self.column("N_peak"), ratio, self.span(window))

    def forecasts(
        self, ratio: float = DEFAULT_SPIKE_RATIO, window: float = DEFAULT_SPIKE_WINDOW
    ) -> List[bool]:
        """Per annihilation, whether a spike falls in the `window` of the run ending at it."""
        span = self.span(window)
        spikes = np.array(self.spikes(ratio, window), dtype=int)
        return [
            bool(np.any((spikes >= i - span) & (spikes <= i)))
            for i, r in enumerate(self.records)
            if r.event == "A"
        ]


def resonance_spikes(
    values: Sequence[float], ratio: float = DEFAULT_SPIKE_RATIO, trailing: int = 25
) -> List[int]:
    """Indices where a value reaches `ratio` times the median of the preceding window."""
    x = np.asarray(values, dtype=float)
    out = []
    for i in range(5, len(x)):
        base = float(np.median(x[max(0, i - trailing) : i]))
        if base > 0 and x[i] >= ratio * base:
            out.append(i)
    return out


def run_flow(
    kind: FlowKind,
    initial: FlowState,
    dt: Optional[float] = None,
    steps: int = 1000,
    mesh_n: int = DEFAULT_MESH_N,
    seed: int = 0,
    persistence: int = DEFAULT_PERSISTENCE,
    stop_at: Optional[int] = 4,
    record_every: int = 1,
    peak_n: Optional[int] = DEFAULT_PEAK_N,
) -> CoEvolutionSeries:
    """Evolve a shape and co-track global and polygonal equilibrium counts.

    The reference point is the lamina centroid, recomputed every step. N is
    the number of extrema of the vertex-distance sequence; N^Delta comes from
    `count_local` on a mesh_n-vertex resample whose offset is drawn once from
    `seed`. N_peak is the largest flock of a peak_n-vertex refinement: a
    spline through curve-shortening states, which sample a smooth curve, and
    the polygon itself for Eikonal states. With peak_n None it is the largest
    flock of the N^Delta mesh. N-jumps pass the flicker filter before they
    are annotated as A or C events. Runs stop once an annihilation brings N
    down to `stop_at`.

    Raises:
        StabilityBoundError: If dt is above the explicit bound (CSF).
        ShapeVanishedError: If the erosion step exceeds the inradius.
    """
    kind = FlowKind(kind)
    if steps < 0 or record_every < 1:
        raise ParameterRangeError("steps, record_every", (steps, record_every), ">= 0, >= 1")
    if dt is None:
        dt = default_csf_dt(initial) if kind is FlowKind.CSF else DEFAULT_EIKONAL_DT
    offset = float(np.random.default_rng(seed).random())
    smooth = kind is FlowKind.CSF
    advance = csf_step if smooth else eikonal_advance
    flicker = FlickerFilter(persistence)
    series = CoEvolutionSeries(kind)
    state = initial
    previous: Optional[int] = None
    for step in range(steps + 1):
        if step % record_every == 0:
            o = state.centroid
            s_g, u_g = global_counts(state.vertices, o)
            n_now = flicker.update(s_g + u_g)
            loc = local_counts(state.vertices, o, mesh_n, offset)
            if peak_n is None:
                peak = max((len(f.features) for f in flocks(loc)), default=0)
            else:
                peak = flock_peak(state.vertices, o, peak_n, offset, smooth)
            event = "-"
            if previous is not None and n_now != previous:
                event = "A" if n_now < previous else "C"
                logger.info("%s event at t=%.6g: N %d -> %d", event, state.t, previous, n_now)
            series.records.append(
                FlowRecord(
                    t=state.t,
                    N=n_now,
                    S_global=s_g,
                    U_global=u_g,
                    N_delta=loc.N,
                    S_delta=loc.S,
                    U_delta=loc.U,
                    event=event,
                    t_physical=state.t_physical,
                    N_peak=peak,
                    centroid=(float(o[0]), float(o[1])),
                )
            )
            logger.debug("t=%.6g N=%d N_delta=%d N_peak=%d", state.t, n_now, loc.N, peak)
            if stop_at is not None and event == "A" and n_now <= stop_at:
                series.stop_reason = "minimum"
                break
            previous = n_now
        if step == steps:
            break
        state = advance(state, dt)
    if flicker.discarded:
        logger.warning("%d flickering N jumps discarded", flicker.discarded)
    return series

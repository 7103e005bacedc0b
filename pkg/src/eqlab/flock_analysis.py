"""
Critical Flocks

Equilibria of a fine polygon cluster into flocks around each smooth
equilibrium. When the reference point sits on the evolute the smooth
equilibrium is degenerate and its flock grows as the mesh is refined. This
module measures the degeneracy order, fits the growth of flock counts and
diameters against the mesh step, and fits the divergence of the imaginary
count N0(t) = sum 2 / |1 + rho kappa| along trajectories through the
evolute.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .curve_core import GraphArc, SmoothCurve, global_equilibria, first_nonzero_order
from .discretize import (
    Polygonization,
    count_local,
    flocks,
    partition,
    partition_window,
)
from .errors import (
    ClassificationFailureError,
    NongenericConfigurationError,
    OrderTooHighError,
    ParameterRangeError,
)

logger = logging.getLogger(__name__)

DEFAULT_RUNGS = 8
DEFAULT_OFFSETS = 200
DEFAULT_RATE_SAMPLES = 1 << 15
FACTOR_CAP = 1e9
CLASSIFY_TOL = 0.1


def degenerate_order(curve: SmoothCurve, o: Sequence[float], tau: float, tol: float = 1e-7) -> int:
    """Order of the first nonvanishing derivative of |r(tau) - o| at an equilibrium.

    Raises:
        OrderTooHighError: If every derivative up to order 5 vanishes.
    """
    k, _ = first_nonzero_order(curve, o, tau, tol)
    if k is None:
        raise OrderTooHighError(tau, 5)
    return k


class RateCase(str, Enum):
    TRANSVERSE_CONVEX_TO_CONCAVE = "i"
    TANGENT_LOCALLY_CONVEX = "ii"
    TRANSVERSE_AT_CUSP = "iii"
    TANGENT_AT_CUSP = "iv"

    @property
    def exponent(self) -> float:
        return CASE_EXPONENTS[self]

    @property
    def order(self) -> int:
        """Degeneracy order of the contact: 3 on smooth evolute arcs, 4 at cusps."""
        return 4 if self in (RateCase.TRANSVERSE_AT_CUSP, RateCase.TANGENT_AT_CUSP) else 3


CASE_EXPONENTS = {
    RateCase.TRANSVERSE_CONVEX_TO_CONCAVE: -0.5,
    RateCase.TANGENT_LOCALLY_CONVEX: -1.0,
    RateCase.TRANSVERSE_AT_CUSP: -2.0 / 3.0,
    RateCase.TANGENT_AT_CUSP: -1.0,
}


def case_setup(case: RateCase, rho0: float = 1.0, half_width: float = 0.5) -> Tuple[GraphArc, np.ndarray]:
    """Normal-form arc with its evolute through the origin, and the trajectory direction.

    The evolute is tangent to the y axis at the origin. Cases (i) and (ii) use
    a cubic term (generic evolute point, k = 3), cases (iii) and (iv) a
    quartic one (cusp, k = 4). Transverse directions point into the concave
    side for t > 0.
    """
    case = RateCase(case)
    if case.order == 3:
        arc = GraphArc.normal_form(rho0, a=0.3, half_width=half_width)
    else:
        arc = GraphArc.normal_form(rho0, b=0.2, half_width=half_width)
    if case in (RateCase.TRANSVERSE_CONVEX_TO_CONCAVE, RateCase.TRANSVERSE_AT_CUSP):
        direction = np.array([1.0, 0.25])
    else:
        direction = np.array([0.0, 1.0])
    return arc, direction


@dataclass(frozen=True)
class LogLogFit:
    slope: float
    intercept: float
    stderr: float
    r2: float
    ci: Tuple[float, float]
    points: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "r2": self.r2,
            "ci": list(self.ci),
            "points": self.points,
        }


def loglog_fit(x: Sequence[float], y: Sequence[float], level: float = 0.95) -> LogLogFit:
    """Least-squares slope of log y against log x; nonpositive samples are dropped.

    Raises:
        ParameterRangeError: With fewer than three usable points.
    """
    xs, ys = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    ok = (xs > 0) & (ys > 0) & np.isfinite(ys)
    if np.count_nonzero(ok) < 3:
        raise ParameterRangeError("fit points", int(np.count_nonzero(ok)), ">= 3")
    lx, ly = np.log(xs[ok]), np.log(ys[ok])
    res = stats.linregress(lx, ly)
    m = len(lx)
    half = float(stats.t.ppf(0.5 + level / 2.0, m - 2) * res.stderr) if m > 2 else math.inf
    return LogLogFit(
        float(res.slope),
        float(res.intercept),
        float(res.stderr),
        float(res.rvalue**2),
        (float(res.slope) - half, float(res.slope) + half),
        m,
    )


@dataclass(frozen=True)
class ScalingReport:
    """Flock count and diameter against the mesh step."""

    deltas: Tuple[float, ...]
    counts: Tuple[float, ...]
    count_stderr: Tuple[float, ...]
    diameters: Tuple[float, ...]
    count_fit: LogLogFit
    diameter_fit: Optional[LogLogFit]
    k: int
    monotone: bool = True

    @property
    def expected_count_slope(self) -> float:
        return -(self.k - 2) / (self.k - 1)

    @property
    def expected_diameter_slope(self) -> float:
        return 1.0 / (self.k - 1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "deltas": list(self.deltas),
            "counts": list(self.counts),
            "count_stderr": list(self.count_stderr),
            "diameters": list(self.diameters),
            "count_fit": self.count_fit.to_dict(),
            "diameter_fit": self.diameter_fit.to_dict() if self.diameter_fit else None,
            "k": self.k,
            "expected_count_slope": self.expected_count_slope,
            "expected_diameter_slope": self.expected_diameter_slope,
            "monotone": self.monotone,
        }

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {"delta": d, "count": c, "stderr": s, "diameter": w}
            for d, c, s, w in zip(self.deltas, self.counts, self.count_stderr, self.diameters)
        ]


def delta_ladder(delta0: float, rungs: int = DEFAULT_RUNGS) -> List[float]:
    """delta0 * 2^-j for j = 0..rungs-1."""
    if delta0 <= 0 or rungs < 1:
        raise ParameterRangeError("delta0, rungs", (delta0, rungs), "> 0, >= 1")
    return [delta0 * 2.0**-j for j in range(rungs)]


def _rung(
    curve: SmoothCurve,
    o: np.ndarray,
    tau: float,
    half_width: float,
    delta: float,
    offsets: int,
    seed: int,
    rung: int,
) -> Tuple[float, float, float]:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, rung])))
    counts: List[int] = []
    diameters: List[float] = []
    for u in rng.random(offsets):
        poly = partition_window(curve, tau, half_width, delta, float(u), anchor=tau)
        try:
            eqs = count_local(poly, o)
        except NongenericConfigurationError:
            logger.debug("skipping nongeneric offset %.6g at delta=%.3g", u, delta)
            continue
        counts.append(eqs.N)
        feats = eqs.feature_positions()
        diameters.append(float(feats[-1] - feats[0]) / 2.0 * delta if feats.size else 0.0)
    if not counts:
        return 0.0, 0.0, 0.0
    arr = np.asarray(counts, dtype=float)
    stderr = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    logger.debug("delta=%.4g: mean count %.4f", delta, arr.mean())
    return float(arr.mean()), stderr, float(np.mean(diameters))


def flock_scaling(
    curve: SmoothCurve,
    o: Sequence[float],
    tau: float,
    deltas: Sequence[float],
    offsets: int = DEFAULT_OFFSETS,
    seed: int = 0,
    half_width: Optional[float] = None,
    workers: int = 1,
) -> ScalingReport:
    """Average N^Delta(o) and flock diameter over random offsets on a ladder of steps.

    The polygon is an open chain of the grid around `tau`; the count is the
    number of equilibria on it and the diameter the parameter spread of the
    equilibrium-carrying features. Rungs are seeded by (seed, rung index).

    Args:
        curve: Curve carrying the degenerate equilibrium.
        o: Reference point, on the evolute for a degenerate study.
        tau: Parameter of the studied smooth equilibrium.
        deltas: Strictly decreasing mesh steps.
        offsets: Random offsets per step.
        seed: Base seed.
        half_width: Parameter half-width of the window, at most half the domain.
        workers: Threads for independent rungs.
    """
    steps = list(deltas)
    if any(b >= a for a, b in zip(steps, steps[1:])):
        raise ParameterRangeError("deltas", steps, "strictly decreasing")
    o_arr = np.asarray(o, dtype=float)
    k = degenerate_order(curve, o_arr, tau)
    limit = curve.period / 2.0 if curve.closed else min(tau - curve.lower, curve.upper - tau)
    width = min(half_width if half_width is not None else limit, limit)

    def job(j: int) -> Tuple[float, float, float]:
        return _rung(curve, o_arr, tau, width, steps[j], offsets, seed, j)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(len(steps))))
    else:
        results = [job(j) for j in range(len(steps))]
    counts = [r[0] for r in results]
    errs = [r[1] for r in results]
    diams = [r[2] for r in results]
    if len(steps) < 6:
        logger.warning("scaling fit over %d steps; at least 6 recommended", len(steps))
    monotone = all(c1 >= c0 - 2.0 * (e0 + e1) for c0, c1, e0, e1 in zip(counts, counts[1:], errs, errs[1:]))
    if not monotone:
        logger.warning("scaling regime not reached: counts not monotone in delta")
    count_fit = loglog_fit(steps, counts)
    try:
        diameter_fit: Optional[LogLogFit] = loglog_fit(steps, diams)
    except ParameterRangeError:
        diameter_fit = None
    logger.info("k=%d count slope %.4f", k, count_fit.slope)
    return ScalingReport(
        tuple(steps), tuple(counts), tuple(errs), tuple(diams), count_fit, diameter_fit, k, monotone
    )


@dataclass(frozen=True)
class FlockMeans:
    """Offset-averaged S and U of the flock nearest a smooth equilibrium."""

    S: float
    U: float
    trials: int

    @property
    def index(self) -> float:
        return self.S - self.U


def flock_means(
    curve: SmoothCurve,
    o: Sequence[float],
    tau: float,
    n: int,
    offsets: int = DEFAULT_OFFSETS,
    seed: int = 0,
) -> FlockMeans:
    """Mean flock counts at `tau` over uniform random offsets of an n-gon partition."""
    rng = np.random.default_rng(seed)
    s_sum = u_sum = 0
    used = 0
    for u in rng.random(offsets):
        poly = partition(curve, n, float(u))
        try:
            eqs = count_local(poly, o)
        except NongenericConfigurationError:
            continue
        found = flocks(eqs, poly)
        if not found:
            continue
        period = curve.period

        def gap(f: Any) -> float:
            d = abs(f.parameter_center(poly) - tau)
            return min(d, period - d) if curve.closed else d

        nearest = min(found, key=gap)
        s_sum += nearest.S
        u_sum += nearest.U
        used += 1
    if used == 0:
        raise ParameterRangeError("offsets", offsets, "at least one generic offset")
    return FlockMeans(s_sum / used, u_sum / used, used)


@dataclass(frozen=True)
class RateProfile:
    """N0 along o(t) = t * direction near a degenerate center."""

    case: RateCase
    times: Tuple[float, ...]
    values: Tuple[float, ...]
    negative_values: Tuple[float, ...]
    fit: LogLogFit
    matched: Tuple[str, ...] = field(default=())

    @property
    def expected(self) -> float:
        return self.case.exponent

    def to_dict(self) -> Dict[str, Any]:
        return {
            "case": self.case.value,
            "times": list(self.times),
            "values": list(self.values),
            "negative_values": list(self.negative_values),
            "fit": self.fit.to_dict(),
            "expected": self.expected,
            "matched": list(self.matched),
        }

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {"t": t, "n0": v, "n0_negative": w}
            for t, v, w in zip(self.times, self.values, self.negative_values)
        ]


def imaginary_count(
    curve: SmoothCurve,
    o: Sequence[float],
    center: float,
    half_width: float,
    samples: int = DEFAULT_RATE_SAMPLES,
) -> Tuple[float, bool]:
    """Sum of 2 / |1 + rho kappa| over smooth equilibria in a parameter window.

    Returns the sum and whether any term hit the 1e9 cap.
    """
    lo, hi = center - half_width, center + half_width
    if not curve.closed:
        lo, hi = max(lo, curve.lower), min(hi, curve.upper)
    total, capped = 0.0, False
    for eq in global_equilibria(curve, o, window=(lo, hi), samples=samples):
        inv = 1.0 / max(abs(eq.factor), 1e-300)
        if inv > FACTOR_CAP:
            inv, capped = FACTOR_CAP, True
        total += 2.0 * inv
    return total, capped


def rate_times(t_min: float, t_max: float, points: int) -> List[float]:
    if not 0 < t_min < t_max or points < 3:
        raise ParameterRangeError("t_min, t_max, points", (t_min, t_max, points), "0 < t_min < t_max, points >= 3")
    return list(np.geomspace(t_min, t_max, points))


def rate_profile(
    curve: SmoothCurve,
    direction: Sequence[float],
    case: RateCase,
    times: Sequence[float],
    center: Sequence[float] = (0.0, 0.0),
    tau: float = 0.0,
    samples: int = DEFAULT_RATE_SAMPLES,
) -> RateProfile:
    """Fit the divergence exponent of N0 along o(t) = center + t * direction.

    N0 is summed over the window of half-width 10 t^(1/(k-1)) around `tau`,
    clipped to the curve. Samples that hit the cap are excluded from the fit.
    Both t and -t are evaluated; only t > 0 is fitted.

    Raises:
        ClassificationFailureError: If the slope is more than 0.1 from every
            admissible exponent.
    """
    case = RateCase(case)
    d = np.asarray(direction, dtype=float)
    c = np.asarray(center, dtype=float)
    k = case.order
    values: List[float] = []
    negative: List[float] = []
    fit_t: List[float] = []
    fit_v: List[float] = []
    for t in times:
        width = 10.0 * t ** (1.0 / (k - 1))
        if not curve.closed:
            width = min(width, curve.upper - curve.lower)
        v, capped = imaginary_count(curve, c + t * d, tau, width, samples)
        w, _ = imaginary_count(curve, c - t * d, tau, width, samples)
        values.append(v)
        negative.append(w)
        if not capped:
            fit_t.append(t)
            fit_v.append(v)
        logger.debug("t=%.4g N0=%.6g N0(-t)=%.6g", t, v, w)
    fit = loglog_fit(fit_t, fit_v)
    matched = tuple(
        sorted({rc.value for rc in RateCase if abs(fit.slope - rc.exponent) <= CLASSIFY_TOL})
    )
    if not matched:
        raise ClassificationFailureError(fit.slope, sorted(set(CASE_EXPONENTS.values())))
    if case.value not in matched:
        logger.warning("slope %.4f does not match case %s", fit.slope, case.value)
    return RateProfile(case, tuple(times), tuple(values), tuple(negative), fit, matched)

"""
Polygonal Discretizations

Equidistant partitions of smooth curves, the edge/vertex equilibrium tests,
local equilibrium counts, flock clustering, imaginary equilibrium indices and
the random-mesh expectation with its Monte Carlo check.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .curve_core import SmoothCurve
from .errors import (
    NongenericConfigurationError,
    OnEvoluteError,
    ParameterRangeError,
    TooCoarseError,
)

logger = logging.getLogger(__name__)

DEFAULT_TIE_BAND = 1e-12
DEFAULT_MC_CHUNK = 1 << 16
EXPONENT_VARIANTS = ("n-1", "n")


@dataclass(frozen=True)
class Polygonization:
    """Vertex chain sampled from a curve at parameters anchor + (i + offset) * delta.

    Attributes:
        vertices: (n, 2) points.
        indices: Real indices i + offset, one per vertex.
        delta: Parameter step.
        offset: Mesh offset in [0, 1).
        closed: Whether the last vertex connects back to the first.
        anchor: Parameter of index zero.
        source: The sampled curve, if any.
    """

    vertices: np.ndarray
    indices: np.ndarray
    delta: float
    offset: float = 0.0
    closed: bool = True
    anchor: float = 0.0
    source: Optional[SmoothCurve] = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def params(self) -> np.ndarray:
        return self.anchor + self.indices * self.delta

    @classmethod
    def from_points(cls, points: np.ndarray, closed: bool = True) -> "Polygonization":
        """Wrap raw vertices; parameters are vertex positions over [0, 1)."""
        pts = np.asarray(points, dtype=float)
        n = len(pts)
        return cls(pts, np.arange(n, dtype=float), 1.0 / n, 0.0, closed)


def _check_offset(offset: float) -> None:
    if not 0.0 <= offset < 1.0:
        raise ParameterRangeError("offset", offset, "[0, 1)")


def partition(curve: SmoothCurve, n: int, offset: float = 0.0) -> Polygonization:
    """The n-segment equidistant partition of the curve's domain.

    Args:
        curve: Curve to sample.
        n: Number of segments (vertices for closed curves).
        offset: Shift of the grid in units of delta.

    Returns:
        Vertices at parameters lower + (i + offset) * delta, i = 0..n-1.

    Raises:
        TooCoarseError: If a closed curve gets fewer than 3 segments.
        ParameterRangeError: If offset is outside [0, 1).
    """
    if n < 3:
        raise TooCoarseError(n)
    _check_offset(offset)
    delta = curve.period / n
    indices = np.arange(n, dtype=float) + offset
    params = curve.lower + indices * delta
    return Polygonization(
        curve.eval(params), indices, delta, offset, curve.closed, curve.lower, curve
    )


def partition_window(
    curve: SmoothCurve,
    center: float,
    half_width: float,
    delta: float,
    offset: float = 0.0,
    anchor: float = 0.0,
) -> Polygonization:
    """Open chain of the grid anchor + (i + offset) * delta inside a window.

    Raises:
        TooCoarseError: If fewer than 3 grid points fall in the window.
    """
    _check_offset(offset)
    lo, hi = center - half_width, center + half_width
    if not curve.closed:
        lo, hi = max(lo, curve.lower), min(hi, curve.upper)
    first = math.ceil((lo - anchor) / delta - offset)
    last = math.floor((hi - anchor) / delta - offset)
    if last - first + 1 < 3:
        raise TooCoarseError(last - first + 1)
    indices = np.arange(first, last + 1, dtype=float) + offset
    params = anchor + indices * delta
    return Polygonization(
        curve.eval(params), indices, delta, offset, False, anchor, curve
    )


def _tie_check(
    values: np.ndarray, band: float, feature: str, base: int = 0
) -> None:
    hit = np.abs(values) < band
    if np.any(hit):
        i = int(np.argmax(hit))
        raise NongenericConfigurationError(feature, base + i, float(values[i]))


def edge_equilibrium(
    o: Sequence[float],
    p: Sequence[float],
    q: Sequence[float],
    band: float = DEFAULT_TIE_BAND,
) -> Optional[np.ndarray]:
    """Foot of the perpendicular from o when [p, q] carries a stable equilibrium.

    The segment carries one iff <p - o, q - p> < 0 < <q - o, q - p>.

    Raises:
        NongenericConfigurationError: If either product is inside the tie band
            (relative to the squared distance scale).
    """
    o, p, q = (np.asarray(x, dtype=float) for x in (o, p, q))
    e = q - p
    if not np.any(e):
        raise ParameterRangeError("segment", p.tolist(), "p != q")
    a = float(np.dot(p - o, e))
    b = float(np.dot(q - o, e))
    scale2 = max(np.dot(p - o, p - o), np.dot(q - o, q - o))
    _tie_check(np.array([a, b]), band * scale2, "edge")
    if a < 0.0 < b:
        return p - (a / float(np.dot(e, e))) * e
    return None


def vertex_equilibrium(
    o: Sequence[float],
    prev: Sequence[float],
    v: Sequence[float],
    next: Sequence[float],
    band: float = DEFAULT_TIE_BAND,
) -> bool:
    """True when the distance from o is locally maximal at vertex v."""
    o, prev, v, nxt = (np.asarray(x, dtype=float) for x in (o, prev, v, next))
    ahead = float(np.dot(v - o, nxt - v))
    behind = float(np.dot(v - o, prev - v))
    scale2 = max(np.dot(x - o, x - o) for x in (prev, v, nxt))
    _tie_check(np.array([ahead, behind]), band * scale2, "vertex")
    return ahead < 0.0 and behind < 0.0


@dataclass(frozen=True)
class LocalEquilibriumSet:
    """Equilibria of a polygon: stable points on edges, unstable at vertices."""

    stable_edges: np.ndarray
    unstable_vertices: np.ndarray
    feet: np.ndarray
    n: int
    closed: bool = True

    @property
    def S(self) -> int:
        return int(self.stable_edges.size)

    @property
    def U(self) -> int:
        return int(self.unstable_vertices.size)

    @property
    def N(self) -> int:
        return self.S + self.U

    def feature_positions(self) -> np.ndarray:
        """Equilibrium features on the alternating vertex/edge axis (vertex i -> 2i, edge i -> 2i+1)."""
        return np.sort(np.concatenate([2 * self.unstable_vertices, 2 * self.stable_edges + 1]))

    def rows(self, poly: Polygonization) -> List[Dict[str, Any]]:
        """CSV rows: feature_type, index, x, y, stability."""
        out: List[Dict[str, Any]] = []
        for i, foot in zip(self.stable_edges.tolist(), self.feet):
            out.append(
                {"feature_type": "edge", "index": i, "x": float(foot[0]), "y": float(foot[1]), "stability": "S"}
            )
        for i in self.unstable_vertices.tolist():
            x, y = poly.vertices[i]
            out.append(
                {"feature_type": "vertex", "index": i, "x": float(x), "y": float(y), "stability": "U"}
            )
        return out


def edge_products(poly: Polygonization, o: Sequence[float]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-edge products a_i = <p_i - o, e_i>, b_i = <p_{i+1} - o, e_i> and edges e_i."""
    v = poly.vertices - np.asarray(o, dtype=float)
    nxt = np.roll(v, -1, axis=0) if poly.closed else v[1:]
    cur = v if poly.closed else v[:-1]
    e = nxt - cur
    return np.sum(cur * e, axis=1), np.sum(nxt * e, axis=1), e


def count_local(
    poly: Polygonization, o: Sequence[float], band: float = DEFAULT_TIE_BAND
) -> LocalEquilibriumSet:
    """Scan every edge and vertex of the polygon for equilibria.

    Edge i is stable iff a_i < 0 < b_i; vertex i is unstable iff a_i < 0 and
    b_{i-1} > 0. End vertices of open chains are never classified.

    Raises:
        NongenericConfigurationError: First edge whose products fall inside the
            tie band.
    """
    o = np.asarray(o, dtype=float)
    a, b, e = edge_products(poly, o)
    scale2 = float(np.max(np.sum((poly.vertices - o) ** 2, axis=1)))
    _tie_check(a, band * scale2, "edge")
    _tie_check(b, band * scale2, "edge")
    stable = np.flatnonzero((a < 0.0) & (b > 0.0))
    if poly.closed:
        unstable = np.flatnonzero((a < 0.0) & (np.roll(b, 1) > 0.0))
    else:
        unstable = np.flatnonzero((a[1:] < 0.0) & (b[:-1] > 0.0)) + 1
    cur = poly.vertices[stable]
    t = -a[stable] / np.sum(e[stable] ** 2, axis=1)
    feet = cur + t[:, None] * e[stable]
    return LocalEquilibriumSet(stable, unstable, feet, poly.n, poly.closed)


@dataclass(frozen=True)
class Flock:
    """A run of equilibrium-carrying features along the polygon."""

    features: Tuple[int, ...]

    @property
    def stable_edges(self) -> List[int]:
        return [f // 2 for f in self.features if f % 2]

    @property
    def unstable_vertices(self) -> List[int]:
        return [f // 2 for f in self.features if not f % 2]

    @property
    def S(self) -> int:
        return len(self.stable_edges)

    @property
    def U(self) -> int:
        return len(self.unstable_vertices)

    @property
    def imbalance(self) -> int:
        return self.S - self.U

    def span(self, total: int) -> int:
        """Feature-axis length from first to last member, wrapping if needed."""
        return (self.features[-1] - self.features[0]) % total

    def center(self, total: int) -> float:
        """Mid feature position on the (cyclic) feature axis."""
        return (self.features[0] + self.span(total) / 2.0) % total

    def parameter_center(self, poly: Polygonization) -> float:
        return float(poly.params[0]) + self.center(2 * poly.n) / 2.0 * poly.delta

    def parameter_diameter(self, poly: Polygonization) -> float:
        return self.span(2 * poly.n) / 2.0 * poly.delta

    def sides(self, n: int) -> List[int]:
        """Sides [p_i, p_{i+1}] that contain one of the flock's equilibria."""
        out = set()
        for f in self.features:
            i = f // 2
            if f % 2:
                out.add(i)
            else:
                out.update(((i - 1) % n, i))
        return sorted(out)

    def is_contiguous(self, n: int) -> bool:
        """Whether the carrying sides form one cyclic run of consecutive indices."""
        s = self.sides(n)
        breaks = sum(1 for a, b in zip(s, s[1:]) if b - a > 1)
        seam = s[0] + n - s[-1] > 1
        return breaks == 0 or (breaks == 1 and not seam)


def flocks(
    eqset: LocalEquilibriumSet, poly: Optional[Polygonization] = None, gap: Optional[int] = None
) -> List[Flock]:
    """Group equilibria into runs of nearby features.

    Runs separated by more than max(3, n/64) empty features are distinct
    flocks; on closed polygons the first and last runs may join across the
    seam.
    """
    n = eqset.n
    closed = poly.closed if poly is not None else eqset.closed
    if gap is None:
        gap = max(3, n // 64)
    feats = eqset.feature_positions().tolist()
    if not feats:
        return []
    runs: List[List[int]] = [[feats[0]]]
    for f in feats[1:]:
        if f - runs[-1][-1] - 1 > gap:
            runs.append([f])
        else:
            runs[-1].append(f)
    if closed and len(runs) > 1:
        wrap = feats[0] + 2 * n - feats[-1] - 1
        if wrap <= gap:
            runs[0] = runs.pop() + runs[0]
    return [Flock(tuple(r)) for r in runs]


@dataclass(frozen=True)
class ImaginaryIndex2D:
    """Mean flock counts under uniform random mesh offsets."""

    S0: float
    U0: float
    kappa_rho: float

    @property
    def lam(self) -> float:
        return abs(1.0 + self.kappa_rho)

    @property
    def index(self) -> float:
        return self.S0 - self.U0


def imaginary_index(kappa: float, rho: float, tol: float = 1e-12) -> ImaginaryIndex2D:
    """S0 = 1/|1 + kappa rho|, U0 = |kappa rho| / |1 + kappa rho|.

    Raises:
        ParameterRangeError: If kappa >= 0 or rho <= 0.
        OnEvoluteError: If |1 + kappa rho| < tol.
    """
    if rho <= 0:
        raise ParameterRangeError("rho", rho, "> 0")
    if kappa >= 0:
        raise ParameterRangeError("kappa", kappa, "< 0")
    kr = kappa * rho
    lam = abs(1.0 + kr)
    if lam < tol:
        raise OnEvoluteError(1.0 + kr)
    return ImaginaryIndex2D(1.0 / lam, abs(kr) / lam, kr)


def random_mesh_expectation(lam: float, n: int, exponent: str = "n-1") -> float:
    """Expected stable count on an n-point random chord chain.

    (1/lam) (1 - (1 + lam)^-(n-1)) by default; exponent="n" gives the variant
    with (1 + lam)^-n. The lam -> 0 limit is the exponent itself.
    """
    if exponent not in EXPONENT_VARIANTS:
        raise ParameterRangeError("exponent", exponent, " | ".join(EXPONENT_VARIANTS))
    if lam < 0 or n < 2:
        raise ParameterRangeError("lam, n", (lam, n), "lam >= 0, n >= 2")
    m = n - 1 if exponent == "n-1" else n
    if lam == 0.0:
        return float(m)
    return -math.expm1(-m * math.log1p(lam)) / lam


@dataclass(frozen=True)
class RandomMeshResult:
    mean: float
    stderr: float
    trials: int
    seed: int
    n: int
    delta: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "trials": self.trials,
            "seed": self.seed,
            "n": self.n,
            "delta": self.delta,
        }

    def compare(self, lam: float, sigmas: float = 3.0) -> Dict[str, Any]:
        """Both exponent variants and whether each lies within `sigmas` standard errors."""
        out: Dict[str, Any] = {}
        for variant in EXPONENT_VARIANTS:
            value = random_mesh_expectation(lam, self.n, variant)
            out[variant] = {
                "expected": value,
                "matches": abs(self.mean - value) <= sigmas * self.stderr,
            }
        return out


def _mc_chunk(
    curve: SmoothCurve,
    o: np.ndarray,
    n: int,
    lo: float,
    hi: float,
    seed: int,
    chunk: int,
    size: int,
) -> Tuple[int, int]:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, chunk])))
    params = np.sort(lo + (hi - lo) * rng.random((size, n)), axis=1)
    pts = curve.eval(params.ravel()).reshape(size, n, 2) - o
    e = pts[:, 1:] - pts[:, :-1]
    a = np.sum(pts[:, :-1] * e, axis=2)
    b = np.sum(pts[:, 1:] * e, axis=2)
    counts = np.sum((a < 0.0) & (b > 0.0), axis=1)
    return int(counts.sum()), int((counts**2).sum())


def monte_carlo_random_mesh(
    curve: SmoothCurve,
    o: Sequence[float],
    n: int,
    delta: float,
    trials: int,
    seed: int,
    center: float = 0.0,
    workers: int = 1,
    chunk_size: int = DEFAULT_MC_CHUNK,
) -> RandomMeshResult:
    """Mean number of stable edges on random chains near an equilibrium.

    Each trial draws n sorted uniform parameters on [center - delta,
    center + delta], joins the curve points into an open chain and counts its
    stable edges. Trials are split into fixed-size chunks seeded by
    (seed, chunk index), so the result does not depend on `workers`.

    Raises:
        ParameterRangeError: If the window leaves an open curve's domain or
            n < 2.
    """
    if n < 2 or trials < 1:
        raise ParameterRangeError("n, trials", (n, trials), "n >= 2, trials >= 1")
    lo, hi = center - delta, center + delta
    if delta <= 0 or (not curve.closed and (lo < curve.lower or hi > curve.upper)):
        raise ParameterRangeError("delta", delta, f"window inside [{curve.lower}, {curve.upper}]")
    o_arr = np.asarray(o, dtype=float)
    sizes = [min(chunk_size, trials - k) for k in range(0, trials, chunk_size)]
    jobs = list(enumerate(sizes))

    def run(job: Tuple[int, int]) -> Tuple[int, int]:
        return _mc_chunk(curve, o_arr, n, lo, hi, seed, job[0], job[1])

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    s1 = sum(r[0] for r in results)
    s2 = sum(r[1] for r in results)
    mean = s1 / trials
    if trials > 1:
        var = max(s2 - trials * mean * mean, 0.0) / (trials - 1)
        stderr = math.sqrt(var / trials)
    else:
        stderr = 0.0
    logger.info("random mesh n=%d: mean %.6f +- %.6f over %d trials", n, mean, stderr, trials)
    return RandomMeshResult(mean, stderr, trials, seed, n, delta)


def grid_extrema_1d(values: Sequence[float], periodic: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """Indices of strict local minima and maxima of an equidistant sample.

    Raises:
        NongenericConfigurationError: If two consecutive values are equal.
    """
    x = np.asarray(values, dtype=float)
    if periodic:
        prev, nxt, core = np.roll(x, 1), np.roll(x, -1), x
        diffs = x - nxt
        base = 0
    else:
        prev, nxt, core = x[:-2], x[2:], x[1:-1]
        diffs = np.diff(x)
        base = 1
    ties = np.flatnonzero(diffs == 0.0)
    if ties.size:
        raise NongenericConfigurationError("sample", int(ties[0]), float(x[ties[0]]))
    minima = np.flatnonzero((core < prev) & (core < nxt)) + base
    maxima = np.flatnonzero((core > prev) & (core > nxt)) + base
    return minima, maxima


def grid_recover_1d(values: Sequence[float], periodic: bool = False) -> Tuple[int, int]:
    """(local-minimum count, local-maximum count) of a sampled function."""
    minima, maxima = grid_extrema_1d(values, periodic)
    return int(minima.size), int(maxima.size)

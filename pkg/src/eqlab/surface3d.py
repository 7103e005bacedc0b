"""
Equilibria on Triangulated Surfaces

Stable points live on faces, saddles on edges and unstable points at
vertices of a convex polyhedron; every generic interior reference point
gives S + U - H = 2. Smooth surfaces are handled through sampled charts:
grid vertices that are extremal within their grid circle recover the
smooth minima and maxima. The `Ellipsoid` model ties both together for
caustic sweeps.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, cKDTree
from scipy.spatial.transform import Rotation

from .errors import (
    NongenericConfigurationError,
    OnEvoluteError,
    ParameterRangeError,
    ReferencePointError,
)
from .meshes import TriMesh, solid_centroid

logger = logging.getLogger(__name__)

DEFAULT_BAND = 1e-10
DEFAULT_GRID_RADIUS = 5
DEFAULT_CHART_N = 160
CHART_SHIFT = (0.37, 0.29)


@dataclass(frozen=True, eq=False)
class SurfaceEquilibriumSet:
    """Polyhedral equilibria with their positions.

    Stable faces are reported by the lowest face id of their facet.
    """

    stable_faces: np.ndarray
    stable_feet: np.ndarray
    saddle_edges: np.ndarray
    saddle_feet: np.ndarray
    unstable_vertices: np.ndarray
    unstable_points: np.ndarray

    @property
    def S(self) -> int:
        return int(self.stable_faces.size)

    @property
    def U(self) -> int:
        return int(self.unstable_vertices.size)

    @property
    def H(self) -> int:
        return int(self.saddle_edges.size)

    @property
    def N(self) -> int:
        return self.S + self.U + self.H

    @property
    def index(self) -> int:
        return self.S + self.U - self.H

    def positions(self) -> np.ndarray:
        return np.vstack([self.stable_feet, self.saddle_feet, self.unstable_points])

    def sidecar(self) -> Dict[str, List[int]]:
        return {
            "stable_faces": self.stable_faces.tolist(),
            "saddle_edges": self.saddle_edges.tolist(),
            "unstable_vertices": self.unstable_vertices.tolist(),
        }

    def rows(self) -> List[Dict[str, Any]]:
        out: List[Dict[str, Any]] = []
        for kind, ids, pts, label in (
            ("face", self.stable_faces, self.stable_feet, "S"),
            ("edge", self.saddle_edges, self.saddle_feet, "H"),
            ("vertex", self.unstable_vertices, self.unstable_points, "U"),
        ):
            for i, p in zip(ids.tolist(), pts):
                out.append(
                    {"feature_type": kind, "index": i, "x": float(p[0]), "y": float(p[1]), "z": float(p[2]), "stability": label}
                )
        return out


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...i->...", a, b)


def classify_equilibria(
    mesh: TriMesh, o: Sequence[float], band: float = DEFAULT_BAND
) -> SurfaceEquilibriumSet:
    """Classify every facet, edge and vertex of a convex mesh relative to o.

    A facet is stable when the foot of o on its plane lies inside it. An edge
    carries a saddle when the foot of o on its line is interior to the edge
    and o - foot points into the interior of the edge's normal cone. A vertex
    is unstable when the distance from o decreases along every incident edge.
    Edges between coplanar faces are not features.

    Raises:
        ReferencePointError: If o is not strictly inside the mesh.
        NongenericConfigurationError: If a test falls inside the tie band.
    """
    o = np.asarray(o, dtype=float)
    if not mesh.contains(o):
        raise ReferencePointError(o.tolist())
    scale2 = mesh.scale**2
    rel = mesh.vertices - o
    normals = mesh.face_normals
    tri = rel[mesh.faces]
    foot = normals * _dot(normals, tri[:, 0])[:, None]

    side = np.empty((mesh.F, 3))
    for k in range(3):
        a, b = tri[:, k], tri[:, (k + 1) % 3]
        side[:, k] = _dot(np.cross(b - a, foot - a), normals)
    flat = mesh.flat_edges[mesh.face_edges]
    inside = (side > 0.0) | flat
    for k in range(3):
        others = inside[:, (k + 1) % 3] & inside[:, (k + 2) % 3]
        tie = ~flat[:, k] & (np.abs(side[:, k]) < band * scale2) & others
        if np.any(tie):
            f = int(np.argmax(tie))
            raise NongenericConfigurationError("face", f, float(side[f, k]))
    ok = np.all(inside, axis=1)
    labels = mesh.facets
    nlab = int(labels.max()) + 1
    bad = np.bincount(labels, weights=(~ok).astype(float), minlength=nlab)
    first = np.full(nlab, mesh.F)
    np.minimum.at(first, labels, np.arange(mesh.F))
    stable = np.sort(first[bad == 0])

    live = np.flatnonzero(~mesh.flat_edges)
    ends = mesh.edges[live]
    p0, p1 = rel[ends[:, 0]], rel[ends[:, 1]]
    e = p1 - p0
    ee = _dot(e, e)
    t = -_dot(p0, e) / ee
    d = p0 + t[:, None] * e
    n1 = normals[mesh.edge_faces[live, 0]]
    n2 = normals[mesh.edge_faces[live, 1]]
    s = _dot(np.cross(n1, n2), e)
    c1 = _dot(np.cross(n1, d), e)
    c2 = _dot(np.cross(d, n2), e)
    in_seg = (t > 0.0) & (t < 1.0)
    in_cone = (c1 * s > 0.0) & (c2 * s > 0.0)
    unit = band * np.sqrt(ee) * np.linalg.norm(d, axis=1)
    tie = (((np.abs(t) < band) | (np.abs(1.0 - t) < band)) & in_cone) | (
        in_seg & ((np.abs(c1) < unit) | (np.abs(c2) < unit))
    )
    if np.any(tie):
        i = int(np.argmax(tie))
        raise NongenericConfigurationError("edge", int(live[i]), float(t[i]))
    saddle = in_seg & in_cone

    v, w = mesh.neighbors
    val = _dot(rel[v], mesh.vertices[w] - mesh.vertices[v])
    vmax = np.full(mesh.V, -np.inf)
    np.maximum.at(vmax, v, val)
    tie_v = np.abs(vmax) < band * scale2
    if np.any(tie_v):
        i = int(np.argmax(tie_v))
        raise NongenericConfigurationError("vertex", i, float(vmax[i]))
    unstable = np.flatnonzero(vmax < 0.0)

    out = SurfaceEquilibriumSet(
        stable,
        o + foot[stable],
        live[saddle],
        o + d[saddle],
        unstable,
        mesh.vertices[unstable],
    )
    logger.debug("S=%d U=%d H=%d", out.S, out.U, out.H)
    return out


@dataclass(frozen=True)
class ImaginaryIndex3D:
    """Mean flock counts at a smooth surface equilibrium."""

    k1: float
    k2: float
    rho: float

    @property
    def d(self) -> float:
        return 1.0 / abs((self.k1 * self.rho + 1.0) * (self.k2 * self.rho + 1.0))

    @property
    def S0(self) -> float:
        return self.d

    @property
    def U0(self) -> float:
        return self.k1 * self.k2 * self.rho**2 * self.d

    @property
    def H0(self) -> float:
        return -(self.k1 + self.k2) * self.rho * self.d

    @property
    def index(self) -> float:
        return self.S0 + self.U0 - self.H0


def imaginary_index_3d(k1: float, k2: float, rho: float, tol: float = 1e-12) -> ImaginaryIndex3D:
    """S0 = d, U0 = k1 k2 rho^2 d, H0 = -(k1 + k2) rho d with d = 1/|(k1 rho + 1)(k2 rho + 1)|.

    Raises:
        ParameterRangeError: If a curvature is positive or rho <= 0.
        OnEvoluteError: If either factor k_i rho + 1 vanishes.
    """
    if rho <= 0:
        raise ParameterRangeError("rho", rho, "> 0")
    if k1 > 0 or k2 > 0:
        raise ParameterRangeError("curvatures", (k1, k2), "<= 0")
    for k in (k1, k2):
        if abs(k * rho + 1.0) < tol:
            raise OnEvoluteError(k * rho + 1.0)
    return ImaginaryIndex3D(float(k1), float(k2), float(rho))


def _orient(a: np.ndarray, b: np.ndarray, c: np.ndarray, p: np.ndarray) -> np.ndarray:
    return _dot(np.cross(b - a, c - a), p - a)


def hull_diagonal(
    p00: np.ndarray,
    p10: np.ndarray,
    p01: np.ndarray,
    p11: np.ndarray,
    o: Sequence[float],
    band: float = DEFAULT_BAND,
) -> np.ndarray:
    """True where [p00, p11] is an edge of conv{o, p00, p10, p01, p11}.

    The diagonal is a tetrahedron edge of the quad; it leaves the hull only
    when o sees both tetrahedron faces that meet along it.

    Raises:
        NongenericConfigurationError: If a quad is flat or o is coplanar with
            one of those faces.
    """
    o = np.asarray(o, dtype=float)
    length = np.linalg.norm(p11 - p00, axis=-1)
    unit = band * length**3
    t1 = _orient(p00, p11, p10, p01)
    t2 = -t1
    o1 = _orient(p00, p11, p10, o)
    o2 = _orient(p00, p11, p01, o)
    tie = (np.abs(t1) < unit) | (np.abs(o1) < unit) | (np.abs(o2) < unit)
    if np.any(tie):
        i = int(np.argmax(tie.ravel()))
        raise NongenericConfigurationError("quad", i, float(t1.ravel()[i]))
    both_visible = (o1 * t1 < 0.0) & (o2 * t2 < 0.0)
    return ~both_visible


def grid_surface(
    surface: Callable[[np.ndarray, np.ndarray], np.ndarray],
    u_range: Tuple[float, float],
    v_range: Tuple[float, float],
    n: int,
    o: Sequence[float],
) -> TriMesh:
    """Triangulated n x n patch; each quad is split along its hull diagonal seen from o.

    Args:
        surface: Vectorized r(u, v) returning (..., 3) points.
        u_range: Parameter interval in u.
        v_range: Parameter interval in v.
        n: Quads per side.
        o: Reference point.
    """
    if n < 1:
        raise ParameterRangeError("n", n, ">= 1")
    us = np.linspace(*u_range, n + 1)
    vs = np.linspace(*v_range, n + 1)
    uu, vv = np.meshgrid(us, vs, indexing="ij")
    pts = np.asarray(surface(uu, vv), dtype=float)
    idx = np.arange((n + 1) ** 2).reshape(n + 1, n + 1)
    main = hull_diagonal(pts[:-1, :-1], pts[1:, :-1], pts[:-1, 1:], pts[1:, 1:], o)
    i00, i10 = idx[:-1, :-1], idx[1:, :-1]
    i01, i11 = idx[:-1, 1:], idx[1:, 1:]
    first = np.where(main[..., None], np.stack([i00, i10, i11], -1), np.stack([i00, i10, i01], -1))
    second = np.where(main[..., None], np.stack([i00, i11, i01], -1), np.stack([i10, i11, i01], -1))
    faces = np.concatenate([first.reshape(-1, 3), second.reshape(-1, 3)])
    return TriMesh.from_arrays(pts.reshape(-1, 3), faces, name="patch", validate=False, orient=False)


@dataclass(frozen=True, eq=False)
class GridStationary:
    """Grid vertices extremal within their grid circle, and stationary grid vertices."""

    minima: np.ndarray
    maxima: np.ndarray
    stationary: np.ndarray
    r: int

    @property
    def counts(self) -> Tuple[int, int]:
        return len(self.minima), len(self.maxima)


def _interior(shape: Tuple[int, ...], wrap: Sequence[bool]) -> np.ndarray:
    mask = np.ones(shape, dtype=bool)
    for axis, wrapped in enumerate(wrap):
        if not wrapped:
            edge = [slice(None)] * len(shape)
            edge[axis] = 0
            mask[tuple(edge)] = False
            edge[axis] = -1
            mask[tuple(edge)] = False
    return mask


def _check_grid_ties(f: np.ndarray, wrap: Sequence[bool]) -> None:
    for axis, wrapped in enumerate(wrap):
        diff = (np.roll(f, -1, axis=axis) - f) if wrapped else np.diff(f, axis=axis)
        hit = diff == 0.0
        if np.any(hit):
            i = int(np.argmax(hit.ravel()))
            raise NongenericConfigurationError("grid", i, float(f.ravel()[i]))


def _grid_extrema(f: np.ndarray, r: int, wrap: Sequence[bool], interior: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    modes = ["wrap" if w else "nearest" for w in wrap]
    size = 2 * r + 1
    lo = ndimage.minimum_filter(f, size=size, mode=modes)
    hi = ndimage.maximum_filter(f, size=size, mode=modes)
    return np.argwhere((f == lo) & interior), np.argwhere((f == hi) & interior)


def grid_stationary(
    values: np.ndarray,
    r: Optional[int] = None,
    wrap: Sequence[bool] = (False, False),
) -> GridStationary:
    """Grid-circle minima and maxima and opposite-neighbor stationary vertices.

    Grid circles are Chebyshev balls of radius r, clipped at the border of
    non-periodic axes; the border ring itself is never reported. With r=None
    the radius starts at 5 and doubles until the counts are unchanged by two
    doublings in a row.

    Raises:
        NongenericConfigurationError: If two neighboring grid values tie.
    """
    f = np.asarray(values, dtype=float)
    _check_grid_ties(f, wrap)
    interior = _interior(f.shape, wrap)
    limit = max(1, (min(f.shape) - 1) // 2)
    if r is None:
        r = min(DEFAULT_GRID_RADIUS, limit)
        mins, maxs = _grid_extrema(f, r, wrap, interior)
        steady = 0
        while steady < 2 and 2 * r <= limit:
            m2, x2 = _grid_extrema(f, 2 * r, wrap, interior)
            steady = steady + 1 if (len(m2), len(x2)) == (len(mins), len(maxs)) else 0
            r, mins, maxs = 2 * r, m2, x2
    else:
        mins, maxs = _grid_extrema(f, r, wrap, interior)

    stat = interior.copy()
    for axis in range(f.ndim):
        a, b = np.roll(f, 1, axis=axis), np.roll(f, -1, axis=axis)
        stat &= (f >= np.maximum(a, b)) | (f <= np.minimum(a, b))
    return GridStationary(mins, maxs, np.argwhere(stat), r)


def _merge(points: List[np.ndarray], radius: float) -> int:
    if not points:
        return 0
    pts = np.asarray(points)
    pairs = cKDTree(pts).query_pairs(radius, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(pts), len(pts)))
    count, _ = connected_components(graph, directed=False)
    return int(count)


class Ellipsoid:
    """Axis-aligned ellipsoid x^2/a^2 + y^2/b^2 + z^2/c^2 = 1."""

    def __init__(self, a: float, b: float, c: float):
        if min(a, b, c) <= 0:
            raise ParameterRangeError("semi-axes", (a, b, c), "positive")
        self.a, self.b, self.c = float(a), float(b), float(c)
        self.axes = np.array([self.a, self.b, self.c])

    def __repr__(self) -> str:
        return f"Ellipsoid(a={self.a}, b={self.b}, c={self.c})"

    def point(self, u: np.ndarray) -> np.ndarray:
        """Radial projection of directions u onto the surface."""
        u = np.asarray(u, dtype=float)
        return u / np.sqrt(np.sum((u / self.axes) ** 2, axis=-1))[..., None]

    def axis_curvatures(self, axis: int) -> Tuple[float, float]:
        """Signed principal curvatures at the endpoints of an axis."""
        others = [k for k in range(3) if k != axis]
        s = self.axes[axis]
        return tuple(-s / self.axes[k] ** 2 for k in others)  # type: ignore[return-value]

    def imaginary_index_at(self, axis: int, o: Sequence[float], sign: int = 1) -> ImaginaryIndex3D:
        p = np.zeros(3)
        p[axis] = sign * self.axes[axis]
        k1, k2 = self.axis_curvatures(axis)
        return imaginary_index_3d(k1, k2, float(np.linalg.norm(p - np.asarray(o, dtype=float))))

    def mesh(self, freq: int = 50, generic: bool = True) -> TriMesh:
        """Icosahedral frequency-`freq` subdivision projected onto the ellipsoid.

        Gives V = 10 freq^2 + 2 and F = 20 freq^2. With `generic` the sphere
        points are rotated by a fixed generic rotation first, so that no
        vertex sits on a symmetry plane.
        """
        if freq < 1:
            raise ParameterRangeError("freq", freq, ">= 1")
        phi = (1.0 + math.sqrt(5.0)) / 2.0
        ico = np.array(
            [[-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
             [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
             [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1]],
            dtype=float,
        )
        tris = ConvexHull(ico).simplices
        i, j = np.meshgrid(np.arange(freq + 1), np.arange(freq + 1), indexing="ij")
        keep = i + j <= freq
        wi, wj = i[keep] / freq, j[keep] / freq
        a, b, c = ico[tris[:, 0]], ico[tris[:, 1]], ico[tris[:, 2]]
        pts = (a[:, None] + wi[None, :, None] * (b - a)[:, None] + wj[None, :, None] * (c - a)[:, None]).reshape(-1, 3)
        pts /= np.linalg.norm(pts, axis=1)[:, None]
        pairs = cKDTree(pts).query_pairs(1e-9, output_type="ndarray")
        graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(pts), len(pts)))
        _, label = connected_components(graph, directed=False)
        _, first = np.unique(label, return_index=True)
        pts = pts[np.sort(first)]
        if generic:
            pts = pts @ Rotation.from_euler("zyx", [0.1, 0.2, 0.3]).as_matrix().T
        verts = self.point(pts)
        hull = ConvexHull(verts)
        logger.info("ellipsoid mesh freq=%d: V=%d F=%d", freq, len(verts), len(hull.simplices))
        return TriMesh.from_arrays(verts, hull.simplices, name=f"ellipsoid_{freq}")

    def _chart(self, chart: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
        lat = -math.pi / 2 + (np.arange(n) + CHART_SHIFT[0]) * math.pi / n
        lon = (np.arange(2 * n) + CHART_SHIFT[1]) * math.pi / n
        la, lo = np.meshgrid(lat, lon, indexing="ij")
        ring = np.stack([np.cos(la) * np.cos(lo), np.cos(la) * np.sin(lo), np.sin(la)], axis=-1)
        u = ring if chart == 0 else ring[..., [2, 0, 1]]
        return u, self.point(u)

    def chart_counts(
        self,
        o: Sequence[float],
        n: int = DEFAULT_CHART_N,
        r: Optional[int] = None,
        margin: float = 0.05,
    ) -> Tuple[int, int, int]:
        """(S, U, H) of the smooth surface from two latitude/longitude charts.

        The first chart has its poles on the z axis and owns directions with
        |u_z| <= |u_x|; the second has its poles on the x axis and owns the
        rest. Extrema found by both charts near the seam are merged. H follows
        from S + U - H = 2.
        """
        o = np.asarray(o, dtype=float)
        found: Dict[str, List[np.ndarray]] = {"min": [], "max": []}
        for chart in (0, 1):
            u, pts = self._chart(chart, n)
            if chart == 0:
                owned = np.abs(u[..., 2]) <= np.abs(u[..., 0]) + margin
            else:
                owned = np.abs(u[..., 0]) <= np.abs(u[..., 2]) + margin
            res = grid_stationary(np.linalg.norm(pts - o, axis=-1), r, wrap=(False, True))
            for key, idx in (("min", res.minima), ("max", res.maxima)):
                for i, j in idx:
                    if owned[i, j]:
                        found[key].append(pts[i, j])
        radius = 4.0 * math.pi / n * float(self.axes.max())
        s, u_count = _merge(found["min"], radius), _merge(found["max"], radius)
        return s, u_count, s + u_count - 2


def umbilic_direction(a: float, b: float, c: float) -> np.ndarray:
    """Center of curvature of the umbilic in the positive xz quadrant of a > b > c."""
    if not a > b > c > 0:
        raise ParameterRangeError("semi-axes", (a, b, c), "a > b > c > 0")
    root = math.sqrt(a * a - c * c)
    return np.array(
        [(a * a - b * b) ** 1.5 / (a * root), 0.0, (b * b - c * c) ** 1.5 / (c * root)]
    )


@dataclass(frozen=True, eq=False)
class SweepRecord:
    t: float
    o: Tuple[float, float, float]
    S: int
    U: int
    H: int
    S_global: Optional[int] = None
    U_global: Optional[int] = None
    H_global: Optional[int] = None
    equilibria: Optional[SurfaceEquilibriumSet] = field(default=None, repr=False)

    @property
    def N_delta(self) -> int:
        return self.S + self.U + self.H

    @property
    def N(self) -> Optional[int]:
        if self.S_global is None or self.U_global is None or self.H_global is None:
            return None
        return self.S_global + self.U_global + self.H_global

    def to_row(self) -> Dict[str, Any]:
        return {
            "t": self.t,
            "N_delta": self.N_delta,
            "S": self.S,
            "U": self.U,
            "H": self.H,
            "N": self.N,
            "S_global": self.S_global,
            "U_global": self.U_global,
            "H_global": self.H_global,
        }


@dataclass
class SweepSeries:
    direction: Tuple[float, float, float]
    records: List[SweepRecord] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def rows(self) -> List[Dict[str, Any]]:
        return [r.to_row() for r in self.records]

    def peaks(self, ratio: float = 3.0) -> List[int]:
        """One index per run of N^Delta above `ratio` times the median of the series."""
        n = self.column("N_delta").astype(float)
        above = n > ratio * float(np.median(n))
        out: List[int] = []
        i = 0
        while i < len(n):
            if above[i]:
                j = i
                while j + 1 < len(n) and above[j + 1]:
                    j += 1
                out.append(i + int(np.argmax(n[i : j + 1])))
                i = j + 1
            else:
                i += 1
        return out


def flock_near(eqs: SurfaceEquilibriumSet, point: Sequence[float], radius: float) -> np.ndarray:
    """Equilibrium positions within `radius` of a surface point."""
    pts = eqs.positions()
    return pts[np.linalg.norm(pts - np.asarray(point, dtype=float), axis=1) <= radius]


def principal_spread(points: np.ndarray) -> np.ndarray:
    """Unit direction of largest spread of a point cloud."""
    centered = points - points.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    return vt[0]


def caustic_sweep(
    mesh: TriMesh,
    direction: Sequence[float],
    times: Sequence[float],
    surface: Optional[Ellipsoid] = None,
    chart_n: int = DEFAULT_CHART_N,
    keep: bool = False,
) -> SweepSeries:
    """Classify the mesh along o(t) = centroid + t * direction.

    Global counts come from `surface.chart_counts` when a smooth model is
    given. Samples where the polyhedral test is nongeneric are nudged by
    1e-9 of the mesh size along a fixed direction.

    Raises:
        ReferencePointError: If o(t) leaves the mesh.
    """
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    base = solid_centroid(mesh)
    nudge = np.array([0.5773, -0.2113, 0.7887]) * 1e-9 * mesh.scale
    series = SweepSeries((float(d[0]), float(d[1]), float(d[2])))
    for t in times:
        o = base + t * d
        if not mesh.contains(o):
            raise ReferencePointError(o.tolist(), {"t": t})
        try:
            eqs = classify_equilibria(mesh, o)
        except NongenericConfigurationError:
            logger.debug("nongeneric at t=%.6g, nudging", t)
            eqs = classify_equilibria(mesh, o + nudge)
        glob: Tuple[Optional[int], ...] = (None, None, None)
        if surface is not None:
            glob = surface.chart_counts(o, chart_n)
        series.records.append(
            SweepRecord(
                float(t), (float(o[0]), float(o[1]), float(o[2])), eqs.S, eqs.U, eqs.H,
                glob[0], glob[1], glob[2], eqs if keep else None,
            )
        )
        logger.debug("t=%.4f N_delta=%d", t, eqs.N)
    return series

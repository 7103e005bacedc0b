"""Tests for polyhedral equilibria, grid extrema and ellipsoid sweeps."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from eqlab.errors import (
    NongenericConfigurationError,
    OnEvoluteError,
    ParameterRangeError,
    ReferencePointError,
)
from eqlab.meshes import TriMesh, solid_centroid
from eqlab.surface3d import (
    Ellipsoid,
    SurfaceEquilibriumSet,
    SweepRecord,
    SweepSeries,
    caustic_sweep,
    classify_equilibria,
    flock_near,
    grid_stationary,
    grid_surface,
    hull_diagonal,
    imaginary_index_3d,
    principal_spread,
    umbilic_direction,
)


def hull_mesh(points):
    """Convex hull of the points as a TriMesh."""
    pts = np.asarray(points, dtype=float)
    return TriMesh.from_arrays(pts, ConvexHull(pts).simplices)


@pytest.fixture(scope="module")
def cube():
    """Cube [-1, 1]^3."""
    return hull_mesh([[x, y, z] for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)])


@pytest.fixture(scope="module")
def ellipsoid():
    """The 2 x 1.5 x 1 ellipsoid."""
    return Ellipsoid(2.0, 1.5, 1.0)


@pytest.fixture(scope="module")
def coarse_mesh(ellipsoid):
    """Frequency-6 ellipsoid mesh."""
    return ellipsoid.mesh(6)


def test_cube_equilibria(cube):
    """Test six faces, twelve edges and eight vertices seen from the center."""
    eqs = classify_equilibria(cube, (0.0, 0.0, 0.0))
    assert (eqs.S, eqs.H, eqs.U) == (6, 12, 8)
    assert eqs.index == 2
    assert len(eqs.rows()) == 26
    assert eqs.sidecar()["unstable_vertices"] == list(range(8))


def test_tetrahedron_equilibria():
    """Test the regular tetrahedron about its center."""
    tetra = hull_mesh([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]])
    eqs = classify_equilibria(tetra, (0.0, 0.0, 0.0))
    assert (eqs.S, eqs.H, eqs.U) == (4, 6, 4)
    assert eqs.saddle_feet == pytest.approx(
        (tetra.vertices[tetra.edges[:, 0]] + tetra.vertices[tetra.edges[:, 1]]) / 2
    )


@pytest.mark.parametrize("o", [(0.0, 0.0, 0.6), (0.7, -0.4, 0.2)])
def test_cube_counts_anywhere_inside(cube, o):
    """Test that a box shows every feature from any interior point."""
    eqs = classify_equilibria(cube, o)
    assert (eqs.S, eqs.H, eqs.U) == (6, 12, 8)


def test_reference_point_outside(cube):
    """Test that classification needs an interior point."""
    with pytest.raises(ReferencePointError, match="reference point outside body"):
        classify_equilibria(cube, (1.5, 0.0, 0.0))


def test_nongeneric_point():
    """Test that a foot on an octahedron edge is nongeneric."""
    octa = hull_mesh([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]])
    with pytest.raises(NongenericConfigurationError):
        classify_equilibria(octa, (0.2, 0.2, -0.3))


@pytest.mark.parametrize("seed", range(5))
def test_poincare_hopf_on_ellipsoid_mesh(coarse_mesh, seed):
    """Test S + U - H = 2 at random interior points."""
    o = np.random.default_rng(seed).uniform(-0.3, 0.3, 3)
    eqs = classify_equilibria(coarse_mesh, o)
    assert eqs.S + eqs.U - eqs.H == 2


def test_poincare_hopf_on_random_hulls():
    """Test S + U - H = 2 on hulls of random points on a sphere."""
    rng = np.random.default_rng(42)
    for _ in range(5):
        pts = rng.normal(size=(60, 3))
        pts /= np.linalg.norm(pts, axis=1)[:, None]
        mesh = hull_mesh(pts)
        eqs = classify_equilibria(mesh, rng.uniform(-0.2, 0.2, 3))
        assert eqs.index == 2


@pytest.mark.parametrize(
    "kr, d, s0, u0, h0, index",
    [
        ((-0.5, -0.5), 4.0, 4.0, 1.0, 4.0, 1.0),
        ((-0.5, -2.0), 2.0, 2.0, 2.0, 5.0, -1.0),
        ((-2.0, -2.0), 1.0, 1.0, 4.0, 4.0, 1.0),
    ],
)
def test_imaginary_index_3d(kr, d, s0, u0, h0, index):
    """Test mean flock counts at umbilic, saddle-like and unstable points."""
    ii = imaginary_index_3d(kr[0], kr[1], 1.0)
    assert ii.d == pytest.approx(d)
    assert (ii.S0, ii.U0, ii.H0) == pytest.approx((s0, u0, h0))
    assert ii.index == pytest.approx(index)


@settings(max_examples=50, deadline=None)
@given(
    x1=st.floats(min_value=-5.0, max_value=-0.01),
    x2=st.floats(min_value=-5.0, max_value=-0.01),
)
def test_imaginary_index_3d_sign(x1, x2):
    """Test that the 3D index is the sign of the product of the two factors."""
    assume(abs(1 + x1) > 1e-3 and abs(1 + x2) > 1e-3)
    ii = imaginary_index_3d(x1, x2, 1.0)
    assert ii.index == pytest.approx(math.copysign(1.0, (1 + x1) * (1 + x2)))


def test_imaginary_index_3d_errors():
    """Test the domain of the 3D index."""
    with pytest.raises(ParameterRangeError):
        imaginary_index_3d(0.5, -1.0, 1.0)
    with pytest.raises(ParameterRangeError):
        imaginary_index_3d(-0.5, -1.0, 0.0)
    with pytest.raises(OnEvoluteError):
        imaginary_index_3d(-1.0, -0.5, 1.0)


def test_hull_diagonal_against_convex_hull():
    """Test the diagonal rule against qhull on quads cut from a sphere."""
    rng = np.random.default_rng(0)
    for _ in range(40):
        base = rng.normal(size=3)
        base /= np.linalg.norm(base)
        u = np.cross(base, rng.normal(size=3))
        u /= np.linalg.norm(u)
        v = np.cross(base, u)
        quad = []
        for i, j in ((0, 0), (1, 0), (0, 1), (1, 1)):
            p = base + 0.2 * (i * u + j * v) + rng.normal(scale=0.03, size=3)
            quad.append(p / np.linalg.norm(p))
        o = rng.uniform(-0.25, 0.25, 3)
        hull = ConvexHull(np.vstack([o, *quad]))
        edges = {frozenset(e) for s in hull.simplices for e in ((s[0], s[1]), (s[1], s[2]), (s[0], s[2]))}
        main = bool(hull_diagonal(*quad, o))
        assert main == (frozenset((1, 4)) in edges)
        if not main:
            assert frozenset((2, 3)) in edges


def test_grid_surface_patch():
    """Test the size and topology of a triangulated sphere patch."""

    def sphere(u, v):
        return np.stack([np.cos(u) * np.cos(v), np.cos(u) * np.sin(v), np.sin(u)], axis=-1)

    patch = grid_surface(sphere, (0.1, 1.2), (0.1, 1.4), 10, (0.05, 0.02, 0.01))
    assert patch.V == 121
    assert patch.F == 200
    assert patch.euler == 1


def test_grid_stationary_bowl():
    """Test one minimum and no interior maximum of a paraboloid."""
    x = np.linspace(-1.0, 1.0, 101)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    res = grid_stationary(xx**2 + yy**2, r=3)
    assert res.counts == (1, 0)
    assert res.minima.tolist() == [[50, 50]]
    assert [50, 50] in res.stationary.tolist()


def test_grid_stationary_saddle():
    """Test that a saddle is stationary but not extremal."""
    x = np.linspace(-1.0, 1.0, 101)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    res = grid_stationary(xx**2 - yy**2, r=3)
    near = [p for p in res.minima.tolist() + res.maxima.tolist() if max(abs(p[0] - 50), abs(p[1] - 50)) <= 10]
    assert near == []
    assert [50, 50] in res.stationary.tolist()


def test_grid_stationary_auto_radius():
    """Test the doubling radius on a periodic sample."""
    theta = 2 * np.pi * (np.arange(64) + 0.3) / 64
    f = np.cos(theta)[:, None] * np.ones(33)[None, :] + np.linspace(0.0, 0.1, 33)[None, :]
    res = grid_stationary(f, wrap=(True, False))
    assert res.r >= 5
    assert res.counts == (0, 0)


def test_grid_stationary_tie():
    """Test that equal neighbors are nongeneric."""
    with pytest.raises(NongenericConfigurationError, match="nongeneric grid"):
        grid_stationary(np.ones((5, 5)), r=1)


def test_ellipsoid_mesh_counts(ellipsoid):
    """Test V = 10 f^2 + 2 and a centered solid centroid."""
    mesh = ellipsoid.mesh(10)
    assert mesh.V == 1002
    assert mesh.F == 2000
    assert solid_centroid(mesh) == pytest.approx([0.0, 0.0, 0.0], abs=1e-9)
    assert np.allclose(np.sum((mesh.vertices / ellipsoid.axes) ** 2, axis=1), 1.0)


def test_axis_curvatures(ellipsoid):
    """Test principal curvatures at the end of the major axis."""
    assert ellipsoid.axis_curvatures(0) == pytest.approx((-2.0 / 2.25, -2.0))
    assert ellipsoid.imaginary_index_at(0, (0.0, 0.0, 0.0)).index == pytest.approx(1.0)


def test_chart_counts_center(ellipsoid):
    """Test two minima, two maxima and two saddles seen from the center."""
    assert ellipsoid.chart_counts((0.0, 0.0, 0.0), n=80) == (2, 2, 2)


def test_chart_counts_between_caustic_sheets(ellipsoid):
    """Test that past the first caustic the major vertex becomes a saddle."""
    assert ellipsoid.chart_counts((1.0, 0.0, 0.0), n=80) == (2, 1, 1)


def test_umbilic_direction(ellipsoid):
    """Test the umbilic center of curvature of the 2 x 1.5 x 1 ellipsoid."""
    d = umbilic_direction(ellipsoid.a, ellipsoid.b, ellipsoid.c)
    assert d[1] == 0.0
    assert np.linalg.norm(d) == pytest.approx(1.0477, abs=1e-4)
    with pytest.raises(ParameterRangeError):
        umbilic_direction(1.0, 1.0, 1.0)


def test_caustic_sweep_short(coarse_mesh):
    """Test a three-sample sweep along the major axis."""
    series = caustic_sweep(coarse_mesh, (1.0, 0.0, 0.0), [0.0, 0.5, 1.0], keep=True)
    assert len(series.records) == 3
    assert series.direction == (1.0, 0.0, 0.0)
    for rec in series.records:
        assert rec.S + rec.U - rec.H == 2
        assert rec.equilibria is not None
        assert rec.N is None
    assert series.rows()[0]["N"] is None


def test_caustic_sweep_leaves_body(coarse_mesh):
    """Test that a sweep past the surface fails."""
    with pytest.raises(ReferencePointError):
        caustic_sweep(coarse_mesh, (1.0, 0.0, 0.0), [0.0, 3.0])


def test_sweep_peaks():
    """Test one peak index per run above the threshold."""
    values = [10, 10, 50, 60, 10, 10, 40, 10]
    series = SweepSeries((1.0, 0.0, 0.0), [SweepRecord(float(i), (0.0, 0.0, 0.0), v, 0, v - 2) for i, v in enumerate(values)])
    assert series.peaks(ratio=1.5) == [3, 6]


def test_flock_near_and_spread():
    """Test flock extraction around a point and its principal direction."""
    pts = np.array([[0.0, 0.0, 1.0], [0.1, 0.0, 1.0], [0.2, 0.01, 1.0], [5.0, 5.0, 5.0]])
    eqs = SurfaceEquilibriumSet(
        np.array([0, 1]), pts[:2], np.array([2]), pts[2:3], np.array([3]), pts[3:]
    )
    flock = flock_near(eqs, (0.1, 0.0, 1.0), 0.5)
    assert len(flock) == 3
    assert abs(principal_spread(flock)[0]) == pytest.approx(1.0, abs=1e-2)


@pytest.mark.slow
def test_major_axis_sweep_peaks_near_caustics(ellipsoid):
    """Test that polyhedral counts spike once at each caustic sheet on the major axis."""
    mesh = ellipsoid.mesh(51)
    times = np.linspace(0.0, 1.9, 191)
    series = caustic_sweep(mesh, (1.0, 0.0, 0.0), times)
    peaks = [times[i] for i in series.peaks()]
    assert len(peaks) == 2
    assert peaks[0] == pytest.approx(0.875, abs=0.25)
    assert peaks[1] == pytest.approx(1.5, abs=0.25)


@pytest.mark.slow
def test_umbilic_sweep_single_peak(ellipsoid):
    """Test one spike at the umbilic center of curvature and a net loss of two equilibria."""
    mesh = ellipsoid.mesh(51)
    d = umbilic_direction(ellipsoid.a, ellipsoid.b, ellipsoid.c)
    times = np.linspace(0.0, 1.15, 116)
    series = caustic_sweep(mesh, d, times, ellipsoid)
    (peak,) = series.peaks()
    assert times[peak] == pytest.approx(np.linalg.norm(d), abs=0.05)
    assert series.records[-1].N - series.records[0].N == -2

"""Tests for smooth curves and their global equilibria."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqlab.curve_core import (
    Ellipse,
    EvolutePointKind,
    GraphArc,
    PolarFourier,
    PolylineSpline,
    Stability,
    circle,
    classify_evolute_point,
    count_normals,
    curve_from_dict,
    equilibrium_counts,
    evolute,
    first_nonzero_order,
    global_equilibria,
    inward_normal,
    load_curve,
    signed_curvature,
)
from eqlab.errors import (
    ConfigError,
    NotConvexError,
    ParameterRangeError,
    UnsupportedOrderError,
)


@pytest.fixture
def ellipse():
    """The 2 x 1.5 ellipse used throughout the experiments."""
    return Ellipse(2.0, 1.5)


def ellipse_curvature(a, b, tau):
    """Closed-form signed curvature of (a cos t, b sin t)."""
    return -a * b / (a**2 * math.sin(tau) ** 2 + b**2 * math.cos(tau) ** 2) ** 1.5


def test_ellipse_points(ellipse):
    """Test that the ellipse starts on the major axis and runs counterclockwise."""
    assert ellipse.eval(0.0) == pytest.approx([2.0, 0.0])
    assert ellipse.eval(math.pi / 2) == pytest.approx([0.0, 1.5], abs=1e-12)
    assert ellipse.eval(2 * math.pi + 0.3) == pytest.approx(ellipse.eval(0.3))


def test_circle_tangent_is_unit():
    """Test that a unit circle's first derivative has unit length."""
    d1 = circle(1.0).eval(np.linspace(0.0, 6.0, 7), 1)
    assert np.linalg.norm(d1, axis=1) == pytest.approx(np.ones(7))


def test_curvature_sign_convention():
    """Test that convex curves have negative curvature."""
    assert float(signed_curvature(circle(2.0), 0.4)) == pytest.approx(-0.5)


@pytest.mark.parametrize("tau", [0.0, 0.7, math.pi / 2, 2.9])
def test_ellipse_curvature_closed_form(ellipse, tau):
    """Test the signed curvature against the closed form."""
    expected = ellipse_curvature(2.0, 1.5, tau)
    assert float(signed_curvature(ellipse, tau)) == pytest.approx(expected, rel=1e-10)


def test_curvature_matches_turning_rate(ellipse):
    """Test curvature against a finite difference of the tangent angle."""
    tau, h = 1.1, 1e-4
    angles = []
    for s in (tau - h, tau + h):
        d1 = ellipse.eval(s, 1)
        angles.append(math.atan2(d1[1], d1[0]))
    speed = float(np.linalg.norm(ellipse.eval(tau, 1)))
    estimate = -(angles[1] - angles[0]) / (2 * h) / speed
    assert float(signed_curvature(ellipse, tau)) == pytest.approx(estimate, rel=1e-6)


def test_ellipse_evolute_vertices(ellipse):
    """Test the evolute at the four vertices of the ellipse."""
    assert evolute(ellipse, 0.0) == pytest.approx([0.875, 0.0], abs=1e-12)
    assert evolute(ellipse, math.pi / 2) == pytest.approx([0.0, -7.0 / 6.0], abs=1e-12)


def test_evolute_lies_on_normal_line(ellipse):
    """Test that E(tau) lies on the normal line at r(tau)."""
    taus = np.linspace(0.1, 6.0, 13)
    rel = evolute(ellipse, taus) - ellipse.eval(taus)
    n = inward_normal(ellipse, taus)
    cross = rel[:, 0] * n[:, 1] - rel[:, 1] * n[:, 0]
    assert np.max(np.abs(cross)) < 1e-12


def test_classify_evolute_point(ellipse):
    """Test cusp and general evolute points of the ellipse."""
    assert classify_evolute_point(ellipse, 0.0) is EvolutePointKind.CUSP
    assert classify_evolute_point(ellipse, math.pi / 2) is EvolutePointKind.CUSP
    assert classify_evolute_point(ellipse, math.pi / 4) is EvolutePointKind.GENERAL


def test_circle_evolute_degenerates(caplog):
    """Test that a circle reports a cusp and warns about the collapsed evolute."""
    assert classify_evolute_point(circle(1.0), 1.0) is EvolutePointKind.CUSP
    assert "constant curvature" in caplog.text


def cyclic_gap(a, b):
    """Distance between two angles on the circle."""
    return abs((a - b + math.pi) % (2 * math.pi) - math.pi)


def test_ellipse_equilibria_about_center(ellipse):
    """Test the four equilibria of an ellipse about its center."""
    eqs = global_equilibria(ellipse, (0.0, 0.0))
    assert len(eqs) == 4
    expected = {
        0.0: Stability.UNSTABLE,
        math.pi / 2: Stability.STABLE,
        math.pi: Stability.UNSTABLE,
        3 * math.pi / 2: Stability.STABLE,
    }
    for tau, label in expected.items():
        (match,) = [e for e in eqs if cyclic_gap(e.tau, tau) < 1e-9]
        assert match.stability is label
    assert equilibrium_counts(eqs) == (2, 2)


def test_equilibria_are_scale_invariant():
    """Test that a scaled ellipse keeps its labels."""
    small = global_equilibria(Ellipse(2.0, 1.5), (0.0, 0.0))
    large = global_equilibria(Ellipse(4.0, 3.0), (0.0, 0.0))
    assert [e.stability for e in small] == [e.stability for e in large]


def test_circle_off_center():
    """Test that a circle seen from an off-center point has one of each kind."""
    eqs = global_equilibria(circle(1.0), (0.3, 0.0))
    assert len(eqs) == 2
    near, far = sorted(eqs, key=lambda e: e.rho)
    assert near.stability is Stability.STABLE
    assert near.rho == pytest.approx(0.7)
    assert far.stability is Stability.UNSTABLE
    assert far.factor == pytest.approx(-0.3)


def test_reference_point_outside_raises(ellipse):
    """Test that o outside the curve is rejected."""
    with pytest.raises(ParameterRangeError, match="o out of range"):
        global_equilibria(ellipse, (3.0, 0.0))


@settings(max_examples=25, deadline=None)
@given(
    k=st.integers(min_value=2, max_value=6),
    amp=st.floats(min_value=0.002, max_value=0.02),
    phase=st.floats(min_value=0.0, max_value=2 * math.pi),
)
def test_single_harmonic_counts(k, amp, phase):
    """Test that rho = 1 + amp cos(k phi + phase) has k minima and k maxima."""
    curve = PolarFourier(
        1.0,
        [0.0] * (k - 1) + [amp * math.cos(phase)],
        [0.0] * (k - 1) + [-amp * math.sin(phase)],
    )
    s, u = equilibrium_counts(global_equilibria(curve, curve.centroid()))
    assert s == u == k


def test_count_normals_matches_equilibria(ellipse):
    """Test that brute-force normal counting agrees with the equilibrium scan."""
    assert count_normals(ellipse, (0.0, 0.0)) == 4
    assert count_normals(ellipse, (0.5, 1.2)) == 2


def test_first_nonzero_order_cubic():
    """Test that a cubic term makes the evolute point third order."""
    arc = GraphArc.normal_form(1.0, a=0.3)
    k, value = first_nonzero_order(arc, (0.0, 0.0), 0.0)
    assert k == 3
    assert value == pytest.approx(-3.6)


def test_degenerate_quartic_equilibrium():
    """Test that a quartic contact is labelled stable with order four."""
    arc = GraphArc.normal_form(1.0, b=0.1)
    eqs = global_equilibria(arc, (0.0, 0.0), detect_degenerate=True)
    assert len(eqs) == 1
    assert eqs[0].order == 4
    assert eqs[0].stability is Stability.STABLE


def test_order_above_four_rejected(ellipse):
    """Test that derivatives above order four are refused."""
    with pytest.raises(UnsupportedOrderError, match="derivative order 5"):
        ellipse.eval(0.0, 5)


def test_open_arc_domain():
    """Test that open arcs reject parameters outside their domain."""
    arc = GraphArc.parabola(1.0, -0.5)
    with pytest.raises(ParameterRangeError):
        arc.eval(0.6)


def test_polar_fourier_rejects_negative_radius():
    """Test that a radius crossing zero is rejected."""
    with pytest.raises(NotConvexError, match="radius must stay positive"):
        PolarFourier(0.5, [0.0, 0.8])


def test_polar_fourier_rejects_dent():
    """Test that a star-shaped but nonconvex curve is rejected."""
    with pytest.raises(NotConvexError, match="signed curvature changes sign"):
        PolarFourier(1.0, [0.0, 0.0, 0.0, 0.0, 0.1])


def test_polyline_spline_interpolates(ellipse):
    """Test that the spline passes through its samples and stays convex."""
    taus, pts = ellipse.sample(64)
    spline = PolylineSpline(pts)
    knots = np.linspace(0.0, 2 * math.pi, 65)[:-1]
    assert spline.eval(knots) == pytest.approx(pts, abs=1e-12)
    assert spline.smoothness == 4
    with pytest.raises(UnsupportedOrderError):
        spline.eval(0.0, 5)


def test_curve_from_dict_and_file(tmp_path):
    """Test JSON curve documents in memory and on disk."""
    doc = {"kind": "ellipse", "a": 2.0, "b": 1.5}
    assert curve_from_dict(doc).eval(0.0) == pytest.approx([2.0, 0.0])
    path = tmp_path / "curve.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    assert isinstance(load_curve(path), Ellipse)
    assert curve_from_dict(Ellipse(2.0, 1.5).to_dict()).to_dict() == Ellipse(2.0, 1.5).to_dict()


def test_curve_from_dict_errors():
    """Test unknown kinds and missing fields."""
    with pytest.raises(ConfigError, match="unknown curve kind"):
        curve_from_dict({"kind": "spiral"})
    with pytest.raises(ConfigError, match="missing curve field"):
        curve_from_dict({"kind": "ellipse", "a": 2.0})

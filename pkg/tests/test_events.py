"""Tests for evolutes, crossing events and the polygon line arrangement."""

import math

import numpy as np
import pytest

from eqlab.curve_core import Ellipse, count_normals, evolute, inward_normal
from eqlab.discretize import count_local, partition
from eqlab.errors import CuspPointError, InconsistentEventLogError
from eqlab.events import (
    CrossingEvent,
    EventKind,
    Side,
    detect_crossings,
    event_counts,
    evolute_curve,
    polygon_evolute,
    reconstruct_N,
    side_of_evolute,
)


@pytest.fixture(scope="module")
def ellipse():
    """The 2 x 1.5 ellipse; its evolute is an astroid with four cusps."""
    return Ellipse(2.0, 1.5)


def vertical_path(x, height):
    """o(t) = (x, height * t)."""
    return lambda t: (x, height * t)


def test_evolute_cusps(ellipse):
    """Test that the ellipse evolute has a cusp at every vertex."""
    ev = evolute_curve(ellipse)
    assert ev.cusps.size == 4
    for tau in (0.0, math.pi / 2, math.pi, 3 * math.pi / 2):
        assert ev.near_cusp(tau, 1e-6)
    assert not ev.near_cusp(math.pi / 4)
    assert ev.points.shape == (4096, 2)


def test_evolute_arcs_turn_consistently(ellipse):
    """Test that samples away from cusps turn in one direction."""
    ev = evolute_curve(ellipse)
    assert ev.locally_convex(500)
    assert ev.locally_convex(1500)


@pytest.mark.parametrize("tau0", [0.3, 0.7, 1.1, 2.0, 2.5, 3.6, 4.2, 5.5])
def test_concave_side_has_two_more_normals(ellipse, tau0):
    """Test that stepping across the evolute adds a pair of normals on the concave side."""
    center = evolute(ellipse, tau0)
    n = inward_normal(ellipse, tau0)
    tangent = np.array([n[1], -n[0]])
    sides = {}
    for sign in (1.0, -1.0):
        q = center + sign * 1e-4 * tangent
        sides[side_of_evolute(ellipse, tau0, q)] = count_normals(ellipse, q)
    assert set(sides) == {Side.CONVEX, Side.CONCAVE}
    assert sides[Side.CONCAVE] - sides[Side.CONVEX] == 2


def test_side_on_curve(ellipse):
    """Test that the evolute point itself is on the curve."""
    assert side_of_evolute(ellipse, 0.7, evolute(ellipse, 0.7)) is Side.ON_CURVE


def test_side_at_cusp_raises(ellipse):
    """Test that cusps have no side."""
    with pytest.raises(CuspPointError, match="evolute cusp"):
        side_of_evolute(ellipse, 0.0, (0.5, 0.0))
    with pytest.raises(CuspPointError):
        side_of_evolute(evolute_curve(ellipse), math.pi, (-0.5, 0.0))


def test_annihilation_event(ellipse):
    """Test one A-type event when o leaves the astroid through an arc."""
    events = detect_crossings(ellipse, vertical_path(0.2, 1.2), np.linspace(0.0, 1.0, 21))
    assert len(events) == 1
    (ev,) = events
    assert ev.kind is EventKind.ANNIHILATION
    assert ev.jump == -2
    assert ev.t == pytest.approx(0.4817, abs=2e-3)
    assert (ev.side_before, ev.side_after) == (Side.CONCAVE, Side.CONVEX)
    assert event_counts(events) == (0, 1)


def test_creation_event(ellipse):
    """Test one C-type event when o enters the astroid."""
    path = lambda t: (0.2, 1.2 * (1.0 - t))  # noqa: E731
    events = detect_crossings(ellipse, path, np.linspace(0.0, 1.0, 21))
    assert [e.kind for e in events] == [EventKind.CREATION]
    assert events[0].to_dict()["kind"] == "C"


def test_reconstruct_from_events(ellipse):
    """Test that N(t) rebuilt from the log matches direct counts."""
    path = vertical_path(0.2, 1.2)
    events = detect_crossings(ellipse, path, np.linspace(0.0, 1.0, 21))
    steps = reconstruct_N(4, events)
    assert steps(0.1) == 4
    assert steps(0.9) == 2
    assert steps.final == count_normals(ellipse, path(1.0))


def test_reconstruct_rejects_impossible_log():
    """Test that a log driving N below two is rejected."""
    log = [CrossingEvent(0.5, 1.0, EventKind.ANNIHILATION, -2)]
    with pytest.raises(InconsistentEventLogError, match="below 2"):
        reconstruct_N(2, log)


def test_reconstruct_degenerate_uses_raw_jump():
    """Test that degenerate events contribute their measured jump."""
    log = [
        CrossingEvent(0.2, 0.0, EventKind.CREATION, 2),
        CrossingEvent(0.6, 0.0, EventKind.DEGENERATE, -2),
    ]
    steps = reconstruct_N(2, log)
    assert steps.values == (2, 4, 2)
    assert event_counts(log) == (1, 0)


@pytest.mark.parametrize(
    "q0, q1",
    [
        ((0.0, 0.0), (0.5, 0.3)),
        ((0.2, -0.4), (-0.6, 0.5)),
        ((1.0, 0.2), (-1.0, -0.3)),
        ((0.1, 0.9), (0.3, -0.9)),
    ],
)
def test_polygon_arrangement_predicts_counts(q0, q1):
    """Test that weighted line crossings predict the change of the polygon count."""
    poly = partition(Ellipse(2.0, 1.5), 24, 0.3)
    arrangement = polygon_evolute(poly)
    assert len(arrangement) == 48
    actual = count_local(poly, q1).N - count_local(poly, q0).N
    assert arrangement.predict_change(q0, q1) == actual

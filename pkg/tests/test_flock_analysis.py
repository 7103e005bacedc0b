"""Tests for degeneracy orders, flock scaling and rate profiles."""

import math

import numpy as np
import pytest

from eqlab.curve_core import Ellipse, GraphArc, circle
from eqlab.errors import OrderTooHighError, ParameterRangeError
from eqlab.flock_analysis import (
    RateCase,
    case_setup,
    degenerate_order,
    delta_ladder,
    flock_means,
    flock_scaling,
    imaginary_count,
    loglog_fit,
    rate_profile,
    rate_times,
)


def test_degenerate_order_on_normal_forms():
    """Test orders three and four of the normal-form arcs."""
    assert degenerate_order(GraphArc.normal_form(1.0, a=0.3), (0.0, 0.0), 0.0) == 3
    assert degenerate_order(GraphArc.normal_form(1.0, b=0.2), (0.0, 0.0), 0.0) == 4


def test_degenerate_order_too_high():
    """Test that the center of a circle has no finite order."""
    with pytest.raises(OrderTooHighError, match="degeneracy order too high"):
        degenerate_order(circle(1.0), (0.0, 0.0), 0.0)


@pytest.mark.parametrize(
    "case, order, exponent",
    [("i", 3, -0.5), ("ii", 3, -1.0), ("iii", 4, -2.0 / 3.0), ("iv", 4, -1.0)],
)
def test_rate_cases(case, order, exponent):
    """Test the order and expected exponent of each case."""
    rc = RateCase(case)
    assert rc.order == order
    assert rc.exponent == pytest.approx(exponent)
    arc, direction = case_setup(rc)
    assert degenerate_order(arc, (0.0, 0.0), 0.0) == order
    assert np.linalg.norm(direction) > 0


def test_loglog_fit_exact_power_law():
    """Test the fitted slope of an exact power law."""
    x = np.geomspace(1e-3, 1.0, 7)
    fit = loglog_fit(x, 3.0 * x**-0.5)
    assert fit.slope == pytest.approx(-0.5)
    assert fit.intercept == pytest.approx(math.log(3.0))
    assert fit.r2 == pytest.approx(1.0)
    assert fit.ci[0] <= fit.slope <= fit.ci[1]
    assert fit.to_dict()["points"] == 7


def test_loglog_fit_drops_nonpositive():
    """Test that zero samples are dropped and too few points are refused."""
    fit = loglog_fit([1.0, 2.0, 4.0, 8.0], [0.0, 2.0, 4.0, 8.0])
    assert fit.points == 3
    with pytest.raises(ParameterRangeError, match="fit points"):
        loglog_fit([1.0, 2.0, 4.0], [0.0, 0.0, 1.0])


def test_delta_ladder():
    """Test the halving ladder and its domain."""
    assert delta_ladder(0.2, 3) == pytest.approx([0.2, 0.1, 0.05])
    with pytest.raises(ParameterRangeError):
        delta_ladder(0.0, 3)


def test_rate_times():
    """Test geometric time sampling."""
    assert rate_times(1e-4, 1e-2, 3) == pytest.approx([1e-4, 1e-3, 1e-2])
    with pytest.raises(ParameterRangeError):
        rate_times(1e-2, 1e-4, 5)


def test_imaginary_count_of_stable_point():
    """Test N0 over a window holding one nondegenerate equilibrium."""
    value, capped = imaginary_count(Ellipse(2.0, 1.5), (0.0, 0.0), math.pi / 2, 0.5)
    assert value == pytest.approx(2.0 / 0.4375)
    assert not capped


def test_flock_means_match_imaginary_index():
    """Test offset-averaged flock counts at the ellipse's stable point."""
    means = flock_means(Ellipse(2.0, 1.5), (0.0, 0.0), math.pi / 2, 400, offsets=200, seed=11)
    assert means.trials > 150
    assert means.S == pytest.approx(1.0 / 0.4375, abs=0.15)
    assert means.U == pytest.approx(0.5625 / 0.4375, abs=0.15)
    assert means.index == pytest.approx(1.0)


def test_flock_scaling_report_shape():
    """Test the report produced by a short ladder."""
    arc, _ = case_setup(RateCase.TRANSVERSE_CONVEX_TO_CONCAVE)
    report = flock_scaling(arc, (0.0, 0.0), 0.0, delta_ladder(0.02, 4), offsets=20, seed=2)
    assert report.k == 3
    assert report.expected_count_slope == pytest.approx(-0.5)
    assert report.expected_diameter_slope == pytest.approx(0.5)
    assert len(report.rows()) == 4
    doc = report.to_dict()
    assert doc["k"] == 3
    assert set(doc) >= {"count_fit", "diameter_fit", "monotone"}


def test_flock_scaling_rejects_unsorted_steps():
    """Test that mesh steps must decrease."""
    arc, _ = case_setup("i")
    with pytest.raises(ParameterRangeError, match="deltas out of range"):
        flock_scaling(arc, (0.0, 0.0), 0.0, [0.01, 0.02, 0.005])


@pytest.mark.parametrize(
    "case, k, count_slope, diameter_slope",
    [("i", 3, -0.5, 0.5), ("iii", 4, -2.0 / 3.0, 1.0 / 3.0)],
)
def test_flock_scaling_slopes(case, k, count_slope, diameter_slope):
    """Test flock count and diameter power laws at evolute points of order three and four."""
    arc, _ = case_setup(case)
    report = flock_scaling(arc, (0.0, 0.0), 0.0, delta_ladder(0.2, 8), offsets=200, seed=0, workers=2)
    assert report.k == k
    assert report.monotone
    assert report.count_fit.slope == pytest.approx(count_slope, abs=0.05)
    assert report.count_fit.r2 >= 0.98
    assert report.diameter_fit is not None
    assert report.diameter_fit.slope == pytest.approx(diameter_slope, abs=0.05)
    assert report.diameter_fit.r2 >= 0.98


def test_rate_profile_transverse_crossing():
    """Test the -1/2 divergence of N0 when crossing a smooth evolute arc."""
    arc, direction = case_setup("i")
    profile = rate_profile(arc, direction, "i", rate_times(1e-4, 1e-2, 8))
    assert profile.fit.slope == pytest.approx(-0.5, abs=0.1)
    assert "i" in profile.matched
    assert all(v == 0.0 for v in profile.negative_values)
    assert profile.to_dict()["expected"] == -0.5
    assert len(profile.rows()) == 8


@pytest.mark.parametrize("case", ["ii", "iii", "iv"])
def test_rate_profile_remaining_cases(case):
    """Test the divergence exponents of tangent and cusp crossings."""
    arc, direction = case_setup(case)
    profile = rate_profile(arc, direction, case, rate_times(1e-4, 1e-2, 12))
    assert profile.fit.slope == pytest.approx(RateCase(case).exponent, abs=0.1)
    assert case in profile.matched

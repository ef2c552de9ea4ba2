import math

import numpy as np
import pytest

from siegelzak.core.errors import DimensionMismatchError, EmptySampleError
from siegelzak.models.geometry import Box
from siegelzak.models.schema import TestFunction
from siegelzak.services.numerics import (
    RngStream,
    mc_report,
    mc_stats,
    midpoint_integral,
    rng_uniform,
    stable_sum,
    testfn_eval,
    testfn_integral,
    testfn_l2norm_sq,
    testfn_quadrature,
    testfn_support_box,
)
from siegelzak.services.runner import map_samples


def test_gaussian_values(gaussian1d):
    assert testfn_eval(gaussian1d, 0.0) == pytest.approx(1.0)
    assert testfn_eval(gaussian1d, 1.0) == pytest.approx(math.exp(-math.pi))


def test_gaussian_integral_and_norm(gaussian1d):
    assert testfn_integral(gaussian1d) == pytest.approx(1.0)
    assert testfn_l2norm_sq(gaussian1d) == pytest.approx(2.0**-0.5)


def test_box_integral():
    f = TestFunction(kind="box", dimension=1, scale=1.0)
    assert testfn_integral(f) == pytest.approx(2.0)
    assert testfn_eval(f, 1.0) == 1.0
    assert testfn_eval(f, 1.5) == 0.0


def test_triangle_closed_forms():
    f = TestFunction(kind="triangle", dimension=2, scale=0.5)
    assert testfn_integral(f) == pytest.approx(0.25)
    assert testfn_l2norm_sq(f) == pytest.approx((1.0 / 3.0) ** 2)


def test_amplitude_scales_integral_and_norm():
    f = TestFunction(kind="gaussian", dimension=1, amplitude=3.0)
    assert testfn_integral(f) == pytest.approx(3.0)
    assert testfn_l2norm_sq(f) == pytest.approx(9.0 * 2.0**-0.5)


def test_zero_amplitude_is_zero_function():
    f = TestFunction(kind="gaussian", dimension=1, amplitude=0.0)
    assert testfn_eval(f, 0.3) == 0.0
    assert testfn_integral(f) == 0.0


def test_modulated_gaussian_integral():
    f = TestFunction(kind="modulated-gaussian", dimension=1, frequency=[0.5])
    assert testfn_integral(f) == pytest.approx(complex(math.exp(-math.pi * 0.25)))
    assert isinstance(testfn_eval(f, 0.0), complex)


def test_quadrature_matches_closed_form(gaussian1d):
    assert testfn_quadrature(gaussian1d, 256) == pytest.approx(1.0, abs=1e-9)


def test_midpoint_integral_is_exact_for_affine():
    value = midpoint_integral(lambda pts: 2.0 + pts[:, 0], Box(lo=[0.0], hi=[2.0]), 16)
    assert value == pytest.approx(6.0)


def test_support_box_of_box_kind():
    f = TestFunction(kind="box", dimension=2, center=[1.0, -1.0], scale=0.5)
    support = testfn_support_box(f)
    np.testing.assert_allclose(support.lo, [0.5, -1.5])
    np.testing.assert_allclose(support.hi, [1.5, -0.5])


def test_evaluation_dimension_is_checked():
    f = TestFunction(kind="gaussian", dimension=2)
    with pytest.raises(DimensionMismatchError):
        testfn_eval(f, [0.0, 0.0, 0.0])


def test_frequency_only_for_modulated_gaussian():
    with pytest.raises(ValueError):
        TestFunction(kind="gaussian", dimension=1, frequency=[1.0])


def test_stable_sum_cancels_exactly():
    assert stable_sum([1e16, 1.0, -1e16]) == 1.0
    assert stable_sum([]) == 0.0


def test_mc_stats():
    mean, stderr = mc_stats([0.0, 2.0])
    assert mean == pytest.approx(1.0)
    assert stderr == pytest.approx(1.0)


def test_mc_stats_empty_raises():
    with pytest.raises(EmptySampleError):
        mc_stats([])


def test_mc_report_zero_variance():
    exact = mc_report([2.0, 2.0, 2.0], 2.0)
    assert exact.passed and exact.z_score == 0.0
    off = mc_report([2.0, 2.0], 1.0)
    assert not off.passed and off.z_score is None


def test_mc_report_slack_widens_band():
    report = mc_report([1.0, 1.0], 1.5, slack=0.5)
    assert report.passed


def test_rng_streams_are_deterministic():
    a = rng_uniform(RngStream(7, 3), 5)
    b = rng_uniform(RngStream(7, 3), 5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, rng_uniform(RngStream(7, 4), 5))
    assert np.all((a >= 0.0) & (a < 1.0))


def test_rng_zero_draws():
    assert rng_uniform(RngStream(1), 0).shape == (0,)


def test_spawned_streams_differ():
    parent = RngStream(11)
    first = rng_uniform(parent.spawn(0), 3)
    second = rng_uniform(parent.spawn(1), 3)
    assert not np.array_equal(first, second)
    np.testing.assert_array_equal(first, rng_uniform(RngStream(11).spawn(0), 3))


def test_map_samples_independent_of_workers():
    def draw(index, sub):
        return float(rng_uniform(sub, 1)[0]) + index

    serial = map_samples(draw, 37, RngStream(5), workers=1, chunk_size=4)
    pooled = map_samples(draw, 37, RngStream(5), workers=4, chunk_size=7)
    assert serial == pooled
    assert map_samples(draw, 0, RngStream(5)) == []

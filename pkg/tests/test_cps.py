import math

import numpy as np
import pytest

from siegelzak.core.errors import DegenerateRegionError, DimensionMismatchError, ProjectionError
from siegelzak.models.geometry import Box, CutProjectScheme, HullPoint, PointSet, Window, integer_relation
from siegelzak.services.cps import (
    SQRT2,
    CutProjectSampler,
    act_on_hull,
    builtin_scheme,
    check_meyer,
    cut_and_project,
    density,
    enumerate_gamma,
    pointset_of_hull,
    pointset_to_csv,
    sample_hull,
    thin_bernoulli,
    translate_hull,
)
from siegelzak.services.numerics import RngStream
from siegelzak.services.siegel import upper_density

MULTIPLIER = 4.0


def _integer_points(integers, half_width=20.0):
    region = Box(lo=[-half_width], hi=[half_width])
    return cut_and_project(integers, Window.everything(), [0.0], np.zeros(0), region)


def test_enumerate_small_region(zsqrt2, unit_window):
    points = enumerate_gamma(zsqrt2, Box(lo=[-3.0], hi=[3.0]), unit_window)
    np.testing.assert_allclose(points.phys[:, 0], [-1.0 - SQRT2, -1.0, 0.0, 1.0, 1.0 + SQRT2])
    assert np.all(np.abs(points.internal) <= 1.0)
    recon = points.coefficients @ zsqrt2.basis.T
    np.testing.assert_allclose(recon[:, 0], points.phys[:, 0])


def test_enumerate_empty_window(zsqrt2):
    points = enumerate_gamma(zsqrt2, Box(lo=[-3.0], hi=[3.0]), Window.empty(1))
    assert len(points) == 0


def test_enumerate_checks_dimensions(zsqrt2):
    with pytest.raises(DimensionMismatchError):
        enumerate_gamma(zsqrt2, Box(lo=[0.0, 0.0], hi=[1.0, 1.0]), Window.interval(-1.0, 1.0))


def test_symmetric_window_gives_symmetric_set(zsqrt2, unit_window):
    ps = cut_and_project(zsqrt2, unit_window, [0.0], [0.0], Box(lo=[-50.0], hi=[50.0]))
    pts = ps.points[:, 0]
    np.testing.assert_allclose(np.sort(-pts), pts, atol=1e-12)


def test_density_matches_window_volume(zsqrt2, unit_window):
    ps = cut_and_project(zsqrt2, unit_window, [0.0], [0.0], Box(lo=[-2000.0], hi=[2000.0]))
    assert density(ps) == pytest.approx(1.0 / SQRT2, rel=5e-3)


def test_density_of_integers(integers):
    assert density(_integer_points(integers)) == pytest.approx(1.0)


def test_density_of_degenerate_region_raises():
    ps = PointSet.empty(Box(lo=[1.0], hi=[1.0]))
    with pytest.raises(DegenerateRegionError):
        density(ps)


def test_translate_hull_shifts_pointset(zsqrt2, unit_window):
    h = sample_hull(zsqrt2, RngStream(3))
    region = Box(lo=[-10.0], hi=[10.0])
    shift = 0.7
    base = pointset_of_hull(zsqrt2, unit_window, h, region)
    moved = pointset_of_hull(zsqrt2, unit_window, translate_hull(zsqrt2, h, [shift]), region.translate([shift]))
    np.testing.assert_allclose(moved.points, base.points + shift, atol=1e-9)


def test_action_moves_pointset_backwards(zsqrt2, unit_window):
    h = sample_hull(zsqrt2, RngStream(4))
    region = Box(lo=[-10.0], hi=[10.0])
    g = 1.25
    base = pointset_of_hull(zsqrt2, unit_window, h, region)
    moved = pointset_of_hull(zsqrt2, unit_window, act_on_hull(zsqrt2, [g], h), region.translate([-g]))
    np.testing.assert_allclose(moved.points, base.points - g, atol=1e-9)


def test_hull_point_must_be_reduced():
    with pytest.raises(ValueError):
        HullPoint(coefficients=[0.5, 1.0])


def test_meyer_check_on_integers(integers):
    report = check_meyer(_integer_points(integers), r_test=0.5, diff_radius=5.0)
    assert report.min_gap == pytest.approx(1.0)
    assert report.difference_set_min_gap == pytest.approx(1.0)
    assert report.meyer
    assert report.n_differences == 11


def test_meyer_check_on_model_set(zsqrt2, unit_window):
    ps = cut_and_project(zsqrt2, unit_window, [0.0], [0.0], Box(lo=[-200.0], hi=[200.0]))
    report = check_meyer(ps, r_test=0.25)
    assert report.min_gap == pytest.approx(1.0)
    # P − P contains 1 and √2
    assert report.difference_set_min_gap == pytest.approx(SQRT2 - 1.0)
    assert report.uniformly_discrete and report.meyer
    assert not check_meyer(ps, r_test=0.5).meyer


def test_thinning_extremes(zsqrt2, unit_window):
    ps = cut_and_project(zsqrt2, unit_window, [0.0], [0.0], Box(lo=[-20.0], hi=[20.0]))
    assert thin_bernoulli(ps, 1.0, RngStream(0)) is ps
    assert len(thin_bernoulli(ps, 0.0, RngStream(0))) == 0
    with pytest.raises(ValueError):
        thin_bernoulli(ps, 1.5, RngStream(0))


def test_thinned_sampler_scales_constant(zsqrt2, unit_window, region20):
    sampler = CutProjectSampler(zsqrt2, unit_window, region20, thinning=0.5)
    assert sampler.siegel_constant == pytest.approx(0.5 / SQRT2)
    h, ps = sampler.sample(RngStream(2))
    full = pointset_of_hull(zsqrt2, unit_window, h, region20)
    assert len(ps) <= len(full)


def test_window_union_volume():
    window = Window(dimension=1, boxes=[Box(lo=[-1.0], hi=[1.0]), Box(lo=[0.0], hi=[2.0])])
    assert window.volume == pytest.approx(3.0)
    square = Window(
        dimension=2,
        boxes=[Box(lo=[0.0, 0.0], hi=[2.0, 2.0]), Box(lo=[1.0, 1.0], hi=[3.0, 3.0])],
    )
    assert square.volume == pytest.approx(7.0)
    assert Window.empty(1).is_empty


def test_pointset_csv_rows(zsqrt2, unit_window):
    ps = cut_and_project(zsqrt2, unit_window, [0.0], [0.0], Box(lo=[-3.0], hi=[3.0]))
    header, rows = pointset_to_csv(ps, internal=True)
    assert header == ["x1", "y1"]
    assert len(rows) == len(ps)
    values = np.array([[float(v) for v in row] for row in rows])
    np.testing.assert_array_equal(values[:, 0], ps.points[:, 0])
    assert math.isclose(values[-1, 1], 1.0 - SQRT2)


def test_pointset_csv_without_internal(integers):
    header, rows = pointset_to_csv(_integer_points(integers, 2.0))
    assert header == ["x1"]
    assert [row[0] for row in rows] == ["-2", "-1", "0", "1"]


def test_thinning_follows_the_stream(zsqrt2, unit_window, region20):
    sampler = CutProjectSampler(zsqrt2, unit_window, region20, thinning=0.5)
    h = sample_hull(zsqrt2, RngStream(3))
    first = sampler.realise(h, RngStream(4))
    np.testing.assert_array_equal(first.points, sampler.realise(h, RngStream(4)).points)
    patterns = {tuple(sampler.realise(h, RngStream(seed)).points[:, 0]) for seed in range(5, 10)}
    assert len(patterns) > 1


def test_projection_must_be_injective():
    with pytest.raises(ProjectionError) as info:
        CutProjectScheme(name="collapsed", phys_dim=1, internal_dim=1, basis=[[1.0, 1.0], [0.0, 1.0]])
    assert info.value.relation == [-1, 1]
    assert integer_relation([[1.0, SQRT2]]) is None
    np.testing.assert_array_equal(integer_relation([[2.0, 3.0, SQRT2]]), [-3, 2, 0])


def test_window_rejects_unknown_fields():
    with pytest.raises(ValueError):
        Window(dimension=1, lo=[-1.0], hi=[1.0])
    with pytest.raises(ValueError):
        Box(lo=[0.0], hi=[1.0], closed=True)


def _brute_force(phys_lo, phys_hi, window_half_width, reach=6):
    ks = np.arange(-reach, reach + 1)
    a, b = np.meshgrid(ks, ks, indexing="ij")
    phys = (a + b * SQRT2).ravel()
    internal = (a - b * SQRT2).ravel()
    keep = (phys >= phys_lo) & (phys < phys_hi) & (np.abs(internal) <= window_half_width)
    return phys[keep], internal[keep]


def test_enumeration_matches_brute_force(zsqrt2):
    for lo, hi, c in [(-5.0, 5.0, 1.0), (0.3, 7.1, 0.5), (-2.0, 2.0, 2.5)]:
        gamma = enumerate_gamma(zsqrt2, Box(lo=[lo], hi=[hi]), Window.interval(-c, c))
        phys, internal = _brute_force(lo, hi, c, reach=12)
        order = np.argsort(phys)
        np.testing.assert_allclose(np.sort(gamma.phys[:, 0]), phys[order])
        np.testing.assert_allclose(gamma.internal[np.argsort(gamma.phys[:, 0]), 0], internal[order])


def test_enumeration_matches_brute_force_in_the_plane():
    scheme = builtin_scheme("zsqrt2_squared")
    gamma = enumerate_gamma(scheme, Box.cube(2, 3.0), Window.from_bounds([-1.0, -1.0], [1.0, 1.0]))
    phys, _ = _brute_force(-3.0, 3.0, 1.0)
    expected = sorted((x, y) for x in phys for y in phys)
    found = sorted(map(tuple, np.round(gamma.phys, 6)))
    assert len(found) == len(expected)
    np.testing.assert_array_equal(np.array(found), np.array(sorted(map(tuple, np.round(expected, 6)))))


def test_thinning_counts_are_binomial(zsqrt2, unit_window, region20):
    ps = cut_and_project(zsqrt2, unit_window, [0.0], [0.0], region20)
    n, p, trials = len(ps), 0.3, 300
    counts = []
    for seed in range(trials):
        kept = thin_bernoulli(ps, p, RngStream(seed))
        assert np.all(np.isin(kept.points[:, 0], ps.points[:, 0]))
        counts.append(len(kept))
    counts = np.array(counts, dtype=float)
    sd = math.sqrt(n * p * (1.0 - p))
    assert abs(counts.mean() - n * p) <= MULTIPLIER * sd / math.sqrt(trials)
    assert counts.std(ddof=1) == pytest.approx(sd, rel=0.25)


def test_thinned_upper_density_scales_with_p(zsqrt2, unit_window):
    p = 0.5
    region = Box(lo=[-800.0], hi=[800.0])
    full = cut_and_project(zsqrt2, unit_window, [0.0], [0.0], region)
    thinned = thin_bernoulli(full, p, RngStream(21))
    boxes = [Box(lo=[-400.0], hi=[400.0]), region]
    expected = p * density(full)
    smallest = int(np.sum(boxes[0].contains(full.points)))
    sd = math.sqrt(smallest * p * (1.0 - p)) / boxes[0].volume
    assert abs(upper_density(thinned, boxes) - expected) <= MULTIPLIER * sd
    assert upper_density(full, boxes) == pytest.approx(density(full), rel=0.01)

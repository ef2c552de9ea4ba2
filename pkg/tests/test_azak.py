import math

import numpy as np
import pytest

from siegelzak.config import settings
from siegelzak.core.errors import (
    CharacterError,
    DegenerateRegionError,
    DimensionMismatchError,
    ProductConditionError,
    SectionError,
)
from siegelzak.models.geometry import Box, Window
from siegelzak.models.heisenberg import Character, HeisPoint
from siegelzak.models.schema import TestFunction
from siegelzak.services.azak import (
    ZSQRT2,
    aperiodic_zak,
    build_heis_lambda,
    check_stabilizer,
    eigenfunction_handle,
    exact_eigenfunction,
    exact_phase,
    folner_eigenfunction,
    h_trace,
    heis_hitting_count_bound,
    heis_pointset,
    heis_siegel_constant,
    hitting_set_two_paths,
    hull_elements,
    mc_isometry,
    mc_twisted_mean_zero,
    reduce_heis,
    sample_heis_hull,
    select_character,
    trace_margin,
    translate_heis_hull,
    zak_equivariance,
)
from siegelzak.services.cps import cut_and_project
from siegelzak.services.eigen import folner_average
from siegelzak.services.heisenberg import SQRT2, heis_mul_arrays, zsqrt2_dual_character
from siegelzak.services.numerics import RngStream
from siegelzak.services.siegel import HeisenbergTransversal, hitting_set

MULTIPLIER = 4.0
REGION = Box(lo=[-4.0, -4.0, -6.0], hi=[4.0, 4.0, 6.0])


@pytest.fixture(scope="module")
def lat():
    return build_heis_lambda(1.0, 1.0, 1.0, 6.0)


@pytest.fixture
def xi():
    return zsqrt2_dual_character(1, 0)


@pytest.fixture(scope="module")
def selected(lat):
    return select_character(lat, 0.5, 20.0, 100.0)


def _on_transversal(lat, seed):
    x = sample_heis_hull(lat, RngStream(seed))
    l = float(heis_pointset(lat, x, REGION).points[0, 2])
    return translate_heis_hull(x, [0.0, 0.0, l])


def _circular_distance(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b)) % 1.0
    return np.minimum(d, 1.0 - d)


def test_product_condition_holds_for_unit_windows(lat):
    assert lat.products_checked == len(lat.lambda_u) * len(lat.lambda_v)
    assert np.all(np.abs(lat.lambda_u[:, 1]) <= 1.0)
    assert heis_siegel_constant(lat) == pytest.approx(2.0 / (2.0 * SQRT2))


def test_product_condition_failure_has_witness():
    with pytest.raises(ProductConditionError) as info:
        build_heis_lambda(1.0, 0.5, 1.0, 6.0)
    assert abs(info.value.witness["conjugate"]) > 0.5


def test_empty_window_is_rejected():
    with pytest.raises(DegenerateRegionError):
        build_heis_lambda(0.0, 1.0, 1.0, 6.0)


def test_hull_samples_are_reproducible(lat):
    a = sample_heis_hull(lat, RngStream(5))
    b = sample_heis_hull(lat, RngStream(5))
    np.testing.assert_array_equal(a.coefficients, b.coefficients)
    assert np.all((a.coefficients >= 0.0) & (a.coefficients < 1.0))


def test_lattice_translate_leaves_hull_point_fixed(lat):
    x = sample_heis_hull(lat, RngStream(6))
    g1, g2 = hull_elements(x)
    gamma = np.array([1.0, 0.0, 0.0])
    moved = reduce_heis(heis_mul_arrays(gamma, g1)[0], heis_mul_arrays(gamma, g2)[0])
    assert np.all(_circular_distance(moved.coefficients, x.coefficients) < 1e-9)


def test_identity_translate_is_trivial(lat):
    x = sample_heis_hull(lat, RngStream(7))
    same = translate_heis_hull(x, HeisPoint.identity())
    assert np.all(_circular_distance(same.coefficients, x.coefficients) < 1e-9)


def test_pointset_respects_windows(lat):
    x = sample_heis_hull(lat, RngStream(8))
    ps = heis_pointset(lat, x, REGION)
    assert len(ps) > 0
    assert np.all(REGION.contains(ps.points))
    limits = np.array([lat.c_u, lat.c_z, lat.c_v])
    assert np.all(np.abs(ps.internal) <= limits + 1e-9)


def test_hitting_set_of_product_lattice(lat):
    hits = hitting_set(lat.pointset, HeisenbergTransversal())
    np.testing.assert_allclose(hits.coords[:, 0], np.sort(lat.lambda_v[:, 0]))


def test_hitting_set_two_paths_agree(lat):
    x = sample_heis_hull(lat, RngStream(9))
    direct, via_hull = hitting_set_two_paths(lat, x, Box(lo=[-3.0], hi=[3.0]))
    np.testing.assert_allclose(direct, via_hull, atol=1e-9)


def test_heisenberg_hitting_count_bound(lat):
    K = Box(lo=[-1.0, -1.0, -2.0], hi=[1.0, 1.0, 2.0])
    report = heis_hitting_count_bound(lat, K, 200, RngStream(5))
    assert report.passed and report.n_samples == 200
    assert 1 <= report.max_count <= report.bound


def test_hitting_set_lies_in_the_shifted_v_model_set(lat):
    x = sample_heis_hull(lat, RngStream(9))
    v_box = Box(lo=[-3.0], hi=[3.0])
    direct, _ = hitting_set_two_paths(lat, x, v_box)
    g1, g2 = hull_elements(x)
    v_set = cut_and_project(ZSQRT2, Window.interval(-lat.c_v, lat.c_v), [g1[2]], [g2[2]], v_box)
    assert len(direct) > 0
    for v in direct:
        assert np.min(np.abs(v_set.points[:, 0] - v)) < 1e-9


def test_heisenberg_hitting_bound_needs_a_box_in_g(lat):
    with pytest.raises(DimensionMismatchError):
        heis_hitting_count_bound(lat, Box(lo=[-1.0], hi=[1.0]), 10, RngStream(0))


def test_stabilizer():
    report = check_stabilizer(Character(s=1.0), [0.0, 1.0])
    assert report.passed and report.n_checked == 1
    assert report.witness_u == pytest.approx(0.25)
    trivial = check_stabilizer(Character(s=0.0), [1.0, 2.0])
    assert not trivial.passed and trivial.violations == [1.0, 2.0]


def test_exact_eigenfunction_on_transversal(lat, xi):
    y = _on_transversal(lat, 10)
    assert abs(exact_eigenfunction(xi, y, lat)) == pytest.approx(1.0)


def test_exact_eigenfunction_off_transversal(lat, xi):
    x = sample_heis_hull(lat, RngStream(10))
    with pytest.raises(SectionError):
        exact_eigenfunction(xi, x, lat)


def test_exact_eigenfunction_is_the_same_for_every_trace_point(lat, xi):
    y = _on_transversal(lat, 14)
    trace = h_trace(lat, y, 6.0)
    assert trace.h_points.shape[0] > 10
    phases = exact_phase(xi, trace.h_points[:, 1], trace.internal)
    np.testing.assert_allclose(phases, phases[0], atol=1e-9)
    assert exact_eigenfunction(xi, y, lat) == pytest.approx(phases[0], abs=1e-9)


def test_trace_margin_of_unit_windows(lat):
    # both gap sets are {1, √2}
    assert trace_margin(lat) == pytest.approx(1.0, abs=1e-6)


def test_select_character_from_epsilon_dual(lat, selected):
    xi, found = selected
    assert xi.s == pytest.approx(6.0 + 17.0 / (2.0 * SQRT2))
    assert xi.s_star == pytest.approx(6.0 - 17.0 / (2.0 * SQRT2))
    assert found.defect <= 0.5
    assert check_stabilizer(xi, lat.lambda_v[:, 0]).passed


def test_select_character_without_candidates(lat):
    with pytest.raises(CharacterError):
        select_character(lat, 0.5, 5.0, 100.0)


def test_folner_eigenfunction_tracks_exact(lat, selected):
    xi, _ = selected
    y = _on_transversal(lat, 15)
    exact = exact_eigenfunction(xi, y, lat)
    # exact and ξ(p) differ by e^{2πi s*(w_t − w_u w_v)} with |w_t − w_u w_v| ≤ 2
    spread = 2.0 * math.sin(2.0 * math.pi * abs(xi.s_star))
    for side in settings.FOLNER_SIDES:
        value, delta = folner_eigenfunction(xi, y, lat, side)
        assert abs(value) == pytest.approx(1.0)
        assert delta <= 0.5
        assert abs(value - exact) <= 2.0 * delta + spread + 1e-9


def test_folner_trace_certifies_every_translate(lat, selected):
    xi, _ = selected
    y = _on_transversal(lat, 16)
    psi = eigenfunction_handle(xi, lat, "folner", side=8.0)
    trace = h_trace(lat, y, psi.radius)
    result = folner_average([0.0, xi.s], trace.h_points, psi.radius, 8.0)
    assert result.excluded_fraction == 0.0
    assert result.n_translates == 64


def test_zak_of_zero_function(lat, xi):
    f = TestFunction(kind="gaussian", dimension=1, amplitude=0.0)
    x = sample_heis_hull(lat, RngStream(11))
    assert aperiodic_zak(f, xi, x, lat, REGION) == 0


def test_zak_hands_every_hit_to_psi(lat, xi, gaussian1d):
    x = sample_heis_hull(lat, RngStream(17))
    ps = heis_pointset(lat, x, REGION)
    hits = hitting_set(ps, HeisenbergTransversal(), REGION.select([2]))
    seen = []

    def psi(y):
        seen.append(y)
        return 1.0

    untwisted = aperiodic_zak(gaussian1d, xi, x, lat, REGION, psi=psi, ps=ps)
    assert len(seen) == len(hits)
    expected = np.exp(-math.pi * hits.coords[:, 0] ** 2).sum()
    assert untwisted == pytest.approx(expected)


def test_zak_needs_galois_partner(lat, gaussian1d):
    x = sample_heis_hull(lat, RngStream(12))
    with pytest.raises(CharacterError):
        aperiodic_zak(gaussian1d, Character(s=0.5), x, lat, REGION)


def test_zak_equivariance(lat, xi, gaussian1d):
    x = sample_heis_hull(lat, RngStream(13))
    g = HeisPoint(u=[0.2], t=0.1, v=[0.3])
    lhs, rhs = zak_equivariance(gaussian1d, xi, x, g, lat, REGION)
    assert lhs == pytest.approx(rhs, abs=1e-8)


def test_twisted_mean_zero(lat, xi, gaussian1d):
    report = mc_twisted_mean_zero(gaussian1d, xi, lat, REGION, 300, RngStream(91), MULTIPLIER)
    assert report.reference == 0
    assert report.passed


def test_twisted_mean_zero_for_selected_character(lat, selected, gaussian1d):
    xi, _ = selected
    report = mc_twisted_mean_zero(gaussian1d, xi, lat, REGION, 500, RngStream(92), MULTIPLIER)
    assert report.n_samples == 500
    assert report.passed


def test_isometry_needs_enough_samples(lat, xi, gaussian1d):
    with pytest.raises(ValueError):
        mc_isometry(gaussian1d, xi, lat, REGION, 100, RngStream(1))


def test_isometry_with_exact_eigenfunction(lat, selected, gaussian1d):
    xi, _ = selected
    report = mc_isometry(gaussian1d, xi, lat, REGION, 2000, RngStream(101), multiplier=MULTIPLIER)
    assert report.tolerance == pytest.approx(0.05)
    assert report.psi_defect == 0.0 and report.folner_box is None
    assert abs(report.ratio - 1.0) <= MULTIPLIER * report.ratio_stderr
    assert report.mean_zero.passed


def test_isometry_with_folner_eigenfunction(lat, selected, gaussian1d):
    xi, _ = selected
    report = mc_isometry(
        gaussian1d, xi, lat, REGION, 1000, RngStream(103), psi_mode="folner", folner_side=2.0, multiplier=MULTIPLIER
    )
    assert report.folner_box == 2.0
    assert 0.0 < report.psi_defect <= 0.5
    assert report.tolerance == pytest.approx(max(0.05, 4.0 * report.psi_defect))
    assert report.passed

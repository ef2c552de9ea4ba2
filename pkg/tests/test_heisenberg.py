import math

import numpy as np
import pytest

from siegelzak.core.errors import CharacterError, TailBoundError
from siegelzak.models.geometry import Box
from siegelzak.models.heisenberg import Character, HeisPoint
from siegelzak.models.schema import TestFunction
from siegelzak.services.heisenberg import (
    SQRT2,
    classical_zak,
    cocycle_alpha,
    cocycle_alpha_product,
    h_action,
    heis_box_product,
    heis_inv,
    heis_mul_arrays,
    heis_mul,
    l2_inner_product,
    schrodinger_action,
    zak_inner_product,
    zak_values,
    zsqrt2_dual_character,
)

THETA_ZERO = sum(math.exp(-math.pi * k * k) for k in range(-6, 7))


def _point(u, t, v):
    return HeisPoint(u=[u], t=t, v=[v])


def test_group_law():
    product = heis_mul(_point(1.0, 0.0, 0.0), _point(0.0, 0.0, 1.0))
    np.testing.assert_allclose(product.as_array(), [1.0, 1.0, 1.0])
    reverse = heis_mul(_point(0.0, 0.0, 1.0), _point(1.0, 0.0, 0.0))
    np.testing.assert_allclose(reverse.as_array(), [1.0, -1.0, 1.0])


def test_inverse():
    g = _point(1.0, 2.0, 3.0)
    np.testing.assert_allclose(heis_inv(g).as_array(), [-1.0, -2.0, -3.0])
    np.testing.assert_allclose(heis_mul(g, heis_inv(g)).as_array(), np.zeros(3))
    e = HeisPoint.identity()
    np.testing.assert_allclose(heis_inv(e).as_array(), np.zeros(3))


def test_associativity():
    rng = np.random.default_rng(0)
    a, b, c = (HeisPoint.from_array(rng.normal(size=3)) for _ in range(3))
    left = heis_mul(heis_mul(a, b), c)
    right = heis_mul(a, heis_mul(b, c))
    np.testing.assert_allclose(left.as_array(), right.as_array())


def test_box_product_of_axis_segments():
    a = Box(lo=[0.0, 0.0, 0.0], hi=[1.0, 0.0, 0.0])
    b = Box(lo=[0.0, 0.0, 0.0], hi=[0.0, 0.0, 1.0])
    ab = heis_box_product(a, b)
    np.testing.assert_allclose(ab.lo, [0.0, 0.0, 0.0])
    np.testing.assert_allclose(ab.hi, [1.0, 1.0, 1.0])
    ba = heis_box_product(b, a)
    np.testing.assert_allclose(ba.lo, [0.0, -1.0, 0.0])
    np.testing.assert_allclose(ba.hi, [1.0, 0.0, 1.0])


def test_box_product_holds_every_product():
    rng = np.random.default_rng(3)
    a = Box(lo=[-1.0, -0.5, -2.0], hi=[0.5, 1.0, 1.0])
    b = Box(lo=[-0.3, -1.0, 0.0], hi=[1.2, 0.0, 1.5])
    g = rng.uniform(a.lo, a.hi, size=(500, 3))
    h = rng.uniform(b.lo, b.hi, size=(500, 3))
    assert np.all(heis_box_product(a, b).contains_closed(heis_mul_arrays(g, h), tol=1e-12))


def test_h_action():
    u, t = h_action((1.0, 0.0), 1.0)
    assert u[0] == 1.0 and t == -2.0
    u, t = h_action((0.0, 5.0), 3.0)
    assert t == 5.0


def test_cocycle_closed_form_matches_product():
    rng = np.random.default_rng(1)
    for _ in range(5):
        g = HeisPoint.from_array(rng.normal(size=3))
        v0 = rng.normal(size=1)
        closed = cocycle_alpha(g, v0).as_array()
        product = cocycle_alpha_product(g, v0).as_array()
        np.testing.assert_allclose(closed, product, atol=1e-12)
        assert closed[2] == 0.0


def test_classical_zak_values(gaussian1d):
    assert classical_zak(gaussian1d, 1, HeisPoint.identity()) == pytest.approx(THETA_ZERO, rel=1e-9)
    assert THETA_ZERO == pytest.approx(1.0864348, rel=1e-7)
    half = classical_zak(gaussian1d, 1, _point(0.0, 0.5, 0.0))
    assert half == pytest.approx(-THETA_ZERO, rel=1e-9)


def test_zak_quasi_periodicity(gaussian1d):
    x = _point(0.3, 0.1, 0.2)
    shifted = _point(0.3, 0.1, 1.2)
    ratio = classical_zak(gaussian1d, 1, shifted) / classical_zak(gaussian1d, 1, x)
    assert ratio == pytest.approx(np.exp(2j * math.pi * 0.3), abs=1e-9)


def test_zak_needs_integer_frequency(gaussian1d):
    with pytest.raises(CharacterError):
        zak_values(gaussian1d, 0, np.zeros((1, 3)))
    with pytest.raises(CharacterError):
        zak_values(gaussian1d, 0.5, np.zeros((1, 3)))


def test_zak_tail_bound(gaussian1d):
    with pytest.raises(TailBoundError):
        classical_zak(gaussian1d, 1, HeisPoint.identity(), k_trunc=1)


def test_zak_is_isometric(gaussian1d):
    value = zak_inner_product(gaussian1d, gaussian1d, 1, 32)
    assert value.real == pytest.approx(2.0**-0.5, abs=1e-6)
    assert abs(value.imag) < 1e-9


def test_zak_inner_product_with_zero(gaussian1d):
    zero = TestFunction(kind="gaussian", dimension=1, amplitude=0.0)
    assert zak_inner_product(gaussian1d, zero, 1, 16) == 0


def test_zak_inner_product_rejects_coarse_grid(gaussian1d):
    with pytest.raises(ValueError):
        zak_inner_product(gaussian1d, gaussian1d, 1, 4)


def test_schrodinger_identity_and_unitarity(gaussian1d):
    xi = Character(s=1.0)
    same = schrodinger_action(HeisPoint.identity(), gaussian1d, xi)
    pts = np.linspace(-2.0, 2.0, 9)
    np.testing.assert_allclose(same(pts), np.exp(-math.pi * pts**2))
    moved = schrodinger_action(_point(0.4, 0.2, 0.7), gaussian1d, xi)
    assert abs(l2_inner_product(moved, moved)) == pytest.approx(2.0**-0.5, rel=1e-6)


def test_schrodinger_needs_central_frequency(gaussian1d):
    with pytest.raises(CharacterError):
        schrodinger_action(HeisPoint.identity(), gaussian1d, Character(s=0.0))


def test_dual_character_is_integral_on_lattice():
    xi = zsqrt2_dual_character(1, 1)
    for a, b in [(1, 0), (0, 1), (3, -2)]:
        value, conjugate = a + b * SQRT2, a - b * SQRT2
        pairing = xi.s * value + xi.s_star * conjugate
        assert pairing == pytest.approx(round(pairing), abs=1e-12)


def test_group_axioms_on_random_triples():
    rng = np.random.default_rng(7)
    a, b, c = (rng.uniform(-5.0, 5.0, size=(300, 3)) for _ in range(3))
    np.testing.assert_allclose(
        heis_mul_arrays(heis_mul_arrays(a, b), c), heis_mul_arrays(a, heis_mul_arrays(b, c)), atol=1e-9
    )
    np.testing.assert_allclose(heis_mul_arrays(a, np.zeros_like(a)), a)
    np.testing.assert_allclose(heis_mul_arrays(np.zeros_like(a), a), a)
    np.testing.assert_allclose(heis_mul_arrays(a, -a), np.zeros_like(a), atol=1e-12)
    np.testing.assert_allclose(heis_mul_arrays(-a, a), np.zeros_like(a), atol=1e-12)


def test_schrodinger_action_is_a_homomorphism(gaussian1d):
    rng = np.random.default_rng(11)
    xi = Character(s=0.75)
    pts = np.linspace(-2.0, 2.0, 17)
    for _ in range(5):
        g1, g2 = (HeisPoint.from_array(rng.uniform(-1.0, 1.0, size=3)) for _ in range(2))
        nested = schrodinger_action(g1, schrodinger_action(g2, gaussian1d, xi), xi)
        direct = schrodinger_action(heis_mul(g1, g2), gaussian1d, xi)
        np.testing.assert_allclose(nested(pts), direct(pts), atol=1e-12)


def test_zak_intertwines_schrodinger_with_right_translation(gaussian1d):
    rng = np.random.default_rng(13)
    xs = rng.uniform(0.0, 1.0, size=(20, 3))
    for n in (1, 2):
        for _ in range(3):
            g = HeisPoint.from_array(rng.uniform(-1.0, 1.0, size=3))
            moved = schrodinger_action(g, gaussian1d, Character(s=float(n)))
            lhs = zak_values(moved, n, xs)
            rhs = zak_values(gaussian1d, n, heis_mul_arrays(xs, np.tile(g.as_array(), (len(xs), 1))))
            np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_cocycle_identity():
    rng = np.random.default_rng(17)
    for _ in range(20):
        g1, g2 = (HeisPoint.from_array(rng.normal(size=3)) for _ in range(2))
        v0 = rng.normal(size=1)
        left = cocycle_alpha(heis_mul(g1, g2), v0)
        right = heis_mul(cocycle_alpha(g1, v0), cocycle_alpha(g2, v0 + g1.v))
        np.testing.assert_allclose(left.as_array(), right.as_array(), atol=1e-10)

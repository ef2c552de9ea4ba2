import logging
import math
from typing import Callable, Optional, Sequence, Union

import numpy as np

from siegelzak.config import settings
from siegelzak.core.errors import CharacterError, DimensionMismatchError, TailBoundError
from siegelzak.models.geometry import Box
from siegelzak.models.heisenberg import Character, HeisPoint
from siegelzak.models.schema import TestFunction
from siegelzak.services.numerics import midpoint_grid, stable_sum, testfn_eval, testfn_support_box

logger = logging.getLogger("heisenberg")

SQRT2 = math.sqrt(2.0)


# --- Group law ---


def heis_mul_arrays(a: np.ndarray, b: np.ndarray, n: int = 1) -> np.ndarray:
    """Row-wise product of (N, 2n+1) arrays of Mal'cev coordinates (u, t, v)."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    au, at, av = a[:, :n], a[:, n], a[:, n + 1 :]
    bu, bt, bv = b[:, :n], b[:, n], b[:, n + 1 :]
    t = at + bt + np.sum(au * bv, axis=1) - np.sum(bu * av, axis=1)
    return np.concatenate([au + bu, t[:, None], av + bv], axis=1)


def heis_inv_arrays(a: np.ndarray, n: int = 1) -> np.ndarray:
    return -np.atleast_2d(a)


def heis_box_product(a: Box, b: Box, n: int = 1) -> Box:
    """Smallest box holding every product g·h with g ∈ a, h ∈ b; the extremes sit at corners."""
    ca, cb = a.corners(), b.corners()
    products = heis_mul_arrays(np.repeat(ca, len(cb), axis=0), np.tile(cb, (len(ca), 1)), n)
    return Box(lo=products.min(axis=0), hi=products.max(axis=0))


def heis_mul(a: HeisPoint, b: HeisPoint) -> HeisPoint:
    """(u,t,v)·(u',t',v') = (u+u', t+t'+⟨u,v'⟩−⟨u',v⟩, v+v')."""
    if a.n != b.n:
        raise DimensionMismatchError(a.n, b.n, "Heisenberg factor")
    return HeisPoint(
        u=a.u + b.u,
        t=a.t + b.t + float(np.dot(a.u, b.v)) - float(np.dot(b.u, a.v)),
        v=a.v + b.v,
    )


def heis_inv(g: HeisPoint) -> HeisPoint:
    return HeisPoint(u=-g.u, t=-g.t, v=-g.v)


def h_action(h: Sequence, v) -> tuple:
    """Right action of V on H = U×Z: (u, t).v = (u, t − 2⟨u, v⟩)."""
    u = np.atleast_1d(np.asarray(h[0], dtype=float))
    t = float(h[1])
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if u.shape != v.shape:
        raise DimensionMismatchError(u.shape[0], v.shape[0], "V element")
    return u, t - 2.0 * float(np.dot(u, v))


def section(v0) -> HeisPoint:
    v0 = np.atleast_1d(np.asarray(v0, dtype=float))
    return HeisPoint(u=np.zeros_like(v0), t=0.0, v=v0)


def cocycle_alpha(g: HeisPoint, v0) -> HeisPoint:
    """
    α(g, Hx) = s(Hx)·g·s(Hxg)⁻¹ for s(H(u,t,v)) = (0,0,v); closed form
    (u, t − ⟨u,v⟩ − 2⟨u,v0⟩, 0).
    """
    v0 = np.atleast_1d(np.asarray(v0, dtype=float))
    t = g.t - float(np.dot(g.u, g.v)) - 2.0 * float(np.dot(g.u, v0))
    return HeisPoint(u=g.u, t=t, v=np.zeros_like(g.v))


def cocycle_alpha_product(g: HeisPoint, v0) -> HeisPoint:
    """α(g, v0) computed from its defining product."""
    v0 = np.atleast_1d(np.asarray(v0, dtype=float))
    moved = heis_mul(section(v0), g)
    return heis_mul(moved, heis_inv(section(moved.v)))


# --- Schrödinger model ---


class SchrodingerImage:
    """A function on V = ℝ^n given as a callable, with the box outside of which it is negligible."""

    def __init__(self, func: Callable[[np.ndarray], np.ndarray], support: Box, is_complex: bool = True):
        self.func = func
        self.support = support
        self.is_complex = is_complex

    @property
    def dimension(self) -> int:
        return self.support.dimension

    def __call__(self, v0) -> np.ndarray:
        return self.func(np.asarray(v0, dtype=float))


FunctionOnV = Union[TestFunction, SchrodingerImage]


def as_image(f: FunctionOnV) -> SchrodingerImage:
    if isinstance(f, SchrodingerImage):
        return f
    return SchrodingerImage(lambda pts: np.atleast_1d(testfn_eval(f, pts)), testfn_support_box(f), f.is_complex)


def schrodinger_action(g: HeisPoint, phi: FunctionOnV, xi: Character) -> SchrodingerImage:
    """π(g)φ(v0) = ξ(α(g, v0))·φ(v0 + v)."""
    if xi.s == 0.0:
        raise CharacterError("Schrödinger model needs a non-zero central frequency")
    base = as_image(phi)
    if base.dimension != g.n:
        raise DimensionMismatchError(g.n, base.dimension, "function on V")
    omega = xi.omega(g.n)
    u, t, v, s = g.u, g.t, g.v, xi.s

    def image(v0: np.ndarray) -> np.ndarray:
        pts = v0.reshape(-1, g.n)
        phase = s * (t - float(np.dot(u, v)) - 2.0 * pts @ u) + float(np.dot(omega, u))
        return np.exp(2j * math.pi * phase) * base(pts + v)

    return SchrodingerImage(image, base.support.translate(-v))


# --- Classical Zak transform ---


def _k_grid(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    ranges = [np.arange(int(a), int(b) + 1) for a, b in zip(lo, hi)]
    mesh = np.meshgrid(*ranges, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1).astype(float)


def zak_values(f: FunctionOnV, n: int, points: np.ndarray, k_trunc: Optional[int] = None) -> np.ndarray:
    """
    Z f(Γ(u,t,v)) = e^{2πin(t−⟨u,v⟩)} Σ_{k∈ℤ^d} f(v+k) e^{−4πin⟨u,k⟩} at rows of
    `points`. The k range covers the support box of f for every row; a
    requested k_trunc that cannot do so raises TailBoundError.
    """
    if n == 0 or int(n) != n:
        raise CharacterError(f"Periodic Zak transform needs a non-zero integer frequency, got {n}")
    image = as_image(f)
    d = image.dimension
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != 2 * d + 1:
        raise DimensionMismatchError(2 * d + 1, pts.shape[1], "Heisenberg point")
    u, t, v = pts[:, :d], pts[:, d], pts[:, d + 1 :]

    need_lo = np.ceil(image.support.lo - v.max(axis=0))
    need_hi = np.floor(image.support.hi - v.min(axis=0))
    if k_trunc is None:
        lo, hi = need_lo, need_hi
    else:
        lo = np.full(d, -float(k_trunc))
        hi = np.full(d, float(k_trunc))
        if np.any(lo > need_lo) or np.any(hi < need_hi):
            raise TailBoundError(
                f"k range [{lo}, {hi}] misses the support of f, need [{need_lo}, {need_hi}]"
            )
    ks = _k_grid(lo, hi)
    if ks.shape[0] == 0:
        return np.zeros(pts.shape[0], dtype=complex)

    shifted = (v[:, None, :] + ks[None, :, :]).reshape(-1, d)
    fv = np.asarray(image(shifted)).reshape(pts.shape[0], ks.shape[0])
    phase = np.exp(-4j * math.pi * n * (u @ ks.T))
    series = np.sum(fv * phase, axis=1)
    prefactor = np.exp(2j * math.pi * n * (t - np.sum(u * v, axis=1)))
    return prefactor * series


def classical_zak(f: FunctionOnV, n: int, x: HeisPoint, k_trunc: Optional[int] = None) -> complex:
    return complex(zak_values(f, n, x.as_array()[None, :], k_trunc)[0])


def zak_inner_product(f1: FunctionOnV, f2: FunctionOnV, n: int, grid_per_axis: int) -> complex:
    """⟨Z f1, Z f2⟩ over the fundamental domain [0,1)^{2d+1} by the midpoint rule."""
    if grid_per_axis < settings.MIN_QUADRATURE_GRID:
        raise ValueError(
            f"Grid of {grid_per_axis} points per axis is below {settings.MIN_QUADRATURE_GRID}"
        )
    d = as_image(f1).dimension
    nodes, cell = midpoint_grid(Box(lo=np.zeros(2 * d + 1), hi=np.ones(2 * d + 1)), grid_per_axis)
    z1 = zak_values(f1, n, nodes)
    z2 = zak_values(f2, n, nodes)
    value = complex(stable_sum(z1 * np.conj(z2))) * cell
    logger.debug(f"Zak inner product at {grid_per_axis} points/axis: {value}")
    return value


def l2_inner_product(f1: FunctionOnV, f2: FunctionOnV, grid_per_axis: int = 512) -> complex:
    """⟨f1, f2⟩_{L²(V)} over the union of the two support boxes."""
    a, b = as_image(f1), as_image(f2)
    box = Box(lo=np.minimum(a.support.lo, b.support.lo), hi=np.maximum(a.support.hi, b.support.hi))
    nodes, cell = midpoint_grid(box, grid_per_axis)
    return complex(stable_sum(a(nodes) * np.conj(b(nodes)))) * cell


def zsqrt2_dual_character(m: int, k: int) -> Character:
    """
    Central character from the dual of {(a+b√2, a−b√2)}:
    (s, s*) = (m/2 + k/(2√2), m/2 − k/(2√2)).
    """
    s = m / 2.0 + k / (2.0 * SQRT2)
    s_star = m / 2.0 - k / (2.0 * SQRT2)
    return Character(s=s, s_star=s_star)

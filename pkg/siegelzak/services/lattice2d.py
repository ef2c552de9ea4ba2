import logging
import math
from typing import Optional, Tuple, Union

import numpy as np

from siegelzak.config import settings
from siegelzak.core.errors import EnumerationCapError, RejectionCapError
from siegelzak.models.geometry import Box, PointSet, UnimodularLattice2
from siegelzak.models.schema import PointMode, SiegelReport, TestFunction
from siegelzak.services.numerics import RngStream, rng_uniform, stable_sum, testfn_eval, truncation_radius
from siegelzak.services.siegel import IdentityTransversal, mc_siegel_formula

logger = logging.getLogger("lattice2d")

VISIBLE_DENSITY = 6.0 / math.pi**2
MAX_TEST_RADIUS = 10.0


def sample_unimodular_lattice(stream: RngStream, cap: Optional[int] = None) -> UnimodularLattice2:
    """
    Haar-random unimodular planar lattice. τ = x + iy is drawn from the
    modular fundamental domain with density ∝ y⁻², the rotation uniformly;
    the basis is R(θ)·y^{-1/2}·[[1, x], [0, y]].
    """
    cap = settings.REJECTION_CAP if cap is None else cap
    for _ in range(cap):
        a, b = rng_uniform(stream, 2)
        y = (math.sqrt(3.0) / 2.0) / (1.0 - a)
        x = b - 0.5
        if x * x + y * y >= 1.0:
            break
    else:
        raise RejectionCapError(cap)
    theta = 2.0 * math.pi * float(rng_uniform(stream, 1)[0])
    rotation = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    shape = np.array([[1.0, x], [0.0, y]]) / math.sqrt(y)
    return UnimodularLattice2(basis=rotation @ shape)


def rotate_lattice(L: UnimodularLattice2, theta: float) -> UnimodularLattice2:
    rotation = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    return UnimodularLattice2(basis=rotation @ L.basis)


def _coefficients(L: UnimodularLattice2, R: float, cap: Optional[int] = None) -> np.ndarray:
    """Integer pairs (k1, k2) with |k1·b1 + k2·b2| ≤ R, the origin excluded."""
    cap = settings.MAX_CANDIDATES if cap is None else cap
    if R < 0:
        raise ValueError(f"Radius must be non-negative, got {R}")
    b1, b2 = L.basis[:, 0], L.basis[:, 1]
    # |k1| ≤ R·‖row 1 of B⁻¹‖
    k1_max = int(math.floor(R * float(np.linalg.norm(L.inverse[0])) + 1e-9))
    if (2 * k1_max + 1) > cap:
        raise EnumerationCapError(2 * k1_max + 1, cap)
    g22 = float(b2 @ b2)
    g12 = float(b1 @ b2)
    g11 = float(b1 @ b1)
    rows = []
    total = 0
    for k1 in range(-k1_max, k1_max + 1):
        # g22·k2² + 2·g12·k1·k2 + g11·k1² − R² ≤ 0
        disc = (g12 * k1) ** 2 - g22 * (g11 * k1 * k1 - R * R)
        if disc < 0:
            continue
        root = math.sqrt(disc)
        lo = math.ceil((-g12 * k1 - root) / g22 - 1e-9)
        hi = math.floor((-g12 * k1 + root) / g22 + 1e-9)
        if hi < lo:
            continue
        total += hi - lo + 1
        if total > cap:
            raise EnumerationCapError(total, cap)
        k2 = np.arange(lo, hi + 1)
        rows.append(np.stack([np.full_like(k2, k1), k2], axis=1))
    if not rows:
        return np.zeros((0, 2), dtype=np.int64)
    coeffs = np.concatenate(rows).astype(np.int64)
    vectors = coeffs @ L.basis.T
    norms = np.linalg.norm(vectors, axis=1)
    keep = (norms <= R) & np.any(coeffs != 0, axis=1)
    return coeffs[keep]


def lattice_points(L: UnimodularLattice2, R: float) -> np.ndarray:
    """Non-zero lattice vectors of norm ≤ R."""
    return _coefficients(L, R) @ L.basis.T


def visible_points(L: UnimodularLattice2, R: float) -> np.ndarray:
    coeffs = _coefficients(L, R)
    primitive = np.gcd(coeffs[:, 0], coeffs[:, 1]) == 1
    return coeffs[primitive] @ L.basis.T


def visible_density(L: UnimodularLattice2, R: float) -> float:
    """|visible ∩ B_R| / |Λ ∩ B_R \\ {0}|, which tends to 6/π²."""
    coeffs = _coefficients(L, R)
    if coeffs.shape[0] == 0:
        return 0.0
    return float(np.mean(np.gcd(coeffs[:, 0], coeffs[:, 1]) == 1))


class UnimodularLatticeSampler:
    """
    Sampler for the classical Siegel formula: each draw is a random lattice
    restricted to the box of half-width `half_width`. The point set excludes
    the origin; in visible mode it keeps only primitive vectors.
    """

    def __init__(self, half_width: float, mode: Union[PointMode, str] = PointMode.ALL):
        self.mode = PointMode(mode)
        self.region = Box.cube(2, half_width)
        self.radius = math.sqrt(2.0) * half_width

    @property
    def siegel_constant(self) -> float:
        return VISIBLE_DENSITY if self.mode == PointMode.VISIBLE else 1.0

    def realise(self, L: UnimodularLattice2) -> PointSet:
        if self.mode == PointMode.VISIBLE:
            pts = visible_points(L, self.radius)
        else:
            pts = lattice_points(L, self.radius)
        pts = pts[self.region.contains(pts)] if pts.shape[0] else pts
        return PointSet(points=pts, region=self.region)

    def sample(self, stream: RngStream) -> Tuple[UnimodularLattice2, PointSet]:
        L = sample_unimodular_lattice(stream)
        return L, self.realise(L)


def mc_classical_siegel(
    f: TestFunction,
    mode: Union[PointMode, str],
    n_samples: int,
    stream: RngStream,
    multiplier: Optional[float] = None,
    workers: Optional[int] = None,
) -> SiegelReport:
    """E[Σ_{x∈Λ∖0} f(x)] against ∫f (all points) or (6/π²)·∫f (visible points)."""
    radius = truncation_radius(f) + float(np.max(np.abs(f.center_array)))
    if radius > MAX_TEST_RADIUS:
        raise ValueError(f"Test function reaches radius {radius:.3g}, limit {MAX_TEST_RADIUS}")
    sampler = UnimodularLatticeSampler(radius + 1.0, mode)
    experiment = "classical_siegel" if sampler.mode == PointMode.ALL else "classical_siegel_visible"
    return mc_siegel_formula(
        sampler,
        f,
        IdentityTransversal(2, exclude_identity=True),
        n_samples,
        stream,
        experiment=experiment,
        multiplier=multiplier,
        workers=workers,
    )


def check_visible_decomposition(L: UnimodularLattice2, f: TestFunction, R: float) -> Tuple[float, float]:
    """
    Σ_{x∈Λ∖0, |x|≤R} f(x) and Σ_{k≥1} Σ_{visible x, |kx|≤R} f(kx); the two
    agree exactly because every non-zero vector is uniquely k times a
    primitive one.
    """
    everything = lattice_points(L, R)
    direct = stable_sum(np.atleast_1d(testfn_eval(f, everything))) if everything.shape[0] else 0.0
    visible = visible_points(L, R)
    terms = []
    k = 1
    while visible.shape[0]:
        scaled = k * visible
        inside = np.linalg.norm(scaled, axis=1) <= R
        visible = visible[inside]
        if visible.shape[0]:
            terms.append(np.atleast_1d(testfn_eval(f, k * visible)))
        k += 1
    decomposed = stable_sum(np.concatenate(terms)) if terms else 0.0
    logger.debug(f"Visible decomposition to radius {R}: {direct} vs {decomposed} ({k - 1} shells)")
    return direct, decomposed

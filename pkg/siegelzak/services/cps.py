import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel
from scipy.spatial import cKDTree

from siegelzak.config import settings
from siegelzak.core.errors import DegenerateRegionError, DimensionMismatchError, EnumerationCapError
from siegelzak.models.geometry import (
    ARRAY_CONFIG,
    Box,
    CutProjectScheme,
    FloatArray,
    HullPoint,
    IntArray,
    PointSet,
    Window,
)
from siegelzak.models.schema import MeyerReport
from siegelzak.services.numerics import RngStream, rng_uniform

logger = logging.getLogger("cps")

SQRT2 = math.sqrt(2.0)

SCHEMES: Dict[str, Dict] = {
    "zsqrt2": {
        "phys_dim": 1,
        "internal_dim": 1,
        "basis": [[1.0, SQRT2], [1.0, -SQRT2]],
    },
    "integers": {
        "phys_dim": 1,
        "internal_dim": 0,
        "basis": [[1.0]],
    },
    # coordinates (x1, x2, y1, y2): Γ = {(α, β, α*, β*) : α, β ∈ ℤ[√2]}
    "zsqrt2_squared": {
        "phys_dim": 2,
        "internal_dim": 2,
        "basis": [
            [1.0, SQRT2, 0.0, 0.0],
            [0.0, 0.0, 1.0, SQRT2],
            [1.0, -SQRT2, 0.0, 0.0],
            [0.0, 0.0, 1.0, -SQRT2],
        ],
    },
}


class GammaPoints(BaseModel):
    """Enumerated lattice points γ = (γ₁, γ₂) with their integer coefficients."""

    model_config = ARRAY_CONFIG

    phys: FloatArray
    internal: FloatArray
    coefficients: IntArray

    def __len__(self) -> int:
        return int(self.phys.shape[0])

    def pairs(self) -> List[Tuple[np.ndarray, np.ndarray]]:
        return list(zip(self.phys, self.internal))


def builtin_scheme(name: str) -> CutProjectScheme:
    if name not in SCHEMES:
        raise KeyError(f"Unknown scheme {name!r}; available: {sorted(SCHEMES)}")
    return CutProjectScheme(name=name, **SCHEMES[name])


def enumerate_gamma_batch(
    basis: np.ndarray, lo: np.ndarray, hi: np.ndarray, cap: Optional[int] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Integer coefficient vectors k with B·k inside the closed box [lo[i], hi[i]]
    for some row i, returned with the index i of that box.

    All but the last coefficient range over the image of the box corners under
    B⁻¹, inflated by 1; the last coefficient is solved from the linear
    constraints. The result is a superset up to a 1e-9 relative slack, callers
    filter exactly.
    """
    cap = settings.MAX_CANDIDATES if cap is None else cap
    basis = np.asarray(basis, dtype=float)
    lo = np.atleast_2d(np.asarray(lo, dtype=float))
    hi = np.atleast_2d(np.asarray(hi, dtype=float))
    n = basis.shape[0]
    inv = np.linalg.inv(basis)

    grids, owners = [], []
    total = 0
    for row, (box_lo, box_hi) in enumerate(zip(lo, hi)):
        corners = Box(lo=box_lo, hi=box_hi).corners() @ inv.T
        cmin = np.floor(corners.min(axis=0)) - 1
        cmax = np.ceil(corners.max(axis=0)) + 1
        ranges = [np.arange(cmin[j], cmax[j] + 1, dtype=np.int64) for j in range(n - 1)]
        count = int(np.prod([len(r) for r in ranges])) if ranges else 1
        total += count
        if total > cap:
            raise EnumerationCapError(total, cap)
        if ranges:
            mesh = np.meshgrid(*ranges, indexing="ij")
            grids.append(np.stack([m.ravel() for m in mesh], axis=-1))
        else:
            grids.append(np.zeros((1, 0), dtype=np.int64))
        owners.append(np.full(count, row, dtype=np.int64))

    if not grids:
        return np.zeros((0, n), dtype=np.int64), np.zeros(0, dtype=np.int64)
    outer = np.concatenate(grids)
    owner = np.concatenate(owners)

    partial = outer @ basis[:, : n - 1].T if n > 1 else np.zeros((outer.shape[0], n))
    last = basis[:, n - 1]
    slack = 1e-9 * (1.0 + np.maximum(np.abs(lo), np.abs(hi)))
    row_lo = (lo - slack)[owner]
    row_hi = (hi + slack)[owner]

    kmin = np.full(outer.shape[0], -np.inf)
    kmax = np.full(outer.shape[0], np.inf)
    for j in range(n):
        if abs(last[j]) > 1e-15:
            a = (row_lo[:, j] - partial[:, j]) / last[j]
            b = (row_hi[:, j] - partial[:, j]) / last[j]
            kmin = np.maximum(kmin, np.minimum(a, b))
            kmax = np.minimum(kmax, np.maximum(a, b))
        else:
            inside = (partial[:, j] >= row_lo[:, j]) & (partial[:, j] <= row_hi[:, j])
            kmax = np.where(inside, kmax, -np.inf)

    valid = np.isfinite(kmin) & np.isfinite(kmax) & (kmax >= kmin)
    start = np.zeros(outer.shape[0], dtype=np.int64)
    counts = np.zeros(outer.shape[0], dtype=np.int64)
    start[valid] = np.ceil(kmin[valid]).astype(np.int64)
    counts[valid] = np.maximum(np.floor(kmax[valid]).astype(np.int64) - start[valid] + 1, 0)

    rep = np.repeat(np.arange(outer.shape[0]), counts)
    offsets = np.arange(rep.shape[0]) - np.repeat(np.cumsum(counts) - counts, counts)
    last_coeff = start[rep] + offsets
    coeffs = np.concatenate([outer[rep], last_coeff[:, None]], axis=1)
    return coeffs, owner[rep]


def _check_dims(scheme: CutProjectScheme, region: Box, window: Window):
    if region.dimension != scheme.phys_dim:
        raise DimensionMismatchError(scheme.phys_dim, region.dimension, "physical region")
    if window.dimension != scheme.internal_dim:
        raise DimensionMismatchError(scheme.internal_dim, window.dimension, "window")


def _lattice_candidates(
    scheme: CutProjectScheme, region: Box, window: Window, g1: np.ndarray, g2: np.ndarray
):
    search_region = region.translate(-g1)
    wbox = window.bounding_box().translate(-g2)
    lo = np.concatenate([search_region.lo, wbox.lo])
    hi = np.concatenate([search_region.hi, wbox.hi])
    coeffs, _ = enumerate_gamma_batch(scheme.basis, lo, hi)
    gamma = coeffs @ scheme.basis.T
    phys, internal = scheme.split(gamma)
    return coeffs, phys, internal


def enumerate_gamma(scheme: CutProjectScheme, phys_region: Box, window: Window) -> GammaPoints:
    """Lattice points γ with pr₁(γ) ∈ phys_region (half-open) and pr₂(γ) ∈ window."""
    _check_dims(scheme, phys_region, window)
    d, m = scheme.phys_dim, scheme.internal_dim
    if not window.boxes:
        return GammaPoints(
            phys=np.zeros((0, d)), internal=np.zeros((0, m)), coefficients=np.zeros((0, d + m))
        )
    coeffs, phys, internal = _lattice_candidates(
        scheme, phys_region, window, np.zeros(d), np.zeros(m)
    )
    mask = phys_region.contains(phys) & window.contains(internal)
    logger.debug(f"enumerate_gamma({scheme.name}): {int(mask.sum())} of {len(mask)} candidates")
    return GammaPoints(phys=phys[mask], internal=internal[mask], coefficients=coeffs[mask])


def cut_and_project(
    scheme: CutProjectScheme, window: Window, g1, g2, region: Box
) -> PointSet:
    """P = {γ₁ + g1 : γ ∈ Γ, γ₂ + g2 ∈ W} ∩ region, with internal partners γ₂ + g2."""
    _check_dims(scheme, region, window)
    g1 = np.asarray(g1, dtype=float).reshape(scheme.phys_dim)
    g2 = np.asarray(g2, dtype=float).reshape(scheme.internal_dim)
    if not window.boxes:
        return PointSet.empty(region)
    coeffs, phys, internal = _lattice_candidates(scheme, region, window, g1, g2)
    phys = phys + g1
    internal = internal + g2
    mask = region.contains(phys) & window.contains(internal)
    return PointSet(
        points=phys[mask], region=region, internal=internal[mask], coefficients=coeffs[mask]
    )


def sample_hull(scheme: CutProjectScheme, stream: RngStream) -> HullPoint:
    """Haar sample of Γ\\(ℝ^d × ℝ^m): uniform coefficients on [0,1)^{d+m}."""
    return HullPoint(coefficients=rng_uniform(stream, scheme.rank))


def hull_translation(scheme: CutProjectScheme, h: HullPoint) -> Tuple[np.ndarray, np.ndarray]:
    g = scheme.basis @ h.coefficients
    return g[: scheme.phys_dim], g[scheme.phys_dim :]


def reduce_coefficients(c: np.ndarray) -> np.ndarray:
    c = np.mod(np.asarray(c, dtype=float), 1.0)
    c[c >= 1.0] = 0.0
    return c


def translate_hull(scheme: CutProjectScheme, h: HullPoint, a, b=None) -> HullPoint:
    """Hull point whose point set is P_h + a (and whose internal shift grows by b)."""
    a = np.asarray(a, dtype=float).reshape(scheme.phys_dim)
    b = np.zeros(scheme.internal_dim) if b is None else np.asarray(b, dtype=float).reshape(-1)
    delta = scheme.inverse @ np.concatenate([a, b])
    return HullPoint(coefficients=reduce_coefficients(h.coefficients + delta))


def act_on_hull(scheme: CutProjectScheme, g, h: HullPoint) -> HullPoint:
    """g.x, the translation action with P_{g.x} = P_x − g."""
    return translate_hull(scheme, h, -np.asarray(g, dtype=float))


def pointset_of_hull(scheme: CutProjectScheme, window: Window, h: HullPoint, region: Box) -> PointSet:
    g1, g2 = hull_translation(scheme, h)
    return cut_and_project(scheme, window, g1, g2, region)


def density(ps: PointSet) -> float:
    volume = ps.region.volume
    if volume <= 0.0:
        raise DegenerateRegionError(f"Cannot take the density of a zero-volume region {ps.region}")
    return len(ps) / volume


def _unique_rows(values: np.ndarray, tol: float) -> np.ndarray:
    if values.shape[0] == 0:
        return values
    keys = np.rint(values / tol).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    return values[np.sort(first)]


def _min_gap(points: np.ndarray) -> float:
    if points.shape[0] < 2:
        return float("inf")
    dist, _ = cKDTree(points).query(points, k=2)
    return float(dist[:, 1].min())


def difference_set(ps: PointSet, radius: float) -> np.ndarray:
    """Deduplicated {p − q : p, q ∈ ps, |p − q| ≤ radius}, including 0."""
    if len(ps) == 0:
        return np.zeros((0, ps.dimension))
    pairs = cKDTree(ps.points).query_pairs(r=radius, output_type="ndarray")
    diffs = ps.points[pairs[:, 1]] - ps.points[pairs[:, 0]]
    all_diffs = np.concatenate([diffs, -diffs, np.zeros((1, ps.dimension))])
    return _unique_rows(all_diffs, settings.DEDUP_TOL)


def check_meyer(ps: PointSet, r_test: float, diff_radius: Optional[float] = None) -> MeyerReport:
    diff_radius = settings.MEYER_DIFF_RADIUS if diff_radius is None else diff_radius
    gap = _min_gap(ps.points)
    diffs = difference_set(ps, diff_radius)
    diff_gap = _min_gap(diffs)
    uniformly_discrete = gap > r_test
    report = MeyerReport(
        uniformly_discrete=uniformly_discrete,
        meyer=uniformly_discrete and diff_gap > r_test,
        min_gap=gap,
        difference_set_min_gap=diff_gap,
        r_test=r_test,
        diff_radius=diff_radius,
        n_differences=int(diffs.shape[0]),
    )
    logger.info(f"Meyer check: gaps ({gap:.6g}, {diff_gap:.6g}) at r_test={r_test}")
    return report


def thin_bernoulli(ps: PointSet, p: float, stream: RngStream) -> PointSet:
    """Keep each point independently with probability p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Retention probability must lie in [0, 1], got {p}")
    if p == 1.0:
        return ps
    keep = rng_uniform(stream, len(ps)) < p
    return ps.subset(keep)


class CutProjectSampler:
    """
    Random elements of the hull of a cut-and-project set, realised inside a
    fixed region. With `thinning` < 1 every realisation is Bernoulli-thinned
    and the Siegel constant scales accordingly.
    """

    def __init__(
        self,
        scheme: CutProjectScheme,
        window: Window,
        region: Box,
        thinning: float = 1.0,
        pair=None,
    ):
        _check_dims(scheme, region, window)
        if not 0.0 <= thinning <= 1.0:
            raise ValueError(f"Thinning probability must lie in [0, 1], got {thinning}")
        self.scheme = scheme
        self.window = window
        self.region = region
        self.thinning = thinning
        self.pair = pair

    @property
    def siegel_constant(self) -> float:
        if self.pair is not None:
            base = self.pair.siegel_constant
        else:
            base = self.window.volume / self.scheme.covolume
        return self.thinning * base

    def realise(self, h: HullPoint, stream: RngStream) -> PointSet:
        """The point set of h, thinned with the stream's child 1 when `thinning` < 1."""
        ps = pointset_of_hull(self.scheme, self.window, h, self.region)
        if self.thinning < 1.0:
            ps = thin_bernoulli(ps, self.thinning, stream.spawn(1))
        return ps

    def sample(self, stream: RngStream) -> Tuple[HullPoint, PointSet]:
        h = sample_hull(self.scheme, stream)
        return h, self.realise(h, stream)


def pointset_to_csv(ps: PointSet, internal: bool = False) -> Tuple[List[str], List[List[str]]]:
    """Header and rows of the point CSV: x1..xd (then y1..ym), 17 significant digits."""
    header = [f"x{i + 1}" for i in range(ps.dimension)]
    values = ps.points
    if internal and ps.internal is not None:
        header += [f"y{i + 1}" for i in range(ps.internal.shape[1])]
        values = np.concatenate([ps.points, ps.internal], axis=1)
    rows = [[format(float(v), ".17g") for v in row] for row in values]
    return header, rows

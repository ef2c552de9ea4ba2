import logging
import math
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree

from siegelzak.config import settings
from siegelzak.core.errors import FolnerExclusionError, SectionError
from siegelzak.models.geometry import Box, CutProjectScheme, Window
from siegelzak.models.schema import DualFrequency, EpsDualQuery, FolnerResult, SectionEntry
from siegelzak.services.cps import GammaPoints, enumerate_gamma
from siegelzak.services.numerics import midpoint_grid

logger = logging.getLogger("eigen")

TIE_TOL = 1e-12
DEFECT_CHUNK = 4096


def _as_rows(values, dimension: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr[:, None] if dimension in (None, 1) else arr[None, :]
    return arr


# --- Defects and ε-duals ---


def defect(xi, points) -> float:
    """sup_λ |e^{2πi⟨ξ,λ⟩} − 1| over the given points."""
    pts = _as_rows(points)
    if pts.shape[0] == 0:
        return 0.0
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return float(np.max(np.abs(np.exp(2j * math.pi * (pts @ xi)) - 1.0)))


def defects(freqs, points) -> np.ndarray:
    """Row-wise defects of many frequencies, evaluated in chunks."""
    pts = _as_rows(points)
    xs = _as_rows(freqs, pts.shape[1])
    if pts.shape[0] == 0:
        return np.zeros(xs.shape[0])
    out = np.empty(xs.shape[0])
    for start in range(0, xs.shape[0], DEFECT_CHUNK):
        block = xs[start : start + DEFECT_CHUNK]
        phases = np.exp(2j * math.pi * (block @ pts.T))
        out[start : start + DEFECT_CHUNK] = np.max(np.abs(phases - 1.0), axis=1)
    return out


def internal_frequency_bound(epsilon: float, window: Window) -> float:
    """|s*| up to which 2|sin(π s* w)| ≤ ε for every w in the window."""
    radius = window.radius
    if radius == 0.0:
        return float("inf")
    return math.asin(min(1.0, epsilon / 2.0)) / (math.pi * radius)


def dual_points(scheme: CutProjectScheme, window: Window, freq_box: Box, epsilon: float) -> GammaPoints:
    """
    Dual-lattice vectors (ξ, ξ*) with ξ ∈ freq_box and ξ* small enough that
    the character is ε-close to 1 on the model set.
    """
    dual = scheme.dual()
    if scheme.internal_dim == 0:
        return enumerate_gamma(dual, freq_box, Window.everything())
    bound = internal_frequency_bound(epsilon, window) * (1.0 + 1e-9)
    internal = Window.from_bounds(-np.full(scheme.internal_dim, bound), np.full(scheme.internal_dim, bound))
    return enumerate_gamma(dual, freq_box, internal)


def dual_candidates(scheme: CutProjectScheme, window: Window, freq_box: Box, epsilon: float) -> np.ndarray:
    """Physical parts of `dual_points`."""
    return dual_points(scheme, window, freq_box, epsilon).phys


def grid_candidates(
    points,
    epsilon: float,
    freq_range: Tuple[float, float],
    spacing: Optional[float] = None,
) -> np.ndarray:
    """
    Frequencies in a 1-D range found without a dual scheme: local minima of the
    defect on a uniform grid against a coarse truncation, then polished by
    bounded golden-section search while the truncation doubles up to the full
    point set. Returns the polished minima whose full defect is ≤ ε.
    """
    pts = _as_rows(points)
    if pts.shape[1] != 1:
        raise ValueError("Grid candidates are only generated for 1-D point sets")
    spacing = settings.DUAL_GRID_SPACING if spacing is None else spacing
    lo, hi = freq_range
    grid = np.arange(lo, hi + spacing / 2.0, spacing)
    norms = np.abs(pts[:, 0])
    full_radius = float(norms.max()) if norms.size else 0.0
    radius = min(1.0 / (8.0 * spacing), full_radius)

    coarse = defects(grid, pts[norms <= radius])
    left = np.concatenate([[np.inf], coarse[:-1]])
    right = np.concatenate([coarse[1:], [np.inf]])
    minima = np.flatnonzero((coarse <= left) & (coarse <= right) & (coarse <= min(2.0, 2.0 * epsilon)))

    found: List[float] = []
    for idx in minima:
        xi = float(grid[idx])
        r = radius
        while True:
            r = min(2.0 * r, full_radius) if r > 0 else full_radius
            subset = pts[norms <= r]
            result = minimize_scalar(
                lambda z: defect(z, subset),
                bounds=(xi - spacing, xi + spacing),
                method="bounded",
                options={"xatol": 1e-12},
            )
            xi = float(result.x)
            if r >= full_radius:
                break
        if defect(xi, pts) <= epsilon and all(abs(xi - other) > spacing / 2.0 for other in found):
            found.append(xi)
    logger.debug(f"Grid search kept {len(found)} of {len(minima)} local minima")
    return np.sort(np.asarray(found))[:, None] if found else np.zeros((0, 1))


def epsilon_dual(q: EpsDualQuery) -> List[DualFrequency]:
    """Candidates whose defect over q.lambda_points is ≤ ε, sorted by defect."""
    pts = _as_rows(q.lambda_points)
    cands = _as_rows(q.candidates, pts.shape[1])
    if cands.shape[0] == 0:
        return []
    values = defects(cands, pts)
    keep = np.flatnonzero(values <= q.epsilon)
    order = sorted(keep.tolist(), key=lambda i: (values[i], tuple(cands[i])))
    logger.info(f"ε-dual at ε={q.epsilon}: {len(order)} of {cands.shape[0]} candidates")
    return [
        DualFrequency(frequency=cands[i], defect=float(values[i]), truncation_radius=q.truncation_radius)
        for i in order
    ]


def epsilon_dual_csv(freqs: Sequence[DualFrequency]) -> Tuple[List[str], List[List[str]]]:
    dimension = int(freqs[0].frequency.shape[0]) if freqs else 1
    header = [f"xi{i + 1}" for i in range(dimension)] + ["defect", "truncation_radius"]
    rows = [
        [format(float(v), ".17g") for v in item.frequency]
        + [format(item.defect, ".17g"), format(item.truncation_radius, ".17g")]
        for item in freqs
    ]
    return header, rows


def max_gap(freqs, window: Optional[Tuple[float, float]] = None) -> float:
    """Largest gap between sorted 1-D frequencies; window edges count when given."""
    values = np.sort(np.asarray(freqs, dtype=float).ravel())
    if window is not None:
        lo, hi = window
        values = values[(values >= lo) & (values <= hi)]
        values = np.concatenate([[lo], values, [hi]])
    if values.size < 2:
        return float("inf")
    return float(np.max(np.diff(values)))


def check_relative_density(freqs, gap_bound: float, window: Optional[Tuple[float, float]] = None) -> bool:
    return max_gap(freqs, window) <= gap_bound


# --- Sections and approximate eigenfunctions ---


def _orientation(row: np.ndarray):
    nonzero = row[np.abs(row) > TIE_TOL]
    sign = 1 if nonzero.size == 0 or nonzero[0] > 0 else 0
    return (sign, tuple(row))


def section_index(Q) -> Tuple[int, bool]:
    """
    Row of the minimal-norm element of Q = P ∩ H; among ties the one whose
    first non-zero coordinate is positive and lexicographically largest.
    Returns the row and whether a tie was broken.
    """
    pts = _as_rows(Q)
    if pts.shape[0] == 0:
        raise SectionError()
    norms = np.linalg.norm(pts, axis=1)
    best = float(norms.min())
    tied = np.flatnonzero(norms <= best + TIE_TOL)
    if tied.size == 1:
        return int(tied[0]), False
    return int(max(tied.tolist(), key=lambda i: _orientation(pts[i]))), True


def build_section(Q) -> Tuple[np.ndarray, bool]:
    """Section point of Q (see `section_index`) and whether a tie was broken."""
    pts = _as_rows(Q)
    i, tied = section_index(pts)
    return pts[i], tied


def _translate_sections(pts: np.ndarray, hs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    For every h, the distance from −h to Q and the row p of Q with p + h the
    section point of Q + h, ties broken as in `section_index`.
    """
    tree = cKDTree(pts)
    if pts.shape[0] == 1:
        dist, idx = tree.query(-hs)
        return dist, idx
    dist, idx = tree.query(-hs, k=2)
    chosen = idx[:, 0].copy()
    for row in np.flatnonzero(dist[:, 1] - dist[:, 0] <= TIE_TOL):
        cands = np.asarray(tree.query_ball_point(-hs[row], dist[row, 0] + 2.0 * TIE_TOL), dtype=int)
        i, _ = section_index(pts[cands] + hs[row])
        chosen[row] = cands[i]
    return dist[:, 0], chosen


def section_table(traces: Sequence, first_id: int = 0) -> List[SectionEntry]:
    """Section of each hull sample's trace P ∩ H, keyed by sample id; element s(y) = −p."""
    table = []
    for offset, Q in enumerate(traces):
        p, tied = build_section(Q)
        table.append(SectionEntry(sample_id=first_id + offset, point=p, element=-p, tied=tied))
    return table


def approx_eigenfunction(xi, Q) -> complex:
    """φ_ξ(y) = conj(ξ(s(y))) = ξ(p) for the section point p of Q."""
    p, _ = build_section(Q)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return complex(np.exp(2j * math.pi * float(np.dot(xi, p))))


def return_time_defect(xi, Q) -> float:
    """Defect of ξ on Q − Q."""
    pts = _as_rows(Q)
    if pts.shape[0] < 2:
        return 0.0
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    phases = np.exp(2j * math.pi * (pts @ xi))
    return float(np.max(np.abs(phases[:, None] * np.conj(phases[None, :]) - 1.0)))


def folner_average(xi, Q, radius: float, side: float, grid: Optional[int] = None) -> FolnerResult:
    """
    ψ(y) = mean over h in the centred cube F of side `side` of conj(ξ(h))·φ_ξ(h⁻¹.y),
    with h⁻¹.y having trace Q + h. Q must be complete within `radius`; a
    translate whose section point is not certified by that radius is
    excluded, and too many exclusions fail the average.
    """
    grid = settings.MIN_FOLNER_GRID if grid is None else grid
    if grid < settings.MIN_FOLNER_GRID:
        raise ValueError(f"Følner grid {grid} below the minimum {settings.MIN_FOLNER_GRID}")
    pts = _as_rows(Q)
    if pts.shape[0] == 0:
        raise SectionError()
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    k = pts.shape[1]
    hs, _ = midpoint_grid(Box.cube(k, side / 2.0), grid)
    dist, idx = _translate_sections(pts, hs)
    usable = dist <= radius - np.linalg.norm(hs, axis=1)
    excluded = 1.0 - float(np.mean(usable))
    if excluded >= settings.FOLNER_MAX_EXCLUDED:
        raise FolnerExclusionError(excluded, settings.FOLNER_MAX_EXCLUDED)
    if excluded > 0.0:
        logger.warning(f"Excluded {excluded:.2%} of Følner translates at side {side}")
    used = pts[idx[usable]]
    phases = np.exp(2j * math.pi * (used @ xi))
    value = complex(np.mean(phases))
    distinct = np.unique(idx[usable])
    return FolnerResult(
        value_re=value.real,
        value_im=value.imag,
        excluded_fraction=excluded,
        n_translates=int(usable.sum()),
        side=side,
        return_defect=return_time_defect(xi, pts[distinct]),
    )


def folner_eigen_defect(xi, Q, radius: float, side: float, h0, grid: Optional[int] = None) -> float:
    """|ψ(h0⁻¹.y) − ξ(h0)·ψ(y)| for the Følner average ψ at the given side."""
    pts = _as_rows(Q)
    h0 = np.atleast_1d(np.asarray(h0, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    base = folner_average(xi, pts, radius, side, grid).value
    moved = folner_average(xi, pts + h0, radius - float(np.linalg.norm(h0)), side, grid).value
    return abs(moved - np.exp(2j * math.pi * float(np.dot(xi, h0))) * base)


TraceFn = Callable[[Any, float], Tuple[np.ndarray, np.ndarray]]


class TraceEigenfunction:
    """
    ψ on hull samples, read off the trace Q_y = P_y ∩ H that `trace(y, radius)`
    returns complete within `radius`, together with internal partners. Every
    point of H lies within `margin` of Q_y.

    With `phase`, ψ(y) is phase(p, w) at the section point p of Q_y. Otherwise
    ψ(y) is the Følner average of ξ over Q_y in the centred cube of side
    `side`, normalised to unit modulus; the trace is then taken complete
    within side·√k/2 + margin so that no translate is excluded.
    """

    def __init__(
        self,
        xi,
        trace: TraceFn,
        margin: float,
        phase: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
        side: Optional[float] = None,
        grid: Optional[int] = None,
    ):
        if phase is None and side is None:
            raise ValueError("A trace eigenfunction needs a phase or a Følner side")
        self.xi = np.atleast_1d(np.asarray(xi, dtype=float))
        self.trace = trace
        self.margin = margin
        self.phase = phase
        self.side = side
        self.grid = grid
        self.max_defect = 0.0

    @property
    def radius(self) -> float:
        if self.phase is not None:
            return self.margin
        return self.side * math.sqrt(self.xi.shape[0]) / 2.0 + self.margin

    def evaluate(self, y) -> Tuple[complex, float]:
        """ψ(y) and the return-time defect of ξ on the trace points it used."""
        pts, partners = self.trace(y, self.radius)
        if self.phase is not None:
            i, _ = section_index(pts)
            return complex(self.phase(pts[i : i + 1], partners[i : i + 1])[0]), 0.0
        result = folner_average(self.xi, pts, self.radius, self.side, self.grid)
        value = result.value
        if abs(value) == 0.0:
            raise SectionError("Følner average vanished")
        return value / abs(value), result.return_defect

    def __call__(self, y) -> complex:
        value, delta = self.evaluate(y)
        self.max_defect = max(self.max_defect, delta)
        return value

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from siegelzak.config import settings
from siegelzak.core.errors import (
    CoveringError,
    DimensionMismatchError,
    PsiUndefinedError,
    SiegelZakError,
    UnderCoveredError,
    UnsupportedModeError,
)
from siegelzak.models.geometry import Box, CompatiblePair, CutProjectScheme, HullPoint, PointSet, Window
from siegelzak.models.schema import (
    AbcReport,
    HittingBoundReport,
    McReport,
    SiegelMode,
    SiegelReport,
    TestFunction,
)
from siegelzak.services.cps import (
    SQRT2,
    CutProjectSampler,
    act_on_hull,
    enumerate_gamma,
    pointset_of_hull,
    reduce_coefficients,
    thin_bernoulli,
)
from siegelzak.services.heisenberg import heis_inv_arrays, heis_mul_arrays
from siegelzak.services.numerics import (
    RngStream,
    midpoint_grid,
    mc_report,
    stable_sum,
    testfn_eval,
    testfn_integral,
    testfn_support_box,
)
from siegelzak.services.runner import map_samples

logger = logging.getLogger("siegel")

__all__ = [
    "IdentityTransversal",
    "CoordinateTransversal",
    "HeisenbergTransversal",
    "HittingSet",
    "HullContext",
    "ProductKernel",
    "hitting_set",
    "siegel_transform",
    "twisted_siegel_transform",
    "torus_character",
    "siegel_constant",
    "mc_siegel_formula",
    "mc_hitting_intensity",
    "dual_transform",
    "mc_siegel_duality",
    "abc_bound",
    "thin_bernoulli",
    "upper_density",
    "periodize_T",
    "hitting_count_bound",
    "zsqrt2_squared_pair",
    "heisenberg_pair",
]


def _keys(coords: np.ndarray) -> np.ndarray:
    return np.rint(np.asarray(coords, dtype=float) / settings.DEDUP_TOL).astype(np.int64)


def _key_set(coords: np.ndarray) -> set:
    return {tuple(row) for row in _keys(np.atleast_2d(coords)).tolist()}


# --- Transversals ---


class IdentityTransversal:
    """H trivial: H\\G = G = ℝ^d. Optionally drops the identity coset."""

    name = "identity"

    def __init__(self, dimension: int, exclude_identity: bool = False):
        self.dimension = dimension
        self.quotient_dim = dimension
        self.exclude_identity = exclude_identity

    def project(self, g: np.ndarray) -> np.ndarray:
        return np.atleast_2d(g)

    def section(self, q: np.ndarray) -> np.ndarray:
        return np.atleast_2d(q)

    def h_part(self, g: np.ndarray) -> np.ndarray:
        return np.zeros((np.atleast_2d(g).shape[0], 0))

    def project_region(self, region: Box) -> Box:
        return region

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a + b

    def inv(self, a: np.ndarray) -> np.ndarray:
        return -a

    def in_h(self, g: np.ndarray) -> np.ndarray:
        return np.all(np.abs(np.atleast_2d(g)) <= settings.DEDUP_TOL, axis=-1)


class CoordinateTransversal(IdentityTransversal):
    """H = span of the coordinate axes `h_axes` in ℝ^d; H\\G is read off the other axes."""

    name = "coordinate"

    def __init__(self, dimension: int, h_axes: Sequence[int]):
        super().__init__(dimension)
        self.h_axes = list(h_axes)
        self.q_axes = [axis for axis in range(dimension) if axis not in self.h_axes]
        self.quotient_dim = len(self.q_axes)

    def project(self, g: np.ndarray) -> np.ndarray:
        return np.atleast_2d(g)[:, self.q_axes]

    def section(self, q: np.ndarray) -> np.ndarray:
        q = np.atleast_2d(q)
        g = np.zeros((q.shape[0], self.dimension))
        g[:, self.q_axes] = q
        return g

    def h_part(self, g: np.ndarray) -> np.ndarray:
        return np.atleast_2d(g)[:, self.h_axes]

    def project_region(self, region: Box) -> Box:
        return region.select(self.q_axes)

    def in_h(self, g: np.ndarray) -> np.ndarray:
        return np.all(np.abs(np.atleast_2d(g)[:, self.q_axes]) <= settings.DEDUP_TOL, axis=-1)


class HeisenbergTransversal:
    """
    H = U×Z in the Heisenberg group (u, t, v): π(g) = v, s(v) = (0, 0, v),
    h(g) = (u, t − ⟨u, v⟩), so that g = h(g)·s(π(g)).
    """

    name = "heisenberg"

    def __init__(self, n: int = 1):
        self.n = n
        self.dimension = 2 * n + 1
        self.quotient_dim = n
        self.exclude_identity = False

    def project(self, g: np.ndarray) -> np.ndarray:
        return np.atleast_2d(g)[:, self.n + 1 :]

    def section(self, q: np.ndarray) -> np.ndarray:
        q = np.atleast_2d(q)
        return np.concatenate([np.zeros((q.shape[0], self.n + 1)), q], axis=1)

    def h_part(self, g: np.ndarray) -> np.ndarray:
        g = np.atleast_2d(g)
        u, t, v = g[:, : self.n], g[:, self.n], g[:, self.n + 1 :]
        return np.concatenate([u, (t - np.sum(u * v, axis=1))[:, None]], axis=1)

    def project_region(self, region: Box) -> Box:
        return region.select(list(range(self.n + 1, self.dimension)))

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return heis_mul_arrays(a, b, self.n)

    def inv(self, a: np.ndarray) -> np.ndarray:
        return heis_inv_arrays(a, self.n)

    def in_h(self, g: np.ndarray) -> np.ndarray:
        return np.all(np.abs(self.project(g)) <= settings.DEDUP_TOL, axis=-1)


Transversal = Union[IdentityTransversal, CoordinateTransversal, HeisenbergTransversal]


# --- Hitting sets and transforms ---


@dataclass
class HittingSet:
    coords: np.ndarray
    multiplicity: np.ndarray
    representatives: np.ndarray

    def __len__(self) -> int:
        return int(self.coords.shape[0])


def hitting_set(ps: PointSet, T: Transversal, window_region: Optional[Box] = None) -> HittingSet:
    """
    π(ps) ∩ window_region with duplicate cosets collapsed. Representatives are
    indices into ps.points; coordinates come back in lexicographic order.
    """
    if len(ps) == 0:
        empty = np.zeros((0, T.quotient_dim))
        return HittingSet(empty, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
    coords = T.project(ps.points)
    mask = np.ones(coords.shape[0], dtype=bool)
    if window_region is not None:
        mask &= window_region.contains_closed(coords)
    if T.exclude_identity:
        mask &= np.any(np.abs(coords) > settings.DEDUP_TOL, axis=1)
    index = np.flatnonzero(mask)
    if index.size == 0:
        empty = np.zeros((0, T.quotient_dim))
        return HittingSet(empty, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
    _, first, counts = np.unique(
        _keys(coords[index]), axis=0, return_index=True, return_counts=True
    )
    reps = index[first]
    collapsed = int(np.sum(counts - 1))
    if collapsed:
        # fibres of a non-trivial H routinely hold several points
        level = logging.DEBUG if T.quotient_dim < T.dimension else logging.WARNING
        logger.log(level, f"Collapsed {collapsed} duplicate points onto {int(np.sum(counts > 1))} cosets")
    return HittingSet(coords[reps], counts.astype(np.int64), reps)


def _check_covered(f: TestFunction, ps: PointSet, T: Transversal) -> Box:
    covered = T.project_region(ps.region)
    if f.amplitude == 0.0:
        return covered
    support = testfn_support_box(f)
    if support.dimension != covered.dimension:
        raise DimensionMismatchError(covered.dimension, support.dimension, "test function")
    if not covered.covers(support):
        raise UnderCoveredError(support, covered)
    return covered


def siegel_transform(f: TestFunction, ps: PointSet, T: Transversal):
    """Sf = Σ_{Hg ∈ π(ps)} f(Hg)."""
    covered = _check_covered(f, ps, T)
    hits = hitting_set(ps, T, covered)
    if len(hits) == 0:
        return 0.0j if f.is_complex else 0.0
    return stable_sum(np.atleast_1d(testfn_eval(f, hits.coords)))


class HullContext:
    """A point set together with its hull point and the translation action g ↦ g.x."""

    def __init__(self, pointset: PointSet, hull_point, translate: Callable):
        self.pointset = pointset
        self.hull_point = hull_point
        self.translate = translate

    @classmethod
    def for_scheme(cls, scheme: CutProjectScheme, window: Window, h: HullPoint, region: Box):
        ps = pointset_of_hull(scheme, window, h, region)
        return cls(ps, h, lambda g: act_on_hull(scheme, g, h))


def twisted_siegel_transform(f: TestFunction, context: HullContext, T: Transversal, psi: Callable) -> complex:
    """S_ψ f(x) = Σ_{g ∈ s(Y_x)} f(Hg)·ψ(g.x), summed in the order of the hitting set."""
    ps = context.pointset
    covered = _check_covered(f, ps, T)
    hits = hitting_set(ps, T, covered)
    if len(hits) == 0:
        return 0j
    values = np.atleast_1d(testfn_eval(f, hits.coords)).astype(complex)
    elements = T.section(hits.coords)
    weights = np.empty(len(hits), dtype=complex)
    for i, g in enumerate(elements):
        try:
            weights[i] = complex(psi(context.translate(g)))
        except SiegelZakError:
            raise
        except Exception as exc:
            raise PsiUndefinedError(g.tolist(), str(exc)) from exc
    total = stable_sum(values * weights)
    return complex(total)


def torus_character(k: Sequence[int]) -> Callable[[HullPoint], complex]:
    """ψ_k(x) = e^{2πi⟨k, c(x)⟩}; an eigenfunction for translations on a cut-and-project hull."""
    k = np.asarray(k, dtype=float)

    def psi(h: HullPoint) -> complex:
        return complex(np.exp(2j * math.pi * float(np.dot(k, h.coefficients))))

    return psi


def torus_character_frequency(scheme: CutProjectScheme, k: Sequence[int]) -> np.ndarray:
    """Physical part of B^{-T}k: ψ_k(g.x) = e^{-2πi⟨ξ, g⟩} ψ_k(x)."""
    return (scheme.inverse.T @ np.asarray(k, dtype=float))[: scheme.phys_dim]


# --- Siegel constants ---


def siegel_constant(
    mode: Union[SiegelMode, str],
    scheme: Optional[CutProjectScheme] = None,
    window: Optional[Window] = None,
    pair: Optional[CompatiblePair] = None,
    covolume: Optional[float] = None,
) -> float:
    try:
        mode = SiegelMode(mode)
    except ValueError:
        raise UnsupportedModeError(f"Unsupported Siegel mode: {mode!r}")
    if mode == SiegelMode.TRIVIAL_H:
        if scheme is None or window is None:
            raise UnsupportedModeError("trivial_H needs a scheme and a window")
        return window.volume / scheme.covolume
    if mode == SiegelMode.COMPATIBLE_PAIR:
        if pair is None:
            raise UnsupportedModeError("compatible_pair needs a CompatiblePair descriptor")
        return pair.siegel_constant
    covolume = scheme.covolume if covolume is None and scheme is not None else covolume
    if covolume is None:
        raise UnsupportedModeError("lattice mode needs a scheme or a covolume")
    return 1.0 / covolume


def mc_siegel_formula(
    sampler,
    f: TestFunction,
    T: Transversal,
    n_samples: int,
    stream: RngStream,
    experiment: str = "siegel_formula",
    multiplier: Optional[float] = None,
    workers: Optional[int] = None,
) -> SiegelReport:
    """
    Monte-Carlo mean of Sf over sampler draws against σ(Y)·∫f. The sampler
    exposes `sample(stream) -> (x, pointset)` and `siegel_constant`.
    """
    if n_samples < 100:
        raise ValueError(f"mc_siegel_formula needs at least 100 samples, got {n_samples}")

    def one(index: int, sub: RngStream):
        _, ps = sampler.sample(sub)
        return siegel_transform(f, ps, T)

    logger.info(f"{experiment}: {n_samples} samples, seed {stream.seed}")
    values = map_samples(one, n_samples, stream, workers)
    reference = sampler.siegel_constant * testfn_integral(f)
    estimate = mc_report(values, reference, multiplier)
    second_moment = float(np.mean(np.abs(np.asarray(values)) ** 2))
    logger.info(
        f"{experiment}: mean {estimate.mean_re:.6g} vs {complex(reference).real:.6g} "
        f"(z={estimate.z_score}) second moment {second_moment:.6g}"
    )
    return SiegelReport(
        experiment=experiment,
        seed=stream.seed,
        estimate=estimate,
        reference=complex(reference).real,
        second_moment=second_moment,
        passed=estimate.passed,
    )


def mc_hitting_intensity(
    sampler,
    T: Transversal,
    box: Box,
    n_samples: int,
    stream: RngStream,
    multiplier: Optional[float] = None,
    workers: Optional[int] = None,
) -> McReport:
    """Mean of |Y_x ∩ box| / vol(box) against the sampler's Siegel constant."""
    covered = T.project_region(sampler.region)
    if not covered.covers(box):
        raise UnderCoveredError(box, covered)

    def one(index: int, sub: RngStream):
        _, ps = sampler.sample(sub)
        hits = hitting_set(ps, T, None)
        return int(np.sum(box.contains(hits.coords))) / box.volume if len(hits) else 0.0

    values = map_samples(one, n_samples, stream, workers)
    return mc_report(values, sampler.siegel_constant, multiplier)


# --- Dual transform and duality ---


def _window_nodes(window: Window, n: int) -> Tuple[np.ndarray, np.ndarray]:
    if window.dimension == 0:
        return np.zeros((1, 0)), np.ones(1)
    nodes, weights = [], []
    for cell in window.disjoint_cells:
        pts, vol = midpoint_grid(cell, n)
        nodes.append(pts)
        weights.append(np.full(pts.shape[0], vol))
    if not nodes:
        return np.zeros((0, window.dimension)), np.zeros(0)
    return np.concatenate(nodes), np.concatenate(weights)


def _hull_coefficients(scheme: CutProjectScheme, vectors: np.ndarray) -> np.ndarray:
    return reduce_coefficients(vectors @ scheme.inverse.T)


def dual_transform(
    phi: Callable[[np.ndarray], np.ndarray],
    g,
    scheme: CutProjectScheme,
    window: Window,
    grid: int = 64,
    pair: Optional[CompatiblePair] = None,
):
    """
    S*φ(Hg) = ∫_Y φ(g⁻¹.y) dσ(y) by midpoint quadrature.

    `phi` maps hull coefficient rows (N, d+m) to values. Without a pair, H is
    trivial and the fibre is W with σ = m_W / covol(Γ); with a compatible pair
    the fibre is Δ\\(H₁×H₂) × π₂(W) and g is an H\\G coordinate vector.
    Accepts one g or a stack of them.
    """
    if grid < settings.MIN_QUADRATURE_GRID:
        raise ValueError(f"Quadrature grid {grid} below the minimum {settings.MIN_QUADRATURE_GRID}")
    g_arr = np.asarray(g, dtype=float)
    single = g_arr.ndim <= 1
    gs = g_arr.reshape(1, -1) if single else g_arr
    if pair is None:
        values = _dual_trivial(phi, gs, scheme, window, grid)
    else:
        values = _dual_compatible(phi, gs, scheme, pair, grid)
    return values[0] if single else values


def _dual_trivial(phi, gs, scheme, window, grid):
    if gs.shape[1] != scheme.phys_dim:
        raise DimensionMismatchError(scheme.phys_dim, gs.shape[1], "group element")
    nodes, weights = _window_nodes(window, grid)
    if nodes.shape[0] == 0:
        return np.zeros(gs.shape[0])
    out = []
    for g in gs:
        vectors = np.concatenate([np.broadcast_to(g, (nodes.shape[0], g.shape[0])), nodes], axis=1)
        vals = np.asarray(phi(_hull_coefficients(scheme, vectors)))
        out.append(stable_sum(vals * weights) / scheme.covolume)
    return np.asarray(out)


def _dual_compatible(phi, gs, scheme, pair: CompatiblePair, grid):
    if pair.delta_basis is None or pair.projected_window is None:
        raise UnsupportedModeError(f"Compatible pair {pair.name} carries no Δ basis or projected window")
    h1 = list(pair.h_axes)
    q1 = list(pair.q_phys_axes)
    q2 = list(pair.q_internal_axes)
    h2 = [axis for axis in range(scheme.internal_dim) if axis not in q2]
    k = len(h1) + len(h2)
    if gs.shape[1] != len(q1):
        raise DimensionMismatchError(len(q1), gs.shape[1], "H\\G coordinate")

    cube, cube_vol = midpoint_grid(Box(lo=np.zeros(k), hi=np.ones(k)), grid)
    fibre = cube @ pair.delta_basis.T
    q_nodes, q_weights = _window_nodes(pair.projected_window, grid)
    n_f, n_q = fibre.shape[0], q_nodes.shape[0]
    if n_q == 0:
        return np.zeros(gs.shape[0])
    jacobian = abs(float(np.linalg.det(pair.delta_basis)))
    weights = np.repeat(q_weights, n_f) * cube_vol * jacobian

    out = []
    for g in gs:
        phys = np.zeros((n_q * n_f, scheme.phys_dim))
        internal = np.zeros((n_q * n_f, scheme.internal_dim))
        phys[:, h1] = np.tile(fibre[:, : len(h1)], (n_q, 1))
        phys[:, q1] = g
        internal[:, h2] = np.tile(fibre[:, len(h1) :], (n_q, 1))
        internal[:, q2] = np.repeat(q_nodes, n_f, axis=0)
        coeffs = _hull_coefficients(scheme, np.concatenate([phys, internal], axis=1))
        vals = np.asarray(phi(coeffs))
        out.append(stable_sum(vals * weights) / pair.gamma_covolume)
    return np.asarray(out)


def mc_siegel_duality(
    sampler: CutProjectSampler,
    f: TestFunction,
    phi: Callable[[np.ndarray], np.ndarray],
    T: Transversal,
    n_samples: int,
    stream: RngStream,
    window_grid: int = 128,
    quotient_grid: int = 256,
    multiplier: Optional[float] = None,
    slack: Optional[float] = None,
    workers: Optional[int] = None,
) -> Tuple[McReport, complex]:
    """⟨Sf, φ⟩ by Monte Carlo against ⟨f, S*φ⟩ by nested quadrature."""
    slack = settings.QUADRATURE_TOL if slack is None else slack

    def one(index: int, sub: RngStream):
        h, ps = sampler.sample(sub)
        value = siegel_transform(f, ps, T)
        return value * np.conj(complex(np.asarray(phi(h.coefficients[None, :]))[0]))

    values = map_samples(one, n_samples, stream, workers)

    support = testfn_support_box(f)
    nodes, cell = midpoint_grid(support, quotient_grid)
    f_vals = np.asarray(testfn_eval(f, nodes))
    pair = sampler.pair
    g = nodes if pair is not None else T.section(nodes)
    dual = dual_transform(phi, g, sampler.scheme, sampler.window, window_grid, pair)
    rhs = complex(stable_sum(f_vals * np.conj(dual * sampler.thinning))) * cell
    report = mc_report(values, rhs, multiplier, slack)
    logger.info(f"Siegel duality: lhs {report.mean} vs rhs {rhs} (pass={report.passed})")
    return report, rhs


# --- Combinatorial bounds ---


def abc_bound(
    A: np.ndarray,
    B: np.ndarray,
    C: np.ndarray,
    T: Transversal,
    strict: bool = False,
) -> Tuple[AbcReport, List[np.ndarray]]:
    """
    |π(A) ∩ π(B)| against |A⁻¹A ∩ CB|. Each shared coset Hb = Ha gets a
    witness a_H⁻¹a = cb with a_H ∈ A ∩ H and c ∈ C when one exists in the
    finite sets; unwitnessed cosets mean the covering (A∩H)·C ⊇ H could not
    be verified on this truncation.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if C.shape[0] and not np.all(T.in_h(C)):
        raise ValueError("C must lie in H")

    pa = _keys(T.project(A))
    pb = _keys(T.project(B))
    cosets_a = {tuple(row) for row in pa.tolist()}
    cosets_b = {tuple(row) for row in pb.tolist()}
    shared = cosets_a & cosets_b
    lhs = len(shared)

    na, nb, nc = A.shape[0], B.shape[0], C.shape[0]
    a_inv = T.inv(A)
    left = T.mul(np.repeat(a_inv, na, axis=0), np.tile(A, (na, 1)))
    quotient_set = _key_set(left)
    cb = T.mul(np.repeat(C, nb, axis=0), np.tile(B, (nc, 1)))
    bc = T.mul(np.repeat(B, nc, axis=0), np.tile(C, (nb, 1)))
    rhs = len(quotient_set & _key_set(cb))
    rhs_bc = len(quotient_set & _key_set(bc))

    a_h = A[T.in_h(A)]
    a_h_keys = _key_set(a_h) if a_h.shape[0] else set()
    witnesses, uncovered = [], 0
    rows_a = [tuple(r) for r in pa.tolist()]
    rows_b = [tuple(r) for r in pb.tolist()]
    for coset in sorted(shared):
        members_a = A[[i for i, r in enumerate(rows_a) if r == coset]]
        members_b = B[[i for i, r in enumerate(rows_b) if r == coset]]
        witness = _abc_witness(members_a, members_b, C, a_h_keys, T)
        if witness is None:
            uncovered += 1
        else:
            witnesses.append(witness)

    covering_verified = uncovered == 0
    if not covering_verified:
        message = f"Covering (A∩H)·C ⊇ H unverified for {uncovered} of {lhs} shared cosets"
        if strict:
            raise CoveringError(message)
        logger.warning(message)
    report = AbcReport(
        lhs=lhs,
        rhs=rhs,
        rhs_bc=rhs_bc,
        covering_verified=covering_verified,
        uncovered_cosets=uncovered,
        holds=lhs <= rhs,
    )
    return report, witnesses


def _abc_witness(members_a, members_b, C, a_h_keys, T) -> Optional[np.ndarray]:
    if not a_h_keys:
        return None
    for a in members_a:
        for b in members_b:
            for c in C:
                cb = T.mul(c[None, :], b[None, :])
                a_h_inv = T.mul(cb, T.inv(a[None, :]))
                a_h = T.inv(a_h_inv)
                if tuple(_keys(a_h)[0].tolist()) in a_h_keys:
                    return cb[0]
    return None


def upper_density(ps: PointSet, folner_boxes: Sequence[Box]) -> float:
    """max_n |ps ∩ D_n| / vol(D_n) over an increasing box sequence."""
    volumes = [box.volume for box in folner_boxes]
    for previous, box in zip(folner_boxes, folner_boxes[1:]):
        if not box.covers(previous):
            raise ValueError("Følner boxes must be nested")
    if any(b <= a for a, b in zip(volumes, volumes[1:])):
        raise ValueError("Følner box volumes must increase")
    if len(ps) == 0:
        return 0.0
    return max(int(np.sum(box.contains(ps.points))) / box.volume for box in folner_boxes)


# --- Periodization ---


@dataclass(frozen=True)
class ProductKernel:
    """F(g, w) = u(g)·v(w) on G × W; v = None is the constant 1."""

    u: TestFunction
    v: Optional[TestFunction] = None

    def __call__(self, g: np.ndarray, w: np.ndarray) -> np.ndarray:
        values = np.atleast_1d(testfn_eval(self.u, g))
        if self.v is not None:
            values = values * np.atleast_1d(testfn_eval(self.v, w))
        return values

    def integral(self, scheme: CutProjectScheme, window: Window, grid: int = 256) -> complex:
        """∫_G∫_Z F dν dm_G with ν = m_W / covol(Γ)."""
        if self.v is None:
            inner = window.volume
        else:
            nodes, weights = _window_nodes(window, grid)
            inner = stable_sum(np.atleast_1d(testfn_eval(self.v, nodes)) * weights)
        return complex(testfn_integral(self.u)) * inner / scheme.covolume


def periodize_T(
    F: ProductKernel,
    h: HullPoint,
    scheme: CutProjectScheme,
    window: Window,
    region: Box,
    mode: Union[SiegelMode, str] = SiegelMode.TRIVIAL_H,
):
    """TF(x) = Σ_{p ∈ P_x} F(p⁻¹, p.x); p.x is the hull point with internal coordinate w_p."""
    if SiegelMode(mode) != SiegelMode.TRIVIAL_H:
        raise UnsupportedModeError("periodize_T integrates over H only for trivial H")
    support = testfn_support_box(F.u)
    needed = Box(lo=-support.hi, hi=-support.lo)
    if F.u.amplitude != 0.0 and not region.covers(needed):
        raise UnderCoveredError(needed, region)
    ps = pointset_of_hull(scheme, window, h, region)
    if len(ps) == 0:
        return 0.0
    return stable_sum(F(-ps.points, ps.internal))


def hitting_count_bound(
    sampler: CutProjectSampler,
    K: Box,
    n_samples: int,
    stream: RngStream,
    workers: Optional[int] = None,
) -> HittingBoundReport:
    """
    max_x |P_x ∩ K| over hull samples against |Λ(W − W) ∩ (K − K)|: any two
    points of P_x ∩ K differ by an element of that finite set.
    """
    if not sampler.region.covers(K):
        raise UnderCoveredError(K, sampler.region)

    def one(index: int, sub: RngStream) -> int:
        _, ps = sampler.sample(sub)
        return int(np.sum(K.contains(ps.points))) if len(ps) else 0

    counts = map_samples(one, n_samples, stream, workers)
    diff_window = Window(
        dimension=sampler.window.dimension,
        boxes=[
            Box(lo=a.lo - b.hi, hi=a.hi - b.lo)
            for a in sampler.window.boxes
            for b in sampler.window.boxes
        ],
    )
    diff_box = Box(lo=K.lo - K.hi, hi=K.hi - K.lo)
    bound = len(enumerate_gamma(sampler.scheme, diff_box, diff_window))
    max_count = max(counts) if counts else 0
    logger.info(f"Hitting counts in {K.lo}..{K.hi}: max {max_count}, bound {bound}")
    return HittingBoundReport(
        n_samples=n_samples, max_count=max_count, bound=bound, passed=max_count <= bound
    )


# --- Compatible pairs ---


def zsqrt2_squared_pair(window: Window) -> CompatiblePair:
    """
    Γ = {(α, β, α*, β*)} in ℝ² × ℝ² with H₁ the first physical axis and H₂
    the first internal axis; Δ = {(α, 0, α*, 0)}.
    """
    projected = window.projected([1])
    return CompatiblePair(
        name="zsqrt2_squared",
        gamma_covolume=8.0,
        delta_covolume=2.0 * SQRT2,
        projected_window_volume=projected.volume,
        h_axes=[0],
        q_phys_axes=[1],
        q_internal_axes=[1],
        delta_basis=np.array([[1.0, SQRT2], [1.0, -SQRT2]]),
        projected_window=projected,
    )


def heisenberg_pair(c_v: float) -> CompatiblePair:
    """The ℤ[√2] Heisenberg scheme: π₂(W) = [−c_V, c_V], Δ = Γ ∩ (U×Z)²."""
    return CompatiblePair(
        name="heisenberg",
        gamma_covolume=(2.0 * SQRT2) ** 3,
        delta_covolume=(2.0 * SQRT2) ** 2,
        projected_window_volume=2.0 * c_v,
        projected_window=Window.interval(-c_v, c_v),
    )

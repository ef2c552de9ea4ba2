import logging
import math
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from siegelzak.config import settings
from siegelzak.core.errors import (
    CharacterError,
    DegenerateRegionError,
    DimensionMismatchError,
    ProductConditionError,
    PsiUndefinedError,
    SectionError,
    UnderCoveredError,
)
from siegelzak.models.geometry import Box, PointSet, Window
from siegelzak.models.heisenberg import Character, HeisApproxLattice, HeisHullPoint, HeisPoint, HeisTransversalSample
from siegelzak.models.schema import (
    DualFrequency,
    EpsDualQuery,
    HittingBoundReport,
    IsometryReport,
    McReport,
    PsiMode,
    StabilizerReport,
    TestFunction,
)
from siegelzak.services.cps import builtin_scheme, cut_and_project, enumerate_gamma, enumerate_gamma_batch, reduce_coefficients
from siegelzak.services.eigen import TraceEigenfunction, dual_points, epsilon_dual, max_gap
from siegelzak.services.heisenberg import (
    FunctionOnV,
    as_image,
    heis_box_product,
    heis_inv,
    heis_mul_arrays,
    schrodinger_action,
)
from siegelzak.services.numerics import RngStream, mc_report, rng_uniform, stable_sum, testfn_l2norm_sq
from siegelzak.services.runner import map_samples
from siegelzak.services.siegel import HeisenbergTransversal, HullContext, heisenberg_pair, hitting_set

logger = logging.getLogger("azak")

SQRT2 = math.sqrt(2.0)
ZSQRT2 = builtin_scheme("zsqrt2")
BASIS = ZSQRT2.basis
INVERSE = ZSQRT2.inverse
V_TOL = 1e-9


# --- Approximate lattices ---


def _window_rows(c: float, trunc: float) -> np.ndarray:
    points = enumerate_gamma(ZSQRT2, Box(lo=[-trunc], hi=[trunc]), Window.interval(-c, c))
    return np.column_stack([points.phys[:, 0], points.internal[:, 0], points.coefficients])


def build_heis_lambda(c_u: float, c_z: float, c_v: float, trunc: float) -> HeisApproxLattice:
    """
    Λ_U × Λ_Z × Λ_V for the ℤ[√2] model sets with windows [−c, c], truncated
    at `trunc`. The product condition ⟨Λ_U, Λ_V⟩ ⊆ Λ_Z is checked on every
    truncated pair in integer arithmetic.
    """
    for name, c in (("c_U", c_u), ("c_Z", c_z), ("c_V", c_v)):
        if c <= 0.0:
            raise DegenerateRegionError(f"Window {name} = {c} is empty")
    lam_u = _window_rows(c_u, trunc)
    lam_z = _window_rows(c_z, trunc)
    lam_v = _window_rows(c_v, trunc)

    au, bu = lam_u[:, 2].astype(np.int64), lam_u[:, 3].astype(np.int64)
    av, bv = lam_v[:, 2].astype(np.int64), lam_v[:, 3].astype(np.int64)
    # (a1 + b1√2)(a2 + b2√2) = (a1a2 + 2b1b2) + (a1b2 + b1a2)√2
    p = np.outer(au, av) + 2 * np.outer(bu, bv)
    q = np.outer(au, bv) + np.outer(bu, av)
    conj = p - q * SQRT2
    failing = np.argwhere(np.abs(conj) > c_z + 1e-12)
    if failing.size:
        size = np.abs(lam_u[failing[:, 0], 0]) + np.abs(lam_v[failing[:, 1], 0])
        order = np.lexsort((-lam_v[failing[:, 1], 0], -lam_u[failing[:, 0], 0], size))
        i, j = failing[order[0]]
        witness = {
            "alpha": [int(au[i]), int(bu[i])],
            "beta": [int(av[j]), int(bv[j])],
            "product": [int(p[i, j]), int(q[i, j])],
            "conjugate": float(conj[i, j]),
        }
        raise ProductConditionError(witness, f"⟨Λ_U, Λ_V⟩ ⊄ Λ_Z: |(αβ)*| = {abs(conj[i, j]):.6g} > {c_z}")

    grid = np.array(np.meshgrid(lam_u[:, 0], lam_z[:, 0], lam_v[:, 0], indexing="ij")).reshape(3, -1).T
    internal = np.array(np.meshgrid(lam_u[:, 1], lam_z[:, 1], lam_v[:, 1], indexing="ij")).reshape(3, -1).T
    region = Box.cube(3, trunc)
    pointset = PointSet(points=grid, region=region, internal=internal)
    logger.info(
        f"Heisenberg approximate lattice: |Λ_U|={len(lam_u)} |Λ_Z|={len(lam_z)} |Λ_V|={len(lam_v)}, "
        f"{p.size} products checked"
    )
    return HeisApproxLattice(
        c_u=c_u,
        c_z=c_z,
        c_v=c_v,
        trunc=trunc,
        lambda_u=lam_u,
        lambda_z=lam_z,
        lambda_v=lam_v,
        pointset=pointset,
        products_checked=int(p.size),
    )


def heis_siegel_constant(lat: HeisApproxLattice) -> float:
    return heisenberg_pair(lat.c_v).siegel_constant


# --- Hull ---


def hull_elements(x: HeisHullPoint) -> Tuple[np.ndarray, np.ndarray]:
    """(g1, g2) ∈ G × G* in Mal'cev coordinates (u, t, v)."""
    c = x.coefficients
    u = BASIS @ c[0:2]
    v = BASIS @ c[2:4]
    t = BASIS @ c[4:6]
    return np.array([u[0], t[0], v[0]]), np.array([u[1], t[1], v[1]])


def _left(h: np.ndarray, g: np.ndarray) -> np.ndarray:
    return heis_mul_arrays(h[None, :], g[None, :])[0]


def reduce_heis(g1, g2) -> HeisHullPoint:
    """
    Fundamental-domain representative of Γ_heis(g1, g2): left multiplication
    by (α, 0, 0), then (0, 0, β), then the central (0, τ, 0), each chosen to
    bring one coordinate pair into the unit coefficient box.
    """
    g1 = np.asarray(g1, dtype=float).copy()
    g2 = np.asarray(g2, dtype=float).copy()
    for axis in (0, 2, 1):
        k = INVERSE @ np.array([g1[axis], g2[axis]])
        shift = -np.floor(k)
        value = BASIS @ shift
        step1, step2 = np.zeros(3), np.zeros(3)
        step1[axis], step2[axis] = value[0], value[1]
        g1 = _left(step1, g1)
        g2 = _left(step2, g2)
    coefficients = np.concatenate(
        [INVERSE @ np.array([g1[axis], g2[axis]]) for axis in (0, 2, 1)]
    )
    return HeisHullPoint(coefficients=reduce_coefficients(coefficients))


def sample_heis_hull(lat: HeisApproxLattice, stream: RngStream) -> HeisHullPoint:
    """
    Haar sample of Γ_heis\\(G × G*). The unit box in these coefficients is a
    fundamental domain and Haar measure is Lebesgue there, so uniform
    coefficients are exact.
    """
    return HeisHullPoint(coefficients=rng_uniform(stream, 6))


def translate_heis_hull(x: HeisHullPoint, g) -> HeisHullPoint:
    """g.x = Γ(g1·g⁻¹, g2), so that P_{g.x} = P_x·g⁻¹."""
    g = g.as_array() if isinstance(g, HeisPoint) else np.asarray(g, dtype=float)
    g1, g2 = hull_elements(x)
    return reduce_heis(heis_mul_arrays(g1[None, :], -g[None, :])[0], g2)


def heis_pointset(lat: HeisApproxLattice, x: HeisHullPoint, region: Box) -> PointSet:
    """P_x = {γ·g1 : γ ∈ Γ_heis, γ*·g2 ∈ W} ∩ region, with internal partners γ*·g2."""
    g1, g2 = hull_elements(x)
    (u1, t1, v1), (u2, t2, v2) = g1, g2
    alphas = cut_and_project(ZSQRT2, Window.interval(-lat.c_u, lat.c_u), [u1], [u2], region.select([0]))
    betas = cut_and_project(ZSQRT2, Window.interval(-lat.c_v, lat.c_v), [v1], [v2], region.select([2]))
    if len(alphas) == 0 or len(betas) == 0:
        return PointSet.empty(region)

    # γg1 = (α+u1, τ + t1 + α v1 − u1 β, β+v1); unshifted α = point − u1 etc.
    alpha = np.repeat(alphas.points[:, 0] - u1, len(betas))
    alpha_c = np.repeat(alphas.internal[:, 0] - u2, len(betas))
    beta = np.tile(betas.points[:, 0] - v1, len(alphas))
    beta_c = np.tile(betas.internal[:, 0] - v2, len(alphas))
    shift = t1 + alpha * v1 - u1 * beta
    shift_c = t2 + alpha_c * v2 - u2 * beta_c

    lo = np.column_stack([region.lo[1] - shift, -lat.c_z - shift_c])
    hi = np.column_stack([region.hi[1] - shift, lat.c_z - shift_c])
    coeffs, owner = enumerate_gamma_batch(BASIS, lo, hi)
    tau = coeffs @ BASIS.T
    t_phys = tau[:, 0] + shift[owner]
    t_int = tau[:, 1] + shift_c[owner]
    keep = (t_phys >= region.lo[1]) & (t_phys < region.hi[1]) & (np.abs(t_int) <= lat.c_z)
    owner = owner[keep]

    points = np.column_stack([alpha[owner] + u1, t_phys[keep], beta[owner] + v1])
    internal = np.column_stack([alpha_c[owner] + u2, t_int[keep], beta_c[owner] + v2])
    a_index = owner // len(betas)
    b_index = owner % len(betas)
    coefficients = np.column_stack(
        [alphas.coefficients[a_index], coeffs[keep], betas.coefficients[b_index]]
    )
    inside = region.contains(points)
    return PointSet(
        points=points[inside],
        region=region,
        internal=internal[inside],
        coefficients=coefficients[inside],
    )


class HeisHullSampler:
    """Hull samples of the ℤ[√2] Heisenberg model set, realised in a fixed region of G."""

    def __init__(self, lat: HeisApproxLattice, region: Box):
        self.lat = lat
        self.region = region

    @property
    def siegel_constant(self) -> float:
        return heis_siegel_constant(self.lat)

    def sample(self, stream: RngStream) -> Tuple[HeisHullPoint, PointSet]:
        x = sample_heis_hull(self.lat, stream)
        return x, heis_pointset(self.lat, x, self.region)


# --- Characters and eigenfunctions ---


def check_stabilizer(xi: Character, lambda_v: Sequence[float]) -> StabilizerReport:
    """
    For every non-zero l, compare (l.ξ)(u, t) = e^{2πi(s(t − 2ul) + ωu)} with ξ
    at the witness u = 1/(4|s·l|), where the two differ by a sign.
    """
    omega = float(xi.omega(1)[0])
    values = [float(l) for l in np.ravel(lambda_v) if abs(float(l)) > settings.DEDUP_TOL]
    violations = []
    witness = None
    for l in values:
        product = abs(xi.s * l)
        u = 1.0 / (4.0 * product) if product > 0.0 else 1.0
        original = np.exp(2j * math.pi * omega * u)
        moved = np.exp(2j * math.pi * (omega * u - 2.0 * xi.s * l * u))
        if abs(moved - original) <= 1e-12:
            violations.append(l)
        elif witness is None:
            witness = u
    passed = not violations and bool(values)
    if violations:
        logger.warning(f"Character s={xi.s} is fixed by {len(violations)} elements of Λ(Y)")
    return StabilizerReport(
        s=xi.s, n_checked=len(values), violations=violations, witness_u=witness, passed=passed
    )


def _require_dual(xi: Character) -> float:
    if xi.s == 0.0:
        raise CharacterError("Twisted transforms need a non-zero central frequency")
    if xi.s_star is None:
        raise CharacterError(f"Character s={xi.s} carries no Galois partner s*")
    return xi.s_star


def exact_phase(xi: Character, h_t: np.ndarray, internal: np.ndarray) -> np.ndarray:
    s_star = _require_dual(xi)
    w_u, w_t, w_v = internal[:, 0], internal[:, 1], internal[:, 2]
    return np.exp(2j * math.pi * (xi.s * h_t + s_star * (w_t - w_u * w_v)))


def select_character(
    lat: HeisApproxLattice, epsilon: float, freq_hi: float, radius: float
) -> Tuple[Character, DualFrequency]:
    """
    Central character from the ε-dual of the return times of the H-traces.
    Two points of one trace differ in t by C ∈ ℤ[√2] (up to the fixed shear)
    with |C*| ≤ 2(c_Z + c_U·c_V), so the return times sit in the model set
    with that window; the smallest s ∈ (0, freq_hi] of a dual-lattice vector
    whose character is ε-close to 1 there, truncated at `radius`, is kept.
    """
    half = 2.0 * (lat.c_z + lat.c_u * lat.c_v)
    window = Window.interval(-half, half)
    returns = cut_and_project(ZSQRT2, window, [0.0], [0.0], Box(lo=[-radius], hi=[radius])).points
    duals = dual_points(ZSQRT2, window, Box(lo=[0.0], hi=[freq_hi]), epsilon)
    positive = np.flatnonzero(duals.phys[:, 0] > settings.DEDUP_TOL)
    query = EpsDualQuery(
        lambda_points=returns,
        epsilon=epsilon,
        candidates=duals.phys[positive].reshape(-1, 1),
        truncation_radius=radius,
    )
    found = epsilon_dual(query)
    if not found:
        raise CharacterError(f"No ε-dual central frequency in (0, {freq_hi}] at ε={epsilon}")
    best = min(found, key=lambda item: float(item.frequency[0]))
    i = positive[int(np.argmin(np.abs(duals.phys[positive, 0] - best.frequency[0])))]
    xi = Character(s=float(duals.phys[i, 0]), s_star=float(duals.internal[i, 0]))
    logger.info(f"Central character s={xi.s:.6g}, s*={xi.s_star:.3g}, defect {best.defect:.3g}")
    return xi, best


def trace_margin(lat: HeisApproxLattice) -> float:
    """
    Distance within which every point of H sees P_y ∩ H for y on the
    transversal: the trace is a union of columns over a shifted Λ_U, each a
    shifted Λ_Z, so half the diagonal of the largest gaps bounds it.
    """
    gap_u = max_gap(lat.lambda_u[:, 0])
    gap_z = max_gap(lat.lambda_z[:, 0])
    return 0.5 * math.hypot(gap_u, gap_z) + settings.DEDUP_TOL


def h_trace(lat: HeisApproxLattice, y: HeisHullPoint, radius: float) -> HeisTransversalSample:
    """Q_y = P_y ∩ H in coordinates (u, t), complete within |u|, |t| < radius."""
    region = Box(lo=[-radius, -radius, -V_TOL], hi=[radius, radius, V_TOL])
    ps = heis_pointset(lat, y, region)
    if len(ps) == 0:
        return HeisTransversalSample(h_points=np.zeros((0, 2)), internal=np.zeros((0, 3)), radius=radius)
    on_h = np.abs(ps.points[:, 2]) <= V_TOL
    return HeisTransversalSample(h_points=ps.points[on_h, :2], internal=ps.internal[on_h], radius=radius)


def eigenfunction_handle(
    xi: Character,
    lat: HeisApproxLattice,
    psi_mode: Union[PsiMode, str] = PsiMode.EXACT,
    side: Optional[float] = None,
    grid: Optional[int] = None,
) -> TraceEigenfunction:
    """
    ψ for the Zak sums. `exact`: e^{2πi(s·p_t + s*·(w_t − w_u w_v))} at the
    section point p of P_y ∩ H with internal partner w, the same for every
    p since s·C + s*·C* ∈ ℤ for C ∈ ℤ[√2]. `folner`: the Følner average of ξ
    over the trace in cubes of side `side`.
    """

    def trace(y: HeisHullPoint, radius: float):
        sample = h_trace(lat, y, radius)
        return sample.h_points, sample.internal

    frequency = np.concatenate([xi.omega(1), [xi.s]])
    margin = trace_margin(lat)
    if PsiMode(psi_mode) == PsiMode.EXACT:
        _require_dual(xi)
        return TraceEigenfunction(
            frequency, trace, margin, phase=lambda pts, w: exact_phase(xi, pts[:, 1], w)
        )
    if side is None:
        raise ValueError("Følner eigenfunctions need a cube side")
    return TraceEigenfunction(frequency, trace, margin, side=side, grid=grid)


def exact_eigenfunction(xi: Character, y: HeisHullPoint, lat: HeisApproxLattice) -> complex:
    return eigenfunction_handle(xi, lat)(y)


def folner_eigenfunction(
    xi: Character, y: HeisHullPoint, lat: HeisApproxLattice, side: float, grid: Optional[int] = None
) -> Tuple[complex, float]:
    """Følner-averaged eigenfunction at y normalised to unit modulus, with its return-time defect."""
    return eigenfunction_handle(xi, lat, PsiMode.FOLNER, side, grid).evaluate(y)


# --- Aperiodic Zak transform ---


def _check_support(image, region: Box):
    covered = region.select([2])
    if not covered.covers(image.support):
        raise UnderCoveredError(image.support, covered)


def aperiodic_zak(
    f: FunctionOnV,
    xi: Character,
    x: HeisHullPoint,
    lat: HeisApproxLattice,
    region: Box,
    psi: Optional[Callable[[HeisHullPoint], complex]] = None,
    ps: Optional[PointSet] = None,
) -> complex:
    """
    S_ψ f(x) = Σ_{l ∈ Y_x} f(l)·ψ(l.x), every l.x formed on the hull and handed
    to ψ. Without `psi` the exact eigenfunction handle is used.
    """
    psi = eigenfunction_handle(xi, lat) if psi is None else psi
    image = as_image(f)
    _check_support(image, region)
    ps = heis_pointset(lat, x, region) if ps is None else ps
    context = HullContext(ps, x, lambda g: translate_heis_hull(x, g))
    return _twisted_sum(image, context, HeisenbergTransversal(), psi)


def _twisted_sum(image, context: HullContext, T, psi) -> complex:
    """Σ f(l)·ψ(l.x) with every l.x formed by translating the hull point."""
    hits = hitting_set(context.pointset, T, context.pointset.region.select([2]))
    if len(hits) == 0:
        return 0j
    values = np.asarray(image(hits.coords), dtype=complex)
    weights = np.empty(len(hits), dtype=complex)
    for i, g in enumerate(T.section(hits.coords)):
        try:
            weights[i] = complex(psi(context.translate(g)))
        except SectionError as exc:
            raise PsiUndefinedError(g.tolist(), exc.detail) from exc
    return complex(stable_sum(values * weights))


def hitting_set_two_paths(
    lat: HeisApproxLattice,
    x: HeisHullPoint,
    v_box: Box,
    h_radius: Tuple[float, float] = (4.0, 4.0),
    margin: float = 0.25,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Y_x ∩ v_box twice: as the V-projection of P_x, and as the candidates l for
    which the translated hull point l.x has a point of P in H (after undoing
    the shear of the H-box).
    """
    r_u, r_t = h_radius
    region = Box(lo=[-r_u, -r_t, v_box.lo[0]], hi=[r_u, r_t, v_box.hi[0]])
    ps = heis_pointset(lat, x, region)
    direct = hitting_set(ps, HeisenbergTransversal(), v_box).coords[:, 0]

    g1, g2 = hull_elements(x)
    near = cut_and_project(
        ZSQRT2, Window.interval(-lat.c_v - margin, lat.c_v + margin), [g1[2]], [g2[2]], v_box
    )
    found = []
    for l in near.points[:, 0]:
        y = translate_heis_hull(x, [0.0, 0.0, l])
        sheared = r_t + r_u * abs(l)
        trace = heis_pointset(lat, y, Box(lo=[-r_u, -sheared, -V_TOL], hi=[r_u, sheared, V_TOL]))
        if len(trace) == 0:
            continue
        q = trace.points
        on_h = np.abs(q[:, 2]) <= V_TOL
        back = q[:, 1] + q[:, 0] * l
        if np.any(on_h & (back >= -r_t) & (back < r_t)):
            found.append(l)
    return np.sort(direct), np.sort(np.asarray(found))


def heis_hitting_count_bound(
    lat: HeisApproxLattice,
    K: Box,
    n_samples: int,
    stream: RngStream,
    workers: Optional[int] = None,
) -> HittingBoundReport:
    """
    max_x |Y_x ∩ π(K)| over hull samples against |Λ² ∩ KDC|. C ⊂ H and D ⊂ G
    are the gap boxes with (Λ ∩ H)·C = H and D⁻¹ meeting every P_x. Λ² lies
    in the product of the ℤ[√2] model sets with windows 2c_U, 2(c_Z + c_U·c_V)
    and 2c_V, which is counted inside a box around KDC.
    """
    if K.dimension != 3:
        raise DimensionMismatchError(3, K.dimension, "box in G")
    gap_u, gap_z, gap_v = (max_gap(rows[:, 0]) for rows in (lat.lambda_u, lat.lambda_z, lat.lambda_v))
    C = Box(lo=[0.0, 0.0, 0.0], hi=[gap_u, gap_z, 0.0])
    D = Box(lo=[-gap_u, -gap_z, -gap_v], hi=[0.0, 0.0, 0.0])
    kdc = heis_box_product(heis_box_product(K, D), C).inflate(settings.DEDUP_TOL)
    windows = (2.0 * lat.c_u, 2.0 * (lat.c_z + lat.c_u * lat.c_v), 2.0 * lat.c_v)
    bound = 1
    for axis, c in enumerate(windows):
        bound *= len(enumerate_gamma(ZSQRT2, kdc.select([axis]), Window.interval(-c, c)))

    v_box = K.select([2])
    window_v = Window.interval(-lat.c_v, lat.c_v)

    def one(index: int, sub: RngStream) -> int:
        g1, g2 = hull_elements(sample_heis_hull(lat, sub))
        # every β column of P_x is non-empty, so Y_x is the shifted Λ_V
        return len(cut_and_project(ZSQRT2, window_v, [g1[2]], [g2[2]], v_box))

    counts = map_samples(one, n_samples, stream, workers)
    max_count = max(counts) if counts else 0
    logger.info(f"Heisenberg hitting counts in {v_box.lo}..{v_box.hi}: max {max_count}, bound {bound}")
    return HittingBoundReport(n_samples=n_samples, max_count=max_count, bound=bound, passed=max_count <= bound)


def zak_equivariance(
    f: TestFunction,
    xi: Character,
    x: HeisHullPoint,
    g: HeisPoint,
    lat: HeisApproxLattice,
    region: Box,
) -> Tuple[complex, complex]:
    """S f(g.x) and S(π(g⁻¹)f)(x) for the exact eigenfunction."""
    lhs = aperiodic_zak(f, xi, translate_heis_hull(x, g), lat, region)
    moved = schrodinger_action(heis_inv(g), f, Character(s=xi.s))
    rhs = aperiodic_zak(moved, xi, x, lat, region)
    return lhs, rhs


# --- Monte-Carlo checks ---


def _zak_sample(f, xi, lat, region, psi_mode: PsiMode, side: float, grid: Optional[int]):
    def one(index: int, sub: RngStream):
        x = sample_heis_hull(lat, sub)
        psi = eigenfunction_handle(xi, lat, psi_mode, side, grid)
        value = aperiodic_zak(f, xi, x, lat, region, psi=psi)
        return value, psi.max_defect

    return one


def mc_twisted_mean_zero(
    f: TestFunction,
    xi: Character,
    lat: HeisApproxLattice,
    region: Box,
    n_samples: int,
    stream: RngStream,
    multiplier: Optional[float] = None,
    workers: Optional[int] = None,
) -> McReport:
    """E[S_ψ f] = 0 for a character with s ≠ 0."""
    _require_dual(xi)
    results = map_samples(_zak_sample(f, xi, lat, region, PsiMode.EXACT, 0.0, None), n_samples, stream, workers)
    report = mc_report([value for value, _ in results], 0.0, multiplier)
    logger.info(f"Twisted mean: {report.mean} ± {report.stderr:.3g} (pass={report.passed})")
    return report


def mc_isometry(
    f: TestFunction,
    xi: Character,
    lat: HeisApproxLattice,
    region: Box,
    n_samples: int,
    stream: RngStream,
    psi_mode: Union[PsiMode, str] = PsiMode.EXACT,
    folner_side: float = 8.0,
    folner_grid: Optional[int] = None,
    epsilon: float = 0.0,
    multiplier: Optional[float] = None,
    workers: Optional[int] = None,
) -> IsometryReport:
    """
    E|σ(Y)^{-1/2}·S_ψ f|² against ‖f‖²; the tolerance is max(5%, 4δ) with δ the
    eigenfunction defect (0 for the exact ψ). Also tests that E[S_ψ f] = 0.
    """
    if n_samples < 1000:
        raise ValueError(f"mc_isometry needs at least 1000 samples, got {n_samples}")
    psi_mode = PsiMode(psi_mode)
    _require_dual(xi)
    lambda_v = lat.lambda_v[:, 0]
    stabilizer = check_stabilizer(xi, lambda_v)
    if not stabilizer.passed:
        raise CharacterError(f"Character s={xi.s} is stabilised by Λ(Y)")

    one = _zak_sample(f, xi, lat, region, psi_mode, folner_side, folner_grid)
    results = map_samples(one, n_samples, stream, workers)
    values = np.asarray([value for value, _ in results])
    psi_defect = max([delta for _, delta in results] + [0.0])

    sigma = heis_siegel_constant(lat)
    norm_sq = testfn_l2norm_sq(f)
    scaled = np.abs(values) ** 2 / (sigma * norm_sq)
    ratio = float(np.mean(scaled))
    ratio_stderr = float(np.std(scaled, ddof=1) / math.sqrt(scaled.size))
    tolerance = max(0.05, 4.0 * psi_defect)
    mean_zero = mc_report(values, 0.0, multiplier)
    passed = abs(ratio - 1.0) <= tolerance and mean_zero.passed
    logger.info(
        f"Zak isometry ({psi_mode.value}): ratio {ratio:.4f} ± {ratio_stderr:.4f}, "
        f"tolerance {tolerance:.3f}, pass={passed}"
    )
    return IsometryReport(
        seed=stream.seed,
        n_samples=n_samples,
        ratio=ratio,
        ratio_stderr=ratio_stderr,
        tolerance=tolerance,
        mean_zero=mean_zero,
        epsilon=epsilon,
        psi_defect=psi_defect,
        sigma_Y=sigma,
        folner_box=folner_side if psi_mode == PsiMode.FOLNER else None,
        l2_norm_sq=norm_sq,
        second_moment=float(np.mean(np.abs(values) ** 2)),
        passed=passed,
    )

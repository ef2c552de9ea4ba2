import logging
import math
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from siegelzak.config import settings
from siegelzak.core.errors import ConfigError, UnsupportedModeError
from siegelzak.core.output import write_csv_atomic
from siegelzak.models.experiment import (
    AbcSection,
    AzakSection,
    EigenSection,
    ExperimentConfig,
    HeisenbergSection,
    Lattice2dSection,
)
from siegelzak.models.geometry import Box, CutProjectScheme, UnimodularLattice2, Window
from siegelzak.models.schema import (
    EpsDualQuery,
    PointMode,
    SiegelMode,
    TestFunction,
    TestFunctionKind,
)
from siegelzak.services import azak, cps, eigen, heisenberg, lattice2d, siegel
from siegelzak.services.numerics import RngStream, mc_report, testfn_integral, testfn_l2norm_sq
from siegelzak.services.runner import map_samples

logger = logging.getLogger("experiments")

Metrics = Dict[str, Any]
Experiment = Callable[[ExperimentConfig, RngStream, Optional[int]], Metrics]

DEFAULT_HALF_WIDTH = 20.0


# --- Config helpers ---


def _scheme(cfg: ExperimentConfig) -> CutProjectScheme:
    try:
        return cps.builtin_scheme(cfg.scheme.name)
    except KeyError:
        raise ConfigError(f"scheme.name: unknown scheme {cfg.scheme.name!r}, available: {sorted(cps.SCHEMES)}")


def _window(cfg: ExperimentConfig, scheme: CutProjectScheme) -> Window:
    window = cfg.window.to_window(scheme.internal_dim)
    if window.dimension != scheme.internal_dim:
        raise ConfigError(f"window: dimension {window.dimension}, scheme needs {scheme.internal_dim}")
    for box in window.boxes:
        if box.dimension != scheme.internal_dim:
            raise ConfigError(f"window: box of dimension {box.dimension}, scheme needs {scheme.internal_dim}")
    return window


def _region(cfg: ExperimentConfig, dimension: int) -> Box:
    if cfg.region is None:
        return Box.cube(dimension, DEFAULT_HALF_WIDTH)
    region = cfg.region.to_box()
    if region.dimension != dimension:
        raise ConfigError(f"region: dimension {region.dimension}, expected {dimension}")
    return region


def _sampler(cfg: ExperimentConfig, pair=None) -> cps.CutProjectSampler:
    scheme = _scheme(cfg)
    window = _window(cfg, scheme)
    thinning = cfg.thinning.p if cfg.thinning else 1.0
    return cps.CutProjectSampler(scheme, window, _region(cfg, scheme.phys_dim), thinning, pair)


def _require(section, name: str):
    if section is None:
        raise ConfigError(f"{name}: table is required for this experiment")
    return section


def _mc(report) -> Metrics:
    return report.model_dump(by_alias=True)


def _squared_pair(scheme: CutProjectScheme, window: Window):
    if scheme.name != "zsqrt2_squared":
        raise UnsupportedModeError(f"Compatible pairs are built for zsqrt2_squared, not {scheme.name}")
    return siegel.zsqrt2_squared_pair(window)


# --- Experiments ---


def classical_siegel(cfg: ExperimentConfig, stream: RngStream, workers: Optional[int]) -> Metrics:
    """Random unimodular planar lattices against the classical Siegel mean value."""
    params = cfg.lattice2d or Lattice2dSection()
    report = lattice2d.mc_classical_siegel(
        cfg.test_function, params.mode, cfg.n_samples, stream, cfg.tolerances.z_multiplier, workers
    )
    metrics = report.to_json_dict()
    metrics["variant"] = metrics.pop("experiment")
    metrics.pop("seed")
    if params.mode == PointMode.VISIBLE:
        oracle = lattice2d.visible_density(UnimodularLattice2(basis=np.eye(2)), params.oracle_radius)
        error = abs(oracle / lattice2d.VISIBLE_DENSITY - 1.0)
        metrics["oracle"] = {
            "radius": params.oracle_radius,
            "density": oracle,
            "relative_error": error,
            "pass": error <= params.oracle_tolerance,
        }
        metrics["pass"] = report.passed and metrics["oracle"]["pass"]
    return metrics


def cps_density(cfg: ExperimentConfig, stream: RngStream, workers: Optional[int]) -> Metrics:
    """Exact density of a cut-and-project set, with an optional Meyer check."""
    scheme = _scheme(cfg)
    window = _window(cfg, scheme)
    region = _region(cfg, scheme.phys_dim)
    ps = cps.cut_and_project(scheme, window, np.zeros(scheme.phys_dim), np.zeros(scheme.internal_dim), region)
    measured = cps.density(ps)
    reference = window.volume / scheme.covolume
    error = abs(measured / reference - 1.0) if reference > 0.0 else measured
    metrics: Metrics = {
        "n_points": len(ps),
        "density": measured,
        "reference": reference,
        "relative_error": error,
    }
    passed = error <= cfg.tolerances.relative
    if cfg.meyer is not None and len(ps) > 1:
        sample = ps.restrict(cfg.meyer.restrict.to_box()) if cfg.meyer.restrict else ps
        meyer = cps.check_meyer(sample, cfg.meyer.r_test, cfg.meyer.diff_radius)
        metrics["meyer"] = meyer.model_dump()
        passed = passed and meyer.meyer
    metrics["pass"] = passed
    return metrics


def hull_intensity(cfg: ExperimentConfig, stream: RngStream, workers: Optional[int]) -> Metrics:
    """Monte-Carlo hitting intensity of hull samples, thinned or not."""
    sampler = _sampler(cfg)
    box = cfg.hitting.box.to_box() if cfg.hitting else sampler.region
    T = siegel.IdentityTransversal(sampler.scheme.phys_dim)
    report = siegel.mc_hitting_intensity(
        sampler, T, box, cfg.n_samples, stream, cfg.tolerances.z_multiplier, workers
    )
    return {
        "intensity": _mc(report),
        "siegel_constant": sampler.siegel_constant,
        "thinning": sampler.thinning,
        "unthinned_constant": sampler.window.volume / sampler.scheme.covolume,
        "pass": report.passed,
    }


def siegel_formula(cfg: ExperimentConfig, stream: RngStream, workers: Optional[int]) -> Metrics:
    """Siegel formula for hull samples of a cut-and-project set."""
    sampler = _sampler(cfg)
    T = siegel.IdentityTransversal(sampler.scheme.phys_dim)
    report = siegel.mc_siegel_formula(
        sampler,
        cfg.test_function,
        T,
        cfg.n_samples,
        stream,
        experiment=cfg.experiment.value,
        multiplier=cfg.tolerances.z_multiplier,
        workers=workers,
    )
    metrics = report.to_json_dict()
    metrics["siegel_constant"] = sampler.siegel_constant
    return metrics


def twisted_siegel(cfg: ExperimentConfig, stream: RngStream, workers: Optional[int]) -> Metrics:
    """Mean of the transform twisted by a torus character."""
    params = _require(cfg.twisted, "twisted")
    sampler = _sampler(cfg)
    scheme, window, region = sampler.scheme, sampler.window, sampler.region
    if len(params.k) != scheme.rank:
        raise ConfigError(f"twisted.k: {len(params.k)} entries, scheme has rank {scheme.rank}")
    f = cfg.test_function
    T = siegel.IdentityTransversal(scheme.phys_dim)
    psi = siegel.torus_character(params.k)

    def one(index: int, sub: RngStream) -> complex:
        h = cps.sample_hull(scheme, sub)
        context = siegel.HullContext.for_scheme(scheme, window, h, region)
        return siegel.twisted_siegel_transform(f, context, T, psi)

    values = map_samples(one, cfg.n_samples, stream, workers)
    trivial = not any(params.k)
    constant = siegel.siegel_constant(SiegelMode.TRIVIAL_H, scheme, window)
    reference = constant * complex(testfn_integral(f)) if trivial else 0.0
    report = mc_report(values, reference, cfg.tolerances.z_multiplier)

    h0 = cps.sample_hull(scheme, stream.spawn(cfg.n_samples))
    context = siegel.HullContext.for_scheme(scheme, window, h0, region)
    plain = complex(siegel.siegel_transform(f, context.pointset, T))
    untwisted = siegel.twisted_siegel_transform(f, context, T, lambda _: 1.0)
    return {
        "estimate": _mc(report),
        "k": list(params.k),
        "frequency": siegel.torus_character_frequency(scheme, params.k).tolist(),
        "identity_matches": plain == untwisted,
        "pass": report.passed and plain == untwisted,
    }


def siegel_duality(cfg: ExperimentConfig, stream: RngStream, workers: Optional[int]) -> Metrics:
    """Monte-Carlo ⟨Sf, φ⟩ against the quadrature of ⟨f, S*φ⟩."""
    params = _require(cfg.duality, "duality")
    scheme = _scheme(cfg)
    window = _window(cfg, scheme)
    if len(params.k) != scheme.rank:
        raise ConfigError(f"duality.k: {len(params.k)} entries, scheme has rank {scheme.rank}")
    if params.mode == SiegelMode.COMPATIBLE_PAIR:
        pair = _squared_pair(scheme, window)
        T = siegel.CoordinateTransversal(scheme.phys_dim, pair.h_axes)
    elif params.mode == SiegelMode.TRIVIAL_H:
        pair = None
        T = siegel.IdentityTransversal(scheme.phys_dim)
    else:
        raise UnsupportedModeError(f"Siegel duality is not run in {params.mode.value} mode")
    sampler = _sampler(cfg, pair)
    k = np.asarray(params.k, dtype=float)

    def phi(coefficients: np.ndarray) -> np.ndarray:
        return 1.0 + params.amplitude * np.cos(2.0 * math.pi * (np.atleast_2d(coefficients) @ k))

    report, rhs = siegel.mc_siegel_duality(
        sampler,
        cfg.test_function,
        phi,
        T,
        cfg.n_samples,
        stream,
        window_grid=params.window_grid,
        quotient_grid=params.quotient_grid,
        multiplier=cfg.tolerances.z_multiplier,
        slack=cfg.tolerances.quadrature,
        workers=workers,
    )
    return {
        "lhs": _mc(report),
        "rhs_re": rhs.real,
        "rhs_im": rhs.imag,
        "mode": params.mode.value,
        "pass": report.passed,
    }


def compatible_pair_intensity(cfg: ExperimentConfig, stream: RngStream, workers: Optional[int]) -> Metrics:
    """Hitting intensity on H\\G for the zsqrt2_squared compatible pair."""
    scheme = _scheme(cfg)
    window = _window(cfg, scheme)
    pair = _squared_pair(scheme, window)
    sampler = _sampler(cfg, pair)
    T = siegel.CoordinateTransversal(scheme.phys_dim, pair.h_axes)
    params = _require(cfg.hitting, "hitting")
    report = siegel.mc_hitting_intensity(
        sampler, T, params.box.to_box(), cfg.n_samples, stream, cfg.tolerances.z_multiplier, workers
    )
    return {
        "intensity": _mc(report),
        "siegel_constant": sampler.siegel_constant,
        "index_constant": pair.index_constant,
        "delta_covolume": pair.delta_covolume,
        "projected_window_volume": pair.projected_window_volume,
        "pass": report.passed,
    }


def periodization(cfg: ExperimentConfig, stream: RngStream, workers: Optional[int]) -> Metrics:
    """Mean of the periodization TF against the integral of F."""
    scheme = _scheme(cfg)
    window = _window(cfg, scheme)
    region = _region(cfg, scheme.phys_dim)
    scale = cfg.periodization.internal_scale if cfg.periodization else None
    v = None
    if scale is not None and scheme.internal_dim:
        v = TestFunction(kind=TestFunctionKind.GAUSSIAN, dimension=scheme.internal_dim, scale=scale)
    F = siegel.ProductKernel(cfg.test_function, v)

    def one(index: int, sub: RngStream):
        h = cps.sample_hull(scheme, sub)
        return siegel.periodize_T(F, h, scheme, window, region)

    values = map_samples(one, cfg.n_samples, stream, workers)
    reference = F.integral(scheme, window)
    report = mc_report(values, reference, cfg.tolerances.z_multiplier, cfg.tolerances.quadrature or 0.0)
    return {"estimate": _mc(report), "internal_scale": scale, "pass": report.passed}


def hitting_bound(cfg: ExperimentConfig, stream: RngStream, workers: Optional[int]) -> Metrics:
    """
    Largest hitting count in a box against its bound: the difference-set
    count for a cut-and-project set, |Λ² ∩ KDC| for the Heisenberg Y_x when
    an [azak] section is given.
    """
    params = _require(cfg.hitting, "hitting")
    if cfg.azak is not None:
        lat = azak.build_heis_lambda(cfg.azak.c_u, cfg.azak.c_z, cfg.azak.c_v, cfg.azak.trunc)
        report = azak.heis_hitting_count_bound(lat, params.box.to_box(), cfg.n_samples, stream, workers)
        return {"group": "heisenberg", **report.model_dump(by_alias=True)}
    sampler = _sampler(cfg)
    report = siegel.hitting_count_bound(sampler, params.box.to_box(), cfg.n_samples, stream, workers)
    return {"group": "abelian", **report.model_dump(by_alias=True)}


def zak_unitarity(cfg: ExperimentConfig, stream: RngStream, workers: Optional[int]) -> Metrics:
    """Quadrature norm of the classical Zak transform against the L² norm."""
    params = cfg.heisenberg or HeisenbergSection()
    f = cfg.test_function
    norm_sq = testfn_l2norm_sq(f)
    coarse_grid = max(params.grid_per_axis // 2, settings.MIN_QUADRATURE_GRID)
    fine = heisenberg.zak_inner_product(f, f, params.n, params.grid_per_axis)
    coarse = heisenberg.zak_inner_product(f, f, params.n, coarse_grid)
    fine_error = abs(fine - norm_sq)
    coarse_error = abs(coarse - norm_sq)
    converging = fine_error <= coarse_error / 2.0 or fine_error <= params.noise_floor
    logger.info(f"Zak unitarity: error {fine_error:.3g} at {params.grid_per_axis}, {coarse_error:.3g} at {coarse_grid}")
    return {
        "l2_norm_sq": norm_sq,
        "zak_norm_sq": fine.real,
        "grid_per_axis": params.grid_per_axis,
        "error": fine_error,
        "coarse_grid_per_axis": coarse_grid,
        "coarse_error": coarse_error,
        "converging": converging,
        "pass": fine_error <= params.abs_tolerance and converging,
    }


# --- Combinatorial instances ---


def _integer_grid(dimension: int, half_width: int) -> np.ndarray:
    axis = np.arange(-half_width, half_width + 1)
    mesh = np.meshgrid(*([axis] * dimension), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1).astype(float)


def _abc_instance(stream: RngStream, heis: bool, params: AbcSection) -> Tuple[np.ndarray, ...]:
    """
    Random A, B in an integer box whose H-slab lies in A, and C ⊂ H wide
    enough that (A ∩ H)·C covers every a_H⁻¹·a·b⁻¹ the box can produce.
    """
    hw = params.half_width
    grid = _integer_grid(3 if heis else 2, hw)
    on_h = grid[:, -1] == 0
    off = grid[~on_h]
    gen = stream.generator
    extra = off[gen.choice(off.shape[0], size=min(params.size, off.shape[0]), replace=False)]
    A = np.concatenate([grid[on_h], extra])
    B = grid[gen.choice(grid.shape[0], size=min(params.size, grid.shape[0]), replace=False)]
    if heis:
        t_reach = 2 * hw + 2 * hw * hw
        C = _integer_grid(2, max(hw, t_reach))
        C = C[np.abs(C[:, 0]) <= hw]
        C = np.column_stack([C, np.zeros(C.shape[0])])
    else:
        C = np.column_stack([np.arange(-hw, hw + 1, dtype=float), np.zeros(2 * hw + 1)])
    return A, B, C


def abc_bound(cfg: ExperimentConfig, stream: RngStream, workers: Optional[int]) -> Metrics:
    """Randomised abelian and Heisenberg instances of the ABC counting bound."""
    params = cfg.abc or AbcSection()
    families = {
        "abelian": siegel.CoordinateTransversal(2, [0]),
        "heisenberg": siegel.HeisenbergTransversal(),
    }

    def one(index: int, sub: RngStream):
        name = "heisenberg" if index % 2 else "abelian"
        A, B, C = _abc_instance(sub, name == "heisenberg", params)
        report, _ = siegel.abc_bound(A, B, C, families[name], params.strict)
        return name, report

    results = map_samples(one, params.instances, stream, workers)
    summary = {}
    for name in families:
        reports = [r for n, r in results if n == name]
        summary[name] = {
            "instances": len(reports),
            "violations": sum(not r.holds for r in reports),
            "unverified": sum(not r.covering_verified for r in reports),
            "max_lhs": max((r.lhs for r in reports), default=0),
            "min_slack": min((r.rhs - r.lhs for r in reports), default=0),
            "bc_violations": sum(r.lhs > r.rhs_bc for r in reports),
        }
    violations = sum(s["violations"] for s in summary.values())
    logger.info(f"ABC bound: {violations} violations over {params.instances} instances")
    return {"families": summary, "violations": violations, "pass": violations == 0}


# --- Eigenfunctions ---


def _model_set_points(scheme: CutProjectScheme, window: Window, radius: float) -> np.ndarray:
    return cps.enumerate_gamma(scheme, Box.cube(scheme.phys_dim, radius), window).phys


def epsilon_dual(cfg: ExperimentConfig, stream: RngStream, workers: Optional[int]) -> Metrics:
    """Frequencies of defect at most ε on a truncated model set."""
    params = cfg.eigen or EigenSection()
    scheme = _scheme(cfg)
    window = _window(cfg, scheme)
    points = _model_set_points(scheme, window, params.truncation_radius)
    freq_box = Box(lo=[params.freq_lo] * scheme.phys_dim, hi=[params.freq_hi] * scheme.phys_dim)
    if params.method == "dual":
        candidates = eigen.dual_candidates(scheme, window, freq_box, params.epsilon)
    else:
        candidates = eigen.grid_candidates(points, params.epsilon, (params.freq_lo, params.freq_hi))
    query = EpsDualQuery(
        lambda_points=points,
        epsilon=params.epsilon,
        candidates=candidates,
        truncation_radius=params.truncation_radius,
    )
    freqs = eigen.epsilon_dual(query)
    nontrivial = [f for f in freqs if float(np.linalg.norm(f.frequency)) > settings.DEDUP_TOL]
    if cfg.output.csv:
        write_csv_atomic(cfg.output.csv, *eigen.epsilon_dual_csv(freqs))
    gap = None
    if scheme.phys_dim == 1:
        gap = eigen.max_gap([f.frequency[0] for f in freqs], (params.freq_lo, params.freq_hi))
    enough = len(nontrivial) >= params.min_frequencies
    dense = gap is None or gap <= params.gap_bound
    return {
        "method": params.method,
        "n_points": int(points.shape[0]),
        "n_candidates": int(np.asarray(candidates).shape[0]),
        "n_frequencies": len(freqs),
        "n_nontrivial": len(nontrivial),
        "max_gap": gap,
        "gap_bound": params.gap_bound,
        "frequencies": [[float(v) for v in f.frequency] + [f.defect] for f in freqs],
        "pass": enough and dense,
    }


def _eigen_frequency(scheme: CutProjectScheme, window: Window, params: EigenSection) -> float:
    """Smallest positive frequency whose character is ε-close to 1 on Λ(W − W)."""
    if params.frequency is not None:
        return params.frequency
    differences = Window(
        dimension=window.dimension,
        boxes=[Box(lo=a.lo - b.hi, hi=a.hi - b.lo) for a in window.boxes for b in window.boxes],
    )
    freq_box = Box(lo=[0.0], hi=[params.freq_hi])
    candidates = eigen.dual_candidates(scheme, differences, freq_box, params.epsilon)[:, 0]
    positive = candidates[candidates > settings.DEDUP_TOL]
    if positive.size == 0:
        raise ConfigError(f"eigen: no ε-dual frequency in (0, {params.freq_hi}] at ε={params.epsilon}")
    return float(positive.min())


def eigen_bounds(cfg: ExperimentConfig, stream: RngStream, workers: Optional[int]) -> Metrics:
    """Følner-averaged eigenfunction moduli and eigen-defects over growing boxes."""
    params = cfg.eigen or EigenSection()
    sampler = _sampler(cfg)
    if sampler.scheme.phys_dim != 1:
        raise UnsupportedModeError("Følner eigenfunction bounds are run on 1-D schemes")
    xi = np.array([_eigen_frequency(sampler.scheme, sampler.window, params)])
    sides = list(params.sides or settings.FOLNER_SIDES)
    region = sampler.region
    radius = float(min(-region.lo[0], region.hi[0]))
    eps = params.epsilon

    def one(index: int, sub: RngStream) -> Tuple[List[Tuple[float, float, float]], bool]:
        _, ps = sampler.sample(sub)
        entry = eigen.section_table([ps.points], first_id=index)[0]
        rows = []
        for side in sides:
            grid = max(settings.MIN_FOLNER_GRID, int(round(side / params.grid_spacing)))
            result = eigen.folner_average(xi, ps.points, radius, side, grid)
            moved = eigen.folner_eigen_defect(xi, ps.points, radius, side, [params.shift], grid)
            rows.append((abs(result.value), result.return_defect, moved))
        return rows, entry.tied

    samples = map_samples(one, cfg.n_samples, stream, workers)
    results = np.asarray([rows for rows, _ in samples])
    section_ties = sum(1 for _, tied in samples if tied)
    moduli = results[:, :, 0]
    violations = int(np.sum((moduli < 1.0 - eps - 1e-12) | (moduli > 1.0 + eps + 1e-12)))
    mean_defects = results[:, :, 2].mean(axis=0).tolist()
    monotone = all(b <= a + 1e-12 for a, b in zip(mean_defects, mean_defects[1:]))
    logger.info(f"Eigen bounds at ξ={xi[0]:.6g}: {violations} violations, defects {mean_defects}")
    return {
        "frequency": float(xi[0]),
        "epsilon": eps,
        "sides": sides,
        "violations": violations,
        "min_modulus": float(moduli.min()),
        "max_return_defect": float(results[:, :, 1].max()),
        "section_ties": section_ties,
        "mean_eigen_defects": mean_defects,
        "monotone": monotone,
        "pass": violations == 0 and monotone,
    }


# --- Aperiodic Zak transform ---


def _heis_setup(cfg: ExperimentConfig):
    params = cfg.azak or AzakSection()
    lat = azak.build_heis_lambda(params.c_u, params.c_z, params.c_v, params.trunc)
    if params.m is not None or params.k is not None:
        xi = heisenberg.zsqrt2_dual_character(params.m or 0, params.k or 0)
    else:
        xi, _ = azak.select_character(lat, params.epsilon, params.freq_hi, params.truncation_radius)
    return params, lat, xi, _region(cfg, 3)


def twisted_mean_zero(cfg: ExperimentConfig, stream: RngStream, workers: Optional[int]) -> Metrics:
    """Mean of the aperiodic Zak transform for a non-trivial central character."""
    params, lat, xi, region = _heis_setup(cfg)
    report = azak.mc_twisted_mean_zero(
        cfg.test_function, xi, lat, region, cfg.n_samples, stream, cfg.tolerances.z_multiplier, workers
    )
    return {"estimate": _mc(report), "s": xi.s, "s_star": xi.s_star, "pass": report.passed}


def zak_isometry(cfg: ExperimentConfig, stream: RngStream, workers: Optional[int]) -> Metrics:
    """Normalised second moment of the aperiodic Zak transform against the L² norm."""
    params, lat, xi, region = _heis_setup(cfg)
    report = azak.mc_isometry(
        cfg.test_function,
        xi,
        lat,
        region,
        cfg.n_samples,
        stream,
        psi_mode=params.psi_mode,
        folner_side=params.folner_side,
        folner_grid=params.folner_grid,
        epsilon=params.epsilon,
        multiplier=cfg.tolerances.z_multiplier,
        workers=workers,
    )
    metrics = report.model_dump(by_alias=True)
    metrics.pop("seed")
    metrics.pop("experiment")
    metrics["s"] = xi.s
    metrics["s_star"] = xi.s_star
    return metrics


EXPERIMENTS: Dict[str, Experiment] = {
    "classical_siegel": classical_siegel,
    "cps_density": cps_density,
    "hull_intensity": hull_intensity,
    "siegel_formula": siegel_formula,
    "twisted_siegel": twisted_siegel,
    "siegel_duality": siegel_duality,
    "compatible_pair_intensity": compatible_pair_intensity,
    "periodization": periodization,
    "hitting_bound": hitting_bound,
    "zak_unitarity": zak_unitarity,
    "abc_bound": abc_bound,
    "epsilon_dual": epsilon_dual,
    "eigen_bounds": eigen_bounds,
    "twisted_mean_zero": twisted_mean_zero,
    "zak_isometry": zak_isometry,
}


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> Dict[str, Any]:
    """Run the configured experiment; the report embeds the resolved config and version."""
    name = cfg.experiment.value
    logger.info(f"Starting {name} (seed {cfg.seed}, {cfg.n_samples} samples)")
    metrics = EXPERIMENTS[name](cfg, RngStream(cfg.seed), workers)
    passed = bool(metrics.pop("pass"))
    metrics.pop("experiment", None)
    metrics.pop("seed", None)
    report = {
        **metrics,
        "experiment": name,
        "seed": cfg.seed,
        "version": settings.VERSION,
        "config": cfg.resolved(),
        "pass": passed,
    }
    logger.info(f"Finished {name}: pass={passed}")
    return report


def build_pointset(cfg: ExperimentConfig):
    """The configured cut-and-project set at the origin of the hull, thinned when requested."""
    scheme = _scheme(cfg)
    window = _window(cfg, scheme)
    region = _region(cfg, scheme.phys_dim)
    ps = cps.cut_and_project(scheme, window, np.zeros(scheme.phys_dim), np.zeros(scheme.internal_dim), region)
    if cfg.thinning is not None and cfg.thinning.p < 1.0:
        ps = cps.thin_bernoulli(ps, cfg.thinning.p, RngStream(cfg.seed))
    logger.info(f"Point set for {scheme.name}: {len(ps)} points in {region.lo}..{region.hi}")
    return ps

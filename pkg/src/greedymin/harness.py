"""Experiment orchestration: build problems from configs, run, check, report.

All randomness flows from the single config seed through named sub-seeds
(objective, dictionary, solver, analysis) derived by adding a CRC32 of the
component name, so each component is independently reproducible.
"""
from __future__ import annotations

import csv
import time
import zlib
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analysis import (ModuliEquivalenceReport, ModulusEstimate, RateConstants,
                       RateFit, check_error_recursion, check_moduli_equivalence,
                       error_bound, estimate_moduli, fit_rate, rate_constants)
from .config import ConfigError, ExperimentConfig
from .core import (ConvexityParams, IterateTrace, SmoothnessParams,
                   SparseSupport, _csv_num, norm)
from .dictionaries import CanonicalBasis, Dictionary, RotatedBasis
from .objectives import (DiagonalQuadratic, LeastSquares, Objective, PowerSum,
                         estimate_condition_constants, estimate_gradient_bound,
                         estimate_level_set_diameter)
from .solvers import SolverConfig, WeaknessSchedule, run_omp, run_wcga

BOUND_TOL = 1e-9


def sub_seed(seed: int, component: str) -> int:
    """Stable per-component seed: (seed + crc32(name)) mod 2^32."""
    return (int(seed) + zlib.crc32(component.encode())) % 2 ** 32


def build_dictionary(cfg: ExperimentConfig) -> Dictionary:
    if cfg.dictionary_type == "canonical":
        return CanonicalBasis(cfg.dimension)
    seed = cfg.dictionary_seed
    if seed is None:
        seed = sub_seed(cfg.seed, "dictionary")
    return RotatedBasis(cfg.dimension, seed)


def _sparse_center(cfg: ExperimentConfig, dictionary: Dictionary,
                   rng: np.random.Generator) -> np.ndarray:
    """Point with seeded sparse dictionary coefficients, or an explicit one."""
    spec = cfg.objective
    n = cfg.dimension
    if "center" in spec:
        center = np.asarray(spec["center"], dtype=np.float64)
        if center.shape != (n,):
            raise ConfigError(f"objective.center: expected {n} entries, "
                              f"got {center.shape}")
        return center
    s = spec.get("center_sparsity")
    if s is None:
        raise ConfigError("objective.center or objective.center_sparsity required")
    if not isinstance(s, int) or s < 0 or s > n:
        raise ConfigError(f"objective.center_sparsity: expected int in [0, {n}], got {s!r}")
    low = float(spec.get("center_low", 1.0))
    high = float(spec.get("center_high", 2.0))
    coeffs = np.zeros(n)
    idx = np.sort(rng.choice(n, size=s, replace=False))
    coeffs[idx] = rng.uniform(low, high, size=s) * rng.choice((-1.0, 1.0), size=s)
    return dictionary.synthesize(coeffs)


def _weights(cfg: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    spec = cfg.objective
    n = cfg.dimension
    w = spec.get("weights", 1.0)
    if isinstance(w, (int, float)):
        out = np.full(n, float(w))
    elif isinstance(w, list):
        out = np.asarray(w, dtype=np.float64)
        if out.shape != (n,):
            raise ConfigError(f"objective.weights: expected {n} entries, got {out.shape}")
    else:
        raise ConfigError(f"objective.weights: expected a number or list, got {w!r}")
    if "weights_low" in spec or "weights_high" in spec:
        low = float(spec.get("weights_low", 0.5))
        high = float(spec.get("weights_high", 2.0))
        if not 0 < low <= high:
            raise ConfigError(f"objective.weights_low/high: need 0 < low <= high, "
                              f"got {low}, {high}")
        if spec.get("weights_log", False):
            out = 10.0 ** rng.uniform(np.log10(low), np.log10(high), size=n)
        else:
            out = rng.uniform(low, high, size=n)
    if np.any(out <= 0):
        raise ConfigError("objective.weights: weights must be positive")
    return out


def build_objective(cfg: ExperimentConfig, dictionary: Dictionary) -> Objective:
    rng = np.random.default_rng(sub_seed(cfg.seed, "objective"))
    kind = cfg.objective["type"]
    if kind == "diagonal_quadratic":
        return DiagonalQuadratic(_sparse_center(cfg, dictionary, rng), _weights(cfg, rng))
    if kind == "power_sum":
        return PowerSum(_sparse_center(cfg, dictionary, rng),
                        cfg.objective["exponent"], _weights(cfg, rng))
    # least squares: files, or a seeded Gaussian sensing matrix
    spec = cfg.objective
    if "matrix_file" in spec:
        if "b_file" not in spec:
            raise ConfigError("objective.b_file: required with objective.matrix_file")
        obj = LeastSquares.from_files(spec["matrix_file"], spec["b_file"])
        if obj.dimension != cfg.dimension:
            raise ConfigError(f"objective.matrix_file: {obj.dimension} columns, "
                              f"config dimension {cfg.dimension}")
        return obj
    rows = spec.get("rows")
    if not isinstance(rows, int) or rows < 1:
        raise ConfigError(f"objective.rows: expected a positive int, got {rows!r}")
    A = rng.standard_normal((rows, cfg.dimension)) / np.sqrt(rows)
    xbar = _sparse_center(cfg, dictionary, rng)
    obj = LeastSquares(A, A @ xbar)
    if obj.known_minimizer is None:
        obj.known_minimizer = xbar       # planted solution; E(xbar) = 0 is the minimum
    return obj


# ---------------------------------------------------------------------------


def _effective_radius(cfg: ExperimentConfig, objective: Objective) -> float | None:
    """Ball radius (around the origin) certified to contain the level set."""
    if cfg.analysis.omega_radius is not None:
        return float(cfg.analysis.omega_radius)
    r = objective.level_set_radius()
    return None if r is None else 1.1 * r


def derive_constants(cfg: ExperimentConfig, objective: Objective,
                     dictionary: Dictionary) -> tuple[RateConstants | None, str | None]:
    """Rate constants for the configured problem, or a reason they don't exist.

    Known closed-form parameters already use the level-set diameter as the
    condition radius, so the diameter ratio is 1.  Estimated parameters
    sample pairs spanning twice the bounding-ball radius, which also covers
    every level-set pair; sampling biases the estimates toward stronger
    claims, so documented safety factors relax them.
    """
    xbar = objective.known_minimizer
    if xbar is None:
        return None, "minimizer unknown"
    coeffs = dictionary.analyze(xbar)
    support = SparseSupport.from_coefficients(coeffs, 1e-10)
    if support.size == 0:
        return None, "minimizer is the origin"
    ana = cfg.analysis
    if ana.alpha is not None:
        q = ana.q if ana.q is not None else 2.0
        p = ana.p if ana.p is not None else 2.0
        smooth = SmoothnessParams(ana.alpha, q, ana.radius, ana.grad_bound)
        convex = ConvexityParams(ana.beta, p, ana.radius)
        if ana.l_mode == "closed_form":
            diam = objective.level_set_diameter()
            if diam is None:
                diam = estimate_level_set_diameter(objective, sub_seed(cfg.seed, "analysis"))
        else:
            diam = estimate_level_set_diameter(objective, sub_seed(cfg.seed, "analysis"))
        ratio = max(1.0, diam / ana.radius)
    elif objective.known_params is not None:
        smooth, convex = objective.known_params
        ratio = 1.0
    else:
        radius = _effective_radius(cfg, objective)
        if radius is None:
            return None, "level set geometry unknown (set analysis.omega_radius)"
        q = ana.q if ana.q is not None else 2.0
        p = ana.p
        if p is None:
            p = objective.exponent if isinstance(objective, PowerSum) else 2.0
        pair_radius = 2.0 * radius
        seed = sub_seed(cfg.seed, "analysis")
        alpha_hat, beta_hat = estimate_condition_constants(
            objective, q, p, radius, 10 * ana.sample_count, seed,
            pair_radius=pair_radius)
        alpha = ana.alpha_safety * alpha_hat
        beta = ana.beta_safety * beta_hat
        if not beta > 0:
            return None, "estimated convexity constant is not positive"
        grad_bound = objective.gradient_sup_bound()
        if grad_bound is None:
            grad_bound = estimate_gradient_bound(objective, radius,
                                                 10 * ana.sample_count, seed)
        smooth = SmoothnessParams(alpha, q, pair_radius, grad_bound)
        convex = ConvexityParams(beta, p, pair_radius)
        ratio = 1.0
    return rate_constants(objective, xbar, support.size, smooth, convex, ratio), None


# ---------------------------------------------------------------------------


@dataclass
class RunReport:
    name: str
    status: str
    trace_path: Path
    bounds_path: Path
    report_path: Path
    trace: IterateTrace
    constants: RateConstants | None
    constants_reason: str | None
    recursion_violations: int
    recursion_min_margin: float | None
    bound_violations: int
    bound_min_margin: float | None
    fit: RateFit | None
    fit_reason: str | None
    theoretical_slope: float | str | None
    wall_time: float


def _solver_config(cfg: ExperimentConfig) -> SolverConfig:
    if "solver.seed" in cfg.raw:
        return cfg.solver
    return replace(cfg.solver, seed=sub_seed(cfg.seed, "solver"))


def _run_solver(cfg: ExperimentConfig, objective: Objective,
                dictionary: Dictionary) -> IterateTrace:
    solver_cfg = _solver_config(cfg)
    runner = run_omp if solver_cfg.algorithm == "omp" else run_wcga
    return runner(objective, dictionary, solver_cfg)


def _constants_lines(rc: RateConstants) -> list[str]:
    lines = [
        f"alpha: {rc.alpha:.6g}  q: {rc.smooth_exponent:g}  "
        f"beta: {rc.beta:.6g}  p: {rc.convex_exponent:g}",
        f"radius: {rc.radius:.6g}  grad_bound: {rc.grad_bound:.6g}  "
        f"diameter_ratio: {rc.diameter_ratio:.6g}",
        f"support_size: {rc.support_size}  beta_global: {rc.beta_global:.6g}  "
        f"initial_gap: {rc.initial_gap:.6g}",
        f"gain: {rc.gain:.6g}  scale: {rc.scale:.6g}",
    ]
    if rc.is_exponential:
        lines.append(f"contraction_gain: {rc.contraction_gain:.6g}  "
                     f"contraction_factor: {rc.contraction_factor:.6g}")
    else:
        lines.append(f"poly_scale: {rc.poly_scale:.6g}  poly_offset: {rc.poly_offset:.6g}")
    return lines


def run_experiment(cfg: ExperimentConfig, output_dir=None, quiet: bool = False) -> RunReport:
    t0 = time.perf_counter()
    dictionary = build_dictionary(cfg)
    objective = build_objective(cfg, dictionary)
    trace = _run_solver(cfg, objective, dictionary)

    outdir = Path(output_dir if output_dir is not None else cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    trace_path = outdir / f"{cfg.name}.trace.csv"
    bounds_path = outdir / f"{cfg.name}.bounds.csv"
    report_path = outdir / f"{cfg.name}.report.txt"
    trace.to_csv(trace_path)

    rc, reason = derive_constants(cfg, objective, dictionary)
    schedule = cfg.solver.weakness if cfg.solver.algorithm == "wcga" else None

    rec_violations = 0
    rec_min = None
    rec_pairs = 0
    bound_violations = 0
    bound_min = None
    fit = None
    fit_reason = None
    theo_slope: float | str | None = None
    bound_lines = ["k,e_k,bound_k,margin"]
    if rc is not None and trace.has_errors:
        rec = check_error_recursion(trace, rc, schedule, tol=BOUND_TOL)
        rec_violations, rec_min, rec_pairs = rec.violations, rec.min_margin, len(rec.ks)
        for step in trace:
            if step.k >= 2:
                b = error_bound(rc, step.k, schedule)
                margin = b - step.error
                if margin < -BOUND_TOL:
                    bound_violations += 1
                bound_min = margin if bound_min is None else min(bound_min, margin)
                bound_lines.append(",".join([str(step.k), _csv_num(step.error),
                                             _csv_num(b), _csv_num(margin)]))
        theo_slope = "exponential" if rc.is_exponential else rc.theoretical_slope
        try:
            fit = fit_rate(trace, cfg.analysis.tail_fraction)
        except ValueError as exc:
            fit_reason = str(exc)
    with open(bounds_path, "w", newline="") as fh:
        fh.write("\n".join(bound_lines) + "\n")

    status = "VIOLATION" if (rec_violations or bound_violations) else "OK"
    wall = time.perf_counter() - t0
    final = trace.final
    lines = [f"STATUS: {status}", f"name: {cfg.name}",
             "config: " + "; ".join(f"{k}={v}" for k, v in sorted(cfg.raw.items())),
             f"algorithm: {cfg.solver.algorithm}",
             f"objective: {cfg.objective['type']} (dimension {cfg.dimension})",
             f"dictionary: {cfg.dictionary_type}",
             f"steps: {final.k}  stopped: {'true' if final.stopped else 'false'}",
             f"E_final: {final.value:.12g}"]
    if final.error is not None:
        lines.append(f"error_final: {final.error:.12g}  dist_final: {final.dist:.12g}")
    if rc is None:
        lines.append(f"constants: skipped ({reason})")
    else:
        lines.extend(_constants_lines(rc))
        lines.append(f"recursion: pairs={rec_pairs} violations={rec_violations} "
                     f"min_margin={'' if rec_min is None else format(rec_min, '.6g')}")
        lines.append(f"bounds: rows={len(bound_lines) - 1} violations={bound_violations} "
                     f"min_margin={'' if bound_min is None else format(bound_min, '.6g')}")
        if fit is not None:
            lines.append(f"rate_fit: slope={fit.slope:.6g} intercept={fit.intercept:.6g} "
                         f"residual={fit.residual:.6g}")
        else:
            lines.append(f"rate_fit: skipped ({fit_reason})")
        if theo_slope == "exponential":
            lines.append(f"theoretical_rate: exponential "
                         f"(factor {rc.contraction_factor:.6g}; decays faster than "
                         f"any fixed power)")
        else:
            lines.append(f"theoretical_rate: k^{theo_slope:.6g}")
    lines.append(f"wall_time_s: {wall:.3f}")
    report_path.write_text("\n".join(lines) + "\n")
    if not quiet:
        print("\n".join(lines))
    return RunReport(cfg.name, status, trace_path, bounds_path, report_path, trace,
                     rc, reason, rec_violations, rec_min, bound_violations, bound_min,
                     fit, fit_reason, theo_slope, wall)


# ---------------------------------------------------------------------------


@dataclass
class ModuliReport:
    name: str
    status: str
    estimate: ModulusEstimate
    equivalence: ModuliEquivalenceReport
    csv_path: Path
    report_path: Path


def run_moduli(cfg: ExperimentConfig, output_dir=None, quiet: bool = False) -> ModuliReport:
    dictionary = build_dictionary(cfg)
    objective = build_objective(cfg, dictionary)
    radius = _effective_radius(cfg, objective)
    if radius is None:
        raise ConfigError("analysis.omega_radius: required (no closed-form level-set "
                          "radius for this objective)")
    est = estimate_moduli(objective, radius, cfg.analysis.halving_u_grid(),
                          cfg.analysis.sample_count, cfg.analysis.lambda_grid_size,
                          sub_seed(cfg.seed, "analysis"))
    eq = check_moduli_equivalence(est)
    outdir = Path(output_dir if output_dir is not None else cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / f"{cfg.name}.moduli.csv"
    lines = ["u,rho,rho1,delta1"]
    for i, u in enumerate(est.u_grid):
        lines.append(",".join(_csv_num(v) for v in
                              (u, est.rho[i], est.rho1[i], est.delta1[i])))
    with open(csv_path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    status = "OK" if eq.passed else "VIOLATION"
    report_path = outdir / f"{cfg.name}.moduli.txt"
    rep = [f"STATUS: {status}", f"name: {cfg.name}",
           f"samples: {est.sample_count}  seed: {est.seed}",
           f"two-sided comparison (slack {eq.slack:g}, tol {eq.tol:g}):"]
    for row in eq.rows:
        left = "n/a" if row.left_margin is None else f"{row.left_margin:.6g}"
        rep.append(f"  u={row.u:.6g}  right_margin={row.right_margin:.6g}  "
                   f"left_margin={left}  {'pass' if row.passed else 'FAIL'}")
    report_path.write_text("\n".join(rep) + "\n")
    if not quiet:
        print("\n".join(rep))
    return ModuliReport(cfg.name, status, est, eq, csv_path, report_path)


# ---------------------------------------------------------------------------


def parse_variant(descriptor: str, base: SolverConfig) -> SolverConfig:
    """Solver variant from a descriptor like ``wcga:t=0.5,strategy=first_admissible``."""
    name, _, rest = descriptor.partition(":")
    if name not in ("omp", "wcga"):
        raise ConfigError(f"--algs: unknown algorithm {name!r} in {descriptor!r}")
    kwargs: dict = {"algorithm": name}
    if rest:
        for item in rest.split(","):
            key, sep, val = item.partition("=")
            if not sep:
                raise ConfigError(f"--algs: expected key=value in {descriptor!r}")
            key = key.strip()
            val = val.strip()
            if key == "t":
                kwargs["weakness"] = WeaknessSchedule.constant(float(val))
            elif key == "strategy":
                kwargs["selection_strategy"] = val
            elif key == "seed":
                kwargs["seed"] = int(val)
            else:
                raise ConfigError(f"--algs: unknown variant key {key!r} in {descriptor!r}")
    try:
        return replace(base, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"--algs: {descriptor!r}: {exc}") from exc


@dataclass
class CompareReport:
    name: str
    status: str
    labels: list[str]
    traces: list[IterateTrace]
    csv_path: Path
    report_path: Path


def run_compare(cfg: ExperimentConfig, descriptors: list[str], output_dir=None,
                quiet: bool = False) -> CompareReport:
    if len(descriptors) < 2:
        raise ConfigError("--algs: need at least two solver variants")
    dictionary = build_dictionary(cfg)
    objective = build_objective(cfg, dictionary)
    base = _solver_config(cfg)
    variants = [parse_variant(d, base) for d in descriptors]
    traces = []
    for v in variants:
        runner = run_omp if v.algorithm == "omp" else run_wcga
        traces.append(runner(objective, dictionary, v))
    rc, reason = derive_constants(cfg, objective, dictionary)

    outdir = Path(output_dir if output_dir is not None else cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / f"{cfg.name}.compare.csv"
    depth = max(len(t) for t in traces)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k"] + [f"e_k({d})" for d in descriptors])
        for k in range(depth):
            writer.writerow([str(k)] + [_csv_num(t[k].error) if k < len(t) else ""
                                        for t in traces])

    status = "OK"
    rep_rows = []
    for d, v, t in zip(descriptors, variants, traces):
        entry = [f"variant: {d}", f"  steps: {t.final.k} stopped: {t.final.stopped}"]
        if t.has_errors:
            entry.append(f"  error_final: {t.final.error:.12g}")
        if rc is not None and t.has_errors:
            schedule = v.weakness if v.algorithm == "wcga" else None
            rec = check_error_recursion(t, rc, schedule, tol=BOUND_TOL)
            bviol = 0
            for step in t:
                if step.k >= 2 and step.error > error_bound(rc, step.k, schedule) + BOUND_TOL:
                    bviol += 1
            if rec.violations or bviol:
                status = "VIOLATION"
            entry.append(f"  recursion_violations: {rec.violations}  "
                         f"bound_violations: {bviol}")
        try:
            f = fit_rate(t, cfg.analysis.tail_fraction)
            entry.append(f"  fitted_slope: {f.slope:.6g}")
        except ValueError as exc:
            entry.append(f"  fitted_slope: skipped ({exc})")
        rep_rows.extend(entry)
    report_path = outdir / f"{cfg.name}.compare.txt"
    head = [f"STATUS: {status}", f"name: {cfg.name}"]
    if rc is None:
        head.append(f"constants: skipped ({reason})")
    report_path.write_text("\n".join(head + rep_rows) + "\n")
    if not quiet:
        print("\n".join(head + rep_rows))
    return CompareReport(cfg.name, status, descriptors, traces, csv_path, report_path)


# ---------------------------------------------------------------------------


@dataclass
class DemoCSReport:
    name: str
    status: str
    recovered: bool
    distance: float
    rip_low: float | None
    rip_high: float | None
    trace: IterateTrace
    trace_path: Path
    report_path: Path


def run_demo_cs(rows: int, cols: int, sparsity: int, seed: int,
                output_dir="runs", quiet: bool = False) -> DemoCSReport:
    """Compressed-sensing style demo: plant a sparse solution, recover with OMP.

    Also samples the near-isometry ratio ||Az||^2 / ||z||^2 over seeded
    random vectors of the planted sparsity.
    """
    if rows < 1 or cols < 1:
        raise ConfigError(f"--rows/--cols: must be positive, got {rows}x{cols}")
    if rows > cols:
        raise ConfigError(f"--rows: rows ({rows}) may not exceed cols ({cols})")
    if sparsity < 0 or 2 * sparsity > rows:
        raise ConfigError(f"--sparsity: must satisfy 0 <= 2*sparsity <= rows, "
                          f"got {sparsity}")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((rows, cols)) / np.sqrt(rows)
    xbar = np.zeros(cols)
    if sparsity:
        idx = np.sort(rng.choice(cols, size=sparsity, replace=False))
        xbar[idx] = rng.uniform(1.0, 2.0, size=sparsity) * rng.choice((-1.0, 1.0), size=sparsity)
    objective = LeastSquares(A, A @ xbar)
    if objective.known_minimizer is None:
        objective.known_minimizer = xbar
    cfg = SolverConfig(algorithm="omp", max_steps=rows, seed=sub_seed(seed, "solver"))
    trace = run_omp(objective, CanonicalBasis(cols), cfg)

    final = trace.final
    true_support = set(np.flatnonzero(np.abs(xbar) > 0.0))
    found_support = set(SparseSupport.from_coefficients(final.x, 1e-8))
    recovered = found_support == true_support
    distance = norm(final.x - xbar)

    rip_low = rip_high = None
    if sparsity:
        ratios = []
        for _ in range(1000):
            z = np.zeros(cols)
            zi = rng.choice(cols, size=sparsity, replace=False)
            z[zi] = rng.standard_normal(sparsity)
            ratios.append(float(np.dot(A @ z, A @ z) / np.dot(z, z)))
        rip_low, rip_high = min(ratios), max(ratios)

    outdir = Path(output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    name = f"demo_cs_r{rows}_c{cols}_s{sparsity}_seed{seed}"
    trace_path = outdir / f"{name}.trace.csv"
    trace.to_csv(trace_path)
    status = "OK"
    lines = [f"STATUS: {status}", f"name: {name}",
             f"matrix: {rows}x{cols} gaussian, scaled by 1/sqrt(rows)",
             f"planted sparsity: {sparsity}",
             f"steps: {final.k}  stopped: {'true' if final.stopped else 'false'}",
             f"support_recovered: {'true' if recovered else 'false'}",
             f"distance_to_planted: {distance:.12g}"]
    if rip_low is not None:
        lines.append(f"sampled_isometry_ratio: [{rip_low:.6g}, {rip_high:.6g}] "
                     f"over 1000 random {sparsity}-sparse vectors")
    report_path = outdir / f"{name}.report.txt"
    report_path.write_text("\n".join(lines) + "\n")
    if not quiet:
        print("\n".join(lines))
    return DemoCSReport(name, status, recovered, distance, rip_low, rip_high,
                        trace, trace_path, report_path)

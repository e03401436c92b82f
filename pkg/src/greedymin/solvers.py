"""Greedy outer loops (OMP and WCGA) and the restricted inner minimizer.

The inner solver re-minimizes the objective over the span of the selected
atoms.  Exact restricted solves are used when the objective provides them
(quadratics); otherwise descent with Armijo backtracking, preconditioned by
the diagonal Hessian when available, runs until the restricted gradient
coefficients drop below ``inner_tol``.  ``inner_tol`` must stay well below
``stop_tol`` or selection could re-pick an already selected atom.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import IterateTrace, SparseSupport, TraceStep, Vector, norm
from .dictionaries import SELECTION_STRATEGIES, Dictionary, argmax_atom, weak_select
from .objectives import Objective


@dataclass(frozen=True)
class WeaknessSchedule:
    """Per-step weakness parameters t_k in (0, 1] for WCGA selection.

    A finite explicit sequence is padded with its last value for later steps.
    """

    ts: tuple[float, ...]

    def __post_init__(self):
        if not self.ts:
            raise ValueError("weakness schedule must not be empty")
        ts = tuple(float(t) for t in self.ts)
        for t in ts:
            if not 0.0 < t <= 1.0:
                raise ValueError(f"weakness parameter t={t} outside (0, 1]")
        object.__setattr__(self, "ts", ts)

    @classmethod
    def constant(cls, t: float) -> "WeaknessSchedule":
        return cls((float(t),))

    @classmethod
    def from_sequence(cls, seq: Sequence[float]) -> "WeaknessSchedule":
        return cls(tuple(float(t) for t in seq))

    def t(self, k: int) -> float:
        """Weakness parameter for step k (1-based)."""
        if k < 1:
            raise ValueError("step index must be >= 1")
        return self.ts[min(k - 1, len(self.ts) - 1)]


@dataclass(frozen=True)
class InnerConfig:
    inner_tol: float = 1e-10
    max_inner_iters: int = 500
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    initial_step: float = 1.0

    def __post_init__(self):
        if not self.inner_tol > 0:
            raise ValueError("inner_tol must be positive")
        if self.max_inner_iters < 1:
            raise ValueError("max_inner_iters must be >= 1")
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError("armijo_c must be in (0, 1)")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must be in (0, 1)")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")


@dataclass(frozen=True)
class SolverConfig:
    algorithm: str = "omp"
    weakness: WeaknessSchedule = field(default_factory=lambda: WeaknessSchedule.constant(1.0))
    max_steps: int = 100
    stop_tol: float = 1e-8
    inner: InnerConfig = field(default_factory=InnerConfig)
    selection_strategy: str = "exact"
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ("omp", "wcga"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not self.stop_tol > 0:
            raise ValueError("stop_tol must be positive")
        if self.selection_strategy not in SELECTION_STRATEGIES:
            raise ValueError(f"unknown selection strategy {self.selection_strategy!r}")


class InnerSolveError(RuntimeError):
    """Restricted minimization ran out of iterations.

    Carries the best iterate reached and its residual gradient sup-norm.
    """

    def __init__(self, message: str, x: Vector, coeffs: dict[int, float], residual: float):
        super().__init__(message)
        self.x = x
        self.coeffs = coeffs
        self.residual = residual


def restricted_minimize(objective: Objective, dictionary: Dictionary,
                        support: SparseSupport, warm_start: Mapping[int, float] | None,
                        cfg: InnerConfig) -> tuple[Vector, dict[int, float]]:
    """Minimize the objective over the span of the supported atoms.

    Returns a point whose restricted gradient coefficients are all at most
    ``inner_tol`` in magnitude, never worse than the warm start.  Restricted
    gradient coefficients are exactly <E'(x), phi_j> for j in the support
    because the dictionary is orthonormal.
    """
    if support.size == 0:
        raise ValueError("support must be nonempty")
    idx = list(support)
    if warm_start:
        extra = set(warm_start) - set(idx)
        if extra:
            raise ValueError(f"warm start touches indices outside the support: {sorted(extra)}")
    basis = dictionary.subset(idx)
    z = np.array([float(warm_start.get(j, 0.0)) if warm_start else 0.0 for j in idx])

    def pack(zv):
        return basis @ zv, dict(zip(idx, (float(v) for v in zv)))

    def resid(zv) -> float:
        return float(np.max(np.abs(basis.T @ objective.gradient(basis @ zv))))

    if resid(z) <= cfg.inner_tol:
        return pack(z)

    exact = objective.argmin_in_span(basis)
    if exact is not None:
        # keep the warm start if the exact solve is numerically worse
        if objective.value(basis @ exact) <= objective.value(basis @ z):
            z = np.asarray(exact, dtype=np.float64)
        if resid(z) <= cfg.inner_tol:
            return pack(z)

    eps = float(np.finfo(np.float64).eps)
    best_z, best_resid = z.copy(), resid(z)
    for _ in range(cfg.max_inner_iters):
        x = basis @ z
        val = objective.value(x)
        g = basis.T @ objective.gradient(x)
        r = float(np.max(np.abs(g)))
        if r < best_resid:
            best_z, best_resid = z.copy(), r
        if r <= cfg.inner_tol:
            return pack(z)
        direction = None
        hd = objective.hessian_diag(x)
        if hd is not None:
            h = basis.T @ (hd[:, None] * basis)
            h[np.diag_indices_from(h)] += 1e-12 * max(1.0, float(np.max(h.diagonal())))
            try:
                direction = np.linalg.solve(h, g)
            except np.linalg.LinAlgError:
                direction = None
        if direction is None or float(np.dot(g, direction)) <= 0.0:
            direction = g
        slope = float(np.dot(g, direction))
        # Armijo on the value while the decrease is resolvable in double
        # precision; below that floor accept on gradient-norm decrease,
        # which damped Newton keeps shrinking long after value changes
        # fall under roundoff.
        floor = 16.0 * eps * max(1.0, abs(val))
        step = cfg.initial_step
        accepted = False
        while step > 1e-20:
            z_new = z - step * direction
            if objective.value(basis @ z_new) <= val - cfg.armijo_c * step * slope:
                accepted = True
                break
            if cfg.armijo_c * step * slope <= floor and resid(z_new) < r:
                accepted = True
                break
            step *= cfg.backtrack_factor
        if not accepted:
            break  # no resolvable progress in any direction
        z = z_new
    x, coeffs = pack(best_z)
    raise InnerSolveError(
        f"restricted minimization did not reach tol {cfg.inner_tol:g} "
        f"within {cfg.max_inner_iters} iterations (residual {best_resid:g})",
        x, coeffs, best_resid)


def run_omp(objective: Objective, dictionary: Dictionary, cfg: SolverConfig) -> IterateTrace:
    """Greedy run selecting the largest-magnitude gradient coefficient each step."""
    if cfg.algorithm != "omp":
        raise ValueError(f"config requests algorithm {cfg.algorithm!r}, not omp")
    return _run_greedy(objective, dictionary, cfg)


def run_wcga(objective: Objective, dictionary: Dictionary, cfg: SolverConfig) -> IterateTrace:
    """Greedy run with weakness-relaxed selection; t_k = 1 reproduces the OMP run."""
    if cfg.algorithm != "wcga":
        raise ValueError(f"config requests algorithm {cfg.algorithm!r}, not wcga")
    return _run_greedy(objective, dictionary, cfg)


def _run_greedy(objective: Objective, dictionary: Dictionary, cfg: SolverConfig) -> IterateTrace:
    n = objective.dimension
    if dictionary.size != n:
        raise ValueError(f"dictionary size {dictionary.size} != objective dimension {n}")
    xbar = objective.known_minimizer
    e_min = objective.value(xbar) if xbar is not None else None

    def error_of(val: float) -> float | None:
        if e_min is None:
            return None
        gap = val - e_min
        if gap < -1e-8 * (1.0 + abs(e_min)):
            warnings.warn("iterate beat the supplied minimizer; error clamped to 0",
                          RuntimeWarning)
        return max(gap, 0.0)

    def dist_of(x: Vector) -> float | None:
        return norm(x - xbar) if xbar is not None else None

    rng = np.random.default_rng(cfg.seed)
    x = np.zeros(n)
    coeffs: dict[int, float] = {}
    g = dictionary.analyze(objective.gradient(x))
    g_sup = float(np.max(np.abs(g)))
    stopped = g_sup <= cfg.stop_tol
    steps = [TraceStep(0, x.copy(), objective.value(x), error_of(objective.value(x)),
                       dist_of(x), None, None, g_sup, stopped)]

    for m in range(1, cfg.max_steps + 1):
        if stopped:
            break
        if cfg.algorithm == "omp":
            j, coeff = argmax_atom(g)
        else:
            j, coeff = weak_select(g, cfg.weakness.t(m), cfg.selection_strategy, rng)
        if j in coeffs:
            raise RuntimeError(
                f"atom {j} reselected at step {m}; stop_tol ({cfg.stop_tol:g}) "
                f"must stay above inner_tol ({cfg.inner.inner_tol:g})")
        warm = {**coeffs, j: 0.0}
        try:
            x, coeffs = restricted_minimize(
                objective, dictionary, SparseSupport.of(warm), warm, cfg.inner)
        except InnerSolveError as exc:
            raise InnerSolveError(f"step {m}: {exc}", exc.x, exc.coeffs,
                                  exc.residual) from exc
        val = objective.value(x)
        sel_sup = g_sup
        g = dictionary.analyze(objective.gradient(x))
        g_sup = float(np.max(np.abs(g)))
        stopped = g_sup <= cfg.stop_tol
        steps.append(TraceStep(m, x.copy(), val, error_of(val), dist_of(x),
                               j, coeff, sel_sup, stopped))
    return IterateTrace(steps)

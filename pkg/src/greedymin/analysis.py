"""Convergence analysis toolkit: moduli estimators, rate constants, bounds.

The quantities here connect the curvature of the objective to the decay of
the greedy error sequence e_k = E(x_k) - E(xbar):

* sampled moduli of smoothness / uniform convexity of E on a ball,
* the constants of the per-step error recursion
  e_k <= e_{k-1} * (1 - (gain/scale) * t_k^(q/(q-1)) * e_{k-1}^eta),
  with eta = (p-q)/((q-1)p),
* closed-form bounds for any sequence satisfying such a recursion, and
  their specialization to the greedy traces (polynomial for q < p,
  geometric for p = q = 2),
* empirical rate fitting for comparing observed and guaranteed decay.

Sup-type estimates (rho, rho1) are certified lower bounds of the true
suprema and inf-type estimates (delta1) certified upper bounds; every check
is phrased to stay sound under that bias.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ConvexityParams, IterateTrace, SmoothnessParams, Vector
from .objectives import Objective, uniform_ball
from .solvers import WeaknessSchedule


@dataclass
class ModulusEstimate:
    """Sampled moduli on a grid of displacement sizes u."""

    u_grid: Vector
    rho: Vector          # half second difference, sup over samples
    rho1: Vector         # divided three-point difference, sup over samples and lambda
    delta1: Vector       # same expression, inf over samples and lambda
    sample_count: int
    seed: int


@dataclass
class EquivalenceRow:
    u: float
    right_margin: float            # 2*rho(u) + tol - rho1(u)
    left_margin: float | None      # slack*rho1(u) + tol - 4*rho(u/2)

    @property
    def passed(self) -> bool:
        ok = self.right_margin >= 0.0
        if self.left_margin is not None:
            ok = ok and self.left_margin >= 0.0
        return ok


@dataclass
class ModuliEquivalenceReport:
    rows: list[EquivalenceRow]
    slack: float
    tol: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def estimate_moduli(objective: Objective, s_radius: float, u_grid,
                    sample_count: int, lambda_grid_size: int, seed: int,
                    ) -> ModulusEstimate:
    """Monte Carlo moduli over x in a centered ball and y on the unit sphere.

    For each u:
      rho    = max over samples of (E(x+uy) + E(x-uy) - 2E(x)) / 2
      rho1   = max over samples and lambda of
               ((1-l)E(x-l*u*y) + l*E(x+(1-l)*u*y) - E(x)) / (l(1-l))
      delta1 = min of the same expression.
    The lambda grid always includes 1/2 so the classical two-sided
    comparison between rho1 and rho holds sample-by-sample.
    """
    u = np.asarray(sorted(float(v) for v in u_grid), dtype=np.float64)
    if u.size == 0 or u[0] <= 0:
        raise ValueError("u_grid must contain positive values")
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    if lambda_grid_size < 2:
        raise ValueError("lambda_grid_size must be >= 2")
    if not s_radius > 0:
        raise ValueError("s_radius must be positive")
    lambdas = sorted({i / (lambda_grid_size + 1.0)
                      for i in range(1, lambda_grid_size + 1)} | {0.5})
    rng = np.random.default_rng(seed)
    samples = []
    for _ in range(sample_count):
        x = uniform_ball(rng, objective.dimension, s_radius)
        y = rng.standard_normal(objective.dimension)
        y /= np.linalg.norm(y)
        samples.append((x, y, objective.value(x)))

    rho = np.empty_like(u)
    rho1 = np.empty_like(u)
    delta1 = np.empty_like(u)
    for i, ui in enumerate(u):
        second_best = -np.inf
        hi = -np.inf
        lo = np.inf
        for x, y, ex in samples:
            second = 0.5 * (objective.value(x + ui * y)
                            + objective.value(x - ui * y) - 2.0 * ex)
            second_best = max(second_best, second)
            for lam in lambdas:
                a = objective.value(x - lam * ui * y)
                b = objective.value(x + (1.0 - lam) * ui * y)
                q = ((1.0 - lam) * a + lam * b - ex) / (lam * (1.0 - lam))
                hi = max(hi, q)
                lo = min(lo, q)
        rho[i] = second_best
        rho1[i] = hi
        delta1[i] = lo
    return ModulusEstimate(u, rho, rho1, delta1, sample_count, int(seed))


def check_moduli_equivalence(est: ModulusEstimate, slack: float = 1.05,
                             tol: float = 1e-9) -> ModuliEquivalenceReport:
    """Two-sided comparison of the sampled moduli of smoothness.

    Right side rho1(u) <= 2*rho(u) holds per sample by convexity; the left
    side 4*rho(u/2) <= rho1(u) is checked with a slack factor because both
    sides are sup-estimates.  The grid must contain at least one halving
    pair u, u/2.
    """
    u = est.u_grid
    rows: list[EquivalenceRow] = []
    have_pair = False
    for i, ui in enumerate(u):
        right = 2.0 * est.rho[i] + tol - est.rho1[i]
        left = None
        half = np.flatnonzero(np.abs(u - 0.5 * ui) <= 1e-9 * ui)
        if half.size:
            have_pair = True
            left = slack * est.rho1[i] + tol - 4.0 * est.rho[half[0]]
        rows.append(EquivalenceRow(float(ui), float(right),
                                   None if left is None else float(left)))
    if not have_pair:
        raise ValueError("u_grid contains no halving pair u, u/2")
    return ModuliEquivalenceReport(rows, slack, tol)


# ---------------------------------------------------------------------------
# rate constants


def global_convexity_constant(beta: float, p: float, diameter_ratio: float) -> float:
    """Convexity constant valid for every pair in the level set.

    The radius-limited constant beta degrades to beta * L^(1-p) when pairs
    can be up to L times the condition radius apart (L >= 1).
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    if not p >= 2:
        raise ValueError("p must be >= 2")
    if diameter_ratio < 1.0:
        raise ValueError(f"diameter ratio {diameter_ratio} below 1")
    return beta * min(1.0, diameter_ratio ** (1.0 - p))


def decrement_gain(grad_bound: float, radius: float, alpha: float, q: float) -> float:
    """Optimal coefficient of the one-step decrease extracted from a selection.

    Equals the maximum of g(mu) = (mu - 1) * mu^(-q/(q-1)) over admissible
    mu > max(1, grad_bound * radius^(1-q) / alpha): the unconstrained
    maximizer mu = q when admissible, otherwise the boundary value.
    """
    for name, v in (("grad_bound", grad_bound), ("radius", radius), ("alpha", alpha)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    if not 1.0 < q <= 2.0:
        raise ValueError(f"q={q} outside (1, 2]")
    ratio = grad_bound * radius ** (1.0 - q) / alpha
    mu = q if ratio < q else ratio
    return (mu - 1.0) * mu ** (-q / (q - 1.0))


@dataclass(frozen=True)
class RateConstants:
    """Everything needed to evaluate the per-step recursion and the rate bounds.

    The recursion reads
      e_k <= e_{k-1} * (1 - (gain/scale) * t_k^(q/(q-1)) * e_{k-1}^eta)
    with eta = (p-q)/((q-1)p).  For q < p the closed-form bound is
      e_k <= poly_scale * (s' / (poly_offset*s' + gain*T_k))^(p(q-1)/(p-q)),
    s' = support_size^(q/(2(q-1))), T_k = sum_{j=2..k} t_j^(q/(q-1));
    for p = q = 2 it collapses to initial_gap * prod (1 - contraction_gain/
    support_size * t_j^2), a geometric decay when t is constant.
    """

    alpha: float
    smooth_exponent: float       # q in (1, 2]
    beta: float
    convex_exponent: float       # p >= 2
    radius: float
    grad_bound: float
    support_size: int
    diameter_ratio: float
    beta_global: float
    initial_gap: float
    gain: float
    scale: float
    contraction_gain: float | None = None
    contraction_factor: float | None = None
    poly_scale: float | None = None
    poly_offset: float | None = None

    @property
    def is_exponential(self) -> bool:
        return self.contraction_factor is not None

    @property
    def theoretical_slope(self) -> float | None:
        """Guaranteed power-law exponent of e_k, None in the geometric case."""
        p, q = self.convex_exponent, self.smooth_exponent
        if self.is_exponential:
            return None
        return -p * (q - 1.0) / (p - q)


def rate_constants(objective: Objective, minimizer: Vector, support_size: int,
                   smoothness: SmoothnessParams, convexity: ConvexityParams,
                   diameter_ratio: float = 1.0) -> RateConstants:
    """Derive every recursion and bound constant from the curvature parameters.

    Covers q < p and p = q = 2; raises "bound vacuous" when the geometric
    contraction factor would leave (0, 1).
    """
    alpha, q = smoothness.alpha, smoothness.exponent
    beta, p = convexity.beta, convexity.exponent
    if abs(smoothness.radius - convexity.radius) > 1e-9 * max(smoothness.radius, 1.0):
        raise ValueError("smoothness and convexity radii disagree")
    if p == q and p != 2.0:
        raise ValueError("rate theory covers q < p or p = q = 2")
    if support_size < 1:
        raise ValueError("support_size must be >= 1")
    radius = smoothness.radius
    beta_global = global_convexity_constant(beta, p, diameter_ratio)
    initial_gap = objective.value(np.zeros(objective.dimension)) - objective.value(minimizer)
    if not initial_gap > 0:
        raise ValueError("objective is already minimized at the origin")
    gain = decrement_gain(smoothness.grad_bound, radius, alpha, q)
    # weighted mean inequality constant tying the gap to the distance
    geom = p * beta_global ** (1.0 / p) * (p - 1.0) ** ((1.0 - p) / p)
    qq = q / (q - 1.0)
    per_atom = alpha ** (1.0 / (q - 1.0)) * geom ** (-qq)
    scale = support_size ** (qq / 2.0) * per_atom
    kwargs: dict = {}
    if p == q == 2.0:
        contraction_gain = 4.0 * beta_global * gain / alpha
        factor = 1.0 - contraction_gain / support_size
        if factor <= 0.0:
            raise ValueError(
                f"bound vacuous: contraction factor {factor:g} not in (0, 1)")
        kwargs.update(contraction_gain=contraction_gain, contraction_factor=factor)
    else:
        ell = (p - q) / (p * (q - 1.0))
        kwargs.update(
            poly_scale=max(1.0, ell ** (-1.0 / ell)) * per_atom ** (1.0 / ell),
            poly_offset=per_atom * initial_gap ** (-ell),
        )
    return RateConstants(alpha=alpha, smooth_exponent=q, beta=beta,
                         convex_exponent=p, radius=radius,
                         grad_bound=smoothness.grad_bound,
                         support_size=int(support_size),
                         diameter_ratio=float(diameter_ratio),
                         beta_global=beta_global, initial_gap=initial_gap,
                         gain=gain, scale=scale, **kwargs)


# ---------------------------------------------------------------------------
# sequence recursion bound


@dataclass(frozen=True)
class SequenceBoundInput:
    """A nonnegative sequence with a_1 <= start_bound and
    a_{m+1} <= a_m * (1 - (gains[m+1]/scale) * a_m^exponent)."""

    start_bound: float
    scale: float
    exponent: float
    gains: tuple[float, ...]     # gains[i] applies at step i+2

    def __post_init__(self):
        if not self.start_bound > 0:
            raise ValueError("start_bound must be positive")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if not self.exponent > 0:
            raise ValueError("exponent must be positive")
        if any(g < 0 for g in self.gains):
            raise ValueError("gains must be nonnegative")


def recursive_sequence_bound(inp: SequenceBoundInput, m: int) -> float:
    """Closed-form bound on the m-th term of the recursive sequence.

    max(1, ell^(-1/ell)) * scale^(1/ell)
        * (scale * start_bound^(-ell) + sum of gains through step m)^(-1/ell)
    """
    if m < 2:
        raise ValueError("bound applies from the second term on")
    if len(inp.gains) < m - 1:
        raise ValueError(f"need gains through step {m}, got {len(inp.gains) + 1}")
    ell = inp.exponent
    acc = inp.scale * inp.start_bound ** (-ell) + math.fsum(inp.gains[:m - 1])
    return max(1.0, ell ** (-1.0 / ell)) * inp.scale ** (1.0 / ell) * acc ** (-1.0 / ell)


# ---------------------------------------------------------------------------
# trace checks and bounds


@dataclass
class RecursionReport:
    """Per-step margins of the error recursion; negative margin = violation."""

    ks: list[int]
    margins: list[float]

    @property
    def violations(self) -> int:
        return sum(1 for m in self.margins if m < 0.0)

    @property
    def min_margin(self) -> float | None:
        return min(self.margins) if self.margins else None


def check_error_recursion(trace: IterateTrace, rc: RateConstants,
                          schedule: WeaknessSchedule | None = None,
                          tol: float = 1e-9) -> RecursionReport:
    """Check every consecutive error pair against the one-step recursion.

    ``schedule`` supplies the weakness parameters of a WCGA run; omit it for
    OMP (t = 1).  Violations are reported, not raised.
    """
    p, q = rc.convex_exponent, rc.smooth_exponent
    eta = (p - q) / ((q - 1.0) * p)
    qq = q / (q - 1.0)
    base = rc.gain / rc.scale
    ks: list[int] = []
    margins: list[float] = []
    prev = None
    for step in trace:
        if step.error is None:
            raise ValueError("recursion check needs error data (known minimizer)")
        if prev is not None and step.k >= 2:
            t = schedule.t(step.k) if schedule is not None else 1.0
            factor = 1.0 - base * t ** qq * prev ** eta
            ks.append(step.k)
            margins.append(prev * factor + tol - step.error)
        prev = step.error
    return RecursionReport(ks, margins)


def error_bound(rc: RateConstants, k: int,
                schedule: WeaknessSchedule | None = None) -> float:
    """Guaranteed bound on e_k for k >= 2 under the derived constants.

    Without a schedule this is the pure-greedy bound; a schedule weights
    each step by t_j^(q/(q-1)) (polynomial case) or shrinks the geometric
    factor to 1 - contraction_gain/support * t_j^2 (p = q = 2).
    """
    if k < 2:
        raise ValueError("bound applies from step 2 on")
    q = rc.smooth_exponent
    qq = q / (q - 1.0)
    if rc.is_exponential:
        if schedule is None:
            return rc.initial_gap * rc.contraction_factor ** (k - 1)
        out = rc.initial_gap
        for j in range(2, k + 1):
            out *= 1.0 - (rc.contraction_gain / rc.support_size) * schedule.t(j) ** 2
        return out
    p = rc.convex_exponent
    if schedule is None:
        weight_sum = float(k - 1)
    else:
        weight_sum = math.fsum(schedule.t(j) ** qq for j in range(2, k + 1))
    s_pow = rc.support_size ** (qq / 2.0)
    expo = p * (q - 1.0) / (p - q)
    return rc.poly_scale * (s_pow / (rc.poly_offset * s_pow + rc.gain * weight_sum)) ** expo


def distance_bound(rc: RateConstants, error: float) -> float:
    """Bound on the distance to the minimizer implied by an error value."""
    if error < 0:
        raise ValueError("error must be nonnegative")
    return (error / rc.beta_global) ** (1.0 / rc.convex_exponent)


@dataclass
class RateFit:
    slope: float
    intercept: float
    residual: float              # RMS residual of the log-log fit


def fit_rate(trace: IterateTrace, tail_fraction: float) -> RateFit:
    """Least-squares power-law fit of the trailing positive-error steps.

    Fits log e_k against log k over the last ``tail_fraction`` of steps with
    positive error (step 0 excluded); needs at least 5 usable points.
    """
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must be in (0, 1]")
    ks = []
    es = []
    for step in trace:
        if step.k >= 1 and step.error is not None and step.error > 0.0:
            ks.append(step.k)
            es.append(step.error)
    n_fit = int(math.ceil(tail_fraction * len(ks)))
    if n_fit < 5:
        raise ValueError(f"need at least 5 positive-error steps in the tail, have {n_fit}")
    lk = np.log(np.array(ks[-n_fit:], dtype=np.float64))
    le = np.log(np.array(es[-n_fit:], dtype=np.float64))
    slope, intercept = np.polyfit(lk, le, 1)
    resid = float(np.sqrt(np.mean((le - (slope * lk + intercept)) ** 2)))
    return RateFit(float(slope), float(intercept), resid)

"""Shared problem builders for the test suite."""
from __future__ import annotations

import numpy as np
import pytest

import greedymin as gm
from greedymin.core import IterateTrace, TraceStep


def make_sparse_quadratic(seed: int, n: int = 100, s: int = 5,
                          w_low: float = 0.5, w_high: float = 2.0):
    """Seeded diagonal quadratic with an s-sparse center, canonical dictionary."""
    rng = np.random.default_rng(gm.sub_seed(seed, "objective"))
    center = np.zeros(n)
    idx = np.sort(rng.choice(n, size=s, replace=False))
    center[idx] = rng.uniform(1.0, 2.0, s) * rng.choice((-1.0, 1.0), s)
    weights = np.ones(n) if w_low == w_high == 1.0 else rng.uniform(w_low, w_high, n)
    return gm.DiagonalQuadratic(center, weights), gm.CanonicalBasis(n)


def make_rotated_powersum(seed: int = 16, n: int = 50, s: int = 3,
                          decades: float = 6.0):
    """Rotated power-sum fixture whose greedy run has a long positive-error tail."""
    dictionary = gm.RotatedBasis(n, seed=gm.sub_seed(seed, "dictionary"))
    rng = np.random.default_rng(gm.sub_seed(seed, "objective"))
    coeffs = np.zeros(n)
    idx = np.sort(rng.choice(n, size=s, replace=False))
    coeffs[idx] = rng.uniform(1.0, 2.0, s) * rng.choice((-1.0, 1.0), s)
    center = dictionary.synthesize(coeffs)
    weights = 10.0 ** rng.uniform(-decades / 2, decades / 2, n)
    return gm.PowerSum(center, 4.0, weights), dictionary, coeffs


def powersum_constants(objective: gm.PowerSum, seed: int,
                       support_size: int) -> gm.RateConstants:
    """Estimated rate constants following the harness recipe (safety-relaxed)."""
    radius = 1.1 * objective.level_set_radius()
    pair_radius = 2.0 * radius
    a_hat, b_hat = gm.estimate_condition_constants(
        objective, 2.0, objective.exponent, radius, 2000,
        gm.sub_seed(seed, "analysis"), pair_radius=pair_radius)
    smooth = gm.SmoothnessParams(1.1 * a_hat, 2.0, pair_radius,
                                 objective.gradient_sup_bound())
    convex = gm.ConvexityParams(0.9 * b_hat, objective.exponent, pair_radius)
    return gm.rate_constants(objective, objective.known_minimizer, support_size,
                             smooth, convex, 1.0)


def synth_trace(errors, dim: int = 2) -> IterateTrace:
    """Trace with prescribed error values and placeholder iterates."""
    steps = []
    for k, e in enumerate(errors):
        steps.append(TraceStep(k=k, x=np.zeros(dim), value=float(e), error=float(e),
                               dist=None, selected=None if k == 0 else k - 1,
                               grad_coeff=None, grad_sup=0.0, stopped=False))
    return IterateTrace(steps)


@pytest.fixture
def unit_quadratic4():
    return gm.DiagonalQuadratic([3.0, 0.0, 1.0, 0.0], np.ones(4))

import csv

import numpy as np
import pytest

import greedymin as gm
from greedymin.core import SparseSupport
from greedymin.objectives import Objective
from greedymin.solvers import InnerSolveError, restricted_minimize

from conftest import make_rotated_powersum, make_sparse_quadratic


class Stripped(Objective):
    """Wrapper exposing only value/gradient (forces the plain descent path)."""

    def __init__(self, base):
        super().__init__(base.dimension)
        self.base = base
        self.known_minimizer = base.known_minimizer

    def value(self, x):
        return self.base.value(x)

    def gradient(self, x):
        return self.base.gradient(x)


class Conjugated(Objective):
    """The base objective seen through an orthogonal change of coordinates."""

    def __init__(self, base, q):
        super().__init__(base.dimension)
        self.base = base
        self.q = q
        if base.known_minimizer is not None:
            self.known_minimizer = q.T @ base.known_minimizer

    def value(self, z):
        return self.base.value(self.q @ z)

    def gradient(self, z):
        return self.q.T @ self.base.gradient(self.q @ z)

    def argmin_in_span(self, basis):
        return self.base.argmin_in_span(self.q @ basis)


def _cfg(**kw):
    inner_keys = {k: kw.pop(k) for k in list(kw) if k in
                  ("inner_tol", "max_inner_iters", "armijo_c",
                   "backtrack_factor", "initial_step")}
    return gm.SolverConfig(inner=gm.InnerConfig(**inner_keys), **kw)


# -- restricted minimization -------------------------------------------------


def test_restricted_single_coordinate(unit_quadratic4):
    D = gm.CanonicalBasis(4)
    x, coeffs = restricted_minimize(unit_quadratic4, D, SparseSupport((0,)),
                                    {0: 0.0}, gm.InnerConfig())
    assert np.allclose(x, [3.0, 0.0, 0.0, 0.0], atol=1e-12)
    assert abs(unit_quadratic4.gradient(x)[0]) <= 1e-10
    assert coeffs == {0: 3.0}


def test_restricted_warm_start_already_optimal(unit_quadratic4):
    D = gm.CanonicalBasis(4)
    warm = {0: 3.0, 2: 1.0}
    x, coeffs = restricted_minimize(unit_quadratic4, D, SparseSupport((0, 2)),
                                    warm, gm.InnerConfig())
    assert coeffs == warm
    assert np.allclose(x, unit_quadratic4.known_minimizer)


def test_restricted_full_support_matches_normal_equations():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((10, 6))
    b = rng.standard_normal(10)
    E = gm.LeastSquares(A, b)
    D = gm.CanonicalBasis(6)
    x, _ = restricted_minimize(E, D, SparseSupport(tuple(range(6))), None,
                               gm.InnerConfig())
    oracle = np.linalg.solve(A.T @ A, A.T @ b)
    assert np.allclose(x, oracle, atol=1e-8)


def test_restricted_descent_path_matches_oracle():
    rng = np.random.default_rng(1)
    E = Stripped(gm.DiagonalQuadratic(rng.standard_normal(5),
                                      rng.uniform(0.5, 2.0, 5)))
    D = gm.CanonicalBasis(5)
    support = SparseSupport((0, 2, 4))
    x, _ = restricted_minimize(E, D, support, None,
                               gm.InnerConfig(inner_tol=1e-9, max_inner_iters=5000))
    expected = np.zeros(5)
    expected[[0, 2, 4]] = E.base.center[[0, 2, 4]]
    assert np.allclose(x, expected, atol=1e-8)


def test_restricted_never_worse_than_warm_start():
    E, D, _ = make_rotated_powersum(seed=1)
    rng = np.random.default_rng(2)
    support = SparseSupport((3, 10, 17))
    warm = {3: rng.uniform(), 10: rng.uniform(), 17: rng.uniform()}
    start_val = E.value(D.synthesize(warm))
    x, _ = restricted_minimize(E, D, support, warm,
                               gm.InnerConfig(max_inner_iters=3000))
    assert E.value(x) <= start_val + 1e-12 * (1 + abs(start_val))


def test_restricted_exhaustion_carries_best_iterate():
    E = Stripped(gm.DiagonalQuadratic([5.0, 0.0], [1.0, 1.0]))
    D = gm.CanonicalBasis(2)
    with pytest.raises(InnerSolveError) as err:
        restricted_minimize(E, D, SparseSupport((0,)), {0: 0.0},
                            gm.InnerConfig(max_inner_iters=1, initial_step=1e-3))
    assert err.value.residual > 0
    assert err.value.x.shape == (2,)


def test_restricted_validation(unit_quadratic4):
    D = gm.CanonicalBasis(4)
    with pytest.raises(ValueError, match="nonempty"):
        restricted_minimize(unit_quadratic4, D, SparseSupport(()), None,
                            gm.InnerConfig())
    with pytest.raises(ValueError, match="outside the support"):
        restricted_minimize(unit_quadratic4, D, SparseSupport((0,)), {1: 1.0},
                            gm.InnerConfig())


# -- greedy runs ---------------------------------------------------------------


def test_omp_hand_computed_trace(unit_quadratic4):
    D = gm.CanonicalBasis(4)
    tr = gm.run_omp(unit_quadratic4, D, _cfg(algorithm="omp", max_steps=10))
    assert tr.support == [0, 2]
    assert [s.k for s in tr] == [0, 1, 2]
    assert abs(tr[1].error - 0.5) <= 1e-12
    assert tr[2].error <= 1e-12
    assert tr.final.stopped
    assert np.allclose(tr.final.x, unit_quadratic4.known_minimizer, atol=1e-10)
    # selection data: gradient at 0 is (-3, 0, -1, 0)
    assert tr[1].grad_coeff == -3.0 and tr[1].grad_sup == 3.0


def test_omp_stops_at_step_zero_when_centered():
    E = gm.DiagonalQuadratic([0.0, 0.0, 0.0], [1.0, 2.0, 3.0])
    tr = gm.run_omp(E, gm.CanonicalBasis(3), _cfg(algorithm="omp"))
    assert len(tr) == 1 and tr[0].stopped and tr[0].k == 0


def test_omp_orthonormal_rows_two_sparse_recovery():
    rng = np.random.default_rng(3)
    n, k = 40, 20
    q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    A = q.T                                    # k x n with orthonormal rows
    xbar = np.zeros(n)
    xbar[[5, 17]] = [1.5, -2.0]
    E = gm.LeastSquares(A, A @ xbar)
    E.known_minimizer = xbar
    # oracle: brute force over all supports of size <= 2
    best = (np.inf, None)
    for i in range(n):
        for j in range(i, n):
            cols = [i] if i == j else [i, j]
            z, *_ = np.linalg.lstsq(A[:, cols], A @ xbar, rcond=None)
            r = float(np.linalg.norm(A[:, cols] @ z - A @ xbar) ** 2)
            if r < best[0]:
                best = (r, tuple(cols))
    assert best[1] == (5, 17)
    tr = gm.run_omp(E, gm.CanonicalBasis(n), _cfg(algorithm="omp", max_steps=10))
    assert sorted(tr.support) == [5, 17]
    assert tr.final.k == 2 and tr[2].error <= 1e-10


def test_wcga_t1_exact_matches_omp():
    for seed in range(3):
        E, D = make_sparse_quadratic(seed, n=30, s=4)
        omp = gm.run_omp(E, D, _cfg(algorithm="omp", max_steps=30))
        wcga = gm.run_wcga(E, D, _cfg(algorithm="wcga", max_steps=30,
                                      weakness=gm.WeaknessSchedule.constant(1.0)))
        assert omp.support == wcga.support
        for a, b in zip(omp, wcga):
            assert abs(a.error - b.error) <= 1e-10


def test_wcga_first_admissible_picks_lower_index():
    E = gm.DiagonalQuadratic([2.0, 3.0, 0.0], np.ones(3))
    tr = gm.run_wcga(E, gm.CanonicalBasis(3),
                     _cfg(algorithm="wcga", weakness=gm.WeaknessSchedule.constant(0.5),
                          selection_strategy="first_admissible", max_steps=5))
    assert tr[1].selected == 0        # argmax would be index 1


def test_wcga_random_admissible_deterministic():
    E, D = make_sparse_quadratic(4, n=25, s=5)
    cfg = _cfg(algorithm="wcga", weakness=gm.WeaknessSchedule.constant(0.4),
               selection_strategy="random_admissible", max_steps=25, seed=99)
    a = gm.run_wcga(E, D, cfg)
    b = gm.run_wcga(E, D, cfg)
    assert a.support == b.support
    assert all(x.error == y.error for x, y in zip(a, b))


def test_algorithm_config_mismatch(unit_quadratic4):
    with pytest.raises(ValueError, match="not omp"):
        gm.run_omp(unit_quadratic4, gm.CanonicalBasis(4), _cfg(algorithm="wcga"))
    with pytest.raises(ValueError, match="not wcga"):
        gm.run_wcga(unit_quadratic4, gm.CanonicalBasis(4), _cfg(algorithm="omp"))


def test_dimension_mismatch_raises(unit_quadratic4):
    with pytest.raises(ValueError, match="dictionary size"):
        gm.run_omp(unit_quadratic4, gm.CanonicalBasis(5), _cfg(algorithm="omp"))


def test_monotonicity_orthogonality_freshness():
    runs = []
    for seed in range(3):
        E, D = make_sparse_quadratic(seed, n=30, s=6)
        runs.append((E, D, gm.run_omp(E, D, _cfg(algorithm="omp", max_steps=30))))
    E, D, _ = make_rotated_powersum(seed=16)
    runs.append((E, D, gm.run_omp(E, D, _cfg(algorithm="omp", max_steps=60,
                                             max_inner_iters=3000))))
    for E, D, tr in runs:
        vals = tr.values()
        assert np.all(np.diff(vals) <= 1e-10 * (1 + np.abs(vals[:-1])))
        # distinct selections
        sel = tr.support
        assert len(sel) == len(set(sel))
        # restricted gradient vanishes at every iterate over its support
        for step in tr:
            if step.k == 0:
                continue
            g = D.analyze(E.gradient(step.x))
            assert max(abs(g[j]) for j in sel[:step.k]) <= 1e-9


def test_finite_recovery_sparse_quadratic():
    for seed in range(5):
        E, D = make_sparse_quadratic(seed, n=60, s=7)
        tr = gm.run_omp(E, D, _cfg(algorithm="omp", max_steps=60))
        assert tr.final.k == 7 and tr.final.stopped
        assert gm.norm(tr.final.x - E.known_minimizer) <= 1e-8


def test_padding_independence():
    E, D = make_sparse_quadratic(1, n=6, s=2, w_low=1.0, w_high=1.0)
    padded_center = np.concatenate([E.center, np.zeros(6)])
    E2 = gm.DiagonalQuadratic(padded_center, np.ones(12))
    tr1 = gm.run_omp(E, D, _cfg(algorithm="omp", max_steps=10))
    tr2 = gm.run_omp(E2, gm.CanonicalBasis(12), _cfg(algorithm="omp", max_steps=10))
    assert tr1.support == tr2.support
    for a, b in zip(tr1, tr2):
        assert abs(a.error - b.error) <= 1e-12


def test_rotation_invariance():
    rng = np.random.default_rng(7)
    basis = gm.RotatedBasis(12, seed=3)
    coeffs = np.zeros(12)
    coeffs[[2, 5, 9]] = [1.5, -2.0, 1.0]
    center = basis.synthesize(coeffs)
    E = gm.DiagonalQuadratic(center, rng.uniform(0.5, 2.0, 12))
    rotated_run = gm.run_omp(E, basis, _cfg(algorithm="omp", max_steps=20))
    conj_run = gm.run_omp(Conjugated(E, basis.q), gm.CanonicalBasis(12),
                          _cfg(algorithm="omp", max_steps=20))
    assert rotated_run.support == conj_run.support
    for a, b in zip(rotated_run, conj_run):
        assert abs(a.error - b.error) <= 1e-8


def test_per_step_recursion_invariant_quadratic():
    E = gm.DiagonalQuadratic([3.0, 0.0, 1.0, 0.0, 2.0], np.ones(5))
    D = gm.CanonicalBasis(5)
    tr = gm.run_omp(E, D, _cfg(algorithm="omp", max_steps=10))
    smooth, convex = E.known_params
    rc = gm.rate_constants(E, E.known_minimizer, 3, smooth, convex, 1.0)
    errs = tr.errors()
    factor = 1.0 - rc.contraction_gain / rc.support_size
    for k in range(2, len(errs)):
        assert errs[k] <= errs[k - 1] * factor + 1e-9


def test_inner_failure_reports_step_index():
    E, D, _ = make_rotated_powersum(seed=16)
    with pytest.raises(InnerSolveError, match="step 1"):
        gm.run_omp(E, D, _cfg(algorithm="omp", max_steps=5, max_inner_iters=1))


def test_weakness_schedule():
    s = gm.WeaknessSchedule.from_sequence([0.5, 0.8])
    assert s.t(1) == 0.5 and s.t(2) == 0.8 and s.t(9) == 0.8
    with pytest.raises(ValueError):
        gm.WeaknessSchedule.constant(0.0)
    with pytest.raises(ValueError):
        gm.WeaknessSchedule.from_sequence([])
    with pytest.raises(ValueError):
        s.t(0)


def test_trace_csv_contents(tmp_path):
    E, D = make_sparse_quadratic(2, n=20, s=3)
    tr = gm.run_omp(E, D, _cfg(algorithm="omp", max_steps=20))
    path = tmp_path / "trace.csv"
    tr.to_csv(path)
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(tr)
    for row, step in zip(rows, tr):
        assert int(row["k"]) == step.k
        assert float(row["E_k"]) == step.value
        if step.selected is None:
            assert row["selected_index"] == ""
        else:
            assert int(row["selected_index"]) == step.selected

import numpy as np
import pytest

from qdcavity.errors import RankDeficiencyWarning
from qdcavity.lm import covariance_from_jacobian, levenberg_marquardt, numeric_jacobian


def _exp_problem(seed=0, noise=0.01):
    t = np.linspace(0, 4, 80)
    y = 2.0 * np.exp(-1.3 * t) + 0.5 + np.random.default_rng(seed).normal(0, noise, t.size)
    return t, y, lambda x: x[0] * np.exp(-x[1] * t) + x[2] - y


class TestLevenbergMarquardt:
    def test_rosenbrock(self):
        fun = lambda x: np.array([10 * (x[1] - x[0] ** 2), 1 - x[0]])
        res = levenberg_marquardt(fun, [-1.2, 1.0], [-5, -5], [5, 5], max_iterations=500)
        assert res.converged
        np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-6)

    def test_cost_trace_non_increasing(self):
        _, _, fun = _exp_problem()
        res = levenberg_marquardt(fun, [1.0, 0.3, 0.0], [0, 0, -2], [10, 10, 2])
        assert np.all(np.diff(res.cost_trace) <= 0)
        assert res.cost == pytest.approx(res.cost_trace[-1])

    def test_respects_bounds(self):
        _, _, fun = _exp_problem()
        res = levenberg_marquardt(fun, [1.0, 0.3, 0.0], [0, 0, -2], [10, 1.0, 2])
        assert res.x[1] <= 1.0
        assert res.x[1] == pytest.approx(1.0)

    def test_iteration_limit_reported(self):
        _, _, fun = _exp_problem()
        res = levenberg_marquardt(fun, [1.0, 0.3, 0.0], [0, 0, -2], [10, 10, 2], max_iterations=1)
        assert not res.converged
        assert res.iterations == 1

    def test_linear_exact(self):
        A = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]])
        b = np.array([1.0, 2.0, 2.5])
        res = levenberg_marquardt(lambda x: A @ x - b, [0, 0], [-10, -10], [10, 10])
        np.testing.assert_allclose(res.x, np.linalg.lstsq(A, b, rcond=None)[0], atol=1e-8)

    def test_rank_deficiency_warns(self):
        fun = lambda x: np.array([x[0] + x[1] - 1.0, 2 * (x[0] + x[1]) - 2.0])
        with pytest.warns(RankDeficiencyWarning):
            res = levenberg_marquardt(fun, [0.2, 0.2], [-5, -5], [5, 5])
        assert res.rank == 1


class TestCovariance:
    def test_matches_linear_regression(self):
        rng = np.random.default_rng(3)
        x = np.linspace(0, 1, 50)
        J = np.column_stack([np.ones_like(x), x])
        r = rng.normal(0, 0.1, x.size)
        cov, rank = covariance_from_jacobian(J, r)[:2]
        s2 = r @ r / (50 - 2)
        np.testing.assert_allclose(cov, s2 * np.linalg.inv(J.T @ J), rtol=1e-10)
        assert rank == 2

    def test_numeric_jacobian(self):
        fun = lambda x: np.array([x[0] ** 2, x[0] * x[1]])
        J = numeric_jacobian(fun, np.array([2.0, 3.0]), [1e-5, 1e-5])
        np.testing.assert_allclose(J, [[4, 0], [3, 2]], atol=1e-8)

    def test_one_sided_at_bound(self):
        fun = lambda x: np.sqrt(np.maximum(x, 0.0))
        J = numeric_jacobian(fun, np.array([1.0]), [1e-6], lower=[0.0], upper=[1.0])
        assert J[0, 0] == pytest.approx(0.5, rel=1e-5)

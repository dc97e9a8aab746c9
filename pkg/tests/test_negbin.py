import numpy as np
import pytest

from followgraph.errors import InputError, RankDeficientError
from followgraph.glm import DesignMatrix, NbParams, OptimizerConfig, nb_fit, nb_loglik, nb_loglik_grad
from followgraph.glm.negbin import LN_ALPHA_FLOOR
from followgraph.synthetic import Scenario, simulate_nb

from glm_oracles import (
    central_gradient,
    nb2_loglik_reference,
    poisson_irls,
    poisson_loglik_reference,
    relative_error,
)


@pytest.fixture(scope="module")
def small_data():
    rng = np.random.default_rng(3)
    X = DesignMatrix.from_array(rng.normal(size=(300, 2)), ["a", "b"])
    mu = np.exp(X.values @ [0.5, 0.4, -0.3])
    y = rng.poisson(rng.gamma(2.0, 0.5, size=300) * mu)
    return y, X


class TestLikelihood:
    @pytest.mark.parametrize("alpha", [1e-3, 0.2, 1.0, 7.5])
    def test_matches_lgamma_form(self, small_data, alpha):
        y, X = small_data
        beta = np.array([0.4, 0.3, -0.2])
        got = nb_loglik(NbParams(beta, np.log(alpha)), y, X)
        assert got == pytest.approx(nb2_loglik_reference(beta, alpha, y, X.values), rel=1e-10)

    def test_poisson_limit_value(self, small_data):
        y, X = small_data
        beta = np.array([0.4, 0.3, -0.2])
        got = nb_loglik(NbParams(beta, np.log(1e-12)), y, X)
        assert got == pytest.approx(poisson_loglik_reference(beta, y, X.values), rel=1e-9)

    def test_gradient_matches_finite_differences(self, small_data):
        y, X = small_data
        rng = np.random.default_rng(4)
        for _ in range(5):
            theta = np.append(rng.normal(0, 0.3, 3), rng.uniform(-3, 1))
            _, g = nb_loglik_grad(theta, y, X)
            fd = central_gradient(lambda t: nb_loglik(t, y, X), theta)
            assert relative_error(g, fd) < 1e-6

    def test_rejects_non_counts(self, small_data):
        _, X = small_data
        with pytest.raises(InputError):
            nb_loglik(np.zeros(4), np.full(X.n_rows, 0.5), X)


class TestFit:
    def test_recovers_truth(self):
        rng = np.random.default_rng(11)
        X = DesignMatrix.from_array(rng.normal(size=(20000, 2)))
        beta = np.array([0.3, 0.8, -0.5])
        y = rng.poisson(rng.gamma(2.0, 0.5, size=20000) * np.exp(X.values @ beta))
        fit = nb_fit(y, X)
        assert fit.converged
        assert np.max(np.abs(fit.nb_params.beta - beta)) < 0.05
        assert abs(fit.alpha - 0.5) < 0.05
        assert fit.gradient_norm_at_solution < 1e-6
        assert np.all(np.isfinite(fit.standard_errors))

    def test_intercept_only_matches_mean(self, small_data):
        y, _ = small_data
        X = DesignMatrix(np.ones((y.size, 1)), ("const",))
        fit = nb_fit(y, X)
        assert abs(np.exp(fit.params[0]) - y.mean()) < 1e-8

    def test_poisson_limit_agrees_with_irls(self):
        scenario = Scenario.from_json({"seed": 5, "nb": {"n": 5000, "beta": [0.2, 0.5], "alpha": 1e-6}})
        y, X = simulate_nb(scenario)
        fit = nb_fit(y, X)
        assert fit.converged
        oracle = poisson_irls(y.astype(float), X.values)
        assert np.max(np.abs(fit.nb_params.beta - oracle)) < 0.05

    def test_underdispersed_data_hits_floor(self):
        # Binomial counts are less dispersed than Poisson: the alpha MLE is zero.
        rng = np.random.default_rng(8)
        X = DesignMatrix.from_array(rng.normal(size=(2000, 1)))
        y = rng.binomial(4, 0.5, size=2000)
        fit = nb_fit(y, X)
        assert fit.params[-1] == LN_ALPHA_FLOOR
        assert "boundary" in fit.message
        assert np.isnan(fit.standard_errors[-1])
        assert np.all(np.isfinite(fit.standard_errors[:-1]))
        oracle = poisson_irls(y.astype(float), X.values)
        assert np.max(np.abs(fit.nb_params.beta - oracle)) < 1e-4

    def test_rank_deficient(self, small_data):
        y, X = small_data
        Xd = DesignMatrix.from_array(np.column_stack([X.values[:, 1], 2 * X.values[:, 1]]), ["a", "b"])
        with pytest.raises(RankDeficientError) as info:
            nb_fit(y, Xd)
        assert "b" in info.value.columns or "a" in info.value.columns

    def test_max_iter_reports_not_converged(self, small_data):
        y, X = small_data
        fit = nb_fit(y, X, OptimizerConfig(max_iter=2))
        assert not fit.converged
        assert fit.iterations == 2

    def test_length_mismatch(self, small_data):
        y, X = small_data
        with pytest.raises(InputError):
            nb_fit(y[:-1], X)

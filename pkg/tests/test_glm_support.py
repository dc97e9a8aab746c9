import json
import math

import numpy as np
import pytest

from followgraph.errors import InputError, RankDeficientError
from followgraph.glm import DesignMatrix, DesignSpec, ModelFit, OptimizerConfig, logit_fit, nb_fit, render_table
from followgraph.glm.design import check_full_rank, collinear_columns, default_spec, filter_table, read_table
from followgraph.glm.optimize import fd_hessian, maximize
from followgraph.glm.results import normal_two_sided_p, stars, standard_errors


def _table(**cols):
    return {k: np.array([str(v) for v in vals], dtype=object) for k, vals in cols.items()}


class TestDesign:
    def test_from_array_prepends_intercept(self):
        X = DesignMatrix.from_array(np.arange(6.0).reshape(3, 2), ["a", "b"])
        assert X.columns == ("const", "a", "b")
        assert np.array_equal(X.column("const"), np.ones(3))

    def test_rejects_non_finite(self):
        with pytest.raises(InputError):
            DesignMatrix.from_array(np.array([[1.0], [np.nan]]))

    def test_collinear_columns_named(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=50)
        X = DesignMatrix.from_array(np.column_stack([a, rng.normal(size=50), 3 * a]), ["a", "b", "c"])
        bad = collinear_columns(X)
        assert len(bad) == 1 and bad[0] in {"a", "c"}
        with pytest.raises(RankDeficientError):
            check_full_rank(X)

    def test_constant_column_collides_with_intercept(self):
        X = DesignMatrix.from_array(np.column_stack([np.full(20, 2.0), np.arange(20.0)]), ["k", "t"])
        with pytest.raises(RankDeficientError):
            check_full_rank(X)

    def test_spec_scaling_and_year_dummies(self):
        table = _table(tweets=[1e6, 2e6, 3e6, 4e6], year=[2009, 2011, 2009, 2012])
        spec = default_spec(["tweets"], year_column="year")
        X = spec.build(table)
        assert X.columns == ("const", "tweets", "year_2011", "year_2012")
        assert X.column("tweets").tolist() == [1.0, 2.0, 3.0, 4.0]
        assert X.column("year_2011").tolist() == [0, 1, 0, 0]
        assert X.scaling == {"tweets": 1e6}

    def test_spec_roundtrip_and_unknown_year(self):
        table = _table(x=[1, 2, 3], year=[2010, 2011, 2010])
        spec = default_spec(["x"], "year").with_levels(table)
        again = DesignSpec.from_json(json.loads(json.dumps(spec.to_json())))
        assert again == spec
        with pytest.raises(InputError):
            again.build(_table(x=[1], year=[2015]))

    def test_read_and_filter_table(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b\n1,x\n2,y\n3,x\n", encoding="utf-8")
        table = read_table(path)
        sub = filter_table(table, "b", "x")
        assert sub["a"].tolist() == ["1", "3"]
        with pytest.raises(InputError):
            filter_table(table, "zzz", "1")
        assert default_spec(["a"]).build(table).column("a").tolist() == [1, 2, 3]

    def test_non_numeric_column(self):
        with pytest.raises(InputError):
            default_spec(["b"]).build(_table(b=["x", "y"]))


class TestOptimizer:
    def test_quadratic(self):
        A = np.array([[3.0, 1.0], [1.0, 2.0]])
        b = np.array([1.0, -1.0])

        def fg(x):
            return -0.5 * x @ A @ x + b @ x, b - A @ x

        res = maximize(fg, np.zeros(2), 1, hessian=lambda x: -A)
        assert res.converged
        assert np.allclose(res.x, np.linalg.solve(A, b), atol=1e-9)

    def test_line_search_failure_without_hessian(self):
        res = maximize(lambda x: (0.0, np.ones(1)), np.zeros(1), 1)
        assert not res.converged
        assert res.message == "line search failed"

    def test_fd_hessian(self):
        grad = lambda x: np.array([-2 * x[0] + x[1], x[0] - 4 * x[1] ** 3])
        H = fd_hessian(grad, np.array([0.3, 0.5]))
        assert np.allclose(H, [[-2, 1], [1, -12 * 0.25]], atol=1e-7)

    def test_config_defaults(self):
        cfg = OptimizerConfig()
        assert (cfg.max_iter, cfg.grad_tol, cfg.rel_tol) == (500, 1e-6, 1e-9)


class TestResults:
    @pytest.mark.parametrize("p, mark", [(0.0009, "***"), (0.005, "**"), (0.03, "*"),
                                         (0.05, ""), (float("nan"), "")])
    def test_stars(self, p, mark):
        assert stars(p) == mark

    def test_normal_p(self):
        assert normal_two_sided_p(1.959963984540054) == pytest.approx(0.05, abs=1e-12)
        assert math.isnan(normal_two_sided_p(float("inf")))

    def test_singular_information(self):
        cov, se = standard_errors(np.zeros((2, 2)))
        assert np.all(np.isnan(se))

    def test_json_roundtrip_and_table(self):
        rng = np.random.default_rng(1)
        X = DesignMatrix.from_array(rng.normal(size=(400, 1)))
        y = rng.poisson(np.exp(0.5 + 0.3 * X.values[:, 1]) * rng.gamma(2, 0.5, 400))
        fit = nb_fit(y, X)
        obj = json.loads(json.dumps(fit.to_json()))
        assert obj["alpha"]["estimate"] == pytest.approx(fit.alpha)
        back = ModelFit.from_json(obj)
        assert np.array_equal(back.params, fit.params)
        assert np.array_equal(back.standard_errors, fit.standard_errors)
        text = render_table(fit, "NB")
        assert "lnalpha" in text
        assert text.splitlines()[-3].split() == ["Observations", "400"]

    def test_logit_table_has_no_dispersion(self):
        rng = np.random.default_rng(2)
        X = DesignMatrix.from_array(rng.normal(size=(300, 1)))
        y = (rng.random(300) < 0.4).astype(int)
        fit = logit_fit(y, X)
        assert "lnalpha" not in render_table(fit)
        assert "alpha" not in fit.to_json()

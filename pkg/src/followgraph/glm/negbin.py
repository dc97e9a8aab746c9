"""Negative binomial (NB2) count regression by maximum likelihood.

With mean ``mu = exp(x @ beta)``, dispersion ``alpha`` and ``m = 1/alpha``,
``p = 1/(1 + alpha*mu)``, the per-row log-likelihood is

    lgamma(m + y) - lgamma(y + 1) - lgamma(m) + m*log(p) + y*log(1 - p).

For integer counts the gamma ratio is a finite product, which lets us
rewrite the row contribution as

    sum_{k<y} log1p(k*alpha) - lgamma(y + 1) + y*eta - (y + m)*log1p(alpha*mu)

and evaluate it stably for every alpha, including the Poisson limit.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from ..errors import InputError, NonFiniteError
from .design import DesignMatrix, check_full_rank
from .optimize import OptimizerConfig, fd_hessian, maximize
from .results import ModelFit, NbParams, standard_errors

# exp overflows just above this.
_ETA_MAX = 709.0
# Below this the likelihood is flat in ln(alpha): the Poisson limit to machine precision.
LN_ALPHA_FLOOR = -30.0
# Fits with ln(alpha) below this are checked against the alpha = 0 boundary.
_LN_ALPHA_NEGLIGIBLE = -10.0


def _counts(y) -> np.ndarray:
    y = np.asarray(y)
    yi = np.asarray(np.rint(y), dtype=np.int64)
    if np.any(yi != y) or np.any(yi < 0):
        raise InputError("negative binomial outcome must be non-negative integer counts")
    return yi


def _as_values(X):
    return X.values if isinstance(X, DesignMatrix) else np.asarray(X, dtype=np.float64)


def _check_eta(eta):
    bad = np.flatnonzero(~np.isfinite(eta) | (eta > _ETA_MAX))
    if bad.size:
        raise NonFiniteError(int(bad[0]), "linear predictor")


def _prefix_sums(y, alpha):
    """S1[y] = sum_{k<y} log1p(k*alpha) and S2[y] = sum_{k<y} k/(1+k*alpha)."""
    top = int(y.max()) if y.size else 0
    k = np.arange(top, dtype=np.float64)
    s1 = np.concatenate([[0.0], np.cumsum(np.log1p(k * alpha))])
    s2 = np.concatenate([[0.0], np.cumsum(k / (1.0 + k * alpha))])
    return s1[y], s2[y]


def _rows(theta, y, X):
    beta, ln_alpha = theta[:-1], float(theta[-1])
    floored = ln_alpha < LN_ALPHA_FLOOR
    alpha = np.exp(max(ln_alpha, LN_ALPHA_FLOOR))
    eta = X @ beta
    _check_eta(eta)
    mu = np.exp(eta)
    amu = alpha * mu
    l1p = np.log1p(amu)
    s1, s2 = _prefix_sums(y, alpha)
    ll = s1 - gammaln(y + 1.0) + y * eta - (y + 1.0 / alpha) * l1p
    bad = np.flatnonzero(~np.isfinite(ll))
    if bad.size:
        raise NonFiniteError(int(bad[0]))
    d_eta = (y - mu) / (1.0 + amu)
    d_lnalpha = alpha * s2 + l1p / alpha - (alpha * y + 1.0) * mu / (1.0 + amu)
    if floored:
        d_lnalpha = np.zeros_like(d_lnalpha)
    return ll, d_eta, d_lnalpha


def nb_loglik(params: NbParams | np.ndarray, y, X) -> float:
    theta = params.vector() if isinstance(params, NbParams) else np.asarray(params, np.float64)
    ll, _, _ = _rows(theta, _counts(y), _as_values(X))
    return float(np.sum(ll))


def nb_loglik_grad(params: NbParams | np.ndarray, y, X) -> tuple[float, np.ndarray]:
    """Log-likelihood and its gradient with respect to (beta, ln alpha)."""
    theta = params.vector() if isinstance(params, NbParams) else np.asarray(params, np.float64)
    Xv = _as_values(X)
    ll, d_eta, d_lna = _rows(theta, _counts(y), Xv)
    grad = np.append(Xv.T @ d_eta, np.sum(d_lna))
    return float(np.sum(ll)), grad


def poisson_dispersion_score(beta, y, X) -> float:
    """Derivative of the NB2 log-likelihood in alpha at alpha = 0.

    Non-positive values mean the data show no overdispersion at ``beta``.
    """
    mu = np.exp(_as_values(X) @ np.asarray(beta, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    return float(0.5 * np.sum((y - mu) ** 2 - y))


def nb_fit(y, X: DesignMatrix, config: OptimizerConfig = OptimizerConfig(),
           start: np.ndarray | None = None) -> ModelFit:
    """Maximize the NB2 likelihood over (beta, ln alpha).

    Standard errors come from the inverse of the negative Hessian, obtained
    by central differences of the analytic gradient.
    """
    check_full_rank(X)
    yi = _counts(y)
    if yi.shape[0] != X.n_rows:
        raise InputError("outcome length does not match design rows")
    Xv = X.values

    def fun_grad(theta):
        try:
            return nb_loglik_grad(theta, yi, Xv)
        except NonFiniteError:
            return -np.inf, np.full(theta.size, np.nan)

    def grad(theta):
        return nb_loglik_grad(theta, yi, Xv)[1]

    x0 = np.zeros(X.n_cols + 1) if start is None else np.asarray(start, dtype=np.float64)
    res = maximize(fun_grad, x0, X.n_rows, config, hessian=lambda t: fd_hessian(grad, t))
    theta = res.x.copy()
    message = res.message
    if theta[-1] <= LN_ALPHA_FLOOR or (
            theta[-1] < _LN_ALPHA_NEGLIGIBLE and poisson_dispersion_score(theta[:-1], yi, Xv) <= 0):
        # No overdispersion: the dispersion MLE is on the boundary alpha = 0.
        theta[-1] = LN_ALPHA_FLOOR
        k = X.n_cols
        H = fd_hessian(lambda b: grad(np.append(b, LN_ALPHA_FLOOR))[:k], theta[:k])
        cov_b, se_b = standard_errors(-H)
        cov = np.full((k + 1, k + 1), np.nan)
        cov[:k, :k] = cov_b
        se = np.append(se_b, np.nan)
        message = f"{message}; alpha at boundary (Poisson limit)"
    else:
        cov, se = standard_errors(-fd_hessian(grad, theta))
    names = [("coef", c) for c in X.columns] + [("dispersion", "lnalpha")]
    return ModelFit(
        model="nb", param_names=names, params=theta, standard_errors=se, covariance=cov,
        log_likelihood=res.fun, converged=res.converged, iterations=res.iterations,
        gradient_norm_at_solution=res.grad_norm, n_obs=X.n_rows, message=message,
        columns=X.columns, scaling=dict(X.scaling),
    )

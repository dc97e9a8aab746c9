"""Multinomial and binary logit by maximum likelihood.

The three-class model scores Democrat (c=1) and Republican (c=3) followers
against the Independent class (c=2), whose coefficients are pinned at zero:

    P1 = e^{x b1} / (e^{x b1} + 1 + e^{x b3}),  P2 = 1 / (...),  P3 = e^{x b3} / (...)

The binary logit is the two-class special case.
"""

from __future__ import annotations

import warnings
from collections.abc import Sequence
from dataclasses import replace

import numpy as np
from scipy.special import logsumexp

from ..errors import EmptyClassError, InputError, NonFiniteError
from ..roster import PartisanClass
from .design import DesignMatrix, check_full_rank
from .optimize import OptimizerConfig, maximize
from .results import MnlParams, ModelFit, standard_errors

# |beta| beyond this, per standard deviation of its covariate, signals (quasi-)separation.
SEPARATION_BOUND = 30.0

MNL_CLASSES = (PartisanClass.DEMOCRAT, PartisanClass.INDEPENDENT, PartisanClass.REPUBLICAN)
_REFERENCE = 1  # Independent


class SeparationWarning(UserWarning):
    pass


def _as_values(X):
    return X.values if isinstance(X, DesignMatrix) else np.atleast_2d(np.asarray(X, np.float64))


def class_codes(classes) -> np.ndarray:
    """Map class labels (PartisanClass, names or 1/2/3 codes) to 0-based indices."""
    return np.array([PartisanClass.parse(c).code - 1 for c in classes], dtype=np.int64)


def coefficient_scale(X: DesignMatrix, n_blocks: int = 1) -> np.ndarray:
    """Covariate standard deviations (1 for constant columns), tiled per block."""
    sd = X.values.std(axis=0)
    sd[sd == 0] = 1.0
    return np.tile(sd, n_blocks)


def _diverged(theta, weights) -> bool:
    return bool(np.any(np.abs(theta * weights) > SEPARATION_BOUND))


def _utilities(theta, X, n_classes, reference):
    k = X.shape[1]
    B = theta.reshape(n_classes - 1, k)
    U = np.zeros((X.shape[0], n_classes))
    others = [c for c in range(n_classes) if c != reference]
    U[:, others] = X @ B.T
    return U, others


def _softmax_rows(theta, labels, X, n_classes, reference):
    U, others = _utilities(theta, X, n_classes, reference)
    lse = logsumexp(U, axis=1)
    logp = U - lse[:, None]
    return logp, others


def softmax_loglik_grad(theta, labels, X, n_classes: int, reference: int):
    """Log-likelihood and gradient of a reference-normalized multinomial logit."""
    X = _as_values(X)
    theta = np.asarray(theta, dtype=np.float64)
    logp, others = _softmax_rows(theta, labels, X, n_classes, reference)
    rows = logp[np.arange(X.shape[0]), labels]
    bad = np.flatnonzero(~np.isfinite(rows))
    if bad.size:
        raise NonFiniteError(int(bad[0]))
    P = np.exp(logp)
    Y = np.zeros_like(P)
    Y[np.arange(X.shape[0]), labels] = 1.0
    grad = ((Y - P)[:, others]).T @ X
    return float(np.sum(rows)), grad.ravel()


def softmax_hessian(theta, X, n_classes: int, reference: int) -> np.ndarray:
    X = _as_values(X)
    logp, others = _softmax_rows(np.asarray(theta, np.float64), None, X, n_classes, reference)
    P = np.exp(logp)[:, others]
    k = X.shape[1]
    J = len(others)
    H = np.empty((J * k, J * k))
    for a in range(J):
        for b in range(J):
            w = P[:, a] * ((a == b) - P[:, b])
            H[a * k:(a + 1) * k, b * k:(b + 1) * k] = -(X * w[:, None]).T @ X
    return H


def mnl_loglik(params: MnlParams | np.ndarray, classes, X) -> float:
    theta = params.vector() if isinstance(params, MnlParams) else np.asarray(params, np.float64)
    return softmax_loglik_grad(theta, class_codes(classes), X, 3, _REFERENCE)[0]


def mnl_loglik_grad(params, classes, X):
    theta = params.vector() if isinstance(params, MnlParams) else np.asarray(params, np.float64)
    return softmax_loglik_grad(theta, class_codes(classes), X, 3, _REFERENCE)


def mnl_row_probabilities(params: MnlParams | np.ndarray, X) -> np.ndarray:
    """(P1, P2, P3) for every row of X."""
    theta = params.vector() if isinstance(params, MnlParams) else np.asarray(params, np.float64)
    logp, _ = _softmax_rows(theta, None, _as_values(X), 3, _REFERENCE)
    return np.exp(logp)


def predicted_probabilities(params: MnlParams, x) -> tuple[float, float, float]:
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    p = mnl_row_probabilities(params, x)[0]
    return float(p[0]), float(p[1]), float(p[2])


def fit_softmax(labels, X: DesignMatrix, n_classes: int, reference: int,
                config: OptimizerConfig = OptimizerConfig(), start=None):
    """Fit a reference-normalized multinomial logit; returns (OptimResult, cov, se, separated)."""
    check_full_rank(X)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] != X.n_rows:
        raise InputError("outcome length does not match design rows")
    Xv = X.values

    def fun_grad(theta):
        try:
            return softmax_loglik_grad(theta, labels, Xv, n_classes, reference)
        except NonFiniteError:
            return -np.inf, np.full(theta.size, np.nan)

    def hess(theta):
        return softmax_hessian(theta, Xv, n_classes, reference)

    x0 = np.zeros((n_classes - 1) * X.n_cols) if start is None else np.asarray(start, np.float64)
    cfg = config
    if cfg.divergence_bound is None:
        cfg = replace(config, divergence_bound=SEPARATION_BOUND)
    weights = coefficient_scale(X, n_classes - 1)
    res = maximize(fun_grad, x0, X.n_rows, cfg, hessian=hess, param_scale=weights)
    separated = _diverged(res.x, weights)
    if separated:
        warnings.warn("coefficients diverging; the outcome is (quasi-)separated by the covariates",
                      SeparationWarning, stacklevel=3)
    cov, se = standard_errors(-hess(res.x))
    return res, cov, se, separated


def _fit(model, names, res, cov, se, separated, X):
    return ModelFit(
        model=model, param_names=names, params=res.x, standard_errors=se, covariance=cov,
        log_likelihood=res.fun, converged=res.converged and not separated,
        iterations=res.iterations, gradient_norm_at_solution=res.grad_norm, n_obs=X.n_rows,
        message=res.message, separation_warning=separated, columns=X.columns,
        scaling=dict(X.scaling),
    )


def mnl_fit(classes: Sequence, X: DesignMatrix, config: OptimizerConfig = OptimizerConfig(),
            start=None) -> ModelFit:
    """Three-class fit with the Independent class as the base outcome."""
    labels = class_codes(classes)
    present = set(labels.tolist())
    missing = [MNL_CLASSES[c].value for c in range(3) if c not in present]
    if missing:
        raise EmptyClassError(missing)
    res, cov, se, separated = fit_softmax(labels, X, 3, _REFERENCE, config, start)
    names = ([("Democrat", c) for c in X.columns] + [("Republican", c) for c in X.columns])
    return _fit("mnl", names, res, cov, se, separated, X)


def logit_loglik_grad(beta, y, X):
    X = _as_values(X)
    beta = np.asarray(beta, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    eta = X @ beta
    # log P(y=1) = -log(1 + e^-eta); log P(y=0) = -log(1 + e^eta)
    rows = y * -np.logaddexp(0.0, -eta) + (1 - y) * -np.logaddexp(0.0, eta)
    bad = np.flatnonzero(~np.isfinite(rows))
    if bad.size:
        raise NonFiniteError(int(bad[0]))
    p = np.exp(-np.logaddexp(0.0, -eta))
    return float(np.sum(rows)), X.T @ (y - p)


def logit_loglik(beta, y, X) -> float:
    return logit_loglik_grad(beta, y, X)[0]


def logit_hessian(beta, X) -> np.ndarray:
    X = _as_values(X)
    eta = X @ np.asarray(beta, dtype=np.float64)
    p = np.exp(-np.logaddexp(0.0, -eta))
    w = p * (1 - p)
    return -(X * w[:, None]).T @ X


def _binary(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if not np.all((y == 0) | (y == 1)):
        raise InputError("logit outcome must be 0/1")
    missing = [name for v, name in ((0, "0"), (1, "1")) if not np.any(y == v)]
    if missing:
        raise EmptyClassError(missing)
    return y


def logit_fit(y, X: DesignMatrix, config: OptimizerConfig = OptimizerConfig(),
              start=None) -> ModelFit:
    check_full_rank(X)
    yv = _binary(y)
    if yv.shape[0] != X.n_rows:
        raise InputError("outcome length does not match design rows")
    Xv = X.values

    def fun_grad(beta):
        try:
            return logit_loglik_grad(beta, yv, Xv)
        except NonFiniteError:
            return -np.inf, np.full(beta.size, np.nan)

    def hess(beta):
        return logit_hessian(beta, Xv)

    cfg = config
    if cfg.divergence_bound is None:
        cfg = replace(config, divergence_bound=SEPARATION_BOUND)
    x0 = np.zeros(X.n_cols) if start is None else np.asarray(start, np.float64)
    weights = coefficient_scale(X)
    res = maximize(fun_grad, x0, X.n_rows, cfg, hessian=hess, param_scale=weights)
    separated = _diverged(res.x, weights)
    if separated:
        warnings.warn("coefficients diverging; the outcome is (quasi-)separated by the covariates",
                      SeparationWarning, stacklevel=2)
    cov, se = standard_errors(-hess(res.x))
    names = [("coef", c) for c in X.columns]
    return _fit("logit", names, res, cov, se, separated, X)


def marginal_effect(fit: ModelFit | MnlParams, X: DesignMatrix, column: str):
    """Change in (P1, P2, P3) when a binary column moves from 0 to 1.

    All other covariates are held at their sample means.
    Returns (probabilities at 0, probabilities at 1, deltas).
    """
    if column not in X.columns:
        raise InputError(f"unknown column {column!r}")
    j = X.columns.index(column)
    col = X.values[:, j]
    if not np.all((col == 0) | (col == 1)):
        raise InputError(f"column {column!r} is not binary")
    params = fit.mnl_params if isinstance(fit, ModelFit) else fit
    xbar = X.values.mean(axis=0)
    lo, hi = xbar.copy(), xbar.copy()
    lo[j], hi[j] = 0.0, 1.0
    p0 = np.array(predicted_probabilities(params, lo))
    p1 = np.array(predicted_probabilities(params, hi))
    return p0, p1, p1 - p0

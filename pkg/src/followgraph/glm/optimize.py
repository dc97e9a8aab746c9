"""Quasi-Newton maximization with an optional Newton polish.

BFGS with backtracking Armijo line search does the bulk of the work on the
per-observation objective, where steps are well scaled. Once the line
search can no longer resolve improvements in floating point, a few Newton
steps on the full observed information drive the gradient down to the
absolute tolerance.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OptimizerConfig:
    max_iter: int = 500
    grad_tol: float = 1e-6
    rel_tol: float = 1e-9
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60
    # Stop early once any |coefficient * param_scale| exceeds this.
    divergence_bound: float | None = None


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float
    grad: np.ndarray
    converged: bool
    iterations: int
    message: str

    @property
    def grad_norm(self) -> float:
        return float(np.max(np.abs(self.grad))) if self.grad.size else 0.0


def _gnorm(g):
    return float(np.max(np.abs(g))) if g.size else 0.0


def maximize(fun_grad: Callable[[np.ndarray], tuple[float, np.ndarray]], x0, n_obs: int,
             config: OptimizerConfig = OptimizerConfig(),
             hessian: Callable[[np.ndarray], np.ndarray] | None = None,
             param_scale: np.ndarray | None = None) -> OptimResult:
    """Maximize a summed log-likelihood.

    ``fun_grad`` returns the total log-likelihood and its gradient.
    ``hessian`` (total, negative semi-definite near a maximum) enables the
    Newton polish. ``param_scale`` weights coefficients for the divergence
    check (e.g. covariate standard deviations).
    """
    scale = 1.0 / max(n_obs, 1)
    x = np.array(x0, dtype=np.float64)
    weights = np.ones(x.size) if param_scale is None else np.asarray(param_scale, np.float64)
    f, g = fun_grad(x)
    H = np.eye(x.size)
    prev_f = None
    it = 0
    message = "max_iter reached"
    phase = "bfgs"

    def done(f_new, f_old, g_new):
        if _gnorm(g_new) >= config.grad_tol:
            return False
        if f_old is None:
            return True
        return abs(f_new - f_old) <= config.rel_tol * max(abs(f_new), 1.0)

    while it < config.max_iter:
        if done(f, prev_f, g):
            message = "converged"
            break
        if config.divergence_bound is not None and np.any(np.abs(x * weights) > config.divergence_bound):
            message = "diverging coefficients"
            break
        it += 1
        if phase == "bfgs":
            G = -g * scale
            p = -H @ G
            slope = G @ p
            if slope >= 0:
                H = np.eye(x.size)
                p = -G
                slope = G @ p
            F = -f * scale
            t = 1.0
            accepted = False
            for _ in range(config.max_backtracks):
                x_new = x + t * p
                f_new, g_new = fun_grad(x_new)
                if np.isfinite(f_new) and -f_new * scale <= F + config.armijo * t * slope:
                    accepted = True
                    break
                t *= config.backtrack
            if not accepted or f_new == f:
                if hessian is None:
                    message = "line search failed"
                    break
                phase = "newton"
                it -= 1
                continue
            s = x_new - x
            yv = (-g_new * scale) - G
            sy = s @ yv
            if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
                rho = 1.0 / sy
                I = np.eye(x.size)
                H = (I - rho * np.outer(s, yv)) @ H @ (I - rho * np.outer(yv, s)) + rho * np.outer(s, s)
            prev_f, x, f, g = f, x_new, f_new, g_new
            if hessian is not None and _gnorm(g) * scale < 1e-7:
                phase = "newton"
        else:
            step = _newton_step(hessian(x), g)
            if step is None:
                message = "observed information not positive definite"
                break
            t = 1.0
            accepted = False
            for _ in range(30):
                x_new = x + t * step
                f_new, g_new = fun_grad(x_new)
                noise = 1e-12 * max(abs(f), 1.0)
                if np.isfinite(f_new) and f_new >= f - noise and _gnorm(g_new) < _gnorm(g):
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                message = "newton polish stalled"
                break
            prev_f, x, f, g = f, x_new, f_new, g_new
    else:
        if done(f, prev_f, g):
            message = "converged"
    converged = message == "converged"
    return OptimResult(x, float(f), g, converged, it, message)


def _newton_step(H, g):
    """Newton direction; shifted (Levenberg-Marquardt) when -H is not positive definite."""
    A = -0.5 * (H + H.T)
    if not np.all(np.isfinite(A)):
        return None
    try:
        L = np.linalg.cholesky(A)
        return np.linalg.solve(L.T, np.linalg.solve(L, g))
    except np.linalg.LinAlgError:
        pass
    eig = np.linalg.eigvalsh(A)
    shift = max(0.0, -eig[0]) + 1e-8 * max(float(np.max(np.abs(np.diag(A)))), 1.0)
    try:
        L = np.linalg.cholesky(A + shift * np.eye(A.shape[0]))
    except np.linalg.LinAlgError:
        return None
    return np.linalg.solve(L.T, np.linalg.solve(L, g))


def fd_hessian(grad: Callable[[np.ndarray], np.ndarray], x, rel_step: float = 6e-6) -> np.ndarray:
    """Symmetrized central-difference Jacobian of an analytic gradient."""
    x = np.asarray(x, dtype=np.float64)
    k = x.size
    H = np.empty((k, k))
    for i in range(k):
        h = rel_step * max(1.0, abs(x[i]))
        e = np.zeros(k)
        e[i] = h
        H[:, i] = (grad(x + e) - grad(x - e)) / (2 * h)
    return 0.5 * (H + H.T)

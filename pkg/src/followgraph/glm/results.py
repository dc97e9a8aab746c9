"""Fit results, standard errors, and table-style reporting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .design import DesignSpec


@dataclass(frozen=True)
class NbParams:
    beta: np.ndarray
    ln_alpha: float

    @property
    def alpha(self) -> float:
        return math.exp(self.ln_alpha)

    def vector(self) -> np.ndarray:
        return np.append(np.asarray(self.beta, dtype=np.float64), self.ln_alpha)

    @classmethod
    def from_vector(cls, theta) -> "NbParams":
        theta = np.asarray(theta, dtype=np.float64)
        return cls(theta[:-1].copy(), float(theta[-1]))


@dataclass(frozen=True)
class MnlParams:
    """Democrat (c=1) and Republican (c=3) blocks; Independent (c=2) is fixed at zero."""

    beta_democrat: np.ndarray
    beta_republican: np.ndarray

    def vector(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.beta_democrat, dtype=np.float64),
                               np.asarray(self.beta_republican, dtype=np.float64)])

    @classmethod
    def from_vector(cls, theta) -> "MnlParams":
        theta = np.asarray(theta, dtype=np.float64)
        k = theta.size // 2
        return cls(theta[:k].copy(), theta[k:].copy())


@dataclass
class ModelFit:
    model: str  # "nb", "mnl" or "logit"
    param_names: list[tuple[str, str]]  # (block, coefficient name)
    params: np.ndarray
    standard_errors: np.ndarray  # NaN where undefined
    covariance: np.ndarray
    log_likelihood: float
    converged: bool
    iterations: int
    gradient_norm_at_solution: float
    n_obs: int
    message: str = ""
    separation_warning: bool = False
    design: DesignSpec | None = None
    columns: tuple[str, ...] = ()
    scaling: dict[str, float] = field(default_factory=dict)

    @property
    def nb_params(self) -> NbParams:
        if self.model != "nb":
            raise AttributeError("not a negative binomial fit")
        return NbParams.from_vector(self.params)

    @property
    def mnl_params(self) -> MnlParams:
        if self.model != "mnl":
            raise AttributeError("not a multinomial fit")
        return MnlParams.from_vector(self.params)

    @property
    def alpha(self) -> float:
        return self.nb_params.alpha

    def coef(self, name: str, block: str | None = None) -> float:
        return float(self.params[self._index(name, block)])

    def se(self, name: str, block: str | None = None) -> float:
        return float(self.standard_errors[self._index(name, block)])

    def _index(self, name, block):
        for i, (b, n) in enumerate(self.param_names):
            if n == name and (block is None or b == block):
                return i
        raise KeyError(name if block is None else f"{block}:{name}")

    def z_values(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.params / self.standard_errors

    def p_values(self) -> np.ndarray:
        return np.array([normal_two_sided_p(z) for z in self.z_values()])

    def to_json(self) -> dict:
        coefs = []
        for (block, name), est, se, z, p in zip(self.param_names, self.params,
                                                self.standard_errors, self.z_values(),
                                                self.p_values()):
            coefs.append({"block": block, "name": name, "estimate": _num(est),
                          "std_error": _num(se), "z": _num(z), "p_value": _num(p),
                          "stars": stars(p)})
        out = {
            "model": self.model,
            "observations": self.n_obs,
            "log_likelihood": _num(self.log_likelihood),
            "converged": self.converged,
            "iterations": self.iterations,
            "gradient_norm": _num(self.gradient_norm_at_solution),
            "message": self.message,
            "separation_warning": self.separation_warning,
            "columns": list(self.columns),
            "scaling": dict(self.scaling),
            "coefficients": coefs,
        }
        if self.model == "nb":
            ln_alpha = float(self.params[-1])
            se = float(self.standard_errors[-1])
            out["lnalpha"] = {"estimate": ln_alpha, "std_error": _num(se)}
            out["alpha"] = {"estimate": math.exp(ln_alpha),
                            "std_error": _num(math.exp(ln_alpha) * se)}
        if self.design is not None:
            out["design"] = self.design.to_json()
        return out

    @classmethod
    def from_json(cls, obj) -> "ModelFit":
        coefs = obj["coefficients"]
        names = [(c["block"], c["name"]) for c in coefs]
        params = np.array([c["estimate"] for c in coefs], dtype=np.float64)
        ses = np.array([np.nan if c["std_error"] is None else c["std_error"] for c in coefs])
        design = DesignSpec.from_json(obj["design"]) if obj.get("design") else None
        return cls(model=obj["model"], param_names=names, params=params, standard_errors=ses,
                   covariance=np.diag(ses ** 2), log_likelihood=obj["log_likelihood"],
                   converged=obj["converged"], iterations=obj["iterations"],
                   gradient_norm_at_solution=obj["gradient_norm"], n_obs=obj["observations"],
                   message=obj.get("message", ""),
                   separation_warning=obj.get("separation_warning", False), design=design,
                   columns=tuple(obj.get("columns", ())), scaling=dict(obj.get("scaling", {})))


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def normal_two_sided_p(z: float) -> float:
    if not math.isfinite(z):
        return float("nan")
    return math.erfc(abs(z) / math.sqrt(2.0))


def stars(p) -> str:
    if p is None or not math.isfinite(p):
        return ""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def standard_errors(neg_hessian: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Covariance and SEs from the observed information; NaN where undefined."""
    k = neg_hessian.shape[0]
    try:
        cov = np.linalg.inv(neg_hessian)
    except np.linalg.LinAlgError:
        nan = np.full((k, k), np.nan)
        return nan, np.full(k, np.nan)
    diag = np.diag(cov)
    se = np.where(diag > 0, np.sqrt(np.where(diag > 0, diag, 1.0)), np.nan)
    return cov, se


def render_table(fit: ModelFit, title: str | None = None) -> str:
    """Plain-text coefficient table with standard errors in parentheses."""
    lines = []
    if title:
        lines.append(title)
    width = max([len(n) for _, n in fit.param_names] + [14])
    p_values = fit.p_values()
    current = None
    for i, (block, name) in enumerate(fit.param_names):
        if block != current:
            current = block
            lines.append(f"[{block}]")
        est = fit.params[i]
        se = fit.standard_errors[i]
        label = "lnalpha" if fit.model == "nb" and i == len(fit.params) - 1 else name
        lines.append(f"  {label:<{width}} {est: .3f}{stars(p_values[i])}")
        se_text = f"({se:.3f})" if math.isfinite(se) else "(n/a)"
        lines.append(f"  {'':<{width}} {se_text}")
    lines.append(f"  {'Observations':<{width}} {fit.n_obs}")
    lines.append(f"  {'Log-likelihood':<{width}} {fit.log_likelihood:.3f}")
    lines.append("Standard errors in parentheses. * p < 0.05, ** p < 0.01, *** p < 0.001")
    return "\n".join(lines) + "\n"

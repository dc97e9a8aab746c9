"""Maximum-likelihood count and choice models."""

from .design import DesignMatrix, DesignSpec, check_full_rank, default_spec, read_table
from .multinomial import (
    SeparationWarning,
    logit_fit,
    logit_loglik,
    logit_loglik_grad,
    marginal_effect,
    mnl_fit,
    mnl_loglik,
    mnl_loglik_grad,
    mnl_row_probabilities,
    predicted_probabilities,
)
from .negbin import nb_fit, nb_loglik, nb_loglik_grad
from .optimize import OptimizerConfig
from .results import MnlParams, ModelFit, NbParams, render_table

__all__ = [
    "DesignMatrix", "DesignSpec", "check_full_rank", "default_spec", "read_table",
    "SeparationWarning", "logit_fit", "logit_loglik", "logit_loglik_grad", "marginal_effect",
    "mnl_fit", "mnl_loglik", "mnl_loglik_grad", "mnl_row_probabilities",
    "predicted_probabilities", "nb_fit", "nb_loglik", "nb_loglik_grad", "OptimizerConfig",
    "MnlParams", "ModelFit", "NbParams", "render_table",
]

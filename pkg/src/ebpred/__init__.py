"""Empirical-Bayes posterior predictive inference for sparse linear regression."""

__version__ = "0.1.0"

from .linalg import Dataset, LsFit, fit_configuration, quadratic_form
from .posterior import HyperParams, InverseGamma, Known, enumerate_posterior
from .predictive import bvm_diagnostic, oracle_predictive, prediction_interval, sample_predictive
from .sampler import ConfigChain, McmcSettings, ModelSpaceTarget, inclusion_probs, run_chain
from .simulate import SimSetting, run_experiment, run_split_benchmark

__all__ = [
    "ConfigChain",
    "Dataset",
    "HyperParams",
    "InverseGamma",
    "Known",
    "LsFit",
    "McmcSettings",
    "ModelSpaceTarget",
    "SimSetting",
    "bvm_diagnostic",
    "enumerate_posterior",
    "fit_configuration",
    "inclusion_probs",
    "oracle_predictive",
    "prediction_interval",
    "quadratic_form",
    "run_chain",
    "run_experiment",
    "run_split_benchmark",
    "sample_predictive",
]

"""Localized neural network estimators for nonparametric regression and
binary-outcome models with dependent data."""

from ._backend import BACKEND
from .activation import ActivationKind, ActivationSpec, InvalidExpansionPoint, sigmoid, sigmoid_derivative
from .architecture import Architecture, LnnConfig, bandwidth_rule, build_architecture
from .bands import Bands, BootstrapBand, Flag
from .binary import FittedBinary, LinkSpec, fit_binary, predict_prob, score_bootstrap
from .data import DataError, Dataset, load_csv
from .kernelbase import kernel_bootstrap, nw_estimate
from .localfit import fit_local
from .persist import load_model, save_model
from .regress import FitError, FittedRegression, fit_regression, plugin_variance, predict, wild_bootstrap_reg

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ActivationKind",
    "ActivationSpec",
    "InvalidExpansionPoint",
    "sigmoid",
    "sigmoid_derivative",
    "Architecture",
    "LnnConfig",
    "bandwidth_rule",
    "build_architecture",
    "Bands",
    "BootstrapBand",
    "Flag",
    "FittedBinary",
    "LinkSpec",
    "fit_binary",
    "predict_prob",
    "score_bootstrap",
    "DataError",
    "Dataset",
    "load_csv",
    "kernel_bootstrap",
    "nw_estimate",
    "fit_local",
    "load_model",
    "save_model",
    "FitError",
    "FittedRegression",
    "fit_regression",
    "plugin_variance",
    "predict",
    "wild_bootstrap_reg",
]

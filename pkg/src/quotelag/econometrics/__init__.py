"""Estimation core: OLS, ADF, Engle-Granger, bivariate VECM."""

from .cointegration import CointegrationFit, engle_granger
from .ols import OlsFit, add_constant, ols
from .unitroot import AdfResult, adf_test, critical_values
from .vecm import EquationFit, VecmFit, coefficient_names, estimate_vecm, select_lag_order

__all__ = [
    "AdfResult", "CointegrationFit", "EquationFit", "OlsFit", "VecmFit", "add_constant",
    "adf_test", "coefficient_names", "critical_values", "engle_granger", "estimate_vecm",
    "ols", "select_lag_order",
]

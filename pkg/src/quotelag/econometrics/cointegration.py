"""Engle-Granger two-step cointegration."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError, InsufficientDataError
from .ols import OlsFit, add_constant, ols
from .unitroot import LEVELS, AdfResult, adf_test

MIN_LENGTH = 50


@dataclass(frozen=True, eq=False)
class CointegrationFit:
    """Long-run relation ``local = beta0 + beta1 * global + eta``."""

    beta0: float
    beta1: float
    residuals: np.ndarray
    residual_adf: AdfResult | None
    cointegrated: dict[str, bool]
    beta0_se: float = float("nan")
    beta1_se: float = float("nan")
    degenerate: str | None = None
    level_adf: dict[str, AdfResult] = field(default_factory=dict)
    step1: OlsFit | None = None

    def eta(self, pa, pb) -> np.ndarray:
        return np.asarray(pa, float) - self.beta1 * np.asarray(pb, float) - self.beta0


def engle_granger(pa, pb, level: str = "5%", lags: int | str = "auto", force: bool = False) -> CointegrationFit:
    """Regress ``pa`` on ``[1, pb]`` and unit-root test the residual.

    Unless ``force`` is set, both level series must look I(1): an ADF test with
    a constant must fail to reject at 10%. The residual test uses the
    two-variable Engle-Granger critical values. ``level`` only selects which
    entry of ``cointegrated`` is logged as the headline; every level is kept.
    """
    pa = np.asarray(pa, float)
    pb = np.asarray(pb, float)
    if pa.shape != pb.shape or pa.ndim != 1:
        raise DataError(f"series shapes differ: {pa.shape} vs {pb.shape}")
    if pa.shape[0] < MIN_LENGTH:
        raise InsufficientDataError(f"need at least {MIN_LENGTH} observations, got {pa.shape[0]}")
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}")

    level_adf = {}
    if not force:
        for name, s in (("local", pa), ("global", pb)):
            res = adf_test(s, lags=lags, variant="constant")
            level_adf[name] = res
            if res.reject_unit_root["10%"]:
                raise DataError(f"{name} series looks stationary in levels "
                                f"(ADF {res.statistic:.2f} < {res.critical_values['10%']:.2f}); "
                                "use force to override")

    step1 = ols(pa, add_constant(pb), names=("constant", "global"))
    b0, b1 = step1.coefficients
    resid = step1.residuals
    scale = max(float(np.max(np.abs(pa))), 1.0)
    if np.max(np.abs(resid)) <= 1e-9 * scale:
        return CointegrationFit(float(b0), float(b1), resid, None, {lvl: False for lvl in LEVELS},
                                float(step1.standard_errors[0]), float(step1.standard_errors[1]),
                                degenerate="degenerate: zero-variance residual",
                                level_adf=level_adf, step1=step1)

    adf = adf_test(resid, lags=lags, variant="none", n_vars=2, crit_variant="constant")
    return CointegrationFit(float(b0), float(b1), resid, adf, dict(adf.reject_unit_root),
                            float(step1.standard_errors[0]), float(step1.standard_errors[1]),
                            level_adf=level_adf, step1=step1)

"""Bivariate VECM estimated equation by equation on an Engle-Granger error-correction term.

Both equations share the regressor set

    constant, eta_{t-1}, dP_local_{t-1..t-p}, dP_global_{t-1..t-p}

with ``gamma`` the loadings on local lags and ``delta`` those on global lags,
whichever price is the regressand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, DegenerateInputError, GapError, InsufficientDataError
from ..quotegrid import AlignedPair
from .cointegration import CointegrationFit, engle_granger
from .ols import OlsFit, ols

DEFAULT_LAGS = 3
NAN = float("nan")


def coefficient_names(p: int) -> tuple[str, ...]:
    return (("constant", "ec_lag1")
            + tuple(f"local_lag{k}" for k in range(1, p + 1))
            + tuple(f"global_lag{k}" for k in range(1, p + 1)))


@dataclass(frozen=True)
class EquationFit:
    constant: float
    alpha: float
    gamma: tuple[float, ...]
    delta: tuple[float, ...]
    residual_variance: float = NAN
    constant_se: float = NAN
    alpha_se: float = NAN
    gamma_se: tuple[float, ...] = ()
    delta_se: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.gamma) != len(self.delta):
            raise ValueError("gamma and delta must have the same lag order")
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        object.__setattr__(self, "delta", tuple(float(d) for d in self.delta))
        p = len(self.gamma)
        if not self.gamma_se:
            object.__setattr__(self, "gamma_se", (NAN,) * p)
        if not self.delta_se:
            object.__setattr__(self, "delta_se", (NAN,) * p)

    @property
    def p(self) -> int:
        return len(self.gamma)

    def coefficients(self) -> dict[str, float]:
        vals = (self.constant, self.alpha, *self.gamma, *self.delta)
        return dict(zip(coefficient_names(self.p), vals))

    def standard_errors(self) -> dict[str, float]:
        vals = (self.constant_se, self.alpha_se, *self.gamma_se, *self.delta_se)
        return dict(zip(coefficient_names(self.p), vals))

    @classmethod
    def from_ols(cls, fit: OlsFit, p: int) -> EquationFit:
        b, s = fit.coefficients, fit.standard_errors
        return cls(float(b[0]), float(b[1]), tuple(b[2:2 + p]), tuple(b[2 + p:]),
                   fit.sigma2, float(s[0]), float(s[1]), tuple(map(float, s[2:2 + p])),
                   tuple(map(float, s[2 + p:])))


@dataclass(frozen=True, eq=False)
class VecmFit:
    """Estimated (or hand-specified) error-correction system."""

    p: int
    local: EquationFit
    global_: EquationFit
    beta0: float
    beta1: float
    coint: CointegrationFit | None = None
    side: str = "bid"
    n_obs: int = 0
    base_global_price: float = NAN
    local_ols: OlsFit | None = None
    global_ols: OlsFit | None = None

    def __post_init__(self):
        if self.local.p != self.p or self.global_.p != self.p:
            raise ValueError("equation lag orders disagree with p")

    @classmethod
    def from_coefficients(cls, *, alpha_local, gamma_local, delta_local, beta1, beta0=0.0,
                          alpha_global=0.0, gamma_global=None, delta_global=None,
                          constant_local=0.0, constant_global=0.0, side="bid",
                          base_global_price=NAN) -> VecmFit:
        """Build a fit from published or planted coefficients (no estimation)."""
        p = len(gamma_local)
        zeros = (0.0,) * p
        local = EquationFit(constant_local, alpha_local, tuple(gamma_local), tuple(delta_local))
        glob = EquationFit(constant_global, alpha_global, tuple(gamma_global or zeros),
                           tuple(delta_global or zeros))
        return cls(p, local, glob, float(beta0), float(beta1), side=side,
                   base_global_price=base_global_price)


def _rows(segments, p):
    """Row indices t whose p-lag window stays inside one contiguous segment."""
    return np.concatenate([np.arange(a + p + 1, b) for a, b in segments if b - a > p + 1]
                          or [np.zeros(0, int)])


def vecm_design(pa, pb, eta, p: int, segments=None):
    """Regressands (dA, dB) and the shared design matrix for lag order ``p``."""
    pa, pb, eta = (np.asarray(v, float) for v in (pa, pb, eta))
    n = pa.shape[0]
    t = _rows(segments or [(0, n)], p)
    da = np.diff(pa, prepend=np.nan)
    db = np.diff(pb, prepend=np.nan)
    cols = [np.ones(t.shape[0]), eta[t - 1]]
    cols += [da[t - k] for k in range(1, p + 1)]
    cols += [db[t - k] for k in range(1, p + 1)]
    return da[t], db[t], np.column_stack(cols)


def estimate_vecm(pair: AlignedPair, side: str = "bid", p: int = DEFAULT_LAGS,
                  coint: CointegrationFit | None = None, *, se_mode: str = "classical",
                  allow_segments: bool = False, force: bool = False) -> VecmFit:
    """Fit both difference equations by OLS.

    If ``coint`` is omitted the Engle-Granger step runs on the same rows. A pair
    with holes raises :class:`GapError` unless ``allow_segments`` is set, in
    which case rows whose lag window would cross a hole are left out.
    """
    if p < 1:
        raise ValueError("lag order p must be >= 1")
    pa = pair.local.price(side)
    pb = pair.global_.price(side)
    n = pa.shape[0]
    if n <= 2 * p + 20:
        raise InsufficientDataError(f"{n} rows are too few for a VECM with p={p}")
    segments = pair.segments()
    if len(segments) > 1 and not allow_segments:
        raise GapError(f"pair has {len(segments) - 1} hole(s); split the window before estimating")
    if np.ptp(pa) == 0 or np.ptp(pb) == 0:
        raise DegenerateInputError("insufficient variation: a price leg never moves")
    if coint is None:
        coint = engle_granger(pa, pb, force=force)
    elif coint.residuals.shape[0] != n:
        raise DataError("cointegration residuals are not aligned with the pair")

    eta = coint.residuals
    da, db, X = vecm_design(pa, pb, eta, p, segments)
    if da.shape[0] <= 2 * p + 2:
        raise InsufficientDataError("too few rows remain after removing gap-spanning lags")
    names = coefficient_names(p)
    fa = ols(da, X, se_mode, names)
    fb = ols(db, X, se_mode, names)
    return VecmFit(p, EquationFit.from_ols(fa, p), EquationFit.from_ols(fb, p),
                   coint.beta0, coint.beta1, coint, side, fa.n_obs, float(np.mean(pb)), fa, fb)


def select_lag_order(pair: AlignedPair, side: str = "bid", max_p: int = 8,
                     coint: CointegrationFit | None = None) -> int:
    """Lag order in 1..max_p minimising the system BIC on a common sample."""
    pa = pair.local.price(side)
    pb = pair.global_.price(side)
    coint = coint or engle_granger(pa, pb, force=True)
    da_full, db_full, X_full = vecm_design(pa, pb, coint.residuals, max_p, pair.segments())
    best, best_bic = 1, np.inf
    m = X_full.shape[0]
    for p in range(1, max_p + 1):
        keep = [0, 1, *range(2, 2 + p), *range(2 + max_p, 2 + max_p + p)]
        X = X_full[:, keep]
        ea = ols(da_full, X).residuals
        eb = ols(db_full, X).residuals
        sigma = np.cov(np.vstack([ea, eb]), bias=True)
        bic = m * np.log(np.linalg.det(sigma)) + 2 * X.shape[1] * np.log(m)
        if bic < best_bic:
            best, best_bic = p, bic
    return best

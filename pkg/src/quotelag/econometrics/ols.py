"""Ordinary least squares via column-pivoted QR."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg, stats

from ..errors import CollinearityError, DataError, DegenerateInputError, InsufficientDataError

RANK_TOL = 1e-10
COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class OlsFit:
    coefficients: np.ndarray
    standard_errors: np.ndarray
    residuals: np.ndarray
    r_squared: float
    n_obs: int
    dof: int
    names: tuple[str, ...]
    ssr: float
    se_mode: str = "classical"
    has_intercept: bool = False

    @property
    def sigma2(self) -> float:
        return self.ssr / self.dof

    @property
    def tvalues(self) -> np.ndarray:
        return self.coefficients / self.standard_errors

    @property
    def pvalues(self) -> np.ndarray:
        return 2.0 * stats.t.sf(np.abs(self.tvalues), self.dof)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.index(name)])

    def se(self, name: str) -> float:
        return float(self.standard_errors[self.index(name)])

    def bic(self) -> float:
        n, k = self.n_obs, len(self.coefficients)
        return n * np.log(self.ssr / n) + k * np.log(n)


def add_constant(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, float)
    if X.ndim == 1:
        X = X[:, None]
    return np.column_stack([np.ones(X.shape[0]), X])


def _names(k: int, names: Sequence[str] | None) -> tuple[str, ...]:
    if names is None:
        return tuple(f"x{i}" for i in range(k))
    if len(names) != k:
        raise ValueError(f"{len(names)} names for {k} regressors")
    return tuple(names)


def _factor(X: np.ndarray, names: tuple[str, ...]):
    """Equilibrated, pivoted QR with rank and conditioning guards."""
    scale = np.sqrt(np.einsum("ij,ij->j", X, X))
    if np.any(scale == 0):
        bad = [names[i] for i in np.flatnonzero(scale == 0)]
        raise CollinearityError(f"all-zero regressor column(s): {', '.join(bad)}", bad)
    Q, R, perm = linalg.qr(X / scale, mode="economic", pivoting=True, check_finite=False)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > RANK_TOL * d[0]))
    if rank < X.shape[1]:
        bad = [names[i] for i in perm[rank:]]
        raise CollinearityError(
            f"design matrix has rank {rank} < {X.shape[1]}; dependent column(s): {', '.join(bad)}", bad)
    sv = linalg.svdvals(R, check_finite=False)
    cond = sv[0] / sv[-1]
    if cond > COND_LIMIT:
        _, _, vt = linalg.svd(R)
        weight = np.abs(vt[-1])
        bad = [names[perm[i]] for i in np.flatnonzero(weight > 0.1 * weight.max())]
        raise CollinearityError(
            f"condition number {cond:.3g} exceeds {COND_LIMIT:.0e}; near-dependent: {', '.join(bad)}", bad)
    return Q, R, perm, scale


def ols(y, X, se_mode: str = "classical", names: Sequence[str] | None = None) -> OlsFit:
    """Least-squares fit of ``y`` on the columns of ``X`` (no constant is added).

    ``se_mode`` is ``"classical"`` (s^2 (X'X)^-1) or ``"hc1"`` (White sandwich
    scaled by n/(n-k)).
    """
    y = np.asarray(y, float)
    X = np.asarray(X, float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if y.shape != (n,):
        raise DataError(f"y has shape {y.shape}, X has {n} rows")
    names = _names(k, names)
    if n <= k:
        raise InsufficientDataError(f"{n} observations for {k} regressors")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
        raise DataError("non-finite values in regression inputs")
    if np.ptp(y) == 0:
        raise DegenerateInputError("zero-variance regressand")
    if se_mode not in ("classical", "hc1"):
        raise ValueError(f"unknown se_mode {se_mode!r}")

    Q, R, perm, scale = _factor(X, names)
    qty = Q.T @ y
    b_perm = linalg.solve_triangular(R, qty, check_finite=False)
    beta = np.empty(k)
    beta[perm] = b_perm
    beta /= scale
    resid = y - X @ beta
    ssr = float(resid @ resid)
    dof = n - k

    rinv = linalg.solve_triangular(R, np.eye(k), check_finite=False)
    if se_mode == "classical":
        cov_p = (ssr / dof) * (rinv @ rinv.T)
    else:
        # (X'X)^-1 X' = R^-1 Q' in the pivoted, scaled coordinates.
        m = rinv @ (Q.T * resid)
        cov_p = (n / dof) * (m @ m.T)
    var = np.empty(k)
    var[perm] = np.diag(cov_p)
    se = np.sqrt(var) / scale

    const_cols = np.all(X == X[0], axis=0) & (X[0] != 0)
    has_intercept = bool(const_cols.any())
    if has_intercept:
        tss = float(np.sum((y - y.mean()) ** 2))
    else:
        tss = float(y @ y)
    r2 = 1.0 - ssr / tss if tss > 0 else 1.0
    return OlsFit(beta, se, resid, float(r2), n, dof, names, ssr, se_mode, has_intercept)


def nested_ssr(y, X) -> np.ndarray:
    """SSR of the regressions of ``y`` on the first 1..k columns of ``X``.

    One unpivoted QR serves every prefix model; entry ``j`` is the SSR using
    columns ``0..j``.
    """
    y = np.asarray(y, float)
    X = np.asarray(X, float)
    scale = np.sqrt(np.einsum("ij,ij->j", X, X))
    scale[scale == 0] = 1.0
    Q, _ = np.linalg.qr(X / scale)
    proj = (Q.T @ y) ** 2
    return float(y @ y) - np.cumsum(proj)

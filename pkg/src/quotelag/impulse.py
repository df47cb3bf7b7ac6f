"""Deterministic response of a fitted VECM to a one-time global price shock.

The system starts in equilibrium (global at the base price, local at
``beta0 + beta1 * base``, no past differences). At bar 0 the global price jumps
to ``base * (1 + shock)``; from bar 1 on both difference equations iterate
with zero innovations. Local prices react through ``eta_{t-1}`` and lagged
differences, so bar 1 is the first bar that can respond, and the "30-minute"
horizon reads bar 1.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, replace
from datetime import timedelta
from typing import Iterable, TextIO

import numpy as np

from .econometrics.vecm import VecmFit, coefficient_names
from .errors import ConfigurationError, InstabilityError, RangeError

DEFAULT_HORIZONS = (30, 60, 90, 120, 150)
BAR_MINUTES = 30


@dataclass(frozen=True)
class ImpulseConfig:
    shock_fraction: float = 0.30
    base_global_price: float | None = None
    global_dynamics: str = "full"
    horizon_bars: int = 12
    include_constants: bool = False

    def __post_init__(self):
        if self.shock_fraction == 0 or not math.isfinite(self.shock_fraction):
            raise ConfigurationError("shock_fraction must be a nonzero finite number")
        if self.shock_fraction <= -1:
            raise ConfigurationError("shock_fraction must exceed -1")
        if self.base_global_price is not None and not self.base_global_price > 0:
            raise ConfigurationError("base_global_price must be > 0")
        if self.global_dynamics not in ("full", "frozen"):
            raise ConfigurationError("global_dynamics must be 'full' or 'frozen'")
        if int(self.horizon_bars) < 1:
            raise ConfigurationError("horizon_bars must be >= 1")


@dataclass(frozen=True, eq=False)
class ImpulsePath:
    local: np.ndarray
    global_: np.ndarray
    rqv: np.ndarray
    fit: VecmFit
    config: ImpulseConfig
    base_global_price: float

    @property
    def shocked_level(self) -> float:
        return self.base_global_price * (1.0 + self.config.shock_fraction)

    @property
    def bars(self) -> np.ndarray:
        return np.arange(self.rqv.shape[0])

    def __len__(self):
        return self.rqv.shape[0]


def _base_price(fit: VecmFit, cfg: ImpulseConfig) -> float:
    base = cfg.base_global_price if cfg.base_global_price is not None else fit.base_global_price
    if base is None or not math.isfinite(base) or base <= 0:
        raise ConfigurationError("no usable base_global_price (set it in the config or on the fit)")
    return float(base)


def level_companion(fit: VecmFit, frozen: bool = False) -> np.ndarray:
    """Companion matrix of the levels VAR(p+1) implied by the VECM."""
    p = fit.p
    eqs = [fit.local, fit.global_]
    alpha = np.array([e.alpha for e in eqs])
    if frozen:
        alpha[1] = 0.0
    pi = np.outer(alpha, [1.0, -fit.beta1])
    gam = np.zeros((p, 2, 2))
    for row, e in enumerate(eqs):
        if frozen and row == 1:
            continue
        gam[:, row, 0] = e.gamma
        gam[:, row, 1] = e.delta
    blocks = [np.eye(2) + pi + gam[0]]
    for k in range(1, p):
        blocks.append(gam[k] - gam[k - 1])
    blocks.append(-gam[p - 1])
    m = 2 * (p + 1)
    comp = np.zeros((m, m))
    comp[:2, :] = np.hstack(blocks)
    comp[2:, :-2] = np.eye(m - 2)
    return comp


def spectral_radius(fit: VecmFit, frozen: bool = False) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(level_companion(fit, frozen)))))


def _culprits(fit: VecmFit, frozen: bool, top: int = 3) -> list[str]:
    """Coefficients whose relative perturbation moves the spectral radius most."""
    base = spectral_radius(fit, frozen)
    scores = []
    for label, eq in (("local", fit.local), ("global", fit.global_)):
        coefs = eq.coefficients()
        for name in coefficient_names(fit.p)[1:]:
            val = coefs[name]
            if val == 0:
                continue
            bumped = _bump(fit, label, name, val * 1e-4)
            scores.append((abs(spectral_radius(bumped, frozen) - base), f"{label}.{name}={val:.4g}"))
    scores.sort(reverse=True)
    return [s for _, s in scores[:top]]


def _bump(fit: VecmFit, label: str, name: str, h: float) -> VecmFit:
    eq = fit.local if label == "local" else fit.global_
    if name == "ec_lag1":
        new = replace(eq, alpha=eq.alpha + h)
    else:
        which, k = name.split("_lag")
        attr = "gamma" if which == "local" else "delta"
        vals = list(getattr(eq, attr))
        vals[int(k) - 1] += h
        new = replace(eq, **{attr: tuple(vals)})
    return replace(fit, local=new) if label == "local" else replace(fit, global_=new)


def simulate_impulse(fit: VecmFit, cfg: ImpulseConfig | None = None) -> ImpulsePath:
    """Iterate the fitted system forward after a global shock at bar 0."""
    cfg = cfg or ImpulseConfig()
    base = _base_price(fit, cfg)
    frozen = cfg.global_dynamics == "frozen"
    p = fit.p
    b0, b1 = fit.beta0, fit.beta1
    la, lg = fit.local, fit.global_
    ca = la.constant if cfg.include_constants else 0.0
    cg = lg.constant if cfg.include_constants else 0.0

    shocked = base * (1.0 + cfg.shock_fraction)
    bound = 10.0 * abs(shocked)
    loc = b0 + b1 * base
    glob = shocked
    d_loc = [0.0] * p          # d_loc[k-1] = dP_local_{t-k}
    d_glob = [glob - base] + [0.0] * (p - 1)
    H = int(cfg.horizon_bars)
    local = [loc]
    global_ = [glob]
    for _ in range(H):
        eta = loc - b1 * glob - b0
        x = ca + la.alpha * eta
        y = 0.0 if frozen else cg + lg.alpha * eta
        for k in range(p):
            x += la.gamma[k] * d_loc[k] + la.delta[k] * d_glob[k]
            if not frozen:
                y += lg.gamma[k] * d_loc[k] + lg.delta[k] * d_glob[k]
        loc += x
        glob += y
        d_loc = [x] + d_loc[:-1]
        d_glob = [y] + d_glob[:-1]
        local.append(loc)
        global_.append(glob)
        if not (abs(loc) <= bound and abs(glob) <= bound):
            rho = spectral_radius(fit, frozen)
            raise InstabilityError(
                f"impulse path exceeded 10x the shocked level by bar {len(local) - 1}; "
                f"companion spectral radius {rho:.4f}; most influential: {', '.join(_culprits(fit, frozen))}")
    local_a = np.array(local)
    return ImpulsePath(local_a, np.array(global_), local_a / shocked, fit, cfg, base)


def _initial_state(fit: VecmFit, base: float, shocked: float) -> np.ndarray:
    """Companion state [P_0, P_-1, ..., P_-p] at the shock bar, local leg measured net of beta0.

    The companion matrix has no intercept; shifting the local level by beta0
    absorbs the one in eta and leaves every difference term unchanged.
    """
    loc = fit.beta1 * base
    return np.array([loc, shocked] + [loc, base] * fit.p)


def unit_root_projection(comp: np.ndarray) -> np.ndarray:
    """lim A^t for a companion matrix with one unit eigenvalue and the rest inside the unit circle."""
    vals, right = np.linalg.eig(comp)
    vals_l, left = np.linalg.eig(comp.T)
    i = int(np.argmin(np.abs(vals - 1.0)))
    j = int(np.argmin(np.abs(vals_l - 1.0)))
    others = np.abs(np.delete(vals, i))
    if abs(vals[i] - 1.0) > 1e-8 or (others.size and others.max() >= 1.0 - 1e-9):
        raise InstabilityError("impulse path does not settle: the companion matrix needs exactly one unit "
                               f"root and the rest inside the unit circle (moduli {np.sort(np.abs(vals))[::-1][:3]})")
    v, w = right[:, i].real, left[:, j].real
    return np.outer(v, w) / (w @ v)


def long_run_rqv(fit: VecmFit, cfg: ImpulseConfig | None = None) -> float:
    """Limit of the RQV path.

    Closed form for frozen global dynamics. Otherwise the levels state is
    projected onto the unit-root eigenvector of the companion matrix, which
    avoids the rounding drift a long iteration picks up along the common trend.
    """
    cfg = cfg or ImpulseConfig()
    base = _base_price(fit, cfg)
    shocked = base * (1.0 + cfg.shock_fraction)
    if cfg.global_dynamics == "frozen":
        return (fit.beta0 + fit.beta1 * shocked) / shocked
    if cfg.include_constants and (fit.local.constant or fit.global_.constant):
        raise InstabilityError("with constants the levels drift and the path has no limit")
    limit = unit_root_projection(level_companion(fit)) @ _initial_state(fit, base, shocked)
    return float((limit[0] + fit.beta0) / shocked)


_HORIZON_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(m|min|mins|minute|minutes|h|hr|hour|hours)?\s*$", re.I)


def parse_horizon(value) -> int:
    """Horizon in minutes from ``30``, ``"30m"``, ``"1.5h"``, a timedelta or timedelta64."""
    if isinstance(value, timedelta):
        minutes = value.total_seconds() / 60.0
    elif isinstance(value, np.timedelta64):
        minutes = value / np.timedelta64(1, "m")
    elif isinstance(value, (int, float, np.integer, np.floating)):
        minutes = float(value)
    else:
        m = _HORIZON_RE.match(str(value))
        if not m:
            raise ConfigurationError(f"cannot parse horizon {value!r}")
        minutes = float(m.group(1)) * (60.0 if (m.group(2) or "m").lower().startswith("h") else 1.0)
    if minutes <= 0 or minutes % BAR_MINUTES:
        raise ConfigurationError(f"horizon {value!r} is not a positive multiple of 30 minutes")
    return int(minutes)


def horizon_label(minutes: int) -> str:
    if minutes < 60:
        return f"{minutes}m"
    hours = minutes / 60
    return f"{hours:g}h"


def relative_quote_values(path: ImpulsePath, horizons: Iterable = DEFAULT_HORIZONS) -> dict[int, float]:
    """RQV read at each horizon, keyed by minutes; horizon h reads bar h/30."""
    out = {}
    for h in horizons:
        minutes = parse_horizon(h)
        bar = minutes // BAR_MINUTES
        if bar >= len(path):
            raise RangeError(f"horizon {horizon_label(minutes)} is beyond the simulated {len(path) - 1} bars")
        out[minutes] = float(path.rqv[bar])
    return out


def write_path_csv(path: ImpulsePath, fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["bar", "local", "global", "rqv"])
    for i in range(len(path)):
        w.writerow([i, repr(float(path.local[i])), repr(float(path.global_[i])), repr(float(path.rqv[i]))])

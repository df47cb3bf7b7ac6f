"""Cointegrated local/global quote pairs simulated from a known VECM.

The global mid follows a (multiplicative-noise) random walk; the local mid
error-corrects toward ``beta0 + beta1 * global``. Quotes are emitted as
intra-bar ticks (Brownian-bridge path between bar closes) so that the pair
reaches the estimators through the same resample/FX path as real files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np
from scipy import signal

from ..econometrics.vecm import VecmFit
from ..errors import ConfigurationError, InstabilityError
from ..impulse import ImpulseConfig, simulate_impulse, spectral_radius
from ..ingest import FxRateSeries, QuoteTable, fx_convert, resample_30m
from ..microstructure import SLOTS, half_hour_slots
from ..quotegrid import GRID_STEP, AlignedPair, align_pair, to_datetime64

DAY = np.timedelta64(1, "D")


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 0
    n_bars: int = 5000
    start: str = "2020-11-22T00:00:00+00:00"

    # long-run relation and VECM (local = A, global = G, both in local currency)
    beta0: float = 0.0
    beta1: float = 1.02
    alpha_local: float = -0.05
    alpha_global: float = 0.0
    gamma_local: tuple[float, ...] = (-0.50, -0.30, -0.10)
    delta_local: tuple[float, ...] = (0.80, 0.60, 0.35)
    gamma_global: tuple[float, ...] = (0.0, 0.0, 0.0)
    delta_global: tuple[float, ...] = (0.0, 0.0, 0.0)

    # innovations: sd per bar as a fraction of the lagged level
    noise_local: float = 0.001
    noise_global: float = 0.004
    innovations: str = "gaussian"       # or "student_t"
    t_df: float = 5.0

    # global efficient price: G_t = phi0*G_{t-1} + phi1 (G_{t-1} - base) + ... with phi1 = 1 a random walk
    base_price: float = 1_000_000.0
    global_drift: float = 0.0           # phi0, per bar, proportional
    global_phi1: float = 1.0

    # quotes
    spread_local: float = 0.002
    spread_bump: float = 0.002          # added at the bump slot, Gaussian in slot distance
    bump_slot: int = 10
    bump_width: float = 1.0
    spread_global: float = 0.0005
    ticks_per_bar: int = 4
    intrabar_scale: float = 1.0         # bridge sd relative to the leg's noise

    # traded value (local currency per bar, lognormal)
    traded_value: float = 5.0e6
    traded_value_vol: float = 0.5

    # USD/local conversion for the global leg
    fx_rate: float = 33.0
    fx_vol: float = 0.002               # daily log sd

    asset: str = "BTC"
    local_venue: str = "local"
    global_venue: str = "global"

    def __post_init__(self):
        p = len(self.gamma_local)
        for name in ("delta_local", "gamma_global", "delta_global"):
            if len(getattr(self, name)) != p:
                raise ConfigurationError(f"{name} must have {p} lags like gamma_local")
        if p < 1:
            raise ConfigurationError("need at least one lag")
        if self.n_bars < 2:
            raise ConfigurationError("n_bars must be >= 2")
        if self.noise_local < 0 or self.noise_global < 0:
            raise ConfigurationError("noise scales must be >= 0")
        if self.innovations not in ("gaussian", "student_t"):
            raise ConfigurationError("innovations must be 'gaussian' or 'student_t'")
        if self.innovations == "student_t" and not self.t_df > 2:
            raise ConfigurationError("t_df must exceed 2 for a finite variance")
        if not (self.base_price > 0 and self.fx_rate > 0 and self.ticks_per_bar >= 1):
            raise ConfigurationError("base_price, fx_rate must be > 0 and ticks_per_bar >= 1")
        if self.beta0 + self.beta1 * self.base_price <= 0:
            raise ConfigurationError("equilibrium local price must be positive")
        if not 0 <= self.bump_slot < SLOTS:
            raise ConfigurationError("bump_slot must be in 0..47")
        if not abs(self.global_phi1) <= 1:
            raise ConfigurationError("global_phi1 must lie in [-1, 1]")
        to_datetime64(self.start)

    @property
    def p(self) -> int:
        return len(self.gamma_local)

    def true_fit(self, alpha_local: float | None = None) -> VecmFit:
        return VecmFit.from_coefficients(
            alpha_local=self.alpha_local if alpha_local is None else alpha_local,
            gamma_local=self.gamma_local, delta_local=self.delta_local, beta1=self.beta1,
            beta0=self.beta0, alpha_global=self.alpha_global, gamma_global=self.gamma_global,
            delta_global=self.delta_global, base_global_price=self.base_price)

    def to_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v) for f in fields(self)}


@dataclass(frozen=True)
class Draws:
    """All random numbers a pair needs, drawn once so that reruns can vary parameters only."""

    z_local: np.ndarray
    z_global: np.ndarray
    bridge_local: np.ndarray
    bridge_global: np.ndarray
    volume: np.ndarray
    fx: np.ndarray

    @classmethod
    def draw(cls, spec: SynthSpec) -> Draws:
        rng = np.random.default_rng(spec.seed)
        n, k = spec.n_bars, spec.ticks_per_bar
        if spec.innovations == "gaussian":
            za, zg = rng.standard_normal(n), rng.standard_normal(n)
        else:
            scale = math.sqrt((spec.t_df - 2) / spec.t_df)
            za, zg = rng.standard_t(spec.t_df, n) * scale, rng.standard_t(spec.t_df, n) * scale
        n_days = int(math.ceil(n / 48)) + 2
        return cls(za, zg, rng.standard_normal((n, k)), rng.standard_normal((n, k)),
                   rng.standard_normal(n), rng.standard_normal(n_days))


def check_stable(spec: SynthSpec, alphas: Sequence[float] = (), horizon: int = 2000) -> None:
    """Reject explosive dynamics before simulating.

    Every adjustment speed is screened by the spectral radius of the levels
    companion matrix (a cointegrated system sits at exactly one); the
    extreme speeds also get a noise-free dry run after a global displacement,
    which raises :class:`InstabilityError` if the path blows up.
    """
    values = sorted({float(spec.alpha_local), *map(float, alphas)})
    for a in values:
        rho = spectral_radius(spec.true_fit(a))
        if rho > 1.0 + 1e-8:
            raise InstabilityError(f"alpha_local={a:.4g} gives companion spectral radius {rho:.6f} > 1")
    for a in {values[0], values[-1], float(spec.alpha_local)}:
        simulate_impulse(spec.true_fit(a), ImpulseConfig(horizon_bars=horizon))


def _exogenous_global(spec: SynthSpec) -> bool:
    return (spec.alpha_global == 0 and spec.global_phi1 == 1.0
            and not any(spec.gamma_global) and not any(spec.delta_global))


def simulate_mids(spec: SynthSpec, draws: Draws, alpha_path: np.ndarray | None = None):
    """Mid-price paths (local, global) at bar closes; bar 0 sits at equilibrium.

    Innovations scale with the lagged global level (times beta1 for the local
    leg), so they are exogenous to the local recursion. When the global leg
    has no feedback from the local one, it is a plain product of returns and
    the local leg is a linear filter of it; otherwise the joint recursion is
    iterated bar by bar.
    """
    alpha = (np.full(spec.n_bars, float(spec.alpha_local)) if alpha_path is None
             else np.asarray(alpha_path, float))
    if alpha.shape != (spec.n_bars,):
        raise ConfigurationError("alpha_path must have one value per bar")
    A, G = (_mids_filtered if _exogenous_global(spec) else _mids_loop)(spec, draws, alpha)
    bad = np.flatnonzero(~((A > 0) & (G > 0)))
    if bad.size:
        raise InstabilityError(f"simulated price left the positive range at bar {bad[0]}")
    return A, G


def _mids_loop(spec: SynthSpec, draws: Draws, alpha: np.ndarray):
    n, p = spec.n_bars, spec.p
    alpha = alpha.tolist()
    za = (spec.noise_local * draws.z_local).tolist()
    zg = (spec.noise_global * draws.z_global).tolist()
    gl, dl = spec.gamma_local, spec.delta_local
    gg, dg = spec.gamma_global, spec.delta_global
    b0, b1, ag = spec.beta0, spec.beta1, spec.alpha_global
    drift, rev, base = spec.global_drift, spec.global_phi1 - 1.0, spec.base_price
    g = base
    a = b0 + b1 * g
    d_a = [0.0] * p
    d_g = [0.0] * p
    A = [a]
    G = [g]
    for t in range(1, n):
        eta = a - b1 * g - b0
        x = alpha[t] * eta + b1 * g * za[t]
        y = drift * g + rev * (g - base) + ag * eta + g * zg[t]
        for k in range(p):
            x += gl[k] * d_a[k] + dl[k] * d_g[k]
            y += gg[k] * d_a[k] + dg[k] * d_g[k]
        a += x
        g += y
        d_a = [x] + d_a[:-1]
        d_g = [y] + d_g[:-1]
        A.append(a)
        G.append(g)
    return np.array(A), np.array(G)


def _mids_filtered(spec: SynthSpec, draws: Draws, alpha: np.ndarray):
    n, p = spec.n_bars, spec.p
    b0, b1 = spec.beta0, spec.beta1
    growth = 1.0 + spec.global_drift + spec.noise_global * draws.z_global
    growth[0] = 1.0
    G = spec.base_price * np.cumprod(growth)
    dG = np.r_[0.0, np.diff(G)]
    g_lag = np.r_[G[0], G[:-1]]
    # exogenous part of dA_t: cross lags, innovation and the alpha * (-b1 G - b0) piece of alpha * eta
    u = spec.noise_local * b1 * g_lag * draws.z_local - alpha * (b1 * g_lag + b0)
    for k, d in enumerate(spec.delta_local, start=1):
        u[k:] += d * dG[:-k]
    u[0] = 0.0
    gam = np.asarray(spec.gamma_local, float)
    A = np.empty(n)
    A[0] = b0 + b1 * G[0]
    # levels AR(p+1): A_t = (1 + alpha + g1) A_{t-1} + sum_k (g_k - g_{k-1}) A_{t-k} - g_p A_{t-p-1} + u_t
    history = np.full(p + 1, A[0])          # A_{t-1}, A_{t-2}, ... (pre-sample at equilibrium)
    change = np.flatnonzero(np.r_[True, alpha[2:] != alpha[1:-1]]) + 1
    bounds = np.r_[change, n]
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        lo, hi = int(lo), int(hi)
        a_t = alpha[lo]
        ar = np.empty(p + 1)
        ar[0] = 1.0 + a_t + gam[0]
        ar[1:p] = gam[1:] - gam[:-1]
        ar[p] = -gam[-1]
        den = np.r_[1.0, -ar]
        zi = signal.lfiltic([1.0], den, history)
        seg, _ = signal.lfilter([1.0], den, u[lo:hi], zi=zi)
        A[lo:hi] = seg
        history = np.r_[A[max(0, hi - p - 1):hi][::-1], np.full(p + 1, A[0])][:p + 1]
    return A, G


def bar_labels(spec: SynthSpec) -> np.ndarray:
    """End labels; the first bar covers the 30 minutes after ``spec.start``."""
    return to_datetime64(spec.start) + GRID_STEP * np.arange(1, spec.n_bars + 1)


def local_spreads(spec: SynthSpec, labels: np.ndarray) -> np.ndarray:
    slots = half_hour_slots(labels)
    d = np.abs(slots - spec.bump_slot)
    d = np.minimum(d, SLOTS - d)
    return spec.spread_local + spec.spread_bump * np.exp(-0.5 * (d / spec.bump_width) ** 2)


def _ticks(closes: np.ndarray, bridge: np.ndarray, sd: float):
    """Tick mids on k evenly spaced points per bar, pinned to the bar closes."""
    n, k = bridge.shape
    f = np.arange(1, k + 1) / k
    prev = np.r_[closes[0], closes[:-1]]
    w = np.cumsum(bridge, axis=1) * math.sqrt(1.0 / k) * (sd * prev)[:, None]
    b = w - f[None, :] * w[:, -1:]
    mid = prev[:, None] + f[None, :] * (closes - prev)[:, None] + b
    mid[:, -1] = closes
    return mid


def _tick_times(labels: np.ndarray, k: int) -> np.ndarray:
    step = GRID_STEP.astype("timedelta64[ns]") // k
    return (labels[:, None] - GRID_STEP + step * np.arange(1, k + 1)[None, :]).ravel()


@dataclass(frozen=True, eq=False)
class SynthDataset:
    spec: SynthSpec
    pair: AlignedPair
    local_quotes: QuoteTable
    global_quotes: QuoteTable        # USD
    fx: FxRateSeries
    local_mid: np.ndarray
    global_mid: np.ndarray
    alpha_path: np.ndarray
    extra: dict = field(default_factory=dict)


def fx_series(spec: SynthSpec, draws: Draws) -> FxRateSeries:
    n_days = draws.fx.shape[0]
    ts = (to_datetime64(spec.start) - DAY) + DAY * np.arange(n_days)
    rates = spec.fx_rate * np.exp(np.cumsum(spec.fx_vol * draws.fx) - spec.fx_vol * draws.fx[0])
    return FxRateSeries(ts, rates)


def build_dataset(spec: SynthSpec, draws: Draws | None = None, alpha_path: np.ndarray | None = None) -> SynthDataset:
    draws = draws or Draws.draw(spec)
    A, G = simulate_mids(spec, draws, alpha_path)
    labels = bar_labels(spec)
    k = spec.ticks_per_bar
    fx = fx_series(spec, draws)
    rate = fx.rate_at(labels)

    s_loc = local_spreads(spec, labels)
    mid_a = _ticks(A, draws.bridge_local, spec.intrabar_scale * spec.noise_local)
    mid_g = _ticks(G, draws.bridge_global, spec.intrabar_scale * spec.noise_global) / rate[:, None]
    times = _tick_times(labels, k)
    value = spec.traded_value * np.exp(spec.traded_value_vol * draws.volume - 0.5 * spec.traded_value_vol ** 2)
    local_q = QuoteTable(times, (mid_a * (1 - s_loc / 2)[:, None]).ravel(),
                         (mid_a * (1 + s_loc / 2)[:, None]).ravel(), np.repeat(value / k, k))
    sg = spec.spread_global
    global_q = QuoteTable(times.copy(), (mid_g * (1 - sg / 2)).ravel(), (mid_g * (1 + sg / 2)).ravel(),
                          np.repeat(20.0 * value / rate / k, k))
    pair = pair_from_quotes(local_q, global_q, fx, spec.asset, spec.local_venue, spec.global_venue)
    alpha = np.full(spec.n_bars, spec.alpha_local) if alpha_path is None else np.asarray(alpha_path, float)
    return SynthDataset(spec, pair, local_q, global_q, fx, A, G, alpha)


def pair_from_quotes(local_q: QuoteTable, global_q: QuoteTable, fx: FxRateSeries, asset: str,
                     local_venue: str, global_venue: str) -> AlignedPair:
    """Same path real files take: resample each venue, convert the global leg, align."""
    local = resample_30m(local_q, asset, local_venue)
    glob = fx_convert(resample_30m(global_q, asset, global_venue), fx)
    return align_pair(local, glob)


def simulate_pair(spec: SynthSpec) -> SynthDataset:
    check_stable(spec)
    return build_dataset(spec)


def gen_cointegrated_pair(spec: SynthSpec | None = None) -> AlignedPair:
    """Aligned local/global bars from ``spec``; reproducible from ``spec.seed``."""
    return simulate_pair(spec or SynthSpec()).pair

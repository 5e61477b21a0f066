"""Rates and end-to-end fidelities of linear repeater chains.

A chain of ``m`` links is built in two steps: the ``m/2`` pairs of
neighbouring links each wait for both halves to succeed, then all pairs
are joined. ``f(x)`` is the mean number of attempts, in units of ``1/p0``,
until ``x`` independent geometric trials have all succeeded.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

C_FIBER = 2e8
DT_REPETITION_HZ = 1e10
PURIFICATION_THRESHOLD = 0.5
TAIL_TOL = 1e-9


# --- attempts until x parallel links all succeed --------------------------------

@dataclass(frozen=True)
class AttemptDistribution:
    """Law of ``max`` of ``x`` geometric(p0) attempt counts, truncated."""

    x: int
    p0: float
    pmf: np.ndarray = field(repr=False)

    @property
    def n(self) -> np.ndarray:
        return np.arange(1, len(self.pmf) + 1)

    @property
    def mean(self) -> float:
        return float(self.n @ self.pmf)

    @property
    def tail(self) -> float:
        return float(1 - self.pmf.sum())


def attempt_distribution(x: int, p0: float, n_max: int | None = None) -> AttemptDistribution:
    """Build the pmf from ``P(max <= n) = (1 - (1 - p0)^n)^x``.

    ``n_max`` grows until the truncated tail carries less than ``1e-9``.
    """
    if x < 1 or int(x) != x:
        raise ValueError(f"x must be a positive integer, got {x}")
    if not 0 < p0 < 1:
        raise ValueError(f"p0 must lie in (0, 1), got {p0}")
    if n_max is None:
        n_max = max(16, int(math.ceil(math.log(x / TAIL_TOL) / -math.log1p(-p0))))
    while True:
        n = np.arange(1, n_max + 1)
        cdf = np.concatenate([[0.0], np.exp(x * np.log1p(-np.exp(n * math.log1p(-p0))))])
        if 1 - cdf[-1] <= TAIL_TOL:
            return AttemptDistribution(x=int(x), p0=p0, pmf=np.diff(cdf))
        n_max *= 2


def harmonic(x: int) -> float:
    return float(np.sum(1.0 / np.arange(1, x + 1)))


def f_exact(x: int, p0: float | None = None) -> float:
    """``E[max] * p0``; ``p0 = None`` gives the small-``p0`` limit.

    In that limit the tail sum ``sum_n 1 - (1 - q^n)^x`` tends to the
    harmonic number ``H_x``.
    """
    if x < 1 or int(x) != x:
        raise ValueError(f"x must be a positive integer, got {x}")
    if p0 is None:
        return harmonic(int(x))
    return attempt_distribution(int(x), p0).mean * p0


def f_regression(x: float, slope: float = 0.64, intercept: float = 0.83) -> float:
    return slope * math.log2(x) + intercept


def refit_regression(ks=(1, 2, 3, 4, 5), p0: float | None = None):
    """Least-squares ``(slope, intercept)`` of ``f_exact(2^k)`` against ``k``."""
    ks = np.asarray(ks, dtype=float)
    f = np.array([f_exact(2 ** int(k), p0) for k in ks])
    slope, intercept = np.polyfit(ks, f, 1)
    return float(slope), float(intercept)


def monte_carlo_f(x: int, p0: float, trials: int = 10**6, seed: int = 0):
    """Sample mean and standard error of ``max`` of ``x`` geometric attempts."""
    rng = np.random.default_rng(seed)
    samples = rng.geometric(p0, size=(trials, x)).max(axis=1)
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(trials))


# --- chain configuration ----------------------------------------------------------

@dataclass(frozen=True)
class RepeaterConfig:
    """A chain of ``m`` links over ``L`` km raced over ``N`` channels.

    ``F_gen = None`` takes the link fidelity from the two-node simulation
    at ``L0 = L/m``.
    """

    m: int
    L: float
    N: int = 1
    p: float = 0.9
    eta_d: float = 0.45
    L_att: float = 22.0
    T_mp: float = 0.0
    T_sw: float = 0.0
    F_gen: float | None = None
    F_mp: float = 0.992
    F_nro: float = 0.99999
    gamma_n: float = 1.0
    c: float = C_FIBER
    regression: bool = False

    def __post_init__(self):
        if self.m < 2 or self.m % 2:
            raise ValueError(f"m must be a positive even integer, got {self.m}")
        if self.N < 1 or self.L <= 0:
            raise ValueError("N must be >= 1 and L positive")
        if not 0 < self.p0 < 1:
            raise ValueError(f"link success probability {self.p0} outside (0, 1)")

    @property
    def L0(self) -> float:
        return self.L / self.m

    @property
    def p0(self) -> float:
        return 0.5 * self.p**2 * self.eta_d**2 * math.exp(-self.L0 / self.L_att)

    @property
    def f(self) -> float:
        x = self.m // 2
        if self.regression:
            return f_regression(x)
        return f_exact(x)

    @property
    def p_t(self) -> float:
        """Per-round success probability of one channel."""
        return self.m * self.p0 / (2 * self.f)


def distribution_time(cfg: RepeaterConfig) -> float:
    """Mean time to distribute one end-to-end pair, in seconds."""
    L_m = cfg.L * 1e3
    overhead = cfg.T_mp + cfg.T_sw
    if cfg.N == 1:
        return 2 * cfg.f * L_m / (cfg.c * cfg.m * cfg.p0) + overhead
    p_t = cfg.p_t
    if p_t >= 1:
        warnings.warn(f"per-round success {p_t:.3f} >= 1; clamping", RuntimeWarning,
                      stacklevel=2)
        return L_m / cfg.c + overhead
    return (L_m / cfg.c) / -math.expm1(cfg.N * math.log1p(-p_t)) + overhead


def distribution_time_multiplexed(cfg: RepeaterConfig) -> float:
    """The multiplexed expression evaluated for any ``N``, including 1."""
    L_m = cfg.L * 1e3
    return (L_m / cfg.c) / -math.expm1(cfg.N * math.log1p(-cfg.p_t)) + cfg.T_mp + cfg.T_sw


def rate(cfg: RepeaterConfig) -> float:
    return 1 / distribution_time(cfg)


def overall_fidelity(cfg: RepeaterConfig, t: float | None = None,
                     F_gen: float | None = None) -> float:
    """``F_gen^m F_mp^m F_nro^(m-1) exp(-gamma_n t)``."""
    if t is None:
        t = distribution_time(cfg)
    if F_gen is None:
        F_gen = cfg.F_gen if cfg.F_gen is not None else link_fidelity(cfg.L0, cfg.eta_d)
    m = cfg.m
    return F_gen**m * cfg.F_mp**m * cfg.F_nro ** (m - 1) * math.exp(-cfg.gamma_n * t)


def direct_rate(L: float, L_att: float = 22.0, eta_d: float = 1.0,
                rep_rate: float = DT_REPETITION_HZ) -> float:
    """Direct transmission: source rate times channel transmission."""
    return rep_rate * math.exp(-L / L_att) * eta_d


# --- link fidelity from the two-node simulation -------------------------------------

@lru_cache(maxsize=256)
def _peak_link(L0: float, eta_d: float, dark_rate: float):
    from scipy.optimize import minimize_scalar

    from .entgen import LinkParams, conditional_evolve, apply_dark_counts
    from .spinmech import fig4_rates

    rates = fig4_rates()
    k1 = rates.kappa1

    def neg_F(kt):
        link = LinkParams(L0=L0, T_d=0.5 * kt / k1, eta_d=eta_d, dark_rate=dark_rate)
        return -apply_dark_counts(conditional_evolve(rates, None, link))[1]

    res = minimize_scalar(neg_F, bounds=(4.0, 40.0), method="bounded",
                          options={"xatol": 0.25})
    return float(-res.fun), float(res.x)


def link_fidelity(L0: float, eta_d: float = 0.45, dark_rate: float = 10.0) -> float:
    """Peak ``F_gen`` over the window length for one link of ``L0`` km."""
    return _peak_link(round(float(L0), 6), float(eta_d), float(dark_rate))[0]


def peak_link(L0: float, eta_d: float = 0.45, dark_rate: float = 10.0):
    """``(F_gen, kappa1 t_f)`` at the fidelity peak."""
    return _peak_link(round(float(L0), 6), float(eta_d), float(dark_rate))


class LinkFidelityTable:
    """Peak ``F_gen`` interpolated in ``L0`` from a fixed grid of simulations."""

    def __init__(self, L0_grid, eta_d: float = 0.45, dark_rate: float = 10.0):
        self.L0 = np.asarray(sorted(L0_grid), dtype=float)
        self.F = np.array([link_fidelity(x, eta_d, dark_rate) for x in self.L0])

    def __call__(self, L0: float) -> float:
        if not self.L0[0] <= L0 <= self.L0[-1]:
            raise ValueError(f"L0 = {L0} km outside tabulated range")
        return float(np.interp(L0, self.L0, self.F))


# --- sweeps ------------------------------------------------------------------------

M_VALUES = (4, 6, 8, 10, 12, 14, 16)
N_VALUES = (1, 10, 100)


@dataclass
class SweepRow:
    L_km: float
    m: int
    N: int
    rate_hz: float
    fidelity: float
    p0: float
    crossover_flag: bool


def sweep(L_values, m_values=M_VALUES, N_values=N_VALUES, *, F_gen=None,
          base: RepeaterConfig | None = None, dt_eta_d: float = 1.0):
    """Rate and fidelity over a grid.

    ``F_gen`` may be a number or a callable of ``L0``. ``crossover_flag``
    marks points where the repeater beats direct transmission.
    """
    base = base or RepeaterConfig(m=2, L=100.0)
    rows = []
    for N in N_values:
        for m in m_values:
            for L in L_values:
                cfg = replace(base, m=m, L=float(L), N=N)
                t = distribution_time(cfg)
                Fg = F_gen(cfg.L0) if callable(F_gen) else F_gen
                rows.append(SweepRow(
                    L_km=float(L), m=m, N=N, rate_hz=1 / t,
                    fidelity=overall_fidelity(cfg, t, Fg),
                    p0=cfg.p0,
                    crossover_flag=1 / t > direct_rate(L, cfg.L_att, dt_eta_d)))
    return rows


def crossover_distance(cfg: RepeaterConfig, lo: float = 50.0, hi: float = 1000.0,
                       dt_eta_d: float = 1.0, resolution: float = 1.0) -> float | None:
    """Distance where the chain rate first exceeds direct transmission."""
    def gap(L):
        c = replace(cfg, L=L)
        return math.log(rate(c)) - math.log(direct_rate(L, c.L_att, dt_eta_d))

    if gap(lo) > 0 or gap(hi) < 0:
        return None
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if gap(mid) < 0 else (lo, mid)
    return 0.5 * (lo + hi)


def threshold_distance(rows, m: int, N: int, threshold: float = PURIFICATION_THRESHOLD):
    """First swept distance where the fidelity falls below ``threshold``."""
    for r in sorted((r for r in rows if r.m == m and r.N == N), key=lambda r: r.L_km):
        if r.fidelity < threshold:
            return r.L_km
    return None


def optimal_bands(rows, N: int):
    """Contiguous distance bands sharing the argmax-fidelity link count."""
    by_L = {}
    for r in rows:
        if r.N == N and (r.L_km not in by_L or r.fidelity > by_L[r.L_km].fidelity):
            by_L[r.L_km] = r
    bands = []
    for L in sorted(by_L):
        best = by_L[L]
        if bands and bands[-1]["m"] == best.m:
            bands[-1]["L_max_km"] = L
        else:
            bands.append({"N": N, "m": best.m, "L_min_km": L, "L_max_km": L})
    return bands

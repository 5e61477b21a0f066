"""Spin readout by repeated photon emission and threshold counting.

Two drive schemes are supported. In the periodic scheme an instantaneous
pi pulse swaps ``|D>`` and ``|B>`` every ``T_p`` and the photons emitted
in each period are counted, giving a binomial count distribution. In the
continuous scheme a resonant drive holds the node in a bright steady
state and counts are Poisson.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import qops
from .spinmech import SPIN_0, SPIN_B, SPIN_D, EffectiveRates, build_effective_model, emission_integral

# calibrated so that the driven bright steady state holds 0.202 photons
# under the reference node rates
DEFAULT_DRIVE_FRACTION = 0.27


@dataclass(frozen=True)
class DriveScheme:
    """``kind`` is ``"periodic"`` or ``"continuous"``; times in seconds."""

    kind: str
    T0: float
    eta: float
    T_p: float | None = None
    g_d: float | None = None
    dark_rate: float = 10.0

    def __post_init__(self):
        if self.kind not in ("periodic", "continuous"):
            raise ValueError(f"unknown drive scheme {self.kind!r}")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if self.T0 <= 0:
            raise ValueError("total readout time must be positive")
        if self.kind == "periodic" and self.T_p is not None and self.T_p <= 0:
            raise ValueError("pulse period must be positive")

    def period(self, rates: EffectiveRates) -> float:
        return 1 / rates.R if self.T_p is None else self.T_p

    def drive(self, rates: EffectiveRates) -> float:
        return DEFAULT_DRIVE_FRACTION * rates.kappa1 if self.g_d is None else self.g_d

    def pulses(self, rates: EffectiveRates) -> int:
        return max(1, int(self.T0 / self.period(rates) + 1e-9))


def _spin_index(initial_spin) -> int:
    key = str(initial_spin)
    if key not in ("D", "0"):
        raise ValueError(f"initial spin must be 'D' or '0', got {initial_spin!r}")
    return SPIN_D if key == "D" else SPIN_0


def _initial_state(rates: EffectiveRates, spin: int, n_cav: int) -> np.ndarray:
    nc = n_cav + 1
    occ = rates.n_cavity
    cav = np.diag([occ ** k for k in range(nc)]).astype(complex)
    cav /= np.trace(cav)
    return qops.kron(qops.projector(3, spin), cav)


def _pi_pulse(n_cav: int) -> np.ndarray:
    U = np.eye(3, dtype=complex)
    U[[SPIN_D, SPIN_B]] = U[[SPIN_B, SPIN_D]]
    return qops.kron(U, np.eye(n_cav + 1))


def pulse_brightness(rates: EffectiveRates, T_p: float, initial_spin,
                     n_pulses: int = 1, n_cav: int = 1) -> np.ndarray:
    """Photons leaving through the cavity in each of ``n_pulses`` periods."""
    model = build_effective_model(rates, n_cav=n_cav)
    L = model.liouvillian()
    U = _pi_pulse(n_cav)
    rho = _initial_state(rates, _spin_index(initial_spin), n_cav)
    out = np.empty(n_pulses)
    for k in range(n_pulses):
        rho = U @ rho @ qops.dag(U)
        out[k] = emission_integral(model, rho, T_p, rates.kappa)
        rho = qops.propagate(L, rho, T_p)
    return out


def driven_occupation(rates: EffectiveRates, g_d: float, initial_spin,
                      n_cav: int = 3) -> float:
    """Steady ``<a^dag a>`` under a resonant D-B drive.

    Population of ``|0>`` is conserved by every term, so the kernel is two
    dimensional; the initial spin fixes the branch.
    """
    model = build_effective_model(rates, n_cav=n_cav, drive=g_d)
    L = model.liouvillian()
    d = model.H.shape[0]
    P0 = qops.kron(qops.projector(3, SPIN_0), np.eye(n_cav + 1))
    A = np.vstack([L, qops.vec(P0).conj()[None, :], qops.vec(np.eye(d)).conj()[None, :]])
    b = np.zeros(A.shape[0], dtype=complex)
    b[-2] = 1.0 if _spin_index(initial_spin) == SPIN_0 else 0.0
    b[-1] = 1.0
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.linalg.norm(A @ x - b) > 1e-8:
        raise qops.NumericalError("driven steady state did not converge")
    rho = qops.unvec(x)
    rho = 0.5 * (rho + qops.dag(rho))
    return qops.expect(qops.dag(model.ops["a"]) @ model.ops["a"], rho)


def brightness(rates: EffectiveRates, scheme: DriveScheme, initial_spin) -> float:
    """Per-pulse photon number (periodic) or steady cavity occupation (continuous)."""
    if scheme.kind == "periodic":
        return float(pulse_brightness(rates, scheme.period(rates), initial_spin)[0])
    return driven_occupation(rates, scheme.drive(rates), initial_spin)


# --- counting statistics --------------------------------------------------------

@dataclass(frozen=True)
class CountingModel:
    """Signal/background count distributions.

    ``binomial``: ``params = (N, p_D, p_0)``; ``poisson``: ``(lam_D, lam_0)``.
    """

    kind: str
    params: tuple
    threshold: int | None = None

    def __post_init__(self):
        if self.kind == "binomial":
            N, pD, p0 = self.params
            if int(N) != N or N < 1 or not 0 <= p0 <= 1 or not 0 <= pD <= 1:
                raise ValueError(f"invalid binomial parameters {self.params}")
        elif self.kind == "poisson":
            lD, l0 = self.params
            if lD < 0 or l0 < 0:
                raise ValueError(f"invalid Poisson parameters {self.params}")
        else:
            raise ValueError(f"unknown counting model {self.kind!r}")
        if self.threshold is not None and self.threshold < 1:
            raise ValueError("threshold must be >= 1")

    @classmethod
    def binomial(cls, N, p_D, p_0, threshold=None):
        return cls("binomial", (int(N), float(p_D), float(p_0)), threshold)

    @classmethod
    def poisson(cls, lam_D, lam_0, threshold=None):
        return cls("poisson", (float(lam_D), float(lam_0)), threshold)

    def with_threshold(self, threshold: int) -> "CountingModel":
        return CountingModel(self.kind, self.params, threshold)

    def support(self) -> np.ndarray:
        if self.kind == "binomial":
            return np.arange(self.params[0] + 1)
        hi = max(self.params)
        return np.arange(int(hi + 12 * math.sqrt(hi + 1) + 20))

    def logpmf(self, n, which: str) -> np.ndarray:
        if self.kind == "binomial":
            N, pD, p0 = self.params
            return stats.binom.logpmf(n, N, pD if which == "D" else p0)
        lD, l0 = self.params
        return stats.poisson.logpmf(n, lD if which == "D" else l0)

    def cdf(self, n, which: str):
        if self.kind == "binomial":
            N, pD, p0 = self.params
            return stats.binom.cdf(n, N, pD if which == "D" else p0)
        lD, l0 = self.params
        return stats.poisson.cdf(n, lD if which == "D" else l0)

    def pmf_table(self, n_max: int | None = None):
        n = self.support() if n_max is None else np.arange(n_max + 1)
        return n, np.exp(self.logpmf(n, "D")), np.exp(self.logpmf(n, "0"))


def threshold_select(model: CountingModel) -> int:
    """Smallest count at which the signal distribution dominates for good."""
    n = model.support()
    if model.params[-2] == model.params[-1]:
        raise ValueError("signal and background distributions are identical")
    with np.errstate(invalid="ignore"):
        llr = model.logpmf(n, "D") - model.logpmf(n, "0")
    llr = np.nan_to_num(llr, nan=0.0, posinf=np.inf, neginf=-np.inf)
    below = np.flatnonzero(llr < 0)
    t = 0 if len(below) == 0 else int(below[-1]) + 1
    return max(t, 1)


def readout_fidelity(model: CountingModel) -> float:
    """``(P_0(n < t) + P_D(n >= t)) / 2`` for threshold ``t``."""
    t = model.threshold if model.threshold is not None else threshold_select(model)
    correct_0 = model.cdf(t - 1, "0")
    correct_D = 1 - model.cdf(t - 1, "D")
    return float(0.5 * (correct_0 + correct_D))


def counting_model(rates: EffectiveRates, scheme: DriveScheme, *,
                   beta_D: float | None = None, beta_0: float | None = None) -> CountingModel:
    """Count statistics of one readout; brightness values may be supplied."""
    if beta_D is None:
        beta_D = brightness(rates, scheme, "D")
    if beta_0 is None:
        beta_0 = brightness(rates, scheme, "0")
    if scheme.kind == "periodic":
        T_p = scheme.period(rates)
        dark = scheme.dark_rate * T_p
        pD, p0 = scheme.eta * beta_D + dark, scheme.eta * beta_0 + dark
        if pD > 1:
            raise ValueError("detection probability per pulse exceeds 1")
        return CountingModel.binomial(scheme.pulses(rates), pD, p0)
    flux = scheme.eta * rates.kappa * scheme.T0
    dark = scheme.dark_rate * scheme.T0
    return CountingModel.poisson(flux * beta_D + dark, flux * beta_0 + dark)


def infidelity_curve(rates: EffectiveRates, scheme: DriveScheme, etas, times, *,
                     beta_D: float | None = None, beta_0: float | None = None):
    """Rows ``(eta, T0, threshold, 1 - F)`` over readout times and efficiencies."""
    if beta_D is None:
        beta_D = brightness(rates, scheme, "D")
    if beta_0 is None:
        beta_0 = brightness(rates, scheme, "0")
    rows = []
    for eta in etas:
        for T0 in times:
            s = DriveScheme(scheme.kind, T0=T0, eta=eta, T_p=scheme.T_p,
                            g_d=scheme.g_d, dark_rate=scheme.dark_rate)
            m = counting_model(rates, s, beta_D=beta_D, beta_0=beta_0)
            t = threshold_select(m)
            rows.append((eta, T0, t, 1 - readout_fidelity(m.with_threshold(t))))
    return rows

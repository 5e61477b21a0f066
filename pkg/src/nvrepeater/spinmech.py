"""Spin-optomechanics node: full three-mode model, effective spin-cavity
model, derived rates and the incoherent rate equations.

Spin levels are ordered ``(0, D, B)``. The lowering operator is
``|D><B|``; dephasing acts through ``sigma_z = |B><B| - |D><D| - |0><0|``
so that only coherences involving the bright state decay, leaving the
``{0, D}`` ground manifold untouched.

All rates are angular (rad/s) unless a name ends in ``_hz``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from . import qops
from .qops import LindbladTerm

SPIN_0, SPIN_D, SPIN_B = 0, 1, 2
SPIN_LABELS = ("0", "D", "B")

TWO_PI = 2 * math.pi


class PhysicsValidityError(ValueError):
    """Parameters fall outside the regime where a model applies."""


class CutoffWarning(UserWarning):
    pass


def spin_ops():
    """``(sigma_minus, sigma_z)`` on the 3-level dressed spin."""
    sm = qops.transition(3, SPIN_D, SPIN_B)
    sz = np.diag([-1.0, -1.0, 1.0]).astype(complex)
    return sm, sz


@dataclass(frozen=True)
class SystemParams:
    """Physical rates of one node. ``lam`` is the spin-mechanics coupling."""

    lam: float
    g: float
    delta: float
    kappa: float
    gamma_m: float = 0.0
    n_th: float = 0.0
    gamma_s_star: float = 0.0
    omega_m: float | None = None
    Q_m: float | None = None

    def __post_init__(self):
        if self.omega_m is not None and self.Q_m is not None:
            object.__setattr__(self, "gamma_m", self.omega_m / self.Q_m)
        for name in ("lam", "g", "kappa", "gamma_m", "n_th", "gamma_s_star"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {v}")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")

    @property
    def adiabatic(self) -> bool:
        return self.delta >= 5 * max(self.lam, self.g)

    @property
    def rwa_valid(self) -> bool | None:
        if self.omega_m is None:
            return None
        return self.delta / self.omega_m < 0.1


@dataclass(frozen=True)
class EffectiveRates:
    """Rates of the effective spin-cavity master equation.

    ``spin_shift`` and ``cavity_shift`` are the ac-Stark terms
    ``lam**2/delta`` and ``g**2/delta``; they vanish in the frame used by
    :meth:`from_rates`.
    """

    Omega: float
    kappa1: float
    kappa2: float = 0.0
    gamma1: float = 0.0
    gamma2: float = 0.0
    gamma_s_star: float = 0.0
    Gamma_th: float = 0.0
    kappa: float | None = None
    spin_shift: float = 0.0
    cavity_shift: float = 0.0

    def __post_init__(self):
        for name in ("Omega", "kappa1", "kappa2", "gamma1", "gamma2",
                     "gamma_s_star", "Gamma_th"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {v}")
        if not self.kappa1 > self.kappa2:
            raise PhysicsValidityError(
                f"kappa1 ({self.kappa1}) must exceed kappa2 ({self.kappa2})")
        if self.kappa is None:
            object.__setattr__(self, "kappa", self.kappa1)

    @classmethod
    def from_rates(cls, Omega, kappa1, *, kappa2=0.0, gamma1=0.0, gamma2=0.0,
                   gamma_s_star=0.0, Gamma_th=None, kappa=None):
        """Build directly from effective rates, bypassing ``gamma_m``/``n_th``.

        Without explicit ``Gamma_th`` the equal-coupling identity
        ``Gamma_th = gamma2`` is used.
        """
        if Gamma_th is None:
            Gamma_th = gamma2
        return cls(Omega=Omega, kappa1=kappa1, kappa2=kappa2, gamma1=gamma1,
                   gamma2=gamma2, gamma_s_star=gamma_s_star, Gamma_th=Gamma_th,
                   kappa=kappa)

    @property
    def R(self) -> float:
        """Effective emission rate with the full decoherence denominator."""
        return 4 * self.Omega**2 / (self.kappa1 - self.kappa2 + self.gamma1
                                    + self.gamma2 + 2 * self.gamma_s_star)

    @property
    def R_compact(self) -> float:
        """High-temperature form ``4 Omega^2 / (kappa + 2 gamma* + 2 Gamma_th)``."""
        return 4 * self.Omega**2 / (self.kappa + 2 * self.gamma_s_star
                                    + 2 * self.Gamma_th)

    @property
    def D_th(self) -> float:
        """Thermal photon emission rate treated as dark counts (1/s)."""
        return self.kappa1 * self.kappa2 / (self.kappa1 - self.kappa2)

    @property
    def n_cavity(self) -> float:
        return self.kappa2 / (self.kappa1 - self.kappa2)

    @property
    def incoherent(self) -> bool:
        return 2 * self.Omega <= self.kappa + 2 * self.gamma_s_star + 2 * self.Gamma_th

    def without_thermal_cavity(self) -> "EffectiveRates":
        return replace(self, kappa2=0.0)

    def scaled(self, **factors) -> "EffectiveRates":
        return replace(self, **{k: getattr(self, k) * v for k, v in factors.items()})


def fig4_rates(kappa1: float = TWO_PI * 20e3) -> EffectiveRates:
    """Effective rates quoted for the entanglement-generation figure.

    ``kappa1 = 2 Omega``, ``gamma* = 0.01 kappa1``,
    ``gamma1 = gamma2 = 1e-3 kappa1`` and, with equal couplings,
    ``kappa2 = Gamma_th = gamma2``.
    """
    return EffectiveRates.from_rates(
        Omega=kappa1 / 2, kappa1=kappa1, kappa2=1e-3 * kappa1,
        gamma1=1e-3 * kappa1, gamma2=1e-3 * kappa1,
        gamma_s_star=0.01 * kappa1, kappa=kappa1 * (1 - 1e-3))


def fig4_params(n_th: float = 0.0) -> SystemParams:
    """Physical parameters consistent with :func:`fig4_rates`.

    ``gamma_m (n_th + 1) (lam/delta)**2`` is set to ``1e-3 kappa1``. The
    caption does not give ``omega_m`` so the thermal occupation is a free
    input; small values describe the cooled oscillator.
    """
    lam = g = TWO_PI * 100e3
    delta = TWO_PI * 1e6
    kappa1 = 2 * lam * g / delta
    gamma_m = 1e-3 * kappa1 * (delta / lam) ** 2 / (n_th + 1)
    kappa = kappa1 - g**2 * gamma_m * (n_th + 1) / delta**2
    return SystemParams(lam=lam, g=g, delta=delta, kappa=kappa, gamma_m=gamma_m,
                        n_th=n_th, gamma_s_star=0.01 * kappa1)


def derive_rates(p: SystemParams) -> EffectiveRates:
    if not p.adiabatic:
        raise PhysicsValidityError(
            f"adiabatic elimination needs delta >= 5 max(lam, g); "
            f"delta/max = {p.delta / max(p.lam, p.g):.3g}")
    d2 = p.delta**2
    return EffectiveRates(
        Omega=p.lam * p.g / p.delta,
        kappa1=p.kappa + p.g**2 * p.gamma_m * (p.n_th + 1) / d2,
        kappa2=p.g**2 * p.n_th * p.gamma_m / d2,
        gamma1=p.lam**2 * p.gamma_m * (p.n_th + 1) / d2,
        gamma2=p.lam**2 * p.n_th * p.gamma_m / d2,
        gamma_s_star=p.gamma_s_star,
        Gamma_th=p.lam * p.g * p.n_th * p.gamma_m / d2,
        kappa=p.kappa,
        spin_shift=p.lam**2 / p.delta,
        cavity_shift=p.g**2 / p.delta,
    )


# --- models ---------------------------------------------------------------

@dataclass
class NodeModel:
    """Hamiltonian, dissipators and named operators of one node."""

    H: np.ndarray
    terms: list
    ops: dict = field(default_factory=dict)
    dims: tuple = ()

    def liouvillian(self) -> np.ndarray:
        return qops.build_liouvillian(self.H, self.terms)

    def state(self, spin: int, *fock: int) -> np.ndarray:
        """Product basis ket ``|spin, n1, n2, ...>``."""
        factors = [qops.basis(self.dims[0], spin)]
        factors += [qops.basis(d, n) for d, n in zip(self.dims[1:], fock)]
        return qops.kron(*factors)


def build_full_model(p: SystemParams, n_phonon_max: int = 3) -> NodeModel:
    """Spin x phonon x cavity model in the frame rotating at the spin frequency.

    The cavity is truncated at one photon.
    """
    if n_phonon_max < 2:
        raise ValueError("n_phonon_max must be at least 2")
    nb = n_phonon_max + 1
    sm3, sz3 = spin_ops()
    I3, Ib, Ia = np.eye(3), np.eye(nb), np.eye(2)
    sm = qops.kron(sm3, Ib, Ia)
    sz = qops.kron(sz3, Ib, Ia)
    b = qops.kron(I3, qops.destroy(nb), Ia)
    a = qops.kron(I3, Ib, qops.destroy(2))
    bd = qops.dag(b)
    H = (p.delta * bd @ b
         + p.lam * (bd @ sm + b @ qops.dag(sm))
         + p.g * (bd @ a + b @ qops.dag(a)))
    terms = [LindbladTerm(p.kappa, a),
             LindbladTerm(p.gamma_s_star, sz),
             LindbladTerm(p.n_th * p.gamma_m, bd),
             LindbladTerm((p.n_th + 1) * p.gamma_m, b)]
    if p.gamma_m > 0:
        n = p.n_th
        top = (n / (n + 1)) ** n_phonon_max / (n + 1)
        if top > 1e-4:
            warnings.warn(
                f"thermal phonon population at cutoff {n_phonon_max} is {top:.2e}",
                CutoffWarning, stacklevel=2)
    return NodeModel(H=H, terms=terms, dims=(3, nb, 2),
                     ops={"sm": sm, "sz": sz, "a": a, "b": b})


def build_effective_model(r: EffectiveRates, n_cav: int = 1, *,
                          thermal_cavity: bool = True,
                          drive: float = 0.0) -> NodeModel:
    """Effective spin-cavity model with cavity truncated at ``n_cav`` photons.

    ``drive`` adds a resonant coherent drive ``drive * (sigma_+ + sigma_-)``
    on the D-B transition.
    """
    nc = n_cav + 1
    sm3, sz3 = spin_ops()
    sm = qops.kron(sm3, np.eye(nc))
    sz = qops.kron(sz3, np.eye(nc))
    a = qops.kron(np.eye(3), qops.destroy(nc))
    smd, ad = qops.dag(sm), qops.dag(a)
    H = (r.cavity_shift * ad @ a + r.spin_shift * smd @ sm
         + r.Omega * (ad @ sm + a @ smd))
    if drive:
        H = H + drive * (sm + smd)
    terms = [LindbladTerm(r.kappa1, a),
             LindbladTerm(r.kappa2 if thermal_cavity else 0.0, ad),
             LindbladTerm(r.gamma_s_star, sz),
             LindbladTerm(r.gamma1, sm),
             LindbladTerm(r.gamma2, smd)]
    return NodeModel(H=H, terms=terms, dims=(3, nc), ops={"sm": sm, "sz": sz, "a": a})


def initial_cavity_state(r: EffectiveRates) -> np.ndarray:
    """Thermal cavity state truncated at one photon."""
    if not r.kappa1 > 2 * r.kappa2:
        raise PhysicsValidityError("initial cavity state needs kappa1 > 2 kappa2")
    den = r.kappa1 - r.kappa2
    return np.diag([(r.kappa1 - 2 * r.kappa2) / den, r.kappa2 / den]).astype(complex)


def cavity_drive_liouvillian(r: EffectiveRates, n_cav: int = 1) -> np.ndarray:
    """Cavity-only generator ``kappa1 D[a] + kappa2 D[a^dag]``."""
    a = qops.destroy(n_cav + 1)
    return qops.build_liouvillian(np.zeros_like(a),
                                  [LindbladTerm(r.kappa1, a),
                                   LindbladTerm(r.kappa2, qops.dag(a))])


# --- incoherent rate equations ----------------------------------------------

def bloch_populations(r: EffectiveRates, p_spin0: float, p_cav0: float, t):
    """Spin and cavity populations from the incoherent rate equations.

    Returns ``(spin, cavity)`` arrays evaluated at ``t``.
    """
    if not r.incoherent:
        warnings.warn("rate equations used outside the incoherent regime "
                      f"(2 Omega = {2 * r.Omega:.4g} > {r.kappa + 2 * r.gamma_s_star + 2 * r.Gamma_th:.4g})",
                      stacklevel=2)
    R = r.R
    # affine system in (cavity, spin, 1)
    M = np.array([
        [-(R + r.kappa1 - r.kappa2), R, r.kappa2],
        [R, -(R + r.gamma1 + r.gamma2), r.gamma2],
        [0.0, 0.0, 0.0],
    ])
    x0 = np.array([p_cav0, p_spin0, 1.0])
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.array([scipy.linalg.expm(M * tk) @ x0 for tk in t])
    return out[:, 1], out[:, 0]


def bloch_emission(r: EffectiveRates, p_spin0: float, p_cav0: float, t: float,
                   rate: float | None = None) -> float:
    """``rate * integral_0^t <a^dag a>`` from the rate equations (exact)."""
    R = r.R
    rate = r.kappa1 if rate is None else rate
    M = np.array([
        [-(R + r.kappa1 - r.kappa2), R, r.kappa2, 0.0],
        [R, -(R + r.gamma1 + r.gamma2), r.gamma2, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
    ])
    x = scipy.linalg.expm(M * t) @ np.array([p_cav0, p_spin0, 1.0, 0.0])
    return rate * x[3]


def emission_integral(model: NodeModel, rho0: np.ndarray, t: float,
                      rate: float) -> float:
    """``rate * integral_0^t <a^dag a> dt`` under the model's master equation."""
    L = model.liouvillian()
    n = L.shape[0]
    a = model.ops["a"]
    num = qops.vec(qops.dag(a) @ a).conj()
    # d/dt [v, w] = [L v, v]  ->  w(t) = integral of v
    aug = np.zeros((2 * n, 2 * n), dtype=complex)
    aug[:n, :n] = L
    aug[n:, :n] = np.eye(n)
    w = (scipy.linalg.expm(aug * t) @ np.concatenate([qops.vec(rho0), np.zeros(n)]))[n:]
    return rate * float(np.real(num @ w))


def with_detuning_ratio(p: SystemParams, ratio: float) -> SystemParams:
    """Rescale ``lam = g`` and ``delta`` to ``delta/lam = ratio``.

    ``Omega`` and the mechanically induced rates are held fixed, so only
    the accuracy of the elimination changes.
    """
    Omega = p.lam * p.g / p.delta
    lam = ratio * Omega
    delta = ratio * lam
    gamma_m = p.gamma_m * (p.lam / p.delta) ** 2 / (lam / delta) ** 2
    return replace(p, lam=lam, g=lam, delta=delta, gamma_m=gamma_m,
                   omega_m=None, Q_m=None)


def elimination_discrepancy(p: SystemParams, window: float = 10.0) -> float:
    """Relative gap in emitted photon number, full versus effective model.

    Both start from ``|B>`` with empty modes and run for ``window / kappa1``.
    """
    r = derive_rates(p)
    t = window / r.kappa1
    full = build_full_model(p)
    b_full = emission_integral(full, qops.ket2dm(full.state(SPIN_B, 0, 0)), t, p.kappa)
    eff = build_effective_model(r)
    b_eff = emission_integral(eff, qops.ket2dm(eff.state(SPIN_B, 0)), t, p.kappa)
    return abs(b_full - b_eff) / b_eff


# --- hyperfine structure ------------------------------------------------------

ZERO_FIELD_SPLITTING_HZ = 2.87e9
MU_E_HZ_PER_G = -2.8e6
MU_N_HZ_PER_G = 1.07e3


def hyperfine_levels(B: float, A: float, m_s: int, m_I: float) -> float:
    """Electron-nuclear level energy in Hz; ``B`` in gauss, ``A`` in Hz."""
    if m_s not in (-1, 0, 1):
        raise ValueError(f"m_s must be -1, 0 or +1, got {m_s}")
    if m_I not in (-0.5, 0.5):
        raise ValueError(f"m_I must be +-1/2, got {m_I}")
    return (ZERO_FIELD_SPLITTING_HZ * m_s**2 + MU_E_HZ_PER_G * B * m_s
            + MU_N_HZ_PER_G * B * m_I + A * m_s * m_I)

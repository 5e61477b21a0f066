"""Barrett-Kok heralded entanglement between two spin-cavity nodes.

The two-node density matrix is evolved in photon-count-resolved branches.
Between clicks the evolution is the no-jump generator ``L0``, which is a
sum of single-node generators because the summed detector jumps
``S+ + S-`` are local. We therefore store a composite state ``rho`` in the
"node-pair" layout

    X[i1 + d j1, i2 + d j2] = rho[(i1, i2), (j1, j2)]

where node superoperators act as ``X -> P1 @ X @ P2.T``. Single-click
branches over a window of length ``T`` are

    rho_1(T) = int_0^T exp(L0 (T - s)) S exp(L0 s) rho0 ds

evaluated by composite Simpson quadrature with a Horner-style backward
accumulation, and checked by halving the step.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import qops
from .spinmech import SPIN_0, SPIN_B, SPIN_D, EffectiveRates, build_effective_model

NODE_DIMS = (3, 2)
NODE_DIM = 6
CLICKS = ("+", "-")  # left / right detector
RECORDS = (("+", "+"), ("+", "-"), ("-", "+"), ("-", "-"))


class QuadratureError(ArithmeticError):
    pass


class DarkCountWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LinkParams:
    """One elementary link; lengths in km, ``T_d`` in seconds."""

    L0: float
    T_d: float
    L_att: float = 22.0
    eta_d: float = 1.0
    dark_rate: float = 10.0
    thermal_loss: bool = True

    def __post_init__(self):
        if not 0 < self.eta_d <= 1:
            raise ValueError(f"eta_d must lie in (0, 1], got {self.eta_d}")
        if self.L0 < 0 or self.L_att <= 0 or self.T_d < 0 or self.dark_rate < 0:
            raise ValueError("link lengths, window and dark rate must be non-negative")

    @property
    def eta_t(self) -> float:
        """Fiber transmission from a node to the central station."""
        return math.exp(-self.L0 / (2 * self.L_att))

    @property
    def eta(self) -> float:
        return self.eta_t * self.eta_d

    @property
    def t_f(self) -> float:
        return 2 * self.T_d

    def dark_click_probability(self, D_th: float) -> float:
        """Probability that one detector fires spuriously in one window.

        Thermal cavity photons from the two nodes are split evenly between
        the detectors; with ``thermal_loss`` they see the same channel
        transmission as signal photons.
        """
        thermal = D_th * self.eta_d * (self.eta_t if self.thermal_loss else 1.0)
        return -math.expm1(-(self.dark_rate + thermal) * self.T_d)


# --- node-pair superoperator helpers ------------------------------------------

def _to_pair(rho: np.ndarray, d: int = NODE_DIM) -> np.ndarray:
    t = rho.reshape(d, d, d, d)            # i1 i2 j1 j2
    return t.transpose(2, 0, 3, 1).reshape(d * d, d * d)


def _from_pair(X: np.ndarray, d: int = NODE_DIM) -> np.ndarray:
    t = X.reshape(d, d, d, d)              # j1 i1 j2 i2
    return t.transpose(1, 3, 0, 2).reshape(d * d, d * d)


@dataclass
class _NodeSuper:
    """Single-node superoperators for one arm of the interferometer."""

    L0: np.ndarray
    jump: np.ndarray   # sqrt-rate a rho a^dag, detected part
    pre_a: np.ndarray  # rho -> sqrt(r) a rho
    post_ad: np.ndarray  # rho -> sqrt(r) rho a^dag
    flip: np.ndarray


def spin_flip_unitary() -> np.ndarray:
    """Swap 0 <-> D, then pi pulse D <-> B: net 0 -> B, D -> 0, B -> D."""
    U = np.zeros((3, 3), dtype=complex)
    U[SPIN_B, SPIN_0] = 1
    U[SPIN_0, SPIN_D] = 1
    U[SPIN_D, SPIN_B] = 1
    return U


def _node_super(rates: EffectiveRates, eta: float) -> _NodeSuper:
    model = build_effective_model(rates.without_thermal_cavity(), n_cav=1)
    L = model.liouvillian()
    a = model.ops["a"]
    r = eta * rates.kappa1
    jump = qops.jump_superop(a, r)
    U = qops.kron(spin_flip_unitary(), np.eye(2))
    return _NodeSuper(
        L0=L - jump,
        jump=jump,
        pre_a=math.sqrt(r) * qops.spre(a),
        post_ad=math.sqrt(r) * qops.spost(qops.dag(a)),
        flip=qops.sprepost(U, qops.dag(U)),
    )


def initial_pair_state() -> np.ndarray:
    psi = qops.kron((qops.basis(3, SPIN_0) + qops.basis(3, SPIN_B)) / math.sqrt(2),
                    qops.basis(2, 0))
    node = qops.ket2dm(psi)
    return np.outer(qops.vec(node), qops.vec(node))  # pair layout of rho x rho


class _Window:
    """Click-resolved propagation of pair states over one detection window."""

    def __init__(self, n1: _NodeSuper, n2: _NodeSuper, T: float, h_max: float):
        self.n1, self.n2, self.T = n1, n2, T
        self.d = int(round(math.sqrt(n1.L0.shape[0])))
        n = max(2, math.ceil(T / h_max))
        self.n = n + (n % 2)
        self._steps = {}

    def _propagators(self, n):
        if n not in self._steps:
            h = self.T / n
            self._steps[n] = (qops.propagator(self.n1.L0, h), qops.propagator(self.n2.L0, h))
        return self._steps[n]

    def _source(self, X, sign):
        n1, n2 = self.n1, self.n2
        local = n1.jump @ X + X @ n2.jump.T
        cross = n1.pre_a @ X @ n2.post_ad.T + n1.post_ad @ X @ n2.pre_a.T
        return 0.5 * (local + sign * cross)

    def _run(self, X0, n):
        P1, P2 = self._propagators(n)
        h = self.T / n
        w = np.full(n + 1, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        w *= h / 3
        X = X0
        acc = {s: w[0] * self._source(X, s) for s in (1, -1)}
        for k in range(1, n + 1):
            X = P1 @ X @ P2.T
            for s in (1, -1):
                acc[s] = P1 @ acc[s] @ P2.T + w[k] * self._source(X, s)
        return X, acc[1], acc[-1]

    def __call__(self, X0):
        """Return ``{0: no click, '+': one click left, '-': one click right}``."""
        if self.T == 0:
            Z = np.zeros_like(X0)
            return {0: X0, "+": Z, "-": Z}
        X, plus, minus = self._run(X0, self.n)
        _, plus2, minus2 = self._run(X0, 2 * self.n)
        err = max(abs(np.trace(_from_pair(plus2 - plus, self.d))),
                  abs(np.trace(_from_pair(minus2 - minus, self.d))))
        if err > 1e-6:
            raise QuadratureError(
                f"one-click weight changed by {err:.2e} on halving the step")
        return {0: X, "+": plus2, "-": minus2}


# --- results -------------------------------------------------------------------

def bell_state(sign: int) -> np.ndarray:
    """``(|D0> + sign |0D>)/sqrt(2)`` on the two-qubit ``{0, D}`` space."""
    psi = np.zeros(4, dtype=complex)
    psi[1 * 2 + 0] = 1 / math.sqrt(2)   # |D 0>
    psi[0 * 2 + 1] = sign / math.sqrt(2)
    return psi


def record_sign(record) -> int:
    return 1 if record[0] == record[1] else -1


@dataclass
class HeraldResult:
    record: tuple
    conditional_state: np.ndarray  # unnormalized, two-qubit {0, D} subspace
    weight: float

    @property
    def fidelity(self) -> float:
        if self.weight <= 0:
            return 0.25
        psi = bell_state(record_sign(self.record))
        return float(np.real(psi.conj() @ self.conditional_state @ psi)) / self.weight


def spin_subspace(rho: np.ndarray) -> np.ndarray:
    """Trace out both cavities and keep the ``{0, D}`` block of each spin."""
    spins = qops.ptrace(rho, NODE_DIMS + NODE_DIMS, keep=(0, 2))
    keep = [a * 3 + b for a in (SPIN_0, SPIN_D) for b in (SPIN_0, SPIN_D)]
    return spins[np.ix_(keep, keep)]


@dataclass
class HeraldBranches:
    """All photon-count branches ``(early, late)`` with counts in ``{0,'+','-'}``.

    ``states[(e, l)]`` is the unnormalized two-node density matrix.
    """

    states: dict
    link: LinkParams
    D_th: float = 0.0
    results: list = field(init=False)

    def __post_init__(self):
        self.results = [self._result(rec, self.states[rec]) for rec in RECORDS]

    @staticmethod
    def _result(record, rho):
        return HeraldResult(record=record, conditional_state=spin_subspace(rho),
                            weight=float(np.real(np.trace(rho))))

    @property
    def eta_gen(self) -> float:
        return sum(r.weight for r in self.results)

    @property
    def F_gen(self) -> float:
        return fidelity_average(self.results)


def fidelity_average(results) -> float:
    return float(np.mean([r.fidelity for r in results]))


def conditional_evolve(node1: EffectiveRates, node2: EffectiveRates | None,
                       link: LinkParams) -> HeraldBranches:
    """Two-round click-resolved evolution of a node pair.

    Thermal cavity occupation is removed from the quantum dynamics
    (``kappa2 = 0``); its photons enter later as dark counts.
    """
    node2 = node1 if node2 is None else node2
    s1 = _node_super(node1, link.eta)
    s2 = s1 if node2 is node1 else _node_super(node2, link.eta)
    kmax = max(node1.kappa1, node2.kappa1)
    h_max = min(link.T_d / 200, 1 / (20 * kmax)) if link.T_d > 0 else 1.0
    window = _Window(s1, s2, link.T_d, h_max)

    early = window(initial_pair_state())
    states = {}
    for e, Xe in early.items():
        flipped = s1.flip @ Xe @ s2.flip.T
        for l, X in window(flipped).items():
            states[(e, l)] = _from_pair(X)
    return HeraldBranches(states=states, link=link,
                          D_th=0.5 * (node1.D_th + node2.D_th))


def apply_dark_counts(branches: HeraldBranches, link: LinkParams | None = None,
                      D_th: float | None = None):
    """Fold detector and thermal dark counts into the four valid records.

    A window reads as a single click on one detector when that detector saw
    a true photon or fired spuriously, and the other detector stayed dark.
    Returns ``(eta_gen, F_gen, results)``.
    """
    link = branches.link if link is None else link
    D_th = branches.D_th if D_th is None else D_th
    p = link.dark_click_probability(D_th)
    if p >= 0.1:
        warnings.warn(f"dark click probability {p:.3f} per window; "
                      "single-dark-count model is inaccurate", DarkCountWarning,
                      stacklevel=2)
    keep = 1 - p                       # the other detector stays dark
    coef = {True: keep, False: p * keep}  # true click / substituted by a dark count
    results = []
    for rec in RECORDS:
        rho = 0
        for e in (rec[0], 0):
            for l in (rec[1], 0):
                rho = rho + coef[e != 0] * coef[l != 0] * branches.states[(e, l)]
        results.append(HeraldBranches._result(rec, rho))
    eta_gen = sum(r.weight for r in results)
    return eta_gen, fidelity_average(results), results


def simulate_link(node: EffectiveRates, link: LinkParams, dark_counts: bool = True):
    """``(eta_gen, F_gen)`` for identical nodes."""
    branches = conditional_evolve(node, None, link)
    if not dark_counts:
        return branches.eta_gen, branches.F_gen
    eta, F, _ = apply_dark_counts(branches)
    return eta, F


# --- incoherent-regime closed forms ---------------------------------------------

def eta_bk(R: float, eta_t: float, t_f: float) -> float:
    if R <= 0:
        raise ValueError("emission rate must be positive")
    return 0.5 * eta_t**2 * (-math.expm1(-0.5 * t_f * R)) ** 2


def f_bk(R: float, gamma_s_star: float, eta_t: float, t_f: float) -> float:
    eta = eta_bk(R, eta_t, t_f)
    if eta == 0:
        raise ZeroDivisionError("F_BK undefined when eta_BK = 0")
    R_tot = R + 2 * gamma_s_star
    C = eta_t * R / R_tot * (-math.expm1(-0.5 * t_f * R_tot))
    return 0.5 * (1 + abs(C) ** 2 / (2 * eta))

"""Invariant checks shared by the ``validate`` command and the test suite.

Each check returns ``(ok, detail)``. ``run_all`` evaluates them in a fixed
order and never raises; an exception inside a check counts as a failure.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import replace

import numpy as np

from . import entgen, qops, readout, repeater, spinmech


def _random_state(rng, d, rank=None):
    rank = d if rank is None else rank
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho)


def _node_generator():
    return spinmech.build_effective_model(spinmech.fig4_rates(), n_cav=2).liouvillian()


def check_trace(rng):
    L = _node_generator()
    k1 = spinmech.fig4_rates().kappa1
    rho = _random_state(rng, 9)
    worst = max(abs(np.trace(qops.propagate(L, rho, kt / k1)) - 1) for kt in (0.5, 5, 50))
    return worst < 1e-9, f"max trace drift {worst:.2e}"


def check_positivity(rng):
    L = _node_generator()
    k1 = spinmech.fig4_rates().kappa1
    worst = min(np.linalg.eigvalsh(qops.propagate(L, _random_state(rng, 9, 1), kt / k1))[0]
                for kt in (0.1, 1, 10, 50))
    return worst >= qops.POSITIVITY_TOL, f"min eigenvalue {worst:.2e}"


def check_hermiticity(rng):
    L = _node_generator()
    k1 = spinmech.fig4_rates().kappa1
    rho = qops.propagate(L, _random_state(rng, 9), 3 / k1)
    dev = np.linalg.norm(rho - rho.conj().T)
    return dev < 1e-10, f"anti-Hermitian part {dev:.2e}"


def check_linearity(rng):
    L = _node_generator()
    t = 2 / spinmech.fig4_rates().kappa1
    r1, r2 = _random_state(rng, 9), _random_state(rng, 9)
    a, b = rng.uniform(0, 1, 2)
    dev = np.abs(qops.propagate(L, a * r1 + b * r2, t)
                 - a * qops.propagate(L, r1, t) - b * qops.propagate(L, r2, t)).max()
    return dev < 1e-10, f"superposition error {dev:.2e}"


def check_threshold_optimal(rng):
    bad = []
    for _ in range(20):
        if rng.uniform() < 0.5:
            N = int(rng.integers(5, 120))
            p0, pD = sorted(rng.uniform(0.001, 0.6, 2))
            m = readout.CountingModel.binomial(N, pD, p0)
            cands = range(1, N + 1)
        else:
            l0, lD = sorted(rng.uniform(0.01, 30, 2))
            m = readout.CountingModel.poisson(lD, l0)
            cands = range(1, int(lD + 10 * math.sqrt(lD) + 20))
        t = readout.threshold_select(m)
        best = readout.readout_fidelity(m.with_threshold(t))
        top = max(readout.readout_fidelity(m.with_threshold(c)) for c in cands)
        if top > best + 1e-12:
            bad.append((m.params, t))
    return not bad, f"{len(bad)} non-optimal thresholds"


def check_mux_identity(rng):
    worst = 0.0
    for _ in range(30):
        cfg = repeater.RepeaterConfig(m=int(rng.choice([2, 4, 6, 8, 10, 12, 14, 16])),
                                      L=float(rng.uniform(50, 1000)), N=1, F_gen=0.9,
                                      T_mp=float(rng.uniform(0, 1e-3)))
        a = repeater.distribution_time(cfg)
        b = repeater.distribution_time_multiplexed(cfg)
        worst = max(worst, abs(a - b) / a)
    return worst < 1e-12, f"max relative gap {worst:.2e}"


def check_noise_floor(rng):
    rates = spinmech.fig4_rates()
    link = entgen.LinkParams(L0=0.0, T_d=20 / rates.kappa1, eta_d=1e-9,
                             dark_rate=2e3, thermal_loss=False)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", entgen.DarkCountWarning)
        _, F, _ = entgen.apply_dark_counts(entgen.conditional_evolve(rates, None, link))
    return abs(F - 0.25) < 1e-3, f"F_gen = {F:.6f}"


def check_f_monotone(rng):
    f = [repeater.f_exact(x) for x in range(1, 65)]
    inc = all(b > a for a, b in zip(f, f[1:]))
    steps = [repeater.f_exact(2 * x) - repeater.f_exact(x) for x in (2, 4, 8, 16)]
    ok = inc and all(0.55 <= s <= 0.75 for s in steps)
    return ok, "doubling steps " + " ".join(f"{s:.3f}" for s in steps)


def check_monte_carlo(rng, trials):
    worst = 0.0
    for x in (2, 4, 8):
        for p0 in (0.01, 0.1):
            mean, se = repeater.monte_carlo_f(x, p0, trials, seed=int(rng.integers(2**32)))
            z = abs(mean - repeater.f_exact(x, p0) / p0) / se
            worst = max(worst, z)
    return worst < 3, f"max |z| {worst:.2f}"


def check_time_monotone(rng):
    base = repeater.RepeaterConfig(m=8, L=400.0, F_gen=0.9)
    tN = [repeater.distribution_time(replace(base, N=N)) for N in (1, 2, 5, 10, 100, 1000)]
    tL = [repeater.distribution_time(replace(base, L=L, N=10)) for L in (100, 200, 400, 800)]
    ok = all(b <= a for a, b in zip(tN, tN[1:])) and all(b >= a for a, b in zip(tL, tL[1:]))
    return ok, "non-increasing in N and non-decreasing in L" if ok else "monotonicity violated"


def check_fidelity_monotone_m(rng):
    F = [repeater.overall_fidelity(repeater.RepeaterConfig(m=m, L=400.0, F_gen=0.95), t=0.1)
         for m in (2, 4, 6, 8, 10, 12)]
    ok = all(b < a for a, b in zip(F, F[1:]))
    return ok, "decreasing in m" if ok else f"values {F}"


def check_permutation(rng):
    r1 = spinmech.fig4_rates()
    r2 = r1.scaled(gamma_s_star=2.0)
    link = entgen.LinkParams(L0=50.0, T_d=5 / r1.kappa1)
    a = entgen.apply_dark_counts(entgen.conditional_evolve(r1, r2, link))
    b = entgen.apply_dark_counts(entgen.conditional_evolve(r2, r1, link))
    dev = max(abs(a[0] - b[0]), abs(a[1] - b[1]))
    return dev < 1e-10, f"swap difference {dev:.2e}"


def check_rate_identities(rng):
    p = spinmech.fig4_params(n_th=float(rng.uniform(0.1, 10)))
    r = spinmech.derive_rates(p)
    d1 = abs(r.gamma1 / r.gamma2 - (p.n_th + 1) / p.n_th)
    d2 = abs(r.kappa2 - r.gamma2) / r.gamma2
    return d1 < 1e-12 and d2 < 1e-12, f"ratio error {d1:.1e}; kappa2-gamma2 {d2:.1e}"


CHECKS = [
    ("trace_preservation", check_trace),
    ("positivity", check_positivity),
    ("hermiticity", check_hermiticity),
    ("linearity", check_linearity),
    ("bayes_optimal_threshold", check_threshold_optimal),
    ("multiplexed_reduces_to_single_channel", check_mux_identity),
    ("noise_floor_quarter", check_noise_floor),
    ("f_exact_monotone", check_f_monotone),
    ("monte_carlo_f", check_monte_carlo),
    ("distribution_time_monotone", check_time_monotone),
    ("fidelity_decreases_with_links", check_fidelity_monotone_m),
    ("node_permutation_symmetry", check_permutation),
    ("rate_identities", check_rate_identities),
]


def run_all(seed: int = 0, mc_trials: int = 200_000):
    rng = np.random.default_rng(seed)
    out = []
    for name, fn in CHECKS:
        try:
            if fn is check_monte_carlo:
                ok, detail = fn(rng, mc_trials)
            else:
                ok, detail = fn(rng)
        except Exception as exc:  # a crash is a failed property
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out

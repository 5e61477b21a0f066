"""End-to-end acceptance checks; each prints one PASS/FAIL line."""
import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq

from nvrepeater import cli, entgen, readout, repeater, spinmech
from nvrepeater.entgen import LinkParams
from nvrepeater.readout import CountingModel, DriveScheme
from nvrepeater.repeater import RepeaterConfig


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n:2d} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def test_01_f_table(report):
    table = {2: 1.5, 4: 2.08, 8: 2.72, 16: 3.38, 32: 4.05}
    t0 = time.perf_counter()
    got = {x: repeater.f_exact(x) for x in table}
    dt = time.perf_counter() - t0
    worst = max(abs(got[x] - v) for x, v in table.items())
    report(1, worst <= 0.02 and dt < 1.0, f"max |f - table| = {worst:.4f}, {dt * 1e3:.1f} ms")


def test_02_regression_refit(report):
    slope, intercept = repeater.refit_regression((1, 2, 3, 4, 5))
    ok = abs(slope - 0.64) <= 0.05 and abs(intercept - 0.83) <= 0.05
    report(2, ok, f"slope {slope:.4f}, intercept {intercept:.4f}")


def test_03_monte_carlo(report):
    details, ok = [], True
    for x in (2, 4, 8):
        for p0 in (0.01, 0.1):
            mean, se = repeater.monte_carlo_f(x, p0, trials=10**6, seed=2024)
            z = (mean - repeater.f_exact(x, p0) / p0) / se
            ok &= abs(z) < 3
            details.append(f"x={x} p0={p0}: z={z:+.2f}")
    report(3, ok, "; ".join(details))


def test_04_fig4_peak(report):
    rates = spinmech.fig4_rates()
    t0 = time.perf_counter()
    best = (0.0, None)
    for kt in np.arange(1.0, 30.5, 1.0):
        link = LinkParams(L0=100.0, T_d=0.5 * kt / rates.kappa1, eta_d=0.45, dark_rate=10.0)
        F = entgen.apply_dark_counts(entgen.conditional_evolve(rates, None, link))[1]
        best = max(best, (F, kt))
    dt = time.perf_counter() - t0
    F, kt = best
    ok = abs(F - 0.97) <= 0.02 and abs(kt - 10) <= 3 and dt < 300
    report(4, ok, f"peak F_gen {F:.4f} at kappa1 t_f = {kt:g} (target 0.97 at 10), {dt:.0f} s")


def test_05_bk_agreement(report):
    base = spinmech.fig4_rates()
    rates = spinmech.EffectiveRates.from_rates(base.Omega, base.kappa1)
    worst, worst_kt = 0.0, None
    for kt in np.arange(1.0, 20.5, 1.0):
        link = LinkParams(L0=100.0, T_d=0.5 * kt / rates.kappa1, eta_d=1.0, dark_rate=0.0)
        sim = entgen.conditional_evolve(rates, None, link).eta_gen
        ref = entgen.eta_bk(rates.R, link.eta, link.t_f)
        rel = abs(sim - ref) / ref
        if rel > worst:
            worst, worst_kt = rel, kt
    link = LinkParams(L0=100.0, T_d=20 / rates.kappa1, eta_d=1.0, dark_rate=0.0)
    F = entgen.conditional_evolve(rates, None, link).F_gen
    ok = worst <= 0.03 and abs(1 - F) <= 1e-3
    report(5, ok, f"max rel |eta_gen - eta_BK| = {worst:.3f} at kappa1 t_f = {worst_kt:g}; "
                  f"F_gen(kappa1 t_f = 40) = {F:.6f}")


def test_06_elimination(report):
    p = spinmech.fig4_params()
    gaps = [spinmech.elimination_discrepancy(spinmech.with_detuning_ratio(p, k))
            for k in (5, 10, 20)]
    ok = gaps[1] < 0.05 and gaps[0] > gaps[1] > gaps[2]
    report(6, ok, "discrepancy at delta/lambda 5, 10, 20: "
                  + ", ".join(f"{g:.2%}" for g in gaps))


def test_07_readout_brightness(report):
    rates = spinmech.fig4_rates()
    per = DriveScheme("periodic", T0=1e-3, eta=1.0, T_p=2e-5)
    cont = DriveScheme("continuous", T0=1e-3, eta=1.0)
    bD, b0 = readout.brightness(rates, per, "D"), readout.brightness(rates, per, "0")
    oD, o0 = readout.brightness(rates, cont, "D"), readout.brightness(rates, cont, "0")
    ok = (abs(bD - 0.929) <= 0.01 and abs(b0 - 0.034) <= 0.005
          and abs(oD - 0.202) <= 0.005 and abs(o0 - 0.014) <= 0.003)
    report(7, ok, f"beta_D {bD:.4f} (0.929), beta_0 {b0:.4f} (0.034), "
                  f"occ_D {oD:.4f} (0.202), occ_0 {o0:.4f} (0.014)")


def test_08_readout_statistics(report):
    bD, b0 = 0.929, 0.034

    def llr9(eta):
        m = CountingModel.binomial(100, eta * bD, eta * b0)
        return m.logpmf(9, "D") - m.logpmf(9, "0")

    eta = brentq(llr9, 0.01, 0.99)
    mb = CountingModel.binomial(100, eta * bD, eta * b0)
    tb = readout.threshold_select(mb)
    Fb = readout.readout_fidelity(mb)
    l0 = 4 * math.log(14.43) / 13.43  # pmfs cross at n = 4
    mp = CountingModel.poisson(14.43 * l0, l0)
    tp = readout.threshold_select(mp)
    Fp = readout.readout_fidelity(mp)
    ok = tb == 9 and abs(Fb - 0.99999) <= 1e-4 and tp == 4 and abs(Fp - 0.997) <= 0.004
    report(8, ok, f"binomial eta {eta:.4f} t={tb} F={Fb:.7f}; Poisson lam_0 {l0:.4f} "
                  f"t={tp} F={Fp:.5f}")


def test_09_repeater_curves(report):
    chains = {"A": (8, 10), "B": (10, 10), "C": (6, 100), "D": (8, 100)}
    rates = {k: repeater.rate(RepeaterConfig(m=m, L=800.0, N=N)) for k, (m, N) in chains.items()}
    FB = repeater.overall_fidelity(RepeaterConfig(m=10, L=800.0, N=10))
    FD = repeater.overall_fidelity(RepeaterConfig(m=8, L=800.0, N=100))
    xA = repeater.crossover_distance(RepeaterConfig(m=8, L=100.0, N=10))
    xC = repeater.crossover_distance(RepeaterConfig(m=6, L=100.0, N=100))
    ok = (all(r > 1 for r in rates.values()) and abs(FB - 0.53) <= 0.03
          and abs(FD - 0.61) <= 0.03 and xA is not None and abs(xA - 440) <= 40
          and xC is not None and abs(xC - 420) <= 40)
    report(9, ok, "rates " + " ".join(f"{k}={v:.2f}Hz" for k, v in rates.items())
           + f"; F_B {FB:.3f} (0.53), F_D {FD:.3f} (0.61); crossover A {xA:.0f} km (440), "
             f"C {xC:.0f} km (420)")


def test_10_invariants(report, tmp_path, capsys):
    t0 = time.perf_counter()
    code = cli.main(["validate", "--out", str(tmp_path / "v.csv")])
    dt = time.perf_counter() - t0
    lines = capsys.readouterr().err.splitlines()
    failed = [line for line in lines if not line.startswith("PASS")]
    ok = code == 0 and not failed and len(lines) == 13 and dt < 120
    report(10, ok, f"{len(lines) - len(failed)}/{len(lines)} properties pass in {dt:.1f} s"
           + (f"; failing: {failed}" if failed else ""))

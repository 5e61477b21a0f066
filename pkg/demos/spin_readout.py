"""How fast can the dark spin state be told apart from |0>?

Compares periodic pi-pulse readout (binomial counts) with a continuous
drive (Poisson counts) at a few detection efficiencies.
"""
import numpy as np

from nvrepeater import readout, spinmech
from nvrepeater.readout import DriveScheme

rates = spinmech.fig4_rates()
per = DriveScheme("periodic", T0=1e-4, eta=1.0, T_p=2e-5)
cont = DriveScheme("continuous", T0=1e-4, eta=1.0)
for s in (per, cont):
    bD, b0 = readout.brightness(rates, s, "D"), readout.brightness(rates, s, "0")
    print(f"{s.kind:>10}: bright {bD:.4f}, dark {b0:.5f}")

times = np.array([0.2, 0.5, 1.0, 2.0, 3.0]) * 1e-3
for s in (per, cont):
    print(f"\n{s.kind} readout, infidelity")
    print("  eta  " + " ".join(f"{t * 1e3:>8.1f}ms" for t in times))
    for eta in (0.05, 0.1, 0.5):
        rows = readout.infidelity_curve(rates, s, [eta], times)
        print(f"  {eta:<4} " + " ".join(f"{r[3]:10.2e}" for r in rows))

m = readout.counting_model(rates, DriveScheme("periodic", T0=2e-3, eta=0.1, T_p=2e-5))
t = readout.threshold_select(m)
print(f"\n2 ms at eta = 0.1: threshold {t} photons, fidelity {readout.readout_fidelity(m):.5f}")

"""Heralded entanglement between two nodes 100 km apart.

Scans the detection window and prints the herald probability and the
fidelity of the heralded Bell pair. Short windows catch few photons; long
windows give dephasing and dark counts more time, so the fidelity peaks
in between.
"""
import numpy as np

from nvrepeater import entgen, spinmech
from nvrepeater.entgen import LinkParams

rates = spinmech.fig4_rates()
k1 = rates.kappa1
print(f"emission rate R = {rates.R / k1:.3f} kappa1, thermal rate D_th = {rates.D_th / k1:.2e} kappa1")
print(f"{'k1 t_f':>7} {'eta_gen':>10} {'F_gen':>7} {'F_BK':>7}")
for kt in np.arange(2, 31, 2):
    link = LinkParams(L0=100.0, T_d=0.5 * kt / k1, eta_d=0.45)
    eta, F, _ = entgen.apply_dark_counts(entgen.conditional_evolve(rates, None, link))
    F_bk = entgen.f_bk(rates.R, rates.gamma_s_star, link.eta, link.t_f)
    print(f"{kt:7.0f} {eta:10.3e} {F:7.4f} {F_bk:7.4f}")

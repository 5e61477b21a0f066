"""Rate and fidelity of four repeater chains out to 800 km.

Link fidelities come from the two-node simulation at each link length,
interpolated on a small grid. The first run takes about half a minute.
"""
import numpy as np

from nvrepeater import repeater
from nvrepeater.repeater import RepeaterConfig

chains = {"A": (8, 10), "B": (10, 10), "C": (6, 100), "D": (8, 100)}
table = repeater.LinkFidelityTable(np.geomspace(100 / 10, 800 / 6, 6))

print(f"{'L km':>5} " + " ".join(f"{k + ' rate':>10} {k + ' F':>6}" for k in chains)
      + f" {'direct':>10}")
for L in range(100, 801, 100):
    cells = []
    for m, N in chains.values():
        cfg = RepeaterConfig(m=m, L=float(L), N=N)
        t = repeater.distribution_time(cfg)
        cells.append(f"{1 / t:10.3g} {repeater.overall_fidelity(cfg, t, table(cfg.L0)):6.3f}")
    print(f"{L:5d} " + " ".join(cells) + f" {repeater.direct_rate(L):10.3g}")

for k, (m, N) in chains.items():
    x = repeater.crossover_distance(RepeaterConfig(m=m, L=100.0, N=N))
    print(f"{k}: beats direct transmission beyond {x:.0f} km")

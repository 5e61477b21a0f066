"""Waiting for several links at once.

Every link succeeds with probability p0 per attempt. The mean number of
attempts until x links have all succeeded grows like log2(x), which is what
makes long chains affordable.
"""
from nvrepeater import repeater

print(f"{'x':>3} {'f exact':>8} {'log fit':>8} {'MC, p0=0.05':>12}")
for x in (1, 2, 4, 8, 16, 32):
    mean, se = repeater.monte_carlo_f(x, 0.05, trials=200_000, seed=x)
    print(f"{x:3d} {repeater.f_exact(x):8.4f} {repeater.f_regression(x):8.4f} "
          f"{mean * 0.05:8.4f} +- {se * 0.05:.4f}")
slope, intercept = repeater.refit_regression()
print(f"\nleast-squares fit f = {slope:.3f} log2 x + {intercept:.3f}")

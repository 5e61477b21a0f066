"""Slow, independent reference implementations used to freeze test values."""
import math
from fractions import Fraction

import numpy as np


def master_rhs(H, terms, rho):
    out = -1j * (H @ rho - rho @ H)
    for rate, A in terms:
        Ad = A.conj().T
        out = out + rate * (A @ rho @ Ad - 0.5 * (Ad @ A @ rho + rho @ Ad @ A))
    return out


def liouvillian_by_columns(H, terms):
    """Apply the master equation to every matrix unit ``E_ij``."""
    d = H.shape[0]
    L = np.zeros((d * d, d * d), dtype=complex)
    for j in range(d):
        for i in range(d):
            E = np.zeros((d, d), dtype=complex)
            E[i, j] = 1
            L[:, i + d * j] = master_rhs(H, terms, E).flatten(order="F")
    return L


def harmonic_fraction(x):
    return float(sum(Fraction(1, k) for k in range(1, x + 1)))


def max_geometric_mean(x, p0, n_max=200000):
    q = 1 - p0
    n = np.arange(n_max)
    return float(np.sum(1 - (1 - q**n) ** x))


def binomial_fidelity(N, pD, p0, t):
    pmf = lambda n, p: math.comb(N, n) * p**n * (1 - p) ** (N - n)
    return 0.5 * (sum(pmf(n, p0) for n in range(t)) + sum(pmf(n, pD) for n in range(t, N + 1)))


def poisson_fidelity(lD, l0, t):
    pmf = lambda n, lam: lam**n * math.exp(-lam) / math.factorial(n)
    return 0.5 * (sum(pmf(n, l0) for n in range(t)) + 1 - sum(pmf(n, lD) for n in range(t)))


def hyperfine(B, A, ms, mI):
    return 2.87e9 * ms * ms - 2.8e6 * B * ms + 1.07e3 * B * mI + A * ms * mI

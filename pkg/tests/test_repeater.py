import math
from dataclasses import replace

import numpy as np
import pytest

from nvrepeater import repeater
from nvrepeater.repeater import RepeaterConfig

import oracles

TABLE = {2: 1.5, 4: 2.08, 8: 2.72, 16: 3.38, 32: 4.05}


def test_f_exact_table():
    assert repeater.f_exact(1) == 1.0
    for x, v in TABLE.items():
        assert abs(repeater.f_exact(x) - v) <= 0.02
        assert math.isclose(repeater.f_exact(x), oracles.harmonic_fraction(x), rel_tol=1e-12)


def test_f_exact_finite_p0_matches_series():
    for x, p0 in ((2, 0.3), (4, 0.1), (8, 0.01)):
        assert math.isclose(repeater.f_exact(x, p0), oracles.max_geometric_mean(x, p0) * p0,
                            rel_tol=1e-7)
    assert abs(repeater.f_exact(8, 1e-4) - repeater.f_exact(8)) < 1e-3


def test_attempt_distribution_truncation():
    d = repeater.attempt_distribution(4, 0.05, n_max=4)
    assert d.tail <= 1e-9 and len(d.pmf) > 4
    with pytest.raises(ValueError):
        repeater.attempt_distribution(0, 0.1)
    with pytest.raises(ValueError):
        repeater.f_exact(2, 1.0)


def test_f_regression():
    assert math.isclose(repeater.f_regression(2), 1.47)
    assert abs(repeater.f_regression(32) - TABLE[32]) <= 0.02 + 1e-12
    slope, intercept = repeater.refit_regression()
    assert abs(slope - 0.64) <= 0.05 and abs(intercept - 0.83) <= 0.05


def test_f_monotone_and_doubling():
    f = [repeater.f_exact(x) for x in range(1, 40)]
    assert all(b > a for a, b in zip(f, f[1:]))
    for x in (2, 4, 8, 16):
        assert 0.55 <= repeater.f_exact(2 * x) - repeater.f_exact(x) <= 0.75


def test_monte_carlo_small():
    mean, se = repeater.monte_carlo_f(4, 0.1, trials=100_000, seed=3)
    assert abs(mean - repeater.f_exact(4, 0.1) / 0.1) < 3 * se


def test_config_validation():
    with pytest.raises(ValueError):
        RepeaterConfig(m=3, L=100.0)
    with pytest.raises(ValueError):
        RepeaterConfig(m=4, L=100.0, N=0)


def test_p0_formula():
    cfg = RepeaterConfig(m=8, L=800.0)
    assert math.isclose(cfg.p0, 0.5 * 0.81 * 0.45**2 * math.exp(-100 / 22))


def test_single_channel_identity():
    for m in (2, 4, 8, 16):
        cfg = RepeaterConfig(m=m, L=500.0, T_mp=1e-3, T_sw=2e-3)
        assert math.isclose(repeater.distribution_time(cfg),
                            repeater.distribution_time_multiplexed(cfg), rel_tol=1e-12)


def test_infinite_multiplexing_floor():
    cfg = RepeaterConfig(m=8, L=600.0, N=10**7, T_mp=1e-3)
    assert math.isclose(repeater.distribution_time(cfg), 600e3 / 2e8 + 1e-3, rel_tol=1e-9)


def test_clamp_warning():
    cfg = RepeaterConfig(m=16, L=10.0, N=2, p=1.0, eta_d=1.0)
    object.__setattr__(cfg, "m", 400)
    with pytest.warns(RuntimeWarning):
        t = repeater.distribution_time(cfg)
    assert math.isclose(t, 10e3 / 2e8)


@pytest.mark.parametrize("m", [6, 8, 10])
@pytest.mark.parametrize("N", [10, 100])
def test_rates_at_800km(m, N):
    assert repeater.rate(RepeaterConfig(m=m, L=800.0, N=N)) > 1.0


def test_rate_figures():
    # N = 1, m = 16 at 800 km sits near 10 Hz
    r = repeater.rate(RepeaterConfig(m=16, L=800.0))
    assert 3 < r < 10


def test_overall_fidelity():
    cfg = RepeaterConfig(m=6, L=300.0, F_gen=1.0, F_mp=1.0, F_nro=1.0, gamma_n=0.0)
    assert repeater.overall_fidelity(cfg) == 1.0
    cfg = RepeaterConfig(m=4, L=300.0, F_gen=0.9, F_mp=0.99, F_nro=0.98, gamma_n=2.0)
    assert math.isclose(repeater.overall_fidelity(cfg, t=0.1),
                        0.9**4 * 0.99**4 * 0.98**3 * math.exp(-0.2))


def test_multiplexing_raises_fidelity():
    for m in (4, 8, 12):
        a = RepeaterConfig(m=m, L=500.0, N=1, F_gen=0.95)
        b = replace(a, N=10)
        assert repeater.overall_fidelity(b) > repeater.overall_fidelity(a)


def test_direct_rate_and_crossover():
    assert math.isclose(repeater.direct_rate(22.0), 1e10 / math.e)
    cfg = RepeaterConfig(m=8, L=100.0, N=10, F_gen=0.97)
    L = repeater.crossover_distance(cfg)
    assert L is not None
    assert repeater.rate(replace(cfg, L=L + 2)) > repeater.direct_rate(L + 2)
    assert repeater.rate(replace(cfg, L=L - 2)) < repeater.direct_rate(L - 2)


def test_sweep_and_bands():
    rows = repeater.sweep([100, 300, 500, 700], (4, 8), (1, 10), F_gen=0.97)
    assert len(rows) == 16
    assert {r.N for r in rows} == {1, 10}
    bands = repeater.optimal_bands(rows, 10)
    assert bands[0]["L_min_km"] == 100 and bands[-1]["L_max_km"] == 700
    assert repeater.threshold_distance(rows, 8, 1) is not None


def test_nonmultiplexed_fidelity_drops_below_half():
    rows = repeater.sweep(np.arange(500, 801, 50), N_values=(1,), F_gen=0.96)
    below = [r for r in rows if r.fidelity < 0.5]
    assert len(below) >= 0.9 * len(rows)


def test_link_fidelity_table_interpolates():
    table = repeater.LinkFidelityTable([60.0, 100.0])
    assert min(table.F) <= table(80.0) <= max(table.F)
    with pytest.raises(ValueError):
        table(200.0)

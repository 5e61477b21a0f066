"""Command-line front end.

    nvrepeater SCENARIO [--config PATH] [--set KEY=VALUE ...] [--out PATH]
               [--format csv|json] [--seed N]

Scenarios: ``entgen``, ``readout``, ``rates``, ``sweep``, ``validate``.
Configuration files hold one ``key = value`` per line; ``#`` starts a
comment. Frequencies ending in ``_hz`` are ordinary frequencies and are
converted to angular rates internally.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
import warnings
from dataclasses import asdict

import numpy as np

from . import entgen, readout, repeater, spinmech
from .spinmech import TWO_PI, PhysicsValidityError

SCENARIOS = ("entgen", "readout", "rates", "sweep", "validate")

DEFAULTS = {
    # effective node rates, ordinary frequency
    "node.kappa1_hz": 20e3,
    "node.omega_hz": 10e3,
    "node.kappa2_hz": 20.0,
    "node.gamma1_hz": 20.0,
    "node.gamma2_hz": 20.0,
    "node.gamma_s_star_hz": 200.0,
    "node.gamma_th_hz": 20.0,
    "node.kappa_hz": 19980.0,
    # physical node parameters; used when node.model = physical
    "node.model": "effective",
    "node.lambda_hz": 100e3,
    "node.g_hz": 100e3,
    "node.delta_hz": 1e6,
    "node.gamma_m_hz": 0.0,
    "node.n_th": 0.0,
    # link
    "link.L0_km": 100.0,
    "link.L_att_km": 22.0,
    "link.eta_d": 0.45,
    "link.dark_rate_hz": 10.0,
    "link.thermal_loss": True,
    "entgen.kt_min": 2.0,
    "entgen.kt_max": 30.0,
    "entgen.kt_step": 1.0,
    # readout
    "readout.output": "curve",
    "readout.T_p_s": 2e-5,
    "readout.g_d_hz": 0.0,
    "readout.etas": "0.05,0.1,0.5",
    "readout.t_max_s": 3e-3,
    "readout.t_step_s": 1e-4,
    "readout.histogram_time_s": 2e-3,
    "readout.histogram_eta": 0.1,
    "readout.dark_rate_hz": 10.0,
    "readout.beta_D": 0.0,
    "readout.beta_0": 0.0,
    "readout.occ_D": 0.0,
    "readout.occ_0": 0.0,
    # repeater
    "repeater.p": 0.9,
    "repeater.eta_d": 0.45,
    "repeater.L_att_km": 22.0,
    "repeater.T_mp_s": 0.0,
    "repeater.T_sw_s": 0.0,
    "repeater.F_gen": 0.0,
    "repeater.F_mp": 0.992,
    "repeater.F_nro": 0.99999,
    "repeater.gamma_n_hz": 1.0,
    "repeater.c_m_per_s": 2e8,
    "repeater.regression": False,
    "repeater.dt_eta_d": 1.0,
    "repeater.dt_rep_rate_hz": 1e10,
    "repeater.L_min_km": 100.0,
    "repeater.L_max_km": 800.0,
    "repeater.L_step_km": 10.0,
    "repeater.configs": "8x10,10x10,6x100,8x100",
    "repeater.m_values": "4,6,8,10,12,14,16",
    "repeater.N_values": "1,10,100",
    "validate.mc_trials": 200000,
}


class ConfigError(ValueError):
    pass


# --- configuration --------------------------------------------------------------

def _coerce(key: str, text: str):
    default = DEFAULTS[key]
    text = text.strip()
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            v = float(text)
            if not math.isfinite(v):
                raise ValueError(text)
            return v
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None
    return text


def parse_config(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def resolve(pairs: dict) -> dict:
    cfg = dict(DEFAULTS)
    for key, value in pairs.items():
        if key not in DEFAULTS:
            raise ConfigError(f"unknown key {key!r}")
        cfg[key] = _coerce(key, value) if isinstance(value, str) else value
    return cfg


def _floats(text: str):
    return [float(s) for s in text.split(",") if s.strip()]


def _ints(text: str):
    return [int(s) for s in text.split(",") if s.strip()]


def node_rates(cfg: dict) -> spinmech.EffectiveRates:
    if cfg["node.model"] == "physical":
        p = spinmech.SystemParams(
            lam=TWO_PI * cfg["node.lambda_hz"], g=TWO_PI * cfg["node.g_hz"],
            delta=TWO_PI * cfg["node.delta_hz"], kappa=TWO_PI * cfg["node.kappa_hz"],
            gamma_m=TWO_PI * cfg["node.gamma_m_hz"], n_th=cfg["node.n_th"],
            gamma_s_star=TWO_PI * cfg["node.gamma_s_star_hz"])
        return spinmech.derive_rates(p)
    if cfg["node.model"] != "effective":
        raise ConfigError("node.model must be 'effective' or 'physical'")
    return spinmech.EffectiveRates(
        Omega=TWO_PI * cfg["node.omega_hz"], kappa1=TWO_PI * cfg["node.kappa1_hz"],
        kappa2=TWO_PI * cfg["node.kappa2_hz"], gamma1=TWO_PI * cfg["node.gamma1_hz"],
        gamma2=TWO_PI * cfg["node.gamma2_hz"],
        gamma_s_star=TWO_PI * cfg["node.gamma_s_star_hz"],
        Gamma_th=TWO_PI * cfg["node.gamma_th_hz"], kappa=TWO_PI * cfg["node.kappa_hz"])


def link_params(cfg: dict, T_d: float, L0: float | None = None) -> entgen.LinkParams:
    return entgen.LinkParams(
        L0=cfg["link.L0_km"] if L0 is None else L0, T_d=T_d,
        L_att=cfg["link.L_att_km"], eta_d=cfg["link.eta_d"],
        dark_rate=cfg["link.dark_rate_hz"], thermal_loss=cfg["link.thermal_loss"])


# --- output --------------------------------------------------------------------

def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(f"{float(v):.9g}")
    if isinstance(v, dict):
        return {k: _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


def render(columns, rows, fmt_name: str, summary: dict | None = None) -> str:
    if fmt_name == "json":
        doc = {"columns": list(columns),
               "rows": [[_json_value(v) for v in r] for r in rows]}
        if summary is not None:
            doc["summary"] = _json_value(summary)
        return json.dumps(doc, indent=1, sort_keys=False) + "\n"
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(fmt(v) for v in r) + "\n")
    return buf.getvalue()


# --- scenarios ----------------------------------------------------------------

def run_entgen(cfg, seed):
    rates = node_rates(cfg)
    k1 = rates.kappa1
    kts = np.arange(cfg["entgen.kt_min"], cfg["entgen.kt_max"] + 1e-9, cfg["entgen.kt_step"])
    rows = []
    for kt in kts:
        link = link_params(cfg, 0.5 * kt / k1)
        eta, F, _ = entgen.apply_dark_counts(entgen.conditional_evolve(rates, None, link))
        rows.append((float(kt), F, eta / link.eta_t**2))
    best = max(rows, key=lambda r: r[1])
    summary = {"peak_F_gen": best[1], "peak_kappa1_t_f": best[0]}
    return ("kappa1_t_f", "F_gen", "eta_gen_over_eta_t2"), rows, summary


def _readout_brightness(cfg, rates):
    per = readout.DriveScheme("periodic", T0=1.0, eta=1.0, T_p=cfg["readout.T_p_s"])
    cont = readout.DriveScheme("continuous", T0=1.0, eta=1.0,
                               g_d=TWO_PI * cfg["readout.g_d_hz"] or None)
    bD = cfg["readout.beta_D"] or readout.brightness(rates, per, "D")
    b0 = cfg["readout.beta_0"] or readout.brightness(rates, per, "0")
    oD = cfg["readout.occ_D"] or readout.brightness(rates, cont, "D")
    o0 = cfg["readout.occ_0"] or readout.brightness(rates, cont, "0")
    return per, cont, (bD, b0), (oD, o0)


def run_readout(cfg, seed):
    rates = node_rates(cfg)
    per, cont, beta, occ = _readout_brightness(cfg, rates)
    dark = cfg["readout.dark_rate_hz"]
    summary = {"beta_D": beta[0], "beta_0": beta[1], "occ_D": occ[0], "occ_0": occ[1]}
    if cfg["readout.output"] == "histogram":
        T0, eta = cfg["readout.histogram_time_s"], cfg["readout.histogram_eta"]
        rows = []
        for kind, (sD, s0) in (("periodic", beta), ("continuous", occ)):
            s = readout.DriveScheme(kind, T0=T0, eta=eta, T_p=cfg["readout.T_p_s"],
                                    g_d=cont.g_d, dark_rate=dark)
            m = readout.counting_model(rates, s, beta_D=sD, beta_0=s0)
            t = readout.threshold_select(m)
            summary[f"{kind}_threshold"] = t
            summary[f"{kind}_fidelity"] = readout.readout_fidelity(m.with_threshold(t))
            n, pD, p0 = m.pmf_table()
            hi = int(np.flatnonzero(np.maximum(pD, p0) > 1e-12)[-1]) + 1
            rows += [(kind, int(k), a, b) for k, a, b in zip(n[:hi], pD[:hi], p0[:hi])]
        return ("scheme", "n", "P_D", "P_0"), rows, summary
    if cfg["readout.output"] != "curve":
        raise ConfigError("readout.output must be 'curve' or 'histogram'")
    etas = _floats(cfg["readout.etas"])
    step = cfg["readout.t_step_s"]
    times = np.arange(1, int(round(cfg["readout.t_max_s"] / step)) + 1) * step
    rows = []
    for kind, (sD, s0) in (("periodic", beta), ("continuous", occ)):
        s = readout.DriveScheme(kind, T0=step, eta=1.0, T_p=cfg["readout.T_p_s"],
                                g_d=cont.g_d, dark_rate=dark)
        for eta, T0, t, inf in readout.infidelity_curve(rates, s, etas, times,
                                                         beta_D=sD, beta_0=s0):
            rows.append((kind, eta, T0, t, inf))
    return ("scheme", "eta", "time_s", "threshold", "infidelity"), rows, summary


def _base_config(cfg) -> repeater.RepeaterConfig:
    return repeater.RepeaterConfig(
        m=2, L=100.0, p=cfg["repeater.p"], eta_d=cfg["repeater.eta_d"],
        L_att=cfg["repeater.L_att_km"], T_mp=cfg["repeater.T_mp_s"],
        T_sw=cfg["repeater.T_sw_s"], F_gen=cfg["repeater.F_gen"] or None,
        F_mp=cfg["repeater.F_mp"], F_nro=cfg["repeater.F_nro"],
        gamma_n=cfg["repeater.gamma_n_hz"], c=cfg["repeater.c_m_per_s"],
        regression=cfg["repeater.regression"])


def _F_gen_source(cfg, L0_values):
    if cfg["repeater.F_gen"]:
        return cfg["repeater.F_gen"]
    lo, hi = min(L0_values), max(L0_values)
    grid = np.geomspace(lo, hi, 8) if hi > lo else [lo]
    if len(grid) == 1:
        return repeater.link_fidelity(lo, cfg["link.eta_d"], cfg["link.dark_rate_hz"])
    return repeater.LinkFidelityTable(grid, cfg["link.eta_d"], cfg["link.dark_rate_hz"])


def _L_grid(cfg):
    lo, hi, step = cfg["repeater.L_min_km"], cfg["repeater.L_max_km"], cfg["repeater.L_step_km"]
    return np.round(np.arange(lo, hi + 1e-9, step), 9)


def _sweep_rows(cfg, pairs):
    base = _base_config(cfg)
    L_grid = _L_grid(cfg)
    F_src = _F_gen_source(cfg, [L / m for m, _ in pairs for L in (L_grid[0], L_grid[-1])])
    rows = []
    for m, N in pairs:
        rows += repeater.sweep(L_grid, (m,), (N,), F_gen=F_src, base=base,
                               dt_eta_d=cfg["repeater.dt_eta_d"])
    return base, rows


def _crossovers(cfg, base, pairs):
    from dataclasses import replace
    out = {}
    for m, N in pairs:
        out[f"m{m}_N{N}"] = repeater.crossover_distance(
            replace(base, m=m, N=N), dt_eta_d=cfg["repeater.dt_eta_d"])
    return out


SWEEP_COLUMNS = ("L_km", "m", "N", "rate_hz", "fidelity", "p0", "crossover_flag")


def run_rates(cfg, seed):
    pairs = []
    for item in cfg["repeater.configs"].split(","):
        m, N = item.strip().split("x")
        pairs.append((int(m), int(N)))
    base, rows = _sweep_rows(cfg, pairs)
    table = [tuple(asdict(r).values()) for r in rows]
    table += [(L, 0, 0, repeater.direct_rate(L, base.L_att, cfg["repeater.dt_eta_d"],
                                             cfg["repeater.dt_rep_rate_hz"]),
               None, None, False) for L in _L_grid(cfg)]
    summary = {"crossover_km": _crossovers(cfg, base, pairs)}
    return SWEEP_COLUMNS, table, summary


def run_sweep(cfg, seed):
    pairs = [(m, N) for N in _ints(cfg["repeater.N_values"])
             for m in _ints(cfg["repeater.m_values"])]
    base, rows = _sweep_rows(cfg, pairs)
    Ns = sorted({N for _, N in pairs})
    summary = {
        "optimal_bands": [b for N in Ns for b in repeater.optimal_bands(rows, N)],
        "below_threshold_km": {f"m{m}_N{N}": repeater.threshold_distance(rows, m, N)
                               for m, N in pairs},
        "crossover_km": _crossovers(cfg, base, pairs),
    }
    return SWEEP_COLUMNS, [tuple(asdict(r).values()) for r in rows], summary


def run_validate(cfg, seed):
    from .invariants import run_all
    results = run_all(seed=seed, mc_trials=cfg["validate.mc_trials"])
    rows = [(name, "PASS" if ok else "FAIL", detail) for name, ok, detail in results]
    for name, status, detail in rows:
        print(f"{status} {name}: {detail}", file=sys.stderr)
    failed = [r[0] for r in rows if r[1] == "FAIL"]
    return ("property", "status", "detail"), rows, {"failed": failed}


RUNNERS = {"entgen": run_entgen, "readout": run_readout, "rates": run_rates,
           "sweep": run_sweep, "validate": run_validate}


def run(scenario: str, pairs: dict, fmt_name: str = "csv", seed: int = 0):
    """Execute a scenario and return the rendered output text."""
    cfg = resolve(pairs)
    columns, rows, summary = RUNNERS[scenario](cfg, seed)
    if fmt_name == "csv":
        return render(columns, rows, "csv"), summary
    return render(columns, rows, "json", summary), summary


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nvrepeater", description=__doc__.splitlines()[0])
    ap.add_argument("scenario", choices=SCENARIOS)
    ap.add_argument("--config", metavar="PATH")
    ap.add_argument("--set", metavar="KEY=VALUE", action="append", default=[])
    ap.add_argument("--out", metavar="PATH")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--seed", type=int, default=0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        pairs = {}
        if args.config:
            try:
                with open(args.config) as fh:
                    pairs.update(parse_config(fh.read()))
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc.strerror}") from None
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            pairs[k.strip()] = v.strip()
        if not 0 <= args.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", spinmech.CutoffWarning)
            text, summary = run(args.scenario, pairs, args.format, args.seed)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 1
    except (PhysicsValidityError, ValueError) as exc:
        print(f"error: physics: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return 3
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
        if args.format == "csv" and summary:
            with open(args.out + ".summary.json", "w", newline="\n") as fh:
                fh.write(json.dumps(_json_value(summary), indent=1) + "\n")
    else:
        sys.stdout.write(text)
    if args.scenario == "validate" and summary["failed"]:
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

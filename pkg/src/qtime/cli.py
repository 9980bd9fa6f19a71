"""Command-line front end: JSON config in, CSV out.

    qtime <command> [--config PATH] [--preset NAME] [--out PATH]
          [--precision-bits N] [--seed N] [--threads N] [--figures]

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import traceback
import warnings

import mpmath as mp
import numpy as np

from . import __version__
from . import arrival, bohmian, bounds, decay, jost, packets
from .numerics import LogMagnitude, NumericFailure, PrecisionPolicy

COMMANDS = ("resonances", "smatrix-bounds", "dispersive", "decay-audit", "arrival", "bohmian",
            "sweep", "experiments")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- schema

def _num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _pos(x):
    return _num(x) and x > 0


def _numlist(n=None):
    def check(x):
        return isinstance(x, list) and all(_num(v) for v in x) and (n is None or len(x) == n)
    return check


def _oneof(*names):
    return lambda x: x in names


def _bool(x):
    return isinstance(x, bool)


def _potential(x):
    if not isinstance(x, dict):
        return False
    if x.get("type") == "barrier":
        return set(x) == {"type", "r1", "r2", "v0"} and all(_num(x[k]) for k in ("r1", "r2", "v0"))
    return set(x) == {"edges", "values"} and _numlist()(x["edges"]) and _numlist()(x["values"])


def _packets(x):
    keys = {"x0", "v", "sigma", "mass", "coef"}
    return (isinstance(x, list) and len(x) > 0 and all(
        isinstance(p, dict) and set(p) <= keys and {"x0", "v", "sigma"} <= set(p)
        and all(_num(p[k]) for k in ("x0", "v", "sigma")) and _pos(p["sigma"])
        and ("mass" not in p or _pos(p["mass"]))
        and ("coef" not in p or _numlist(2)(p["coef"])) for p in x))


REGION = (_numlist(4), [0.0, 30.0, -4.0, 0.0])
SCHEMAS = {
    "resonances": {"potential": (_potential, None), "region": REGION},
    "smatrix-bounds": {"potential": (_potential, None), "region": REGION, "R": (_pos, None),
                       "K": (_pos, None), "bound_mode": (_bool, True), "certify": (_bool, True),
                       "grid_points": (lambda x: isinstance(x, int) and x > 1, 200),
                       "local": (_bool, True)},
    "dispersive": {"potential": (_potential, None), "region": REGION, "R": (_pos, None),
                   "K": (_pos, None), "bound_mode": (_bool, True), "certify": (_bool, True)},
    "decay-audit": {"potential": (_potential, None), "region": REGION, "R": (_pos, None),
                    "sigma": (_pos, None), "bound_mode": (_bool, True), "certify": (_bool, False),
                    "length_unit_fm": (_pos, 7.2), "particle_mass_MeV": (_pos, 3727.4)},
    "arrival": {"packets": (_packets, None), "detector": (_num, 0.0), "L": (_pos, None),
                "window": (_numlist(2), None), "n_times": (lambda x: isinstance(x, int) and x > 1, 1001)},
    "bohmian": {"packets": (_packets, None), "detector": (_num, 0.0), "window": (_numlist(2), None),
                "n_samples": (lambda x: isinstance(x, int) and x >= 1, 10000),
                "bins": (lambda x: isinstance(x, int) and x >= 1, 60),
                "convention": (_oneof("signed", "unsigned"), "signed"),
                "stratified": (_bool, False)},
    "sweep": {"r1": (_pos, 1.0), "r2": (_pos, 2.0), "v0": (_numlist(), None), "region": REGION,
              "certify": (_bool, False)},
    "experiments": {"experiment": (_oneof("backflow", "threshold", "interference"), None),
                    "t": (_pos, 5.2), "sigmas": (_numlist(), [0.5, 1.0, 2.0, 4.0]),
                    "k1": (_numlist(), [20.0, 40.0, 60.0]), "ratios": (_numlist(), None),
                    "closing": (_oneof("front", "tail"), "front"),
                    "convention": (_oneof("exclude_one_sided", "only_one_sided"), "exclude_one_sided")},
}
REQUIRED = {
    "resonances": ("potential",), "smatrix-bounds": ("potential",), "dispersive": ("potential",),
    "decay-audit": ("potential",), "arrival": ("packets", "window"),
    "bohmian": ("packets", "window"), "sweep": ("v0",), "experiments": ("experiment",),
}

URANIUM = {"potential": {"type": "barrier", "r1": 1.0, "r2": 3.0, "v0": 480.0},
           "region": [0.0, 30.0, -4.0, 0.0], "R": 1.4e14}
DOUBLE_GAUSSIAN = {
    "packets": [{"x0": -215.0, "v": 2.45, "sigma": 4.5, "coef": [math.sqrt(0.5), 0.0]},
                {"x0": -250.0, "v": 3.2, "sigma": 4.5, "coef": [math.sqrt(0.5), 0.0]}],
    "detector": 0.0, "L": 215.0, "window": [20.0, 200.0]}
BACKFLOW = {
    "packets": [{"x0": -10.0, "v": 2.0, "sigma": 3.0, "coef": [math.sqrt(0.5), 0.0]},
                {"x0": -34.0, "v": 6.0, "sigma": 3.0, "coef": [math.sqrt(0.5), 0.0]}],
    "detector": 0.0, "window": [0.0, 12.0], "experiment": "backflow"}
PRESETS = {"uranium": URANIUM, "double-gaussian": DOUBLE_GAUSSIAN, "backflow": BACKFLOW}


def validate(command, cfg):
    """Merge defaults into cfg; unknown keys, missing required keys and bad values are errors."""
    if not isinstance(cfg, dict) or not cfg:
        raise ConfigError("configuration must be a non-empty JSON object")
    schema = SCHEMAS[command]
    unknown = sorted(set(cfg) - set(schema))
    if unknown:
        raise ConfigError(f"unknown keys for {command}: {', '.join(unknown)}")
    missing = [k for k in REQUIRED[command] if k not in cfg]
    if missing:
        raise ConfigError(f"missing keys for {command}: {', '.join(missing)}")
    out = {}
    for key, (check, default) in schema.items():
        if key in cfg:
            if not check(cfg[key]):
                raise ConfigError(f"invalid value for {key!r}: {cfg[key]!r}")
            out[key] = cfg[key]
        else:
            out[key] = default
    return out


def _make_potential(p):
    if p.get("type") == "barrier":
        return jost.barrier(p["r1"], p["r2"], p["v0"])
    return jost.StepPotential(tuple(p["edges"]), tuple(p["values"]))


def _make_state(plist):
    terms = []
    for p in plist:
        c = complex(*p.get("coef", [1.0, 0.0]))
        terms.append((c, packets.FreeGaussian1D(p["x0"], p["v"], p["sigma"], p.get("mass", 1.0))))
    return packets.WavePacketSum(tuple(terms))


# ---------------------------------------------------------------- output

def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.15e}"
    if x is None:
        return ""
    return str(x)


def _split(x):
    """Value column plus (sign, log10) columns; huge or tiny numbers keep only the pair."""
    if isinstance(x, (mp.mpf, mp.mpc)):
        x = decay._out(mp.re(x))
    if isinstance(x, dict) and set(x) == {"sign", "log10"}:
        x = LogMagnitude(x["sign"], -math.inf if x["log10"] is None else x["log10"])
    if isinstance(x, LogMagnitude):
        return None, x.sign, x.log10_mag if x.sign else None
    if isinstance(x, (int, float, np.floating)) and not isinstance(x, bool):
        lm = LogMagnitude.from_value(float(x)) if math.isfinite(x) else None
        return float(x), (lm.sign if lm else None), (lm.log10_mag if lm and lm.sign else None)
    return x, None, None


class Table:
    def __init__(self, header):
        self.header = list(header)
        self.rows = []
        self.notes = []

    def add(self, *row):
        self.rows.append(list(row))

    def render(self, provenance):
        buf = io.StringIO()
        for k, v in provenance:
            buf.write(f"#{k} {v}\n")
        for n in self.notes:
            buf.write(f"#{n}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([_cell(c) for c in r])
        return buf.getvalue()


def _quantity_table(items):
    t = Table(["quantity", "value", "sign", "log10"])
    for name, val in items:
        v, s, l = _split(val)
        t.add(name, v, s, l)
    return t


def _flatten(prefix, obj):
    if isinstance(obj, dict) and set(obj) != {"sign", "log10"}:
        for k, v in obj.items():
            yield from _flatten(f"{prefix}.{k}" if prefix else str(k), v)
    elif isinstance(obj, (list, tuple)) and not (len(obj) == 2 and prefix.endswith("k0")):
        for i, v in enumerate(obj):
            yield from _flatten(f"{prefix}[{i}]", v)
    elif isinstance(obj, (list, tuple)):
        yield f"{prefix}.re", obj[0]
        yield f"{prefix}.im", obj[1]
    else:
        yield prefix, obj


# ---------------------------------------------------------------- commands

def _spectral(cfg, args):
    pot = _make_potential(cfg["potential"])
    sd = jost.find_spectral_data(pot, tuple(cfg["region"]), PrecisionPolicy(args.precision_bits),
                                 threads=args.threads)
    return pot, sd


def _bound_set(cfg, args):
    pot, sd = _spectral(cfg, args)
    if not sd.resonances:
        raise NumericFailure("no resonance in the search region")
    R = cfg["R"] if cfg["R"] is not None else pot.support_radius
    K = cfg["K"] if cfg["K"] is not None else sd.resonances[0][0] / 4
    return pot, sd, bounds.bound_set(pot, sd, R, K=K, bound_mode=cfg["bound_mode"],
                                     certify=cfg["certify"])


def cmd_resonances(cfg, args):
    pot, sd = _spectral(cfg, args)
    t = Table(["kind", "index", "re", "im", "lifetime", "re_precise", "im_precise"])
    for i, eta in enumerate(sd.bound):
        t.add("bound", i, 0.0, float(eta), None, None, None)
    for i, kap in enumerate(sd.virtual):
        t.add("virtual", i, 0.0, -float(kap), None, None, None)
    for i, (a, b) in enumerate(sd.resonances):
        re_p, im_p = sd.precise.get(i, (None, None))
        t.add("resonance", i, float(a), -float(b), 1.0 / (4 * a * b), re_p, im_p)
    t.notes.append(f"lambda {sd.lam}")
    t.notes.append(f"certified_count {sd.certified_count}")
    return t


def cmd_smatrix_bounds(cfg, args):
    pot, sd, bs = _bound_set(cfg, args)
    sc = bs.structural
    hi = sc.K if cfg["local"] else 2 * sc.K
    grid = np.linspace(0.0, hi, cfg["grid_points"], endpoint=False)
    C = bs.C_K if cfg["local"] else bs.C_global
    chk = bounds.smatrix_bound_check(pot, sc, C, grid, local=cfg["local"])
    t = Table(["order", "max_abs_derivative", "argmax", "bound_sign", "bound_log10", "passed"])
    for n in range(3):
        b = chk.bounds[n]
        t.add(n + 1, chk.maxima[n], chk.argmax[n], b.sign, b.log10_mag,
              LogMagnitude.from_value(chk.maxima[n]).log10_mag <= b.log10_mag)
    t.notes.append(f"passed {str(chk.passed).lower()}")
    return t


def cmd_dispersive(cfg, args):
    pot, sd, bs = _bound_set(cfg, args)
    return _quantity_table(_flatten("", bs.to_dict()))


def cmd_decay_audit(cfg, args):
    pot, sd = _spectral(cfg, args)
    R = cfg["R"] if cfg["R"] is not None else pot.support_radius
    model = decay.DecayModel.from_potential(pot, R=R, sigma=cfg["sigma"], spectral=sd)
    bs = bounds.bound_set(pot, sd, R, K=float(model.alpha) / 4, bound_mode=cfg["bound_mode"],
                          certify=cfg["certify"])
    budget = decay.error_budget(model, bs)
    verdict = decay.uncertainty_verdict(model, budget)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", decay.AccuracyWarning)
        life = decay.lifetime_bracket(model, budget)
    units = decay.UnitSystem(cfg["length_unit_fm"], cfg["particle_mass_MeV"])
    items = [("alpha", float(model.alpha)), ("beta", float(model.beta)),
             ("gamma", float(model.gamma)), ("R", float(model.R)), ("sigma", float(model.sigma))]
    items += [(f"norm_sq.{k}", v) for k, v in decay.norms(model).items()]
    items += [("var_energy", decay.var_energy(model))]
    items += [(f"time0.{k}", v) for k, v in decay.time0_stats(model).items()]
    items += list(_flatten("budget", budget.to_dict()))
    items += [("P0", verdict.P0), ("eps_P", verdict.eps_P), ("verdict", verdict.verdict)]
    items += [(f"lifetime.{k}", v) for k, v in life.items()]
    items += [("si.rate_per_s", decay.to_si(units, float(model.gamma), "rate")),
              ("si.energy_MeV", decay.to_si(units, float(model.alpha) ** 2, "energy"))]
    return _quantity_table(items)


def cmd_arrival(cfg, args):
    st = _make_state(cfg["packets"])
    t0, t1 = cfg["window"]
    w = arrival.ArrivalWindow(cfg["detector"], t0, t1)
    ts = np.linspace(t0, t1, cfg["n_times"])
    ts = ts[ts > 0]
    fd = arrival.flux_density(st, w)
    L = cfg["L"]
    semi = arrival.semiclassical_density(st, L, ts) if L is not None else np.full(ts.shape, np.nan)
    kij = arrival.kijowski_density(st, cfg["detector"], ts)
    t = Table(["t", "semiclassical", "flux", "flux_normalized", "kijowski"])
    for row in zip(ts, semi, fd.raw(ts), fd.normalized(ts), np.atleast_1d(kij)):
        t.add(*row)
    t.notes.append(f"flux_total {fd.total:.15e}")
    return t


def cmd_bohmian(cfg, args):
    st = _make_state(cfg["packets"])
    w = arrival.ArrivalWindow(cfg["detector"], *cfg["window"])
    tc = bohmian.truncated_current(st, cfg["detector"], w, cfg["n_samples"], args.seed,
                                   cfg["bins"], cfg["convention"], cfg["stratified"])
    t = Table(["t_lo", "t_hi", "mass"])
    for a, b, m in zip(tc.edges[:-1], tc.edges[1:], tc.mass):
        t.add(a, b, m)
    t.notes.append(f"no_arrival {tc.no_arrival:.15e}")
    return t


def cmd_sweep(cfg, args):
    # growing barriers narrow the lowest resonance, so ascending v0 means decreasing beta
    family = []
    for v0 in sorted(cfg["v0"]):
        pot = jost.barrier(cfg["r1"], cfg["r2"], v0)
        sd = jost.find_spectral_data(pot, tuple(cfg["region"]), PrecisionPolicy(args.precision_bits))
        if not sd.resonances:
            raise NumericFailure(f"no resonance for v0={v0} in the search region")
        a, b = sd.resonances[0]
        family.append((pot, complex(a, -b)))
    rep = decay.gamma_tau_sweep(family, region=tuple(cfg["region"]), certify=cfg["certify"],
                                threads=args.threads)
    header = ["v0"]
    for c in decay.SWEEP_COLUMNS:
        header += [c] if c in ("verdict",) else [c, f"{c}_sign", f"{c}_log10"]
    t = Table(header)
    for v0, row in zip(sorted(cfg["v0"]), rep.rows):
        cells = [v0]
        for c in decay.SWEEP_COLUMNS:
            if c == "verdict":
                cells.append(row[c])
            else:
                cells += list(_split(row[c]))
        t.add(*cells)
    t.notes.append(f"slope {rep.slope:.15e}")
    t.notes.append(f"gamma_tau_monotone {str(rep.gamma_tau_monotone).lower()}")
    t.notes += rep.notes
    return t


def cmd_experiments(cfg, args):
    kind = cfg["experiment"]
    if kind == "backflow":
        st = arrival.backflow_state()
        tt = cfg["t"]
        ts = np.linspace(0.5 * tt, 1.5 * tt, 2001)
        j = packets.current(st, 0.0, ts)
        i = int(np.argmin(j))
        return _quantity_table([
            ("t", tt), ("prob_negative_velocity", bohmian.prob_negative_velocity(st, tt)),
            ("prob_negative_momentum", packets.momentum_probability_negative(st)),
            ("current_at_t", float(packets.current(st, 0.0, tt))),
            ("min_current", float(j[i])), ("min_current_time", float(ts[i]))])
    if kind == "threshold":
        t = Table(["sigma", "k_sigma", "status"])
        for s in cfg["sigmas"]:
            try:
                t.add(s, arrival.backflow_threshold(s), "ok")
            except NumericFailure:
                t.add(s, None, "no backflow for any k in the bracket")
        return t
    t = Table(["k1", "ratio", "x2", "N_plus", "N_minus", "M"])
    ratios = cfg["ratios"] or list(np.round(np.arange(1.0, 3.01, 0.1), 10))
    for k1 in cfg["k1"]:
        for r in ratios:
            g1, g2, w = arrival.velocity_pair(k1, r * k1, closing=cfg["closing"])
            n_p = arrival.negative_flux(g1 + g2, w)
            n_m = arrival.negative_flux(g1 - g2, w)
            m = arrival.interference_metric(g1, g2, w, convention=cfg["convention"])
            t.add(k1, r, g2.terms[0][1].x0, n_p, n_m, m)
    return t


HANDLERS = {"resonances": cmd_resonances, "smatrix-bounds": cmd_smatrix_bounds,
            "dispersive": cmd_dispersive, "decay-audit": cmd_decay_audit,
            "arrival": cmd_arrival, "bohmian": cmd_bohmian, "sweep": cmd_sweep,
            "experiments": cmd_experiments}


# ---------------------------------------------------------------- figures

def _figure(table, path):
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise ConfigError("--figures needs matplotlib (pip install 'artifact[figures]')") from exc
    cols = list(zip(*table.rows)) if table.rows else []
    x = [float(v) if isinstance(v, (int, float)) else math.nan for v in cols[0]] if cols else []
    fig, ax = plt.subplots(figsize=(7, 4))
    for name, col in zip(table.header[1:], cols[1:]):
        if all(isinstance(v, (int, float, np.floating)) and not isinstance(v, bool) for v in col):
            ax.plot(x, [float(v) for v in col], label=name)
    ax.set_xlabel(table.header[0])
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


# ---------------------------------------------------------------- entry point

def _parser():
    p = argparse.ArgumentParser(prog="qtime", description="arrival-time and decay computations")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON configuration file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="built-in configuration")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.add_argument("--precision-bits", type=int, default=53,
                   help="starting precision of the root-refinement ladder")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--figures", action="store_true",
                   help="also write a PNG next to --out (needs matplotlib)")
    return p


def _load_config(args):
    cfg = {}
    if args.preset:
        preset = PRESETS[args.preset]
        cfg.update({k: v for k, v in preset.items() if k in SCHEMAS[args.command]})
    if args.config:
        try:
            with open(args.config) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        try:
            user = json.loads(text) if text.strip() else {}
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(user, dict) or not user:
            raise ConfigError("configuration must be a non-empty JSON object")
        cfg.update(user)
    if not args.config and not args.preset:
        raise ConfigError("give --config or --preset")
    return validate(args.command, cfg)


def run(argv=None):
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        if args.threads < 1 or args.precision_bits < 53:
            raise ConfigError("--threads must be >= 1 and --precision-bits >= 53")
        if args.figures and not args.out:
            raise ConfigError("--figures needs --out")
        cfg = _load_config(args)
        table = HANDLERS[args.command](cfg, args)
    except (ConfigError, decay.PreconditionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericFailure, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        traceback.print_exc(file=sys.stderr)
        for line in getattr(exc, "trace", None) or []:
            print(f"  {line}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    canonical = json.dumps({"command": args.command, "config": cfg, "seed": args.seed,
                            "precision_bits": args.precision_bits}, sort_keys=True)
    provenance = [("config-hash", hashlib.sha256(canonical.encode()).hexdigest()),
                  ("version", __version__)]
    text = table.render(provenance)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
        if args.figures:
            try:
                _figure(table, args.out.rsplit(".", 1)[0] + ".png")
            except ConfigError as exc:
                print(f"config error: {exc}", file=sys.stderr)
                return 2
    else:
        sys.stdout.write(text)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

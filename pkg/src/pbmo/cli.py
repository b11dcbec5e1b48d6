"""Command-line driver.

Every subcommand reads an optional JSON config, runs one family of checks
and writes ``<command>.json`` (and usually ``<command>.csv``) into the output
directory.  Exit status: 0 when every contract holds, 1 when one fails,
2 for a malformed config.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import chains, corpus, czdecomp, dyadic, jn, oneside1d
from .field import GridSpec, SampledField, read_field_csv
from .geometry import Box, ParabolicRectangle, ParameterError
from .maximal import (
    ConfigurationError,
    MaximalConfig,
    duality_check,
    hl_reduction_check,
    maximal_plain,
    maximal_star,
    sandwich_check,
)
from .seminorms import RectangleFamily, bmo_variant_seminorm, pbmo_seminorm

SCHEMA = 1
OUT_ENV = "PBMO_OUT"


class ConfigError(ValueError):
    pass


# -- configuration -------------------------------------------------------------

_COMMON = {
    "entry": str,
    "field_file": str,
    "grid": dict,
    "p": float,
    "gamma": float,
    "lag": float,
    "ladder": dict,
    "stride": (int, list),
}

_SPECIFIC = {
    "seminorm": {"direction": str},
    "maximal": {"direction": str, "csv_time_index": int},
    "verify-bounded": {"entries": list},
    "sandwich": {"entries": list},
    "dyadic": {"root": dict, "exponents": list, "depth": int, "dump_generations": int, "nesting_samples": int},
    "cz": {"depth": int, "lam": float, "lam_offset": float, "offset_factor": float, "root": dict},
    "chain": {"spec": dict, "random_specs": int},
    "jn": {"c_grid": list, "moment_cap": float},
    "oneside": {"n": int, "ladder_h": list, "lengths": list, "interval_stride": float, "chain_cases": int, "lam_offset": float},
    "diverge": {"windows": list, "n": int, "ell_min": float, "ladder_ratio": float},
}

DEFAULT_ENTRY = {
    "seminorm": "log_heat",
    "maximal": "log_heat",
    "cz": "step_t",
    "chain": "abs_sinh_t",
    "jn": "log_heat",
    "oneside": "step_x",
}


def _typecheck(key, value, want):
    wants = want if isinstance(want, tuple) else (want,)
    for w in wants:
        if w is float and isinstance(value, (int, float)) and not isinstance(value, bool):
            return
        if w is int and isinstance(value, int) and not isinstance(value, bool):
            return
        if w not in (int, float) and isinstance(value, w):
            return
    names = " or ".join(w.__name__ for w in wants)
    raise ConfigError(f"field {key!r}: expected {names}, got {type(value).__name__} ({value!r})")


def load_config(path: str | None, command: str) -> dict:
    if path is None:
        cfg = {}
    else:
        text = Path(path).read_text()
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None
        if not isinstance(cfg, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
    cfg = dict(cfg)
    declared = cfg.pop("command", command)
    if declared != command:
        raise ConfigError(f"field 'command': config is for {declared!r}, not {command!r}")
    allowed = {**_COMMON, **_SPECIFIC[command]}
    for key, value in cfg.items():
        if key not in allowed:
            raise ConfigError(f"field {key!r}: not a {command} option (allowed: {sorted(allowed)})")
        _typecheck(key, value, allowed[key])
    return cfg


def _grid(cfg: dict, entry: str | None) -> GridSpec:
    g = cfg.get("grid", {})
    for key in g:
        if key not in ("nx", "nt", "x_range", "t_range"):
            raise ConfigError(f"field 'grid.{key}': unknown")
    nx, nt = int(g.get("nx", 128)), int(g.get("nt", 128))
    dom = corpus.get_entry(entry).domain if entry else {"x": [-1.0, 1.0], "t": [-1.0, 1.0]}
    return GridSpec.uniform(tuple(g.get("x_range", dom["x"])), tuple(g.get("t_range", dom["t"])), nx, nt)


def load_field(cfg: dict, command: str, entry: str | None = None) -> tuple[SampledField, str]:
    if "field_file" in cfg:
        return read_field_csv(cfg["field_file"]), cfg["field_file"]
    name = entry or cfg.get("entry") or DEFAULT_ENTRY.get(command, "log_heat")
    e = corpus.get_entry(name)
    if e.kind != "space-time":
        raise ConfigError(f"field 'entry': {name!r} is a line signal")
    return corpus.evaluate_entry(name, _grid(cfg, name)), name


def maximal_config(cfg: dict, direction: str = "backward") -> MaximalConfig:
    lad = cfg.get("ladder", {})
    for key in lad:
        if key not in ("ell_min", "ell_max", "ratio"):
            raise ConfigError(f"field 'ladder.{key}': unknown")
    return MaximalConfig(
        gamma=float(cfg.get("gamma", 0.5)),
        ell_min=float(lad.get("ell_min", 0.125)),
        ell_max=float(lad.get("ell_max", 0.5)),
        ladder_ratio=float(lad.get("ratio", 2 ** 0.25)),
        direction=direction,
        p=float(cfg.get("p", 2.0)),
    )


def family(cfg: dict, grid: GridSpec) -> RectangleFamily:
    mc = maximal_config(cfg)
    stride = cfg.get("stride", max(1, grid.nt // 32))
    return RectangleFamily(tuple(mc.ladder()), stride=stride, gamma=mc.gamma, p=mc.p)


# -- report plumbing ------------------------------------------------------------


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _est(e) -> dict:
    return e.to_dict()


# -- commands -------------------------------------------------------------------


def cmd_seminorm(cfg, ctx):
    f, name = load_field(cfg, "seminorm")
    fam = family(cfg, f.grid)
    gamma = fam.gamma
    lag = float(cfg.get("lag", 2.0 - gamma))
    direction = cfg.get("direction", "minus")
    pb = pbmo_seminorm(f, fam, direction)
    plus = bmo_variant_seminorm(f, fam, gamma, lag, "plus")
    minus = bmo_variant_seminorm(f, fam, gamma, lag, "minus_neg")
    results = {
        "source": name,
        "pbmo": pb.to_dict(fam, f.grid),
        "bmo_plus": plus.to_dict(fam, f.grid, lag),
        "minus_bmo_minus": minus.to_dict(fam, f.grid, lag),
    }
    contracts = {}
    if direction == "minus" and lag == 2.0 - gamma:
        contracts["variants_below_pbmo"] = max(plus.value, minus.value) <= pb.value
    if name in corpus.ENTRIES and corpus.get_entry(name).flags["expected_pbmo_minus_zero"] and direction == "minus":
        contracts["zero_norms"] = pb.value == 0.0 and plus.value == 0.0 and minus.value == 0.0
    rows = [("pbmo", pb.value, pb.constant), ("bmo_plus", plus.value, plus.constant),
            ("minus_bmo_minus", minus.value, minus.constant)]
    return results, contracts, (["quantity", "value", "constant"], rows)


def cmd_maximal(cfg, ctx):
    f, name = load_field(cfg, "maximal")
    mc = maximal_config(cfg, cfg.get("direction", "backward"))
    m = maximal_star(f, mc)
    dual = duality_check(f, mc)
    results = {
        "source": name,
        "config": mc.to_dict(),
        "maximal_star": {"max": float(np.nanmax(m.values)), "min": float(np.nanmin(m.values)),
                         "undefined_count": m.undefined_count},
        "duality": dual,
    }
    contracts = {"duality_exact": dual["max_abs_deviation"] == 0.0}
    if np.all(f.values >= 0):
        plain = maximal_plain(f, mc)
        same = np.array_equal(plain.values, m.values, equal_nan=True) if mc.direction == "backward" else None
        results["plain_equals_star"] = same
        if same is not None:
            contracts["plain_equals_star"] = bool(same)
    if np.all(f.values == f.values[..., :1]):
        hl = hl_reduction_check(f, mc)
        results["hardy_littlewood"] = hl
        contracts["hardy_littlewood_exact"] = hl["max_abs_deviation"] == 0.0
    j = int(cfg.get("csv_time_index", f.grid.nt // 2))
    xs = f.grid.axis_centers(0)
    rows = [(x, f.grid.t[j], f.values[i, j], m.values[i, j]) for i, x in enumerate(xs)] if f.grid.n == 1 else []
    return results, contracts, (["x", "t", "u", "maximal_star"], rows)


def cmd_verify_bounded(cfg, ctx):
    names = cfg.get("entries", ["log_heat", "step_t", "log_abs_x_lifted"])
    rows, table = [], []
    mc = maximal_config(cfg)
    for name in names:
        f, _ = load_field(cfg, "verify-bounded", entry=name)
        fam = family(cfg, f.grid)
        a = pbmo_seminorm(f, fam).value
        b = pbmo_seminorm(maximal_star(f, mc), fam).value
        ratio = b / a if a > 0 else None
        table.append({"entry": name, "pbmo_u": a, "pbmo_maximal": b, "ratio": ratio})
        rows.append((name, a, b, ratio if ratio is not None else ""))
    contracts = {"finite_ratios": all(t["ratio"] is None or math.isfinite(t["ratio"]) for t in table)}
    return {"config": mc.to_dict(), "table": table}, contracts, (["entry", "pbmo_u", "pbmo_maximal", "ratio"], rows)


def cmd_sandwich(cfg, ctx):
    names = cfg.get("entries", [e.name for e in corpus.list_entries("space-time")])
    mc = maximal_config(cfg)
    table, rows = [], []
    for name in names:
        f, _ = load_field(cfg, "sandwich", entry=name)
        rep = sandwich_check(f, mc)
        table.append({"entry": name, **rep})
        rows.append((name, rep["lower_violation"], rep["upper_violation"], rep["defined_count"]))
    contracts = {"zero_violation": all(t["max_violation"] == 0.0 for t in table)}
    return {"table": table}, contracts, (["entry", "lower_violation", "upper_violation", "defined_points"], rows)


def cmd_dyadic(cfg, ctx):
    root_cfg = cfg.get("root", {"x_lo": [0.0], "x_hi": [1.0], "t_lo": 0.0, "t_hi": 1.0})
    root = Box(root_cfg["x_lo"], root_cfg["x_hi"], root_cfg["t_lo"], root_cfg["t_hi"])
    exponents = [float(p) for p in cfg.get("exponents", [1.5, 2.0, math.e, math.pi])]
    depth = int(cfg.get("depth", 12))
    samples = int(cfg.get("nesting_samples", 200))
    rng = np.random.default_rng(ctx["seed"])
    table, rows = [], []
    ok = {"sequence": True, "partition_volume": True, "nesting": True, "cover": True}
    strict = True
    for p in exponents:
        g = dyadic.build_grid(root, p, depth)
        dist = [g.seq.distortion(i) for i in range(1, depth + 1)]
        strict_p = all(2 ** -0.5 < d < 2 ** 0.5 for d in dist)
        strict &= strict_p
        vol_ok = all(g.exact_volume(i) * g.count(i) == g.exact_volume(0) for i in range(depth + 1))
        nest_ok = cover_ok = True
        for i in range(1, depth + 1):
            for _ in range(samples // depth + 1):
                idx = tuple(int(rng.integers(0, s)) for s in g.shape(i))
                b = (i, idx)
                par = g.parent(b)
                nest_ok &= g.box(par).contains(g.box(b)) and b in g.children(par)
                cov = g.cover_box(b)
                cover_ok &= cov.box.contains(g.box(b)) and 1.0 <= cov.volume_ratio < 2.0
        ok["partition_volume"] &= vol_ok
        ok["nesting"] &= nest_ok
        ok["cover"] &= cover_ok
        table.append({"p": p, "k": list(g.seq.k), "distortion": dist, "strict_distortion": strict_p,
                      "partition_volume_exact": vol_ok, "nesting": nest_ok, "cover_ok": cover_ok})
        rows += [(p, i, g.seq.exponent(i), dist[i - 1], g.count(i)) for i in range(1, depth + 1)]
    dump_gen = int(cfg.get("dump_generations", 3))
    g0 = dyadic.build_grid(root, exponents[0], max(1, dump_gen))
    lines = g0.dump_jsonl(ctx["out"] / "dyadic.jsonl", dump_gen)
    contracts = {**ok, "strict_distortion": strict}
    return {"depth": depth, "table": table, "jsonl_lines": lines}, contracts, (
        ["p", "generation", "k", "distortion", "count"], rows)


def cmd_cz(cfg, ctx):
    f, name = load_field(cfg, "cz")
    gamma = float(cfg.get("gamma", 0.5))
    p = float(cfg.get("p", 2.0))
    c = f.grid.cylinder
    rc = cfg.get("root")
    if rc is None:
        # past part of the largest centred rectangle that fits
        ell = min(min(c.widths), (c.duration / 2) ** (1 / p))
        r = ParabolicRectangle(c.center_x, c.center_t, ell, p)
        root = r.lower(gamma)
    else:
        root = Box(rc["x_lo"], rc["x_hi"], rc["t_lo"], rc["t_hi"])
    g = dyadic.build_grid(root, p, int(cfg.get("depth", 5)))
    offset = float(cfg.get("offset_factor", 2.0))
    fwd = czdecomp._exact_forward(f, czdecomp.root_forward_box(g, gamma))
    if fwd is None and "lam" not in cfg:
        raise ConfigError("field 'root': forward companion of the root leaves the grid; give 'lam'")
    base = float(fwd[0] / fwd[1]) if fwd is not None else 0.0
    lam = float(cfg["lam"]) if "lam" in cfg else base + float(cfg.get("lam_offset", 0.5))
    dec = czdecomp.decompose(f, g, gamma, lam, offset)
    rep = czdecomp.verify(dec, f, g)
    contracts = {
        "on_box_g_le_lambda": rep["on_box_ok"],
        "reconstruction": rep["reconstruction_error"] <= 1e-12,
        "disjoint": rep["disjoint"],
        "maximal": rep["maximal"],
    }
    rows = [(s.box_id[0], s.box.x_lo[0], s.box.x_hi[0], s.box.t_lo, s.box.t_hi, s.forward_mean,
             s.parent_forward_mean) for s in dec.stopped]
    return {"source": name, **czdecomp.to_dict(dec, rep), "report": rep}, contracts, (
        ["generation", "x_lo", "x_hi", "t_lo", "t_hi", "forward_mean", "parent_forward_mean"], rows)


def cmd_chain(cfg, ctx):
    rng = np.random.default_rng(ctx["seed"])
    rejected = 0
    if "spec" in cfg:
        s = cfg["spec"]
        specs = [chains.ChainSpec.from_rectangle(
            tuple(s.get("center_x", [0.0])), s.get("center_t", 0.0), s.get("ell", 0.5), s.get("theta", 0.5),
            tuple(s.get("v", [0.0])), s.get("tau", 3.0), s.get("p", 2.0))]
    else:
        specs, rejected = chains.sample_specs(rng, int(cfg.get("random_specs", 10)))
    name = cfg.get("entry", DEFAULT_ENTRY["chain"])
    table, rows = [], []
    sound = valid = True
    for spec in specs:
        ch = chains.build_chain(spec)
        start, target = ch.start.to_box(), ch.target.to_box()
        x_lo = min(start.x_lo[0], target.x_lo[0]) - 0.05
        x_hi = max(start.x_hi[0], target.x_hi[0]) + 0.05
        t_lo, t_hi = start.t_lo - 0.01, target.t_hi + 0.01
        g = cfg.get("grid", {})
        grid = GridSpec.uniform((x_lo, x_hi), (t_lo, t_hi), int(g.get("nx", 128)), int(g.get("nt", 256)))
        e = corpus.get_entry(name)
        f = corpus.sample(lambda x, t: e.evaluator(x, t, grid.hx[0]), grid)
        chk = chains.check_chain(ch)
        bound = chains.chain_bound(f, ch)
        direct = chains.direct_oscillation(f, ch)
        ok = bound["bound"] >= direct - 1e-10
        sound &= ok
        valid &= chk["valid"]
        table.append({"chain": ch.to_dict(), "checks": chk, **bound, "direct": direct, "sound": ok})
        rows.append((spec.theta, spec.tau, spec.v[0], ch.direct, float(ch.epsilon), bound["bound"], direct))
    return {"entry": name, "rejected_draws": rejected, "chains": table}, {"sound": sound, "structure": valid}, (
        ["theta", "tau", "v", "direct", "epsilon", "bound", "direct_oscillation"], rows)


def cmd_jn(cfg, ctx):
    f, name = load_field(cfg, "jn")
    fam = family(cfg, f.grid)
    c_grid = cfg.get("c_grid")
    rep = jn.jn_scan(f, fam, c_grid=c_grid, moment_cap=float(cfg.get("moment_cap", 2.0)))
    pb = pbmo_seminorm(f, fam).value
    lo, up = rep.lower_moments, rep.upper_moments
    contracts = {
        "moments_at_least_one": min(lo + up) >= 1.0,
        "nondecreasing": all(a <= b for a, b in zip(lo, lo[1:])) and all(a <= b for a, b in zip(up, up[1:])),
    }
    if rep.c_grid[0] == 0.0:
        contracts["unit_at_zero"] = lo[0] == 1.0 and up[0] == 1.0
    results = {"source": name, "report": rep.to_dict(), "pbmo": pb,
               "c_star_times_pbmo": None if rep.c_star is None else rep.c_star * pb}
    rows = list(zip(rep.c_grid, lo, up))
    return results, contracts, (["c", "worst_lower_moment", "worst_upper_moment"], rows)


def _interval_family(u, lengths, stride):
    return oneside1d.IntervalFamily(tuple(max(1, int(round(L / u.dx))) for L in lengths), max(1, int(round(stride / u.dx))))


def cmd_oneside(cfg, ctx):
    name = cfg.get("entry", DEFAULT_ENTRY["oneside"])
    n = int(cfg.get("n", 512))
    u = corpus.evaluate_signal(name, n)
    lengths = [float(v) for v in cfg.get("lengths", [1 / 64, 1 / 32, 1 / 16, 1 / 8, 1 / 4])]
    stride = float(cfg.get("interval_stride", 1 / 128))
    ladder = [float(h) for h in cfg.get("ladder_h", [2.0 ** -k for k in range(1, 7)])]
    U, offset = oneside1d.defined_part(oneside1d.os_maximal(u, ladder))
    fam_u, fam_U = _interval_family(u, lengths, stride), _interval_family(U, lengths, stride)
    nu = oneside1d.os_bmo_norm(u, fam_u)
    nU = oneside1d.os_bmo_norm(U, fam_U)
    nd = oneside1d.os_double_norm(u, fam_u)
    results = {
        "entry": name, "n": n,
        "norm_u": nu.value, "norm_U": nU.value, "double_norm_u": nd.value,
        "ratio": nU.value / nu.value if nu.value > 0 else None,
        "witness_u": nu.extras["interval"], "witness_U": nU.extras["interval"],
    }
    contracts = {}
    flags = corpus.get_entry(name).flags
    if flags["increasing_in_time"]:
        contracts["zero_norm"] = nu.value == 0.0 and nU.value == 0.0
        contracts["maximal_nondecreasing"] = bool(np.all(np.diff(U.values) >= 0))
    if nu.value > 0:
        l2 = oneside1d.bad_part_constant(u, _interval_family(u, lengths[1:4], 1 / 64), nu.value,
                                         float(cfg.get("lam_offset", 0.5)))
        results["bad_part_l2"] = l2
        half = max(1, n // 8)
        comp = float(oneside1d._exact_mean(u, 2 * half, 4 * half))
        dec = oneside1d.os_cz(u, 0, half, comp + 0.5 * nu.value)
        rep = oneside1d.verify_cz(dec, u)
        results["cz"] = {**dec.to_dict(), "report": rep}
        contracts.update(cz_on_box=rep["on_box_ok"], cz_reconstruction=rep["reconstruction_error"] <= 1e-12,
                         cz_disjoint=rep["disjoint"], cz_maximal=rep["maximal"])
    rng = np.random.default_rng(ctx["seed"])
    traces_ok, traces = True, []
    for _ in range(int(cfg.get("chain_cases", 20))):
        h = float(rng.uniform(0.05, 0.5))
        d = float(rng.uniform(1e-3, 0.999)) * h
        x = float(rng.uniform(-0.4, 0.4))
        tr = oneside1d.interval_chain(x, x + d, h, u)
        chk = oneside1d.check_trace(tr)
        traces_ok &= all(chk.values())
        traces.append({"x": x, "d": d, "h": h, "k": tr.k, "branches": tr.branches, "checks": chk})
    results["interval_chains"] = traces
    contracts["interval_chains"] = traces_ok
    rows = [(x, a, b) for x, a, b in zip(U.x, u.values[offset:], U.values)]
    return results, contracts, (["x", "u", "U"], rows)


def cmd_diverge(cfg, ctx):
    windows = [float(w) for w in cfg.get("windows", [2.0, 4.0, 8.0])]
    n = int(cfg.get("n", 64))
    ratio = float(cfg.get("ladder_ratio", 2 ** 0.25))
    ell_min = float(cfg.get("ell_min", 0.5))
    e = corpus.get_entry("abs_sinh_t")
    table, rows = [], []
    for T in windows:
        grid = GridSpec.uniform((-2.0, 2.0), (-T, T), n, n)
        f = corpus.sample(lambda x, t: e.evaluator(x, t, grid.hx[0]), grid)
        lad = MaximalConfig(0.5, ell_min, math.sqrt(T), ratio).ladder()
        est = pbmo_seminorm(f, RectangleFamily(tuple(lad), stride=1))
        table.append({"window": T, "pbmo": est.value, "witness": est.witness.to_dict(), "family_size": est.family_size})
        rows.append((T, est.value))
    growth = [b["pbmo"] / a["pbmo"] for a, b in zip(table, table[1:])]
    contracts = {"doubling_growth_at_least_2": all(g >= 2.0 for g in growth)}
    return {"table": table, "growth": growth}, contracts, (["window", "pbmo"], rows)


COMMANDS = {
    "seminorm": cmd_seminorm,
    "maximal": cmd_maximal,
    "verify-bounded": cmd_verify_bounded,
    "sandwich": cmd_sandwich,
    "dyadic": cmd_dyadic,
    "cz": cmd_cz,
    "chain": cmd_chain,
    "jn": cmd_jn,
    "oneside": cmd_oneside,
    "diverge": cmd_diverge,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pbmo", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or .)")
    ap.add_argument("--seed", type=int, default=0, help="seed for randomised checks")
    ap.add_argument("--threads", type=int, default=1, help="recorded only; computations run on one thread")
    return ap


def execute(command: str, cfg: dict, out: Path, seed: int = 0, threads: int = 1) -> tuple[int, dict]:
    out.mkdir(parents=True, exist_ok=True)
    ctx = {"seed": seed, "out": out}
    results, contracts, table = COMMANDS[command](cfg, ctx)
    ok = all(contracts.values())
    report = _clean({
        "schema": SCHEMA,
        "command": command,
        "config": cfg,
        "seed": seed,
        "threads": threads,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "contracts": contracts,
        "ok": ok,
        "results": results,
    })
    (out / f"{command}.json").write_text(json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n")
    if table is not None and table[1]:
        write_csv(out / f"{command}.csv", *table)
    return (0 if ok else 1), report


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out or os.environ.get(OUT_ENV, "."))
    try:
        cfg = load_config(args.config, args.command)
    except (ConfigError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        code, report = execute(args.command, cfg, out, args.seed, args.threads)
    except (ConfigError, ConfigurationError, ParameterError, KeyError) as e:
        print(f"config error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2
    failed = [k for k, v in report["contracts"].items() if not v]
    status = "ok" if code == 0 else "FAILED: " + ", ".join(failed)
    print(f"{args.command}: {status} -> {out / (args.command + '.json')}")
    return code


if __name__ == "__main__":
    sys.exit(main())

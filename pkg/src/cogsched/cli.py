"""Command-line front end.

Subcommands: ``run``, ``sweep``, ``overlay-check``, ``compare-estimator`` and
``validate``. Exit status is 2 for an invalid scenario and 1 when a run breaks
a hard invariant (buffer caps or peak power).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .channel import ChannelModelParams, OccupancyPolicy, pu_occupancy, sample_channel
from .core import ConfigError, ScenarioConfig, apply_overrides, load_config, validate_config
from .overlay import check_full_overlay, random_static_instance, static_overlay_oracle
from .scenarios import PRESETS, preset
from .sim import RunMetrics, run_scenario

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


def worker_count() -> int:
    env = os.environ.get("COGSCHED_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def parallel_map(fn, items: list) -> list:
    """Map in worker processes, capped by ``COGSCHED_THREADS``; order is kept."""
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def resolve_config(source: str | None, overrides=(), seed=None, mode=None) -> ScenarioConfig:
    """Load a scenario file or preset name, then apply CLI adjustments."""
    if source is None:
        cfg = preset("multi-su")
    elif Path(source).is_file():
        cfg = load_config(source)
    elif source in PRESETS:
        cfg = preset(source)
    else:
        raise ConfigError(f"{source!r} is neither a file nor a preset ({', '.join(sorted(PRESETS))})")
    cfg = apply_overrides(cfg, overrides or [])
    if seed is not None:
        cfg = cfg.replace(rng_seed=int(seed))
    if mode is not None:
        cfg = cfg.replace(mode=mode)
    rep = validate_config(cfg)
    if not rep.ok:
        raise ConfigError("; ".join(rep.errors))
    return cfg


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("config_path", nargs="?", help="scenario file or preset name")
    p.add_argument("--config", dest="config", help="scenario file or preset name")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--mode", choices=["coca", "coca-e"])


def _split_values(items) -> list[str]:
    out = []
    for item in items or []:
        out.extend(x for x in item.split(",") if x.strip())
    return out


# ---------------------------------------------------------------------------
# run


def cmd_run(cfg: ScenarioConfig, out: Path) -> int:
    metrics = run_scenario(cfg)
    metrics.write(out)
    for slot, msg in metrics.violations[:10]:
        print(f"slot {slot}: {msg}", file=sys.stderr)
    summ = metrics.summary()
    print(json.dumps({"slots": summ["slots"], "violations": len(metrics.violations),
                      "e": summ["averages"]["e"], "r_pu": summ["averages"]["r_pu"]}))
    return EXIT_VIOLATION if metrics.violations else EXIT_OK


# ---------------------------------------------------------------------------
# sweep

SWEEP_METRICS = ("t_o", "t_p", "r_o", "r_p", "delay_o")


def converged_row(metrics: RunMetrics) -> dict:
    """Last-half averages of one run, flattened to scalar columns."""
    c = metrics.converged_averages()
    row = {"e": float(c["E"]), "violations": len(metrics.violations)}
    keys = {"t_o": "T_o", "t_p": "T_p", "r_o": "R_o", "r_p": "R_p", "delay_o": "delay_o"}
    for name in SWEEP_METRICS:
        for i, v in enumerate(np.atleast_1d(c[keys[name]]), 1):
            row[f"{name}_su{i}"] = float(v)
    for i, v in enumerate(np.atleast_1d(c["R_pu"]), 1):
        row[f"r_pu_pu{i}"] = float(v)
    return row


def _sweep_job(cfg: ScenarioConfig) -> dict:
    return converged_row(run_scenario(cfg))


def sweep_table(cfg: ScenarioConfig, param: str, values, repeats: int = 10) -> list[dict]:
    """One row per value: metrics averaged over ``repeats`` seeds.

    Seeds are ``rng_seed, rng_seed + 1, ...`` for every value, so points
    differ only through the swept parameter.
    """
    values = list(values)
    cfgs = []
    for val in values:
        base = apply_overrides(cfg, [f"{param}={val}"])
        rep = validate_config(base)
        if not rep.ok:
            raise ConfigError(f"{param}={val}: " + "; ".join(rep.errors))
        cfgs.extend(base.replace(rng_seed=cfg.rng_seed + r) for r in range(repeats))
    rows = parallel_map(_sweep_job, cfgs)
    table = []
    for i, val in enumerate(values):
        chunk = rows[i * repeats:(i + 1) * repeats]
        row = {"param": param, "value": val, "repeats": repeats}
        for key in chunk[0]:
            vals = np.array([r[key] for r in chunk], dtype=float)
            row[key] = float(np.nanmean(vals)) if np.isfinite(vals).any() else float("nan")
        table.append(row)
    return table


def write_table(path: Path, rows: list[dict], header: list[str] | None = None) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = header or (list(rows[0]) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(rows)


def cmd_sweep(cfg: ScenarioConfig, param: str, values, repeats: int, out: Path) -> int:
    rows = sweep_table(cfg, param, values, repeats)
    write_table(out / "sweep.csv", rows, None if rows else ["param", "value", "repeats"])
    for row in rows:
        print(json.dumps(row))
    return EXIT_OK


# ---------------------------------------------------------------------------
# overlay check


def cmd_overlay_check(cfg: ScenarioConfig, slots: int, static_draws: int, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    params, policy = ChannelModelParams.from_config(cfg), OccupancyPolicy.from_config(cfg)
    busy = np.ones(cfg.num_pus)
    verdicts = []
    with open(out / "overlay.csv", "w") as fh:
        fh.write("slot,su,subcarrier,C1,C2,a_0S,condition_holds\n")
        for t in range(slots):
            owner, pw = pu_occupancy(policy, t, busy, cfg.num_subcarriers, seed=cfg.rng_seed)
            rep = check_full_overlay(sample_channel(params, t, seed=cfg.rng_seed, owner=owner,
                                                    pu_power=pw), cfg.p_max)
            for n in range(cfg.num_sus):
                for m in range(cfg.num_subcarriers):
                    fh.write(f"{t},{n + 1},{m},{rep.C1[n, m]!r},{rep.C2[n, m]!r},"
                             f"{rep.a_0s[m]!r},{int(rep.condition_holds[n, m])}\n")
            verdicts.append({"slot": t, "system_holds": rep.system_holds,
                             "subcarriers_holding": int(rep.subcarrier_holds.sum()),
                             "low_sinr": rep.low_sinr})
    result = {"slots": verdicts}
    if static_draws:
        rng = np.random.default_rng(cfg.rng_seed)
        kappas = []
        for _ in range(static_draws):
            kappas.append(static_overlay_oracle(random_static_instance(rng)).kappa)
        result["static_oracle"] = {"draws": static_draws, "kappa": kappas,
                                   "all_full_overlay": bool(np.all(np.array(kappas) == 1.0))}
    (out / "overlay.json").write_text(json.dumps(result, indent=2))
    print(json.dumps({"slots": slots, "holding": sum(v["system_holds"] for v in verdicts),
                      **({"static_all_full_overlay": result["static_oracle"]["all_full_overlay"]}
                         if static_draws else {})}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# estimator comparison


def paired_runs(cfg: ScenarioConfig) -> tuple[RunMetrics, RunMetrics]:
    """Same seed, true PU backlog versus estimated PU backlog."""
    return run_scenario(cfg.replace(mode="coca")), run_scenario(cfg.replace(mode="coca-e"))


def _paired_job(cfg: ScenarioConfig) -> dict:
    a, b = paired_runs(cfg)
    ca, cb = a.converged_averages(), b.converged_averages()
    return {"su_rate_diff": float((ca["R_o"] + ca["R_p"]).sum() - (cb["R_o"] + cb["R_p"]).sum()),
            "pu_rate_diff": float(ca["R_pu"].sum() - cb["R_pu"].sum())}


def iota_sweep(cfg: ScenarioConfig, iotas, repeats: int = 10) -> list[dict]:
    """Long-run COCA minus COCA-E differences for each slack value."""
    iotas = [float(x) for x in iotas]
    jobs = [cfg.replace(iota=i, rng_seed=cfg.rng_seed + r) for i in iotas for r in range(repeats)]
    res = parallel_map(_paired_job, jobs)
    rows = []
    for k, iota in enumerate(iotas):
        chunk = res[k * repeats:(k + 1) * repeats]
        rows.append({"iota": iota, "repeats": repeats,
                     "su_rate_diff": float(np.mean([r["su_rate_diff"] for r in chunk])),
                     "pu_rate_diff": float(np.mean([r["pu_rate_diff"] for r in chunk]))})
    return rows


def cmd_compare_estimator(cfg: ScenarioConfig, iotas, repeats: int, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    a, b = paired_runs(cfg)
    su = (a.series["R_o"] + a.series["R_p"]).sum(axis=1) - (b.series["R_o"] + b.series["R_p"]).sum(axis=1)
    pu = a.series["R_pu"].sum(axis=1) - b.series["R_pu"].sum(axis=1)
    with open(out / "estimator_diff.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["slot", "entity", "metric", "value"])
        for t in range(len(su)):
            w.writerow([t, "system", "su_sum_rate_diff", repr(float(su[t]))])
            w.writerow([t, "system", "pu_rate_diff", repr(float(pu[t]))])
    rows = iota_sweep(cfg, iotas, repeats) if iotas else []
    write_table(out / "iota_sweep.csv", rows, ["iota", "repeats", "su_rate_diff", "pu_rate_diff"])
    summary = {"iota": cfg.iota, "mean_su_sum_rate_diff": float(su.mean()) if len(su) else 0.0,
               "mean_pu_rate_diff": float(pu.mean()) if len(pu) else 0.0, "iota_sweep": rows}
    (out / "estimator_summary.json").write_text(json.dumps(summary, indent=2))
    print(json.dumps(summary))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cogsched", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario and write per-slot CSVs")
    _add_common(p)

    p = sub.add_parser("sweep", help="average converged metrics over a parameter grid")
    _add_common(p)
    p.add_argument("--param", required=True, help="config key, e.g. v, iota or theta_1")
    p.add_argument("--values", action="append", default=[], help="comma-separated values")
    p.add_argument("--repeats", type=int, default=10)

    p = sub.add_parser("overlay-check", help="audit the full-overlay condition on sampled channels")
    _add_common(p)
    p.add_argument("--slots", type=int, default=10)
    p.add_argument("--static-draws", type=int, default=0,
                   help="also brute-force this many random static instances")

    p = sub.add_parser("compare-estimator", help="paired true-vs-estimated PU backlog runs")
    _add_common(p)
    p.add_argument("--iotas", action="append", default=[], help="comma-separated slack values")
    p.add_argument("--repeats", type=int, default=10)

    p = sub.add_parser("validate", help="check a scenario without running it")
    _add_common(p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    source = args.config or args.config_path
    try:
        cfg = resolve_config(source, args.override, args.seed, args.mode)
    except (ConfigError, OSError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    try:
        if args.command == "validate":
            for w in validate_config(cfg).warnings:
                print(f"warning: {w}")
            print("ok")
            return EXIT_OK
        if args.command == "run":
            return cmd_run(cfg, out)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.param, _split_values(args.values), args.repeats, out)
        if args.command == "overlay-check":
            return cmd_overlay_check(cfg, args.slots, args.static_draws, out)
        if args.command == "compare-estimator":
            return cmd_compare_estimator(cfg, _split_values(args.iotas), args.repeats, out)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_CONFIG  # unreachable with argparse choices


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry points: run, sweep, verify, bench.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.
Command-line flags override values from the ``--config`` file.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from . import bench as bench_mod
from . import verify as verify_mod
from .engine import POLICIES, SWEEP_PARAMS, RunResult, run_policies, sweep
from .scenario import ConfigError, Mode, ScenarioConfig, build_scenario, load_config

RUN_COLUMNS = ("slot", "policy", "system_utility", "avg_delay_s", "total_energy_j",
               "n_local", "n_mec", "n_veh", "drops")
SWEEP_COLUMNS = ("param_value", "policy", "seed", "tsu", "avg_delay", "energy")
BENCH_COLUMNS = ("n_cuavs", "slots", "players", "rounds", "slot_s", "game_s", "game_per_round_s")


class UsageError(Exception):
    pass


def _num(x) -> str:
    return repr(float(x))


def _list(text: str, kind=str) -> list:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise UsageError("empty list")
    try:
        return [kind(t) for t in items]
    except ValueError as exc:
        raise UsageError(f"bad list {text!r}: {exc}") from None


def _policies(text: str) -> list:
    names = [p.lower() for p in _list(text)]
    if names == ["all"]:
        return list(POLICIES)
    bad = [p for p in names if p not in POLICIES]
    if bad:
        raise UsageError(f"unknown policy {', '.join(bad)}; choose from {', '.join(POLICIES)} or all")
    return names


def load(args) -> ScenarioConfig:
    if args.config is None:
        cfg = ScenarioConfig()
    else:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        cfg = load_config(path.read_text(encoding="utf-8"))
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "slots", None) is not None:
        if args.slots < 1:
            raise UsageError("--slots must be >= 1")
        changes["slots"] = args.slots
    return cfg.replace(**changes) if changes else cfg


def run_rows(results: dict) -> list:
    """Per-slot rows followed by one summary row per policy."""
    rows = []
    for policy, res in results.items():
        for s in res.slots:
            rows.append((s.slot, policy, _num(s.system_utility), _num(s.avg_delay_s), _num(s.total_energy_j),
                         s.count(Mode.LOCAL), s.count(Mode.MEC), s.count(Mode.VEH), s.dropped_count))
    for policy, res in results.items():
        rows.append(summary_row(policy, res))
    return rows


def summary_row(policy: str, res: RunResult) -> tuple:
    return ("summary", policy, _num(res.time_avg_system_utility), _num(res.avg_completion_delay_s),
            _num(res.total_energy_j), sum(s.count(Mode.LOCAL) for s in res.slots),
            sum(s.count(Mode.MEC) for s in res.slots), sum(s.count(Mode.VEH) for s in res.slots), res.drops)


def write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    text = buf.getvalue()
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_run(args) -> int:
    cfg = load(args)
    results = run_policies(build_scenario(cfg), cfg.slots, _policies(args.policy))
    write_csv(args.out, RUN_COLUMNS, run_rows(results))
    return 0


def cmd_sweep(args) -> int:
    if args.param not in SWEEP_PARAMS:
        raise UsageError(f"unknown sweep parameter {args.param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    cfg = load(args)
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    seeds = [cfg.seed + i for i in range(args.seeds)]
    rows = sweep(cfg, args.param, _list(args.grid, float), _policies(args.policies), seeds, cfg.slots)
    write_csv(args.out, SWEEP_COLUMNS, [(_num(r.param_value), r.policy, r.seed, _num(r.tsu),
                                         _num(r.avg_delay), _num(r.energy)) for r in rows])
    return 0


def cmd_verify(args) -> int:
    cfg = load(args)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    ok = verify_mod.run_suite(cfg, args.suite, args.trials, args.seed or 0)
    print("all checks passed" if ok else "verification FAILED")
    return 0 if ok else 1


def cmd_bench(args) -> int:
    cfg = load(argparse.Namespace(config=args.config))
    rows = bench_mod.bench(cfg, _list(args.n, int), args.slots, args.repeats)
    write_csv(args.out, BENCH_COLUMNS, [(r.n_cuavs, r.slots, _num(r.players), _num(r.rounds), _num(r.slot_s),
                                         _num(r.game_s), _num(r.game_per_round_s)) for r in rows])
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uavoffload", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True, slots=True):
        sp.add_argument("--config", help="TOML config file (units: GHz, Mbit, kHz, dBm); defaults if omitted")
        if seed:
            sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        if slots:
            sp.add_argument("--slots", type=int, help="horizon T in slots (overrides the config)")
        sp.add_argument("--out", help="CSV output path (default: stdout)")

    r = sub.add_parser("run", help="simulate one or more policies over a horizon")
    common(r)
    r.add_argument("--policy", default="mvtora", help=f"policy or comma list: {', '.join(POLICIES)}, all")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="paired-seed parameter sweep")
    common(s)
    s.add_argument("--param", required=True, help=", ".join(SWEEP_PARAMS))
    s.add_argument("--grid", required=True, help="comma list (GHz, cycles/bit or vehicles/km^2)")
    s.add_argument("--policies", default="all", help="comma list of policies")
    s.add_argument("--seeds", type=int, default=1, help="number of seeds, starting at --seed")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="run the oracle checks")
    v.add_argument("--config")
    v.add_argument("--suite", default="all", choices=(*verify_mod.SUITES, "all"))
    v.add_argument("--trials", type=int, default=20)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="per-slot timing against the number of C-UAVs")
    b.add_argument("--config")
    b.add_argument("--n", default="5,10,15,20,25,30,35,40", help="comma list of C-UAV counts")
    b.add_argument("--slots", type=int, default=5)
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # argparse exits with status 2 on usage errors
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

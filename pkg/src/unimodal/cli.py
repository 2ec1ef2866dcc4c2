"""Command-line front end.

Subcommands: classify, sweep, decay, koebe, conjugate, renorm, orbit.
Settings come from built-in defaults, then an optional INI-style config
file (a ``[run]`` section plus one section per subcommand), then flags.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .boxmaps import HypothesisError, decay_tower
from .classify import AttractorReport, classify_attractor
from .conjugation import search_conjugacy
from .distortion import koebe_check
from .map_model import FAMILIES, Interval, make_family, monotone_interval
from .orbits import find_periodic_orbit, nonrepelling_scan
from .renorm import renorm_tower

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

SWEEP_COLUMNS = ["parameter", "verdict", "period", "multiplier", "lyapunov", "basin_fraction",
                 "indeterminate_reason"]

# config keys that differ from argparse destinations
_CONFIG_ALIASES = {"from": "start", "to": "stop", "param": "parameter", "max-depth": "max_depth",
                   "max-period": "max_period", "no-timestamp": "no_timestamp",
                   "atlas-points": "atlas_points"}


class ConfigError(ValueError):
    pass


@dataclass
class Table:
    """A command result: a JSON object plus the same content as CSV rows."""
    payload: dict
    columns: list[str]
    rows: list[dict]


# ---------------------------------------------------------------------------
# serialization


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Interval):
        return obj.as_list()
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def render(table: Table, fmt: str, timestamp: bool) -> str:
    if fmt == "json":
        payload = dict(table.payload)
        if timestamp:
            payload = {"generated": _timestamp(), **payload}
        return json.dumps(_jsonable(payload), indent=2) + "\n"
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# generated {_timestamp()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_cell(row.get(c)) for c in table.columns])
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    """Parse CSV output back into typed rows (the inverse of ``render``)."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    out = []
    for rec in csv.DictReader(lines):
        out.append({k: _parse_cell(v) for k, v in rec.items()})
    return out


def _parse_cell(v: str):
    if v == "":
        return None
    for conv in (int, float):
        try:
            return conv(v)
        except ValueError:
            pass
    return {"True": True, "False": False}.get(v, v)


# ---------------------------------------------------------------------------
# commands


def report_row(report: AttractorReport, parameter: float) -> dict:
    return {
        "parameter": parameter,
        "verdict": report.verdict,
        "period": report.period,
        "multiplier": report.multiplier,
        "lyapunov": report.diagnostics.get("lyapunov"),
        "basin_fraction": report.basin_fraction,
        "indeterminate_reason": report.reason,
    }


def cmd_classify(args) -> Table:
    m = make_family(args.family, args.parameter)
    rep = classify_attractor(m, samples=args.samples, horizon=args.horizon, seed=args.seed)
    return Table(rep.to_dict(args.family, args.parameter), SWEEP_COLUMNS,
                 [report_row(rep, args.parameter)])


def sweep_parameters(start: float, stop: float, step: float) -> list[float]:
    n = math.floor((stop - start) / step + 1e-9) + 1
    return [round(start + i * step, 12) for i in range(n)]


def _sweep_task(task):
    family, a, samples, horizon, seed, atlas_points = task
    m = make_family(family, a)
    try:
        with np.errstate(all="ignore"):
            rep = classify_attractor(m, samples=samples, horizon=horizon, seed=seed)
    except (FloatingPointError, ArithmeticError, HypothesisError) as exc:
        row = dict.fromkeys(SWEEP_COLUMNS)
        row.update(parameter=a, verdict="indeterminate", basin_fraction=0.0,
                   indeterminate_reason=f"numerical failure: {exc}")
        return row, []
    pts = []
    if atlas_points and rep.tails is not None:
        pts = [float(x) for x in rep.tails[-atlas_points:, 0]]
    return report_row(rep, a), pts


def cmd_sweep(args) -> Table:
    params = sweep_parameters(args.start, args.stop, args.step)
    want_atlas = args.atlas or args.figure
    tasks = [(args.family, a, args.samples, args.horizon, args.seed,
              args.atlas_points if want_atlas else 0) for a in params]
    jobs = args.jobs or os.cpu_count() or 1
    if jobs == 1 or len(tasks) == 1:
        results = [_sweep_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            # map yields in submission order, so rows stay in parameter order
            results = list(pool.map(_sweep_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    rows = [r for r, _ in results]
    if args.atlas:
        atlas = [{"parameter": a, "x": x} for (_, pts), a in zip(results, params) for x in pts]
        _write(args.atlas, render(Table({}, ["parameter", "x"], atlas), "csv", False))
    if args.figure:
        from .plotting import plot_sweep
        plot_sweep(params, [pts for _, pts in results], rows, args.figure)
    payload = {"family": args.family, "from": args.start, "to": args.stop, "step": args.step,
               "samples": args.samples, "horizon": args.horizon, "seed": args.seed,
               "columns": SWEEP_COLUMNS, "rows": rows}
    return Table(payload, SWEEP_COLUMNS, rows)


def cmd_decay(args) -> Table:
    m = make_family(args.family, args.parameter)
    tower = decay_tower(m, args.depth, scale=args.scale)
    rows = [{"stage": i, "nu": p.nu, "return_time": k,
             "inner_lo": p.inner.lo, "inner_hi": p.inner.hi,
             "outer_lo": p.outer.lo, "outer_hi": p.outer.hi}
            for i, (p, k) in enumerate(zip(tower.pairs, tower.return_times))]
    if args.figure:
        from .plotting import plot_decay
        plot_decay(tower.nus, args.figure, title=f"{args.family} a={args.parameter}")
    payload = {"family": args.family, "parameter": args.parameter, "depth": args.depth,
               **tower.to_dict()}
    return Table(payload, list(rows[0]) if rows else ["stage", "nu", "return_time"], rows)


def cmd_koebe(args) -> Table:
    m = make_family(args.family, args.parameter)
    x0 = args.x0
    if x0 is None:
        x0 = float(np.random.default_rng(args.seed).uniform(m.domain.lo, m.domain.hi))
    T = monotone_interval(m, x0, args.n)
    # x0 picks the branch; J sits in the middle of T
    half = 0.5 * args.inner * T.length
    J = Interval(T.mid - half, T.mid + half)
    rep = koebe_check(m, T, J, args.n, samples=args.samples, seed=args.seed)
    row = {"parameter": args.parameter, "n": rep.n, "x0": x0, "T_lo": T.lo, "T_hi": T.hi,
           "J_lo": J.lo, "J_hi": J.hi, **{k: v for k, v in rep.to_dict().items() if k != "n"}}
    return Table({"family": args.family, **row}, list(row), [row])


def cmd_conjugate(args) -> Table:
    m = make_family(args.family, args.parameter)
    res = search_conjugacy(m, scale=args.scale, halvings=args.halvings)
    row = {"parameter": args.parameter, "success": res.success, "s": res.s,
           "Y_lo": res.Y.lo if res.Y else None, "Y_hi": res.Y.hi if res.Y else None,
           "max_schwarzian_G": res.max_schwarzian, "branches": res.branches,
           "reason": res.reason or None}
    return Table({"family": args.family, "parameter": args.parameter, **res.to_dict()},
                 list(row), [row])


def cmd_renorm(args) -> Table:
    m = make_family(args.family, args.parameter)
    tower = renorm_tower(m, max_depth=args.max_depth, max_period=args.max_period)
    rows = [{"level": i + 1, "period": r.n, "cumulative_period": cp, "J_lo": J.lo, "J_hi": J.hi}
            for i, (r, cp, J) in enumerate(zip(tower.stages, tower.cumulative_periods,
                                               tower.intervals))]
    payload = {"family": args.family, "parameter": args.parameter, **tower.to_dict()}
    return Table(payload, ["level", "period", "cumulative_period", "J_lo", "J_hi"], rows)


def cmd_orbit(args) -> Table:
    m = make_family(args.family, args.parameter)
    if args.period:
        seed = args.x0 if args.x0 is not None else m.critical_point
        orb = find_periodic_orbit(m, args.period, seed, accept_lower_period=True)
        if orb is None:
            raise FloatingPointError(f"Newton iteration found no period-{args.period} orbit")
        orbits = [orb]
    else:
        orbits = nonrepelling_scan(m, max_period=args.max_period).orbits
    rows = [{"period": o.period, "multiplier": o.multiplier, "kind": o.kind,
             "points": " ".join(repr(float(p)) for p in o.points)} for o in orbits]
    payload = {"family": args.family, "parameter": args.parameter,
               "orbits": [o.to_dict() for o in orbits]}
    return Table(payload, ["period", "multiplier", "kind", "points"], rows)


COMMANDS = {"classify": cmd_classify, "sweep": cmd_sweep, "decay": cmd_decay, "koebe": cmd_koebe,
            "conjugate": cmd_conjugate, "renorm": cmd_renorm, "orbit": cmd_orbit}


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI-style config file; flags override it")
    common.add_argument("--family", default="logistic", help=f"one of {sorted(FAMILIES)}")
    common.add_argument("--samples", type=int, default=1000)
    common.add_argument("--horizon", type=int, default=10_000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", default="json", help="json or csv")
    common.add_argument("--output", help="output file (default: stdout)")
    common.add_argument("--no-timestamp", action="store_true", default=False,
                        help="omit the generation timestamp")

    p = argparse.ArgumentParser(prog="unimodal", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    def param(sp):
        sp.add_argument("--param", dest="parameter", type=float, required=False)

    sp = add("classify", "classify the metric attractor at one parameter")
    param(sp)
    sp = add("sweep", "classify along a parameter range")
    sp.add_argument("--from", dest="start", type=float)
    sp.add_argument("--to", dest="stop", type=float)
    sp.add_argument("--step", type=float)
    sp.add_argument("--jobs", type=int, default=0, help="worker processes (0: all CPUs)")
    sp.add_argument("--atlas", help="write parameter/tail-point CSV for a bifurcation plot")
    sp.add_argument("--atlas-points", dest="atlas_points", type=int, default=64)
    sp.add_argument("--figure", help="save a bifurcation figure (needs matplotlib)")
    sp = add("decay", "nesting ratios along the central-domain tower")
    param(sp)
    sp.add_argument("--depth", type=int, default=4)
    sp.add_argument("--scale", type=float, default=0.25)
    sp.add_argument("--figure", help="save a decay plot (needs matplotlib)")
    sp = add("koebe", "compare a derivative ratio with the Koebe bound")
    param(sp)
    sp.add_argument("--n", type=int, default=5)
    sp.add_argument("--x0", type=float, help="T is the maximal monotone interval of f^n at x0")
    sp.add_argument("--inner", type=float, default=0.5, help="|J|/|T|")
    sp = add("conjugate", "search for a negative-Schwarzian conjugated return map")
    param(sp)
    sp.add_argument("--scale", type=float, default=0.05)
    sp.add_argument("--halvings", type=int, default=8)
    sp = add("renorm", "renormalization tower")
    param(sp)
    sp.add_argument("--max-depth", dest="max_depth", type=int, default=8)
    sp.add_argument("--max-period", dest="max_period", type=int, default=64)
    sp = add("orbit", "locate periodic orbits")
    param(sp)
    sp.add_argument("--period", type=int)
    sp.add_argument("--x0", type=float)
    sp.add_argument("--max-period", dest="max_period", type=int, default=12)
    return p


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def config_defaults(path: str, command: str, sp: argparse.ArgumentParser) -> dict:
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    actions = {a.dest: a for a in sp._actions}
    out = {}
    for section in ("run", command):
        if not cp.has_section(section):
            continue
        for key, raw in cp.items(section):
            dest = _CONFIG_ALIASES.get(key, key.replace("-", "_"))
            if dest not in actions or dest in ("help", "config"):
                raise ConfigError(f"unknown config key {key!r} in [{section}]")
            action = actions[dest]
            if isinstance(action, argparse._StoreTrueAction):
                try:
                    out[dest] = cp.getboolean(section, key)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None
            else:
                try:
                    out[dest] = action.type(raw) if action.type else raw
                except ValueError:
                    raise ConfigError(f"bad value for {key!r}: {raw!r}") from None
    return out


def validate(args) -> None:
    if args.family not in FAMILIES:
        raise ConfigError(f"unknown family {args.family!r}; choose from {sorted(FAMILIES)}")
    if args.format not in ("json", "csv"):
        raise ConfigError(f"format must be json or csv, got {args.format!r}")
    if args.samples < 1 or args.horizon < 1:
        raise ConfigError("samples and horizon must be >= 1")
    if args.command == "sweep":
        if None in (args.start, args.stop, args.step):
            raise ConfigError("sweep needs --from, --to and --step")
        if not args.start < args.stop:
            raise ConfigError("malformed range: need from < to")
        if not args.step > 0:
            raise ConfigError("malformed range: step must be positive")
        if args.jobs < 0:
            raise ConfigError("jobs must be >= 0")
        for a in (args.start, args.stop):
            make_family(args.family, a)
    elif args.parameter is None:
        raise ConfigError(f"{args.command} needs --param")
    else:
        make_family(args.family, args.parameter)
    if args.command == "koebe" and not (0 < args.inner < 1 and args.n >= 1):
        raise ConfigError("koebe needs n >= 1 and 0 < inner < 1")
    if args.command == "decay" and args.depth < 1:
        raise ConfigError("depth must be >= 1")
    for path in (args.output, getattr(args, "atlas", None), getattr(args, "figure", None)):
        if path:
            folder = os.path.dirname(os.path.abspath(path))
            if not os.path.isdir(folder) or not os.access(folder, os.W_OK):
                raise ConfigError(f"output location is not writable: {path}")


def parse(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sp = _subparser(parser, args.command)
        sp.set_defaults(**config_defaults(args.config, args.command, sp))
        args = parser.parse_args(argv)
    return args


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
        validate(args)
    except SystemExit as exc:  # argparse usage errors and --help
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            table = COMMANDS[args.command](args)
    except (FloatingPointError, ArithmeticError, HypothesisError, ValueError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ImportError as exc:
        print(f"config error: {exc} (install the 'plot' extra for --figure)", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = render(table, args.format, not args.no_timestamp)
    try:
        if args.output:
            _write(args.output, text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"config error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

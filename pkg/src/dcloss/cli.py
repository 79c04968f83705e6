"""Command-line front end (``dcloss``).

Exit codes: 0 ok, 1 validation failure, 2 golden mismatch, 3 infeasible
calibration.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .calibration import DEFAULT_Q_CANDIDATES, calibrate_scenario
from .channel import Infeasible
from .config import McSpec, ScenarioConfig, SchemaError, format_q, load_config, parse_config, parse_q
from .strategy import MODES, POLICIES, PathPair, SchedulingPolicy, evaluate
from .sim import SimConfig, convergence_report
from .sweep import SweepResult, SweepRow, cell_seed, emit, run_sweep
from .tables import TABLES, golden_text, load_published, table_config_text

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_GOLDEN = 2
EXIT_INFEASIBLE = 3

PD_PS_TOLERANCE = 1e-6
NC_HIGHLIGHT_TOLERANCE = 0.10


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would read as a golden mismatch.
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _u64(text):
    value = int(text)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _q(text):
    try:
        return parse_q(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _common(table_choice=True):
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="scenario file")
    if table_choice:
        p.add_argument("--table", type=int, choices=TABLES,
                       help="use a shipped table fixture instead of --config")
    p.add_argument("--out", type=Path, help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "table"), help="output format")
    p.add_argument("--seed", type=_u64, help="Monte-Carlo master seed")
    p.add_argument("--rounds", type=_positive, help="Monte-Carlo rounds per cell")
    p.add_argument("--q", type=_q, default=argparse.SUPPRESS,
                   help="field size (2^m, a prime, or 'inf' for an ideal decoder)")
    p.add_argument("--mode", choices=MODES, help="NC recovery formula")
    p.add_argument("--jobs", type=_positive, default=1, help="worker threads")
    return p


def _cell_args(p):
    p.add_argument("--policy", choices=POLICIES)
    p.add_argument("--channels", help="two channel names from the config, comma separated")
    p.add_argument("--n", type=_positive, help="packets per round")
    p.add_argument("--k", type=_positive, help="NC generation size")
    p.add_argument("--lb", type=float, default=1.0, help="share of split traffic on path 1")
    p.add_argument("--dt", type=float, default=0.0, help="duplicated share (pdps)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dcloss", description="E2E packet loss of dual-path scheduling.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", parents=[_common()], help="evaluate one policy")
    _cell_args(p)
    p = sub.add_parser("sweep", parents=[_common()], help="evaluate a config grid")
    p = sub.add_parser("simulate", parents=[_common()],
                       help="Monte-Carlo check of one policy or a whole grid")
    _cell_args(p)
    p.add_argument("--sigma", type=float, help="z-score tolerance (default 3)")

    p = sub.add_parser("calibrate", parents=[_common()], help="fit channels to published values")
    p.add_argument("--golden", type=Path, help="CSV of published cells (default: shipped tables)")

    p = sub.add_parser("reproduce-tables", parents=[_common(table_choice=False)],
                       help="rerun the shipped table fixtures and diff against goldens")
    p.add_argument("--table", type=int, choices=TABLES, action="append",
                   help="restrict to one table (repeatable)")
    return parser


def _load(args) -> ScenarioConfig:
    if args.config is not None and getattr(args, "table", None):
        raise UsageError("give either --config or --table, not both")
    if args.config is not None:
        try:
            return load_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read {args.config}: {exc.strerror}") from None
    if getattr(args, "table", None):
        return parse_config(table_config_text(args.table))
    raise UsageError("a scenario is required: pass --config or --table")


def _overrides(args, config):
    return config.with_overrides(
        q=format_q(args.q) if hasattr(args, "q") else None,
        mode=args.mode, rounds=args.rounds, seed=args.seed,
    )


def _write(args, config, data: bytes):
    target = args.out or (Path(config.output.path) if config and config.output.path else None)
    if target is None:
        sys.stdout.write(data.decode())
        sys.stdout.flush()
    else:
        target.write_bytes(data)


def _fmt(args, config):
    return args.format or (config.output.format if config else "csv")


def _single_cell(args, config):
    if args.channels:
        names = [c.strip() for c in args.channels.split(",") if c.strip()]
    else:
        names = list(config.sweeps[0].channels)
    if len(names) != 2:
        raise UsageError("--channels needs exactly two names")
    for name in names:
        if name not in config.channels:
            raise UsageError(f"unknown channel {name!r}; config defines {sorted(config.channels)}")
    paths = PathPair(config.channels[names[0]].build(), config.channels[names[1]].build())
    block = config.sweeps[0]
    n = args.n or block.n[0]
    for name, v in (("lb", args.lb), ("dt", args.dt)):
        if not 0.0 <= v <= 1.0:
            raise UsageError(f"--{name} must be in [0, 1]")
    q = args.q if hasattr(args, "q") else block.q[0]
    mode = args.mode or block.mode
    if args.policy == "pd":
        return SweepRow("pd", n, 0.0, dt=1.0), SchedulingPolicy.pd(n), paths
    if args.policy == "ps":
        return SweepRow("ps", n, 0.0, lb=args.lb, dt=0.0), SchedulingPolicy.ps(args.lb, n), paths
    if args.policy == "pdps":
        row = SweepRow("pdps", n, 0.0, lb=args.lb, dt=args.dt)
        return row, SchedulingPolicy.pdps(args.dt, args.lb, n), paths
    if args.k is None:
        raise UsageError("--policy nc needs --k")
    if args.k > n:
        raise UsageError(f"pair (N={n}, K={args.k}) violates K <= N")
    row = SweepRow("nc", n, 0.0, lb=args.lb, k=args.k, q=q, has_q=True)
    return row, SchedulingPolicy.nc(n, args.k, args.lb, q, mode), paths


def _evaluate_single(args, config, mc: McSpec | None):
    row, policy, paths = _single_cell(args, config)
    report = evaluate(paths, policy)
    row = replace(row, e2e_plr=report.e2e_plr, rf=report.redundancy_factor,
                  coding_rate=report.redundancy_factor if policy.kind == "nc" else None)
    if mc is not None:
        sim = SimConfig(mc.rounds, cell_seed(mc.seed, 0), policy, paths,
                        lane_rounds=mc.lane_rounds, cold_start=mc.cold_start)
        conv = convergence_report(sim, report.e2e_plr, sigma=mc.sigma, jobs=args.jobs)
        row = replace(row, mc_plr=conv.result.empirical_plr, mc_stderr=conv.result.std_error,
                      z=conv.z, mc_passed=conv.passed)
    return SweepResult((row,))


def cmd_analyze(args):
    if args.policy is None:
        raise UsageError("analyze needs --policy")
    config = _overrides(args, _load(args))
    mc = config.mc if args.rounds is not None or args.seed is not None else None
    result = _evaluate_single(args, config, mc)
    _write(args, config, emit(result, _fmt(args, config)))
    return EXIT_OK


def cmd_sweep(args):
    config = _overrides(args, _load(args))
    result = run_sweep(config, jobs=args.jobs)
    _write(args, config, emit(result, _fmt(args, config)))
    return EXIT_OK


def _mc_failures(result):
    return [r for r in result.rows if r.mc_passed is False]


def cmd_simulate(args):
    config = _overrides(args, _load(args))
    mc = config.mc or McSpec()
    if args.sigma is not None:
        mc = replace(mc, sigma=args.sigma)
    config = replace(config, mc=mc)
    if args.policy is not None:
        result = _evaluate_single(args, config, mc)
    else:
        result = run_sweep(config, jobs=args.jobs)
    _write(args, config, emit(result, _fmt(args, config)))
    failed = _mc_failures(result)
    if failed:
        print(f"{len(failed)} of {len(result.rows)} cells exceed {mc.sigma} sigma", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def cmd_calibrate(args):
    try:
        golden = load_published(args.golden)
    except OSError as exc:
        raise UsageError(f"cannot read {args.golden}: {exc.strerror}") from None
    except (KeyError, ValueError) as exc:
        raise UsageError(f"malformed golden table: {exc}") from None
    if args.table:
        golden = [c for c in golden if c.table == args.table]
    config = load_config(args.config) if args.config is not None else None
    qs = (args.q,) if hasattr(args, "q") else DEFAULT_Q_CANDIDATES
    modes = (args.mode,) if args.mode else MODES
    report = calibrate_scenario(golden, config, q_candidates=qs, modes=modes)
    sys.stdout.write(report.format())
    if args.out is not None:
        args.out.write_text(report.config_snippet())
    return EXIT_OK


def _published_mismatches(table, rows):
    index = {}
    for r in rows:
        x = r.k if r.policy == "nc" else round(r.dt, 9)
        panel = "nc" if r.policy == "nc" else "pdps"
        index[(r.n, panel, x, round(r.lb, 9))] = r.e2e_plr
    bad = []
    for c in load_published():
        if c.table != table:
            continue
        x = c.k if c.panel == "nc" else round(c.dt, 9)
        got = index.get((c.n, c.panel, x, round(c.lb, 9)))
        if got is None:
            bad.append(f"N={c.n} {c.panel} x={x} LB={c.lb}: not in sweep")
        elif c.panel == "pdps" and abs(got - c.value) > PD_PS_TOLERANCE:
            bad.append(f"N={c.n} DT={x} LB={c.lb}: {got:.9g} vs published {c.value:g}")
        elif c.panel == "nc" and c.highlighted and abs(got - c.value) > NC_HIGHLIGHT_TOLERANCE * c.value:
            bad.append(f"N={c.n} K={x} LB={c.lb}: {got:.9g} vs published {c.value:g}")
    return bad


def cmd_reproduce(args):
    if args.config is not None:
        raise UsageError("reproduce-tables runs the shipped fixtures; --config is not accepted")
    tables = sorted(set(args.table)) if args.table else list(TABLES)
    fmt = args.format or "csv"
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    for t in tables:
        config = _overrides(args, parse_config(table_config_text(t)))
        analytic = replace(config, mc=None)
        result = run_sweep(analytic, jobs=args.jobs)
        produced = emit(result, "csv")
        same = produced == golden_text(t).encode()
        bad = _published_mismatches(t, result.rows)
        line = f"table {t}: golden {'identical' if same else 'DIFFERS'}, "
        line += f"published cells {'ok' if not bad else f'{len(bad)} off'}"
        mc_bad = []
        if config.mc is not None:
            result = run_sweep(config, jobs=args.jobs)
            mc_bad = _mc_failures(result)
            line += f", monte-carlo {len(result.rows) - len(mc_bad)}/{len(result.rows)} within sigma"
        print(line)
        for b in bad:
            print(f"  {b}")
        if args.out is not None:
            suffix = "csv" if fmt == "csv" else "txt"
            (args.out / f"table{t}.{suffix}").write_bytes(emit(result, fmt))
        elif args.format == "table":
            sys.stdout.write(emit(result, "table").decode())
        if not same or bad:
            status = EXIT_GOLDEN
        elif mc_bad and status == EXIT_OK:
            status = EXIT_INVALID
    return status


COMMANDS = {
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "calibrate": cmd_calibrate,
    "reproduce-tables": cmd_reproduce,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (UsageError, SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

"""Policy sweeps over a scenario config and their CSV / pretty-table output."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .config import ScenarioConfig, format_q
from .sim import SimConfig, convergence_report
from .strategy import PathPair, SchedulingPolicy, evaluate

__all__ = ["SweepRow", "SweepResult", "run_sweep", "emit", "CSV_HEADER", "cell_seed"]

CSV_HEADER = ("policy", "lb", "dt", "k", "n", "q", "rf", "coding_rate",
              "e2e_plr", "mc_plr", "mc_stderr", "z")
_POLICY_ORDER = {"pd": 0, "ps": 1, "pdps": 2, "nc": 3}


@dataclass(frozen=True)
class SweepRow:
    policy: str
    n: int
    e2e_plr: float
    lb: float | None = None
    dt: float | None = None
    k: int | None = None
    q: int | None = None
    rf: float | None = None
    coding_rate: float | None = None
    mc_plr: float | None = None
    mc_stderr: float | None = None
    z: float | None = None
    highlighted: bool = False
    mc_passed: bool | None = None
    # Set for NC rows only: the q column is empty for other policies.
    has_q: bool = False

    def sort_key(self):
        x = self.k if self.policy == "nc" else (self.dt if self.dt is not None else 0.0)
        return (_POLICY_ORDER[self.policy], self.n, x,
                self.q if self.q is not None else float("inf"),
                self.lb if self.lb is not None else -1.0)


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]


def _cells(config: ScenarioConfig):
    built = {}

    def chan(name):
        if name not in built:
            built[name] = config.channels[name].build()
        return built[name]

    cells = []
    for block in config.sweeps:
        paths = PathPair(chan(block.channels[0]), chan(block.channels[1]))
        for n in block.n:
            for policy in block.policies:
                if policy == "pd":
                    pol = SchedulingPolicy.pd(n)
                    hl = any(h[0] == "pd" for h in block.highlight)
                    cells.append((SweepRow("pd", n, 0.0, dt=1.0, highlighted=hl), pol, paths))
                elif policy == "ps":
                    for lb in block.lb:
                        hl = ("ps", 0.0, lb) in block.highlight
                        cells.append((SweepRow("ps", n, 0.0, lb=lb, dt=0.0, highlighted=hl),
                                      SchedulingPolicy.ps(lb, n), paths))
                elif policy == "pdps":
                    for dt in block.dt:
                        for lb in block.lb:
                            hl = ("pdps", dt, lb) in block.highlight
                            cells.append((SweepRow("pdps", n, 0.0, lb=lb, dt=dt, highlighted=hl),
                                          SchedulingPolicy.pdps(dt, lb, n), paths))
                else:
                    for k in block.k:
                        for q in block.q:
                            for lb in block.lb:
                                hl = ("nc", float(k), lb) in block.highlight
                                row = SweepRow("nc", n, 0.0, lb=lb, k=k, q=q, highlighted=hl, has_q=True)
                                cells.append((row, SchedulingPolicy.nc(n, k, lb, q, block.mode), paths))
    order = sorted(range(len(cells)), key=lambda i: cells[i][0].sort_key())
    return [cells[i] for i in order]


def cell_seed(master: int, index: int) -> int:
    """Per-cell seed derived from the master seed and the cell's output position."""
    state = np.random.SeedSequence([int(master), int(index)]).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def _evaluate_cell(index, cell, mc):
    row, policy, paths = cell
    report = evaluate(paths, policy)
    rf = report.redundancy_factor
    row = replace(row, e2e_plr=report.e2e_plr, rf=rf,
                  coding_rate=rf if policy.kind == "nc" else None)
    if mc is not None:
        sim = SimConfig(mc.rounds, cell_seed(mc.seed, index), policy, paths,
                        lane_rounds=mc.lane_rounds, cold_start=mc.cold_start)
        conv = convergence_report(sim, report.e2e_plr, sigma=mc.sigma)
        row = replace(row, mc_plr=conv.result.empirical_plr, mc_stderr=conv.result.std_error,
                      z=conv.z, mc_passed=conv.passed)
    return row


def run_sweep(config: ScenarioConfig, jobs: int = 1) -> SweepResult:
    """Evaluate every grid cell; MC columns are attached when ``config.mc`` is set.

    Rows are ordered by (policy, N, DT or K, q, LB).
    """
    cells = _cells(config)
    if jobs > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda ic: _evaluate_cell(ic[0], ic[1], config.mc), enumerate(cells)))
    else:
        rows = [_evaluate_cell(i, c, config.mc) for i, c in enumerate(cells)]
    return SweepResult(tuple(rows))


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.9g}"


def _fields(row: SweepRow):
    return (
        row.policy,
        _fmt(row.lb),
        _fmt(row.dt),
        _fmt(row.k),
        _fmt(row.n),
        format_q(row.q) if row.has_q else "",
        _fmt(row.rf),
        _fmt(row.coding_rate),
        _fmt(row.e2e_plr),
        _fmt(row.mc_plr),
        _fmt(row.mc_stderr),
        _fmt(row.z),
    )


def emit(result: SweepResult, fmt: str = "csv") -> bytes:
    """Serialise rows as CSV (fixed header, 9 significant digits) or an aligned table."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in result.rows:
            writer.writerow(_fields(row))
        return buf.getvalue().encode()
    if fmt == "table":
        table = [CSV_HEADER] + [_fields(r) for r in result.rows]
        marks = [""] + ["*" if r.highlighted else "" for r in result.rows]
        widths = [max(len(line[i]) for line in table) for i in range(len(CSV_HEADER))]
        out = []
        for line, mark in zip(table, marks):
            cells = [v.rjust(w) for v, w in zip(line, widths)]
            out.append(("  ".join(cells) + (" *" if mark else "")).rstrip())
        if any(marks):
            out.append("* highlighted in the published table")
        return ("\n".join(out) + "\n").encode()
    raise ValueError(f"unknown format {fmt!r}; expected 'csv' or 'table'")

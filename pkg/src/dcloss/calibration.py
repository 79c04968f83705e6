"""Recover channel parameters from published E2E-PLR tables.

Loss rates are read directly off the single-path PD+PS cells (DT=0 with LB=1
or LB=0). Burstiness is then fitted per channel from one single-path NC cell,
separately for every candidate field size and recovery mode, and every other
NC cell is scored against the fitted model. The (q, mode) pair with the
smallest RMS log-residual wins.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .channel import GilbertElliottChannel, Infeasible
from .config import format_q
from .strategy import MODES, PathPair, nc_plr, split_counts
from .tables import PublishedCell

__all__ = ["CellResidual", "FitResult", "CalibrationReport", "calibrate_scenario",
           "fit_stay_good", "DEFAULT_Q_CANDIDATES"]

DEFAULT_Q_CANDIDATES = (16, 256, 65536, None)


@dataclass(frozen=True)
class CellResidual:
    cell: PublishedCell
    predicted: float

    @property
    def rel_error(self) -> float:
        return abs(self.predicted - self.cell.value) / self.cell.value

    @property
    def log_ratio(self) -> float:
        if self.predicted <= 0:
            return math.inf
        return math.log(self.predicted / self.cell.value)


@dataclass
class FitResult:
    q: int | None
    mode: str
    channels: dict = field(default_factory=dict)
    fit_cells: dict = field(default_factory=dict)
    residuals: list = field(default_factory=list)
    infeasible: str | None = None

    @property
    def feasible(self) -> bool:
        return self.infeasible is None

    @property
    def rms_log(self) -> float:
        if not self.feasible or not self.residuals:
            return math.inf
        return math.sqrt(sum(r.log_ratio ** 2 for r in self.residuals) / len(self.residuals))

    @property
    def max_rel(self) -> float:
        return max((r.rel_error for r in self.residuals), default=math.inf)

    @property
    def median_rel(self) -> float:
        if not self.residuals:
            return math.inf
        return float(np.median([r.rel_error for r in self.residuals]))

    @property
    def max_rel_highlighted(self) -> float:
        return max((r.rel_error for r in self.residuals if r.cell.highlighted), default=math.inf)

    @property
    def label(self) -> str:
        return f"q={format_q(self.q)} mode={self.mode}"


@dataclass
class CalibrationReport:
    pi_bad: dict
    pi_bad_spread: dict
    fits: list
    best: FitResult

    def format(self) -> str:
        lines = ["Loss rates read from single-path PD+PS cells:"]
        for name, pi in self.pi_bad.items():
            lines.append(f"  {name:<10} pi_bad = {pi:.9g}   (spread across tables {self.pi_bad_spread[name]:.2g})")
        lines.append("")
        lines.append("Fit quality per (q, mode):")
        lines.append(f"  {'candidate':<24} {'rms log':>10} {'median rel':>11} {'max rel':>10} {'max rel*':>10}")
        for fit in self.fits:
            if not fit.feasible:
                lines.append(f"  {fit.label:<24} infeasible: {fit.infeasible}")
                continue
            lines.append(
                f"  {fit.label:<24} {fit.rms_log:>10.4g} {fit.median_rel:>11.4g} "
                f"{fit.max_rel:>10.4g} {fit.max_rel_highlighted:>10.4g}"
            )
        lines.append("  (* = highlighted cells only)")
        lines.append("")
        best = self.best
        lines.append(f"Best fit: {best.label}")
        for name, ch in best.channels.items():
            n, k = best.fit_cells[name]
            lines.append(f"  {name:<10} p_stay_good = {ch.p_stay_good:.12g}  p_stay_bad = {ch.p_stay_bad:.12g}"
                         f"   (fitted on N={n}, K={k})")
        lines.append("")
        lines.append("Residuals of every NC cell under the best fit:")
        lines.append(f"  {'table':>5} {'N':>3} {'K':>3} {'LB':>5} {'published':>12} {'model':>12} {'rel err':>9}")
        for r in best.residuals:
            c = r.cell
            star = " *" if c.highlighted else ""
            lines.append(f"  {c.table:>5} {c.n:>3} {c.k:>3} {c.lb:>5.3g} {c.value:>12.6g} "
                         f"{r.predicted:>12.6g} {r.rel_error:>9.3%}{star}")
        return "\n".join(lines) + "\n"

    def config_snippet(self) -> str:
        """``[channel.*]`` sections for the best-fit channels."""
        out = []
        for name, ch in self.best.channels.items():
            out += [f"[channel.{name}]", f"p_stay_good = {ch.p_stay_good:.15g}",
                    f"p_stay_bad = {ch.p_stay_bad:.15g}", ""]
        return "\n".join(out)


def _channel_from(pi_bad, g):
    b = 2.0 - g - (1.0 - g) / pi_bad
    return GilbertElliottChannel(g, min(max(b, 0.0), 1.0))


def fit_stay_good(pi_bad: float, objective, grid: int = 400) -> float:
    """Root of ``objective(channel)`` over p_stay_good at fixed loss rate.

    Scans from the i.i.d.-or-less-bursty end towards g -> 1 and refines the
    first sign change with Brent's method.
    """
    g_lo = max(0.0, (1.0 - 2.0 * pi_bad) / (1.0 - pi_bad))
    # Geometric spacing in 1 - g resolves the bursty end.
    gaps = np.geomspace(1.0 - g_lo if g_lo < 1.0 else 1e-12, 1e-10, grid)
    gs = 1.0 - gaps

    def f(g):
        return objective(_channel_from(pi_bad, g))

    prev_g, prev_v = gs[0], f(gs[0])
    if prev_v == 0.0:
        return float(prev_g)
    for g in gs[1:]:
        v = f(g)
        if v == 0.0:
            return float(g)
        if (v > 0) != (prev_v > 0):
            return float(brentq(f, prev_g, g, xtol=1e-15, rtol=1e-14))
        prev_g, prev_v = g, v
    raise Infeasible(f"no p_stay_good reproduces the target at loss rate {pi_bad}")


def _single_path_plr(channel, n, k, q, mode):
    return nc_plr(PathPair(channel, channel), n, 0, k, q, mode).e2e_plr


def _read_loss_rates(cells):
    readings = defaultdict(list)
    for c in cells:
        if c.panel == "pdps" and c.dt == 0.0 and c.single_path is not None:
            readings[c.single_path].append(c.value)
    pi = {name: vals[0] for name, vals in readings.items()}
    spread = {name: max(vals) - min(vals) for name, vals in readings.items()}
    return pi, spread


def _fit_candidate(q, mode, pi_bad, nc_cells) -> FitResult:
    fit = FitResult(q, mode)
    for name, pi in pi_bad.items():
        rows = sorted(
            (c for c in nc_cells if c.single_path == name),
            key=lambda c: (c.n, -c.k),
        )
        if not rows:
            fit.infeasible = f"no single-path NC cell for channel {name}"
            return fit
        for c in rows:
            try:
                g = fit_stay_good(pi, lambda ch, c=c: _single_path_plr(ch, c.n, c.k, q, mode) - c.value)
            except Infeasible:
                continue
            fit.channels[name] = _channel_from(pi, g)
            fit.fit_cells[name] = (c.n, c.k)
            break
        else:
            fit.infeasible = f"no single-path NC cell of channel {name} can be matched"
            return fit
    for c in nc_cells:
        paths = PathPair(fit.channels[c.channel_1], fit.channels[c.channel_2])
        n1, n2 = split_counts(c.n, c.lb)
        fit.residuals.append(CellResidual(c, nc_plr(paths, n1, n2, c.k, q, mode).e2e_plr))
    return fit


def calibrate_scenario(golden: list[PublishedCell], config=None,
                       q_candidates=DEFAULT_Q_CANDIDATES, modes=MODES) -> CalibrationReport:
    """Fit every channel named in ``golden`` and rank the (q, mode) candidates.

    When ``config`` is given, its channel names must all be covered by the
    golden cells. Raises Infeasible if no candidate fits.
    """
    pi_bad, spread = _read_loss_rates(golden)
    names = {c.channel_1 for c in golden} | {c.channel_2 for c in golden}
    missing = sorted(names - set(pi_bad))
    if config is not None:
        missing += sorted(set(config.channels) - set(pi_bad) - set(missing))
    if missing:
        raise Infeasible(f"no single-path PD+PS cell gives the loss rate of {', '.join(missing)}")
    nc_cells = [c for c in golden if c.panel == "nc"]
    fits = [_fit_candidate(q, mode, pi_bad, nc_cells) for q in q_candidates for mode in modes]
    feasible = [f for f in fits if f.feasible]
    if not feasible:
        raise Infeasible("no (q, mode) candidate produces an ergodic channel fit")
    best = min(feasible, key=lambda f: f.rms_log)
    return CalibrationReport(dict(sorted(pi_bad.items())), spread, fits, best)

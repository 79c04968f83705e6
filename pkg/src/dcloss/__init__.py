"""Packet loss of dual-connectivity scheduling over bursty erasure channels."""

from ._backend import available_backends, backend_name, use_backend
from .calibration import CalibrationReport, FitResult, calibrate_scenario
from .channel import (
    DegenerateChain,
    GilbertElliottChannel,
    Infeasible,
    LossPmf,
    StationaryDistribution,
    calibrate,
    loss_pmf,
    sample_path,
    sample_windows,
    stationary,
)
from .config import RangeError, ScenarioConfig, SchemaError, load_config, parse_config
from .gf import (
    DivisionByZero,
    FieldSpec,
    GfMatrix,
    Unrepresentable,
    decode_prob_mc,
    decode_prob_paper,
    field,
    full_rank_prob_exact,
    rank,
)
from .sim import ConvergenceReport, SimConfig, SimResult, convergence_report, run_policy
from .strategy import (
    InvalidGeneration,
    PathPair,
    PolicyReport,
    SchedulingPolicy,
    evaluate,
    nc_plr,
    nc_recovery_prob,
    pd_plr,
    pdps_plr,
    ps_loss_pmf,
    ps_plr,
)
from .sweep import SweepResult, SweepRow, emit, run_sweep

__version__ = "0.1.0"

__all__ = [
    "available_backends", "backend_name", "use_backend",
    "CalibrationReport", "FitResult", "calibrate_scenario",
    "DegenerateChain", "GilbertElliottChannel", "Infeasible", "LossPmf",
    "StationaryDistribution", "calibrate", "loss_pmf", "sample_path",
    "sample_windows", "stationary",
    "RangeError", "ScenarioConfig", "SchemaError", "load_config", "parse_config",
    "DivisionByZero", "FieldSpec", "GfMatrix", "Unrepresentable", "decode_prob_mc",
    "decode_prob_paper", "field", "full_rank_prob_exact", "rank",
    "ConvergenceReport", "SimConfig", "SimResult", "convergence_report", "run_policy",
    "InvalidGeneration", "PathPair", "PolicyReport", "SchedulingPolicy", "evaluate",
    "nc_plr", "nc_recovery_prob", "pd_plr", "pdps_plr", "ps_loss_pmf", "ps_plr",
    "SweepResult", "SweepRow", "emit", "run_sweep",
]

"""Monte-Carlo execution of scheduling policies over sampled channel paths.

Rounds are grouped into fixed-size lanes. Each lane owns a child seed spawned
from the master seed and a continuous channel run (state carries over between
rounds inside the lane). Lanes are independent, so they can run on worker
threads; merging sums integer counts in lane order, which makes the result
independent of the number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import GilbertElliottChannel, sample_path, sample_windows
from .gf import batch_rank, field, random_matrices
from .strategy import PathPair, SchedulingPolicy

__all__ = ["SimConfig", "SimResult", "ConvergenceReport", "run_policy", "convergence_report", "slot_roles"]

DEFAULT_LANE_ROUNDS = 10_000


@dataclass(frozen=True)
class SimConfig:
    rounds: int
    seed: int
    policy: SchedulingPolicy
    paths: PathPair
    lane_rounds: int = DEFAULT_LANE_ROUNDS
    # Restart every window from the stationary distribution (i.i.d. rounds).
    cold_start: bool = False

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.lane_rounds < 1:
            raise ValueError("lane_rounds must be >= 1")


@dataclass(frozen=True)
class SimResult:
    empirical_plr: float
    std_error: float
    rounds_executed: int
    lost: int
    offered: int


@dataclass(frozen=True)
class ConvergenceReport:
    result: SimResult
    analytic: float
    z: float
    passed: bool


def _randomized_round(x, rng, size):
    """floor(x) or ceil(x) with mean exactly x."""
    base = math.floor(x)
    frac = x - base
    if frac < 1e-12:
        return np.full(size, int(base), dtype=np.int64)
    return base + (rng.random(size) < frac).astype(np.int64)


def slot_roles(policy: SchedulingPolicy, rounds: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Per-round (duplicated, path-1-only) slot counts for PD/PS/PDPS.

    Slots [0, D) carry duplicated packets, [D, D + S1) path-1-only packets and
    the rest path-2-only packets. Fractional shares are rounded at random per
    round so that the expected count of each role is exact.
    """
    n = policy.block_n
    if policy.kind == "pd":
        return np.full(rounds, n, dtype=np.int64), np.zeros(rounds, dtype=np.int64)
    d = policy.duplication_ratio if policy.kind == "pdps" else 0.0
    dup = _randomized_round(d * n, rng, rounds)
    rest = n - dup
    w1 = policy.load_balance
    s1 = np.floor(w1 * rest).astype(np.int64)
    frac = w1 * rest - s1
    s1 += (rng.random(rounds) < frac) & (frac > 1e-12)
    return dup, np.minimum(s1, rest)


def _erasures(channel: GilbertElliottChannel, rounds, slots, rng, cold_start):
    if slots == 0:
        return np.zeros((rounds, 0), dtype=bool)
    if cold_start:
        bits = sample_windows(channel, slots, rounds, rng)
    else:
        bits = sample_path(channel, rounds * slots, rng).reshape(rounds, slots)
    return bits.astype(bool)


def _run_lane(config: SimConfig, rounds: int, seed_seq) -> tuple[int, int]:
    """Returns (lost units, offered units) for one lane."""
    rng = np.random.default_rng(seed_seq)
    policy = config.policy
    n = policy.block_n
    if policy.kind != "nc":
        # Both paths see one slot per packet position; unused slots idle.
        e1 = _erasures(config.paths.channel_1, rounds, n, rng, config.cold_start)
        e2 = _erasures(config.paths.channel_2, rounds, n, rng, config.cold_start)
        dup, s1 = slot_roles(policy, rounds, rng)
        pos = np.arange(n)
        is_dup = pos < dup[:, None]
        only_1 = ~is_dup & (pos < (dup + s1)[:, None])
        only_2 = ~is_dup & ~only_1
        lost = np.count_nonzero(is_dup & e1 & e2)
        lost += np.count_nonzero(only_1 & e1) + np.count_nonzero(only_2 & e2)
        return int(lost), rounds * n
    n1, n2 = policy.split
    e1 = _erasures(config.paths.channel_1, rounds, n1, rng, config.cold_start)
    e2 = _erasures(config.paths.channel_2, rounds, n2, rng, config.cold_start)
    k = policy.generation_k
    received = np.concatenate([~e1, ~e2], axis=1)
    if policy.field_size is None:
        decoded = received.sum(axis=1) >= k
    else:
        spec = field(policy.field_size)
        coeffs = random_matrices(rng, rounds, policy.block_n, k, spec)
        coeffs[~received] = 0
        decoded = batch_rank(coeffs, spec) == k
    return int(rounds - np.count_nonzero(decoded)), rounds


def _lanes(config: SimConfig):
    count = -(-config.rounds // config.lane_rounds)
    sizes = [config.lane_rounds] * count
    sizes[-1] = config.rounds - config.lane_rounds * (count - 1)
    seeds = np.random.SeedSequence(config.seed).spawn(count)
    return list(zip(sizes, seeds))


def run_policy(config: SimConfig, jobs: int = 1) -> SimResult:
    """Simulate ``config.rounds`` rounds; deterministic in ``config.seed``.

    NC rounds score (K / N) * (1 - decoded) each, matching the analytic
    normalisation; other policies score lost packets over offered packets.
    """
    lanes = _lanes(config)
    if jobs > 1 and len(lanes) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            counts = list(pool.map(lambda lane: _run_lane(config, *lane), lanes))
    else:
        counts = [_run_lane(config, *lane) for lane in lanes]

    policy = config.policy
    scale = policy.generation_k / policy.block_n if policy.kind == "nc" else 1.0
    lost = sum(c[0] for c in counts)
    offered = sum(c[1] for c in counts)
    plr = scale * lost / offered
    return SimResult(plr, _std_error(counts, scale), config.rounds, lost, offered)


def _std_error(counts, scale):
    """Batch-means standard error over lanes (lanes absorb burst correlation).

    Falls back to the binomial formula when there is only one lane.
    """
    lost = np.array([c[0] for c in counts], dtype=np.float64)
    offered = np.array([c[1] for c in counts], dtype=np.float64)
    total = offered.sum()
    ratio = lost.sum() / total
    if len(counts) < 2:
        return scale * math.sqrt(ratio * (1.0 - ratio) / total)
    lanes = len(counts)
    w = offered / offered.mean()
    resid = lost / offered - ratio
    var = np.sum((w * resid) ** 2) / (lanes * (lanes - 1))
    return scale * math.sqrt(var)


def convergence_report(config: SimConfig, analytic: float, sigma: float = 3.0,
                       jobs: int = 1, result: SimResult | None = None) -> ConvergenceReport:
    """z = |empirical - analytic| / std_error; passes when z <= sigma."""
    if not 0.0 <= analytic <= 1.0:
        raise ValueError("analytic must be a probability")
    if result is None:
        result = run_policy(config, jobs=jobs)
    diff = abs(result.empirical_plr - analytic)
    if result.std_error > 0:
        z = diff / result.std_error
    else:
        z = 0.0 if diff == 0 else math.inf
    return ConvergenceReport(result, analytic, z, z <= sigma)

"""Closed-form end-to-end packet loss for dual-connectivity scheduling.

Two independent Gilbert-Elliott paths carry a round of N packets under one of
four policies:

* PD    every packet goes on both paths; lost iff both copies are erased.
* PS    N1 = w1 N packets on path 1, N2 = N - N1 on path 2.
* PDPS  a fraction d of the traffic is duplicated, the rest is split.
* NC    K information packets are RLNC-coded into N packets which are split;
        the generation decodes iff the received coefficient rows reach rank K.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import GilbertElliottChannel, LossPmf, loss_pmf, stationary
from .gf import full_rank_prob_exact

__all__ = [
    "InvalidGeneration",
    "PathPair",
    "SchedulingPolicy",
    "PolicyReport",
    "MODES",
    "split_counts",
    "pd_plr",
    "ps_loss_pmf",
    "ps_plr",
    "pdps_plr",
    "nc_recovery_prob",
    "nc_plr",
    "evaluate",
]

MODES = ("paper", "exact")
POLICIES = ("pd", "ps", "pdps", "nc")


class InvalidGeneration(ValueError):
    pass


@dataclass(frozen=True)
class PathPair:
    channel_1: GilbertElliottChannel
    channel_2: GilbertElliottChannel

    @property
    def loss_rates(self) -> tuple[float, float]:
        return stationary(self.channel_1).pi_bad, stationary(self.channel_2).pi_bad


def split_counts(n: int, w1: float) -> tuple[int, int]:
    """Integer split of ``n`` packets; a fractional part of exactly .5 goes to path 1."""
    if not 0.0 <= w1 <= 1.0:
        raise ValueError(f"load balance must be in [0, 1], got {w1}")
    n1 = math.floor(w1 * n + 0.5 + 1e-9)
    n1 = min(max(n1, 0), n)
    return n1, n - n1


@dataclass(frozen=True)
class SchedulingPolicy:
    """One scheduling policy; build with the ``pd``/``ps``/``pdps``/``nc`` helpers.

    ``field_size=None`` on an NC policy means an ideal decoder (q -> infinity).
    """

    kind: str
    block_n: int = 10
    load_balance: float = 1.0
    duplication_ratio: float = 0.0
    generation_k: int | None = None
    field_size: int | None = 256
    mode: str = "exact"

    def __post_init__(self):
        if self.kind not in POLICIES:
            raise ValueError(f"unknown policy {self.kind!r}; expected one of {POLICIES}")
        if self.block_n < 1:
            raise ValueError("block_n must be >= 1")
        for name in ("load_balance", "duplication_ratio"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.kind == "nc":
            if self.generation_k is None or not 1 <= self.generation_k:
                raise InvalidGeneration("NC needs generation_k >= 1")
            if self.generation_k > self.block_n:
                raise InvalidGeneration(
                    f"generation K={self.generation_k} exceeds block N={self.block_n}"
                )
            if self.field_size is not None and self.field_size < 2:
                raise ValueError("field_size must be >= 2 or None")
            if self.mode not in MODES:
                raise ValueError(f"mode must be one of {MODES}")

    @classmethod
    def pd(cls, n: int = 10):
        return cls("pd", block_n=n, duplication_ratio=1.0)

    @classmethod
    def ps(cls, w1: float, n: int = 10):
        return cls("ps", block_n=n, load_balance=w1)

    @classmethod
    def pdps(cls, d: float, w1: float, n: int = 10):
        return cls("pdps", block_n=n, load_balance=w1, duplication_ratio=d)

    @classmethod
    def nc(cls, n: int, k: int, w1: float, q: int | None = 256, mode: str = "exact"):
        return cls("nc", block_n=n, load_balance=w1, generation_k=k, field_size=q, mode=mode)

    @property
    def split(self) -> tuple[int, int]:
        return split_counts(self.block_n, self.load_balance)


@dataclass(frozen=True)
class PolicyReport:
    e2e_plr: float
    redundancy_factor: float


def pd_plr(p1: float, p2: float) -> float:
    """A duplicated packet is lost only when both copies are."""
    return p1 * p2


def ps_loss_pmf(paths: PathPair, n1: int, n2: int) -> LossPmf:
    """Total losses when n1 consecutive slots go on path 1 and n2 on path 2."""
    n1, n2 = int(n1), int(n2)
    if n1 < 0 or n2 < 0 or n1 + n2 < 1:
        raise ValueError("need n1, n2 >= 0 and n1 + n2 >= 1")
    if n2 == 0:
        return loss_pmf(paths.channel_1, n1)
    if n1 == 0:
        return loss_pmf(paths.channel_2, n2)
    mass = np.convolve(loss_pmf(paths.channel_1, n1).mass, loss_pmf(paths.channel_2, n2).mass)
    return LossPmf(n1 + n2, mass)


def ps_plr(paths: PathPair, w1: float) -> float:
    """Expected lost fraction under splitting: w1 p1 + (1 - w1) p2."""
    p1, p2 = paths.loss_rates
    return w1 * p1 + (1.0 - w1) * p2


def pdps_plr(paths: PathPair, d: float, w1: float) -> PolicyReport:
    """Duplicate a fraction ``d`` of the traffic, split the rest by ``w1``."""
    if not 0.0 <= d <= 1.0 or not 0.0 <= w1 <= 1.0:
        raise ValueError("d and w1 must be in [0, 1]")
    p1, p2 = paths.loss_rates
    return PolicyReport(d * pd_plr(p1, p2) + (1.0 - d) * (w1 * p1 + (1.0 - w1) * p2), 1.0 + d)


def nc_recovery_prob(paths: PathPair, n1: int, n2: int, k: int, q, mode: str = "exact") -> float:
    """Probability that a generation of ``k`` packets is recovered.

    ``mode="exact"`` conditions decoding on the number of coded packets that
    actually arrive. ``mode="paper"`` uses the product form
    (1 - P(l >= N - K)) * P_dec(N, K, q), with P_dec the full-rank probability
    of an N x K matrix. ``q=None`` is an ideal decoder.
    """
    n = int(n1) + int(n2)
    k = int(k)
    if k < 1:
        raise InvalidGeneration("k must be >= 1")
    if k > n:
        raise InvalidGeneration(f"generation K={k} exceeds N={n}")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    mass = ps_loss_pmf(paths, n1, n2).mass
    if mode == "paper":
        delivered = 1.0 - float(mass[n - k:].sum())
        return max(delivered, 0.0) * full_rank_prob_exact(n, k, q)
    total = math.fsum(mass[l] * full_rank_prob_exact(n - l, k, q) for l in range(n - k + 1))
    return min(total, 1.0)


def nc_plr(paths: PathPair, n1: int, n2: int, k: int, q, mode: str = "exact") -> PolicyReport:
    """(K / N) * (1 - P_rec), with coding rate N / K as the redundancy factor."""
    n = int(n1) + int(n2)
    p_rec = nc_recovery_prob(paths, n1, n2, k, q, mode)
    return PolicyReport(k / n * (1.0 - p_rec), n / k)


def evaluate(paths: PathPair, policy: SchedulingPolicy) -> PolicyReport:
    """Analytic E2E-PLR for any policy."""
    p1, p2 = paths.loss_rates
    if policy.kind == "pd":
        return PolicyReport(pd_plr(p1, p2), 2.0)
    if policy.kind == "ps":
        return PolicyReport(ps_plr(paths, policy.load_balance), 1.0)
    if policy.kind == "pdps":
        return pdps_plr(paths, policy.duplication_ratio, policy.load_balance)
    n1, n2 = policy.split
    return nc_plr(paths, n1, n2, policy.generation_k, policy.field_size, policy.mode)

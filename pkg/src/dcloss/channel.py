"""Two-state Markov (Gilbert-Elliott) erasure channel.

A path alternates between a good state G, where packets get through, and a
bad state B, where every packet is erased. The chain is parameterised by its
two stay probabilities::

    T = [[g,     1 - g],
         [1 - b, b    ]]

with ``g = p_stay_good`` and ``b = p_stay_bad``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend

__all__ = [
    "DegenerateChain",
    "Infeasible",
    "GilbertElliottChannel",
    "StationaryDistribution",
    "LossPmf",
    "stationary",
    "loss_pmf",
    "sample_path",
    "sample_windows",
    "calibrate",
]


class DegenerateChain(ValueError):
    """The chain has no unique stationary distribution."""


class Infeasible(ValueError):
    """No ergodic channel satisfies the requested targets."""


def _check_prob(name, value):
    value = float(value)
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise ValueError(f"{name} must be in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class GilbertElliottChannel:
    p_stay_good: float
    p_stay_bad: float

    def __post_init__(self):
        object.__setattr__(self, "p_stay_good", _check_prob("p_stay_good", self.p_stay_good))
        object.__setattr__(self, "p_stay_bad", _check_prob("p_stay_bad", self.p_stay_bad))

    @property
    def p_good_to_bad(self) -> float:
        return 1.0 - self.p_stay_good

    @property
    def is_ergodic(self) -> bool:
        """False when either state is absorbing."""
        return self.p_stay_good < 1.0 and self.p_stay_bad < 1.0

    @property
    def is_memoryless(self) -> bool:
        # Both rows of T equal: slots are i.i.d. Bernoulli(pi_bad).
        return math.isclose(self.p_stay_good + self.p_stay_bad, 1.0, abs_tol=1e-15)

    @property
    def loss_rate(self) -> float:
        return stationary(self).pi_bad

    @classmethod
    def lossless(cls) -> "GilbertElliottChannel":
        return cls(1.0, 0.0)


@dataclass(frozen=True)
class StationaryDistribution:
    pi_good: float
    pi_bad: float


def stationary(channel: GilbertElliottChannel) -> StationaryDistribution:
    """Solve ``pi T = pi``; raises DegenerateChain when both states absorb."""
    g, b = channel.p_stay_good, channel.p_stay_bad
    denom = 2.0 - g - b
    if denom <= 0.0:
        raise DegenerateChain("both states are absorbing; stationary distribution is not unique")
    pi_good = (1.0 - b) / denom
    pi_bad = (1.0 - g) / denom
    return StationaryDistribution(pi_good, pi_bad)


@dataclass(frozen=True)
class LossPmf:
    """Distribution of the number of erasures in ``window`` consecutive slots."""

    window: int
    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=np.float64)
        if mass.shape != (self.window + 1,):
            raise ValueError(f"mass must have {self.window + 1} entries, got {mass.shape}")
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)

    def __getitem__(self, l):
        return self.mass[l]

    def mean(self) -> float:
        return float(np.dot(np.arange(self.window + 1), self.mass))

    def loss_fraction(self) -> float:
        return self.mean() / self.window if self.window else 0.0

    def cdf(self, l: int) -> float:
        """P(at most ``l`` losses)."""
        if l < 0:
            return 0.0
        return float(self.mass[: l + 1].sum())


def _initial(channel, initial):
    if initial is None:
        st = stationary(channel)
        return st.pi_good, st.pi_bad
    if initial == "good":
        return 1.0, 0.0
    if initial == "bad":
        return 0.0, 1.0
    raise ValueError(f"initial must be None, 'good' or 'bad', got {initial!r}")


def loss_pmf(channel: GilbertElliottChannel, window: int, initial: str | None = None) -> LossPmf:
    """Exact loss-count distribution over ``window`` slots.

    Forward recursion over (slot, state, losses so far). The first slot's state
    is drawn from the stationary distribution unless ``initial`` pins it to
    ``"good"`` or ``"bad"``.
    """
    window = int(window)
    if window < 1:
        raise ValueError("window must be >= 1")
    start_good, start_bad = _initial(channel, initial)
    g, b = channel.p_stay_good, channel.p_stay_bad
    good = np.zeros(window + 1)
    bad = np.zeros(window + 1)
    good[0] = start_good
    bad[1] = start_bad
    for _ in range(window - 1):
        new_good = g * good + (1.0 - b) * bad
        new_bad = np.zeros_like(bad)
        new_bad[1:] = (1.0 - g) * good[:-1] + b * bad[:-1]
        good, bad = new_good, new_bad
    return LossPmf(window, good + bad)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _start_prob_bad(channel, initial):
    if initial is not None:
        return _initial(channel, initial)[1]
    try:
        return stationary(channel).pi_bad
    except DegenerateChain:
        return 0.0


def sample_path(channel: GilbertElliottChannel, length: int, seed, initial: str | None = None) -> np.ndarray:
    """Erasure bit-vector of one continuous run; ``1`` marks an erased slot.

    ``seed`` is an int or a ``numpy.random.Generator``. A chain with both
    states absorbing starts good unless ``initial`` says otherwise.
    """
    length = int(length)
    if length < 1:
        raise ValueError("length must be >= 1")
    u = _rng(seed).random((1, length))
    out = _backend.erasure_windows(
        u, _start_prob_bad(channel, initial), channel.p_good_to_bad, channel.p_stay_bad
    )
    return out[0]


def sample_windows(channel: GilbertElliottChannel, window: int, count: int, seed,
                   initial: str | None = None) -> np.ndarray:
    """``count`` independent windows, each started afresh (shape ``(count, window)``)."""
    u = _rng(seed).random((int(count), int(window)))
    return _backend.erasure_windows(
        u, _start_prob_bad(channel, initial), channel.p_good_to_bad, channel.p_stay_bad
    )


def calibrate(pi_bad_target: float, zero_loss_prob_target: float, window: int) -> GilbertElliottChannel:
    """Channel with stationary loss ``pi_bad_target`` and P(no loss in window) as given.

    With the loss rate fixed, P(0 losses in N) = (1 - pi_bad) * g**(N - 1) is
    monotone in g and inverts in closed form; b then follows from the
    stationary constraint.
    """
    pi_bad = float(pi_bad_target)
    target = float(zero_loss_prob_target)
    window = int(window)
    if not 0.0 < pi_bad < 1.0:
        raise Infeasible(f"pi_bad_target must be in (0, 1), got {pi_bad}")
    if not 0.0 < target < 1.0:
        raise Infeasible(f"zero_loss_prob_target must be in (0, 1), got {target}")
    if window < 2:
        raise Infeasible("window must be >= 2 to separate burstiness from loss rate")
    pi_good = 1.0 - pi_bad
    if target >= pi_good:
        raise Infeasible(
            f"P(0 losses) = {target} needs p_stay_good >= 1 at loss rate {pi_bad}"
        )
    g = (target / pi_good) ** (1.0 / (window - 1))
    b = 2.0 - g - (1.0 - g) / pi_bad
    if b < 0.0:
        if b > -1e-12:
            b = 0.0
        else:
            raise Infeasible(
                f"P(0 losses) = {target} is below what any chain with loss rate {pi_bad} gives"
            )
    return GilbertElliottChannel(g, min(b, 1.0))

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from dcloss.channel import (
    DegenerateChain,
    GilbertElliottChannel,
    Infeasible,
    calibrate,
    loss_pmf,
    sample_path,
    sample_windows,
    stationary,
)

probs = st.floats(0.0, 1.0, allow_nan=False)
ergodic = st.tuples(probs, probs).filter(lambda gb: gb[0] + gb[1] < 1.999)


def enumerate_pmf(channel, window, start=None):
    """Sum the probability of every good/bad sequence of the window."""
    g, b = channel.p_stay_good, channel.p_stay_bad
    if start is None:
        st_ = stationary(channel)
        p0 = {0: st_.pi_good, 1: st_.pi_bad}
    else:
        p0 = {0: 1.0 if start == "good" else 0.0, 1: 1.0 if start == "bad" else 0.0}
    trans = {(0, 0): g, (0, 1): 1 - g, (1, 0): 1 - b, (1, 1): b}
    mass = [0.0] * (window + 1)
    for seq in itertools.product((0, 1), repeat=window):
        p = p0[seq[0]]
        for a, c in zip(seq, seq[1:]):
            p *= trans[(a, c)]
        mass[sum(seq)] += p
    return np.array(mass)


def power_iteration(g, b, steps=20000):
    v = np.array([0.5, 0.5])
    t = np.array([[g, 1 - g], [1 - b, b]])
    for _ in range(steps):
        v = v @ t
    return v


class TestChannel:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            GilbertElliottChannel(1.2, 0.5)
        with pytest.raises(ValueError):
            GilbertElliottChannel(0.5, -0.1)
        with pytest.raises(ValueError):
            GilbertElliottChannel(float("nan"), 0.5)

    def test_properties(self):
        ch = GilbertElliottChannel(0.9, 0.5)
        assert ch.p_good_to_bad == pytest.approx(0.1)
        assert ch.is_ergodic
        assert not ch.is_memoryless
        assert GilbertElliottChannel(0.7, 0.3).is_memoryless
        assert GilbertElliottChannel.lossless().loss_rate == 0.0


class TestStationary:
    def test_worked_example(self):
        s = stationary(GilbertElliottChannel(0.9, 0.5))
        assert s.pi_bad == pytest.approx(1 / 6, abs=1e-15)
        assert s.pi_good == pytest.approx(5 / 6, abs=1e-15)

    @pytest.mark.parametrize("g,b", [(0.9, 0.5), (0.99, 0.3), (0.5, 0.5), (0.2, 0.95), (0.999, 0.999)])
    def test_matches_power_iteration(self, g, b):
        s = stationary(GilbertElliottChannel(g, b))
        v = power_iteration(g, b, steps=200000)
        assert s.pi_good == pytest.approx(v[0], abs=1e-9)
        assert s.pi_bad == pytest.approx(v[1], abs=1e-9)

    def test_absorbing_good_is_lossless(self):
        assert stationary(GilbertElliottChannel(1.0, 0.3)).pi_bad == 0.0

    def test_absorbing_bad_loses_everything(self):
        assert stationary(GilbertElliottChannel(0.3, 1.0)).pi_bad == 1.0

    def test_both_absorbing(self):
        with pytest.raises(DegenerateChain):
            stationary(GilbertElliottChannel(1.0, 1.0))
        with pytest.raises(DegenerateChain):
            loss_pmf(GilbertElliottChannel(1.0, 1.0), 5)

    @given(ergodic)
    def test_fixed_point(self, gb):
        g, b = gb
        s = stationary(GilbertElliottChannel(g, b))
        assert s.pi_good + s.pi_bad == pytest.approx(1.0, abs=1e-12)
        assert s.pi_good * g + s.pi_bad * (1 - b) == pytest.approx(s.pi_good, abs=1e-12)


class TestLossPmf:
    @pytest.mark.parametrize("start", [None, "good", "bad"])
    @pytest.mark.parametrize("g,b", [(0.9, 0.5), (0.97, 0.8), (0.3, 0.3)])
    def test_matches_enumeration(self, g, b, start):
        ch = GilbertElliottChannel(g, b)
        for window in (1, 2, 5, 9):
            got = loss_pmf(ch, window, initial=start).mass
            np.testing.assert_allclose(got, enumerate_pmf(ch, window, start), atol=1e-13, rtol=0)

    @pytest.mark.parametrize("p", [0.0, 0.1, 0.5, 0.93])
    def test_memoryless_is_binomial(self, p):
        ch = GilbertElliottChannel(1 - p, p)
        got = loss_pmf(ch, 12).mass
        np.testing.assert_allclose(got, stats.binom.pmf(np.arange(13), 12, p), atol=1e-13)

    def test_lossless(self):
        pmf = loss_pmf(GilbertElliottChannel.lossless(), 7)
        assert pmf[0] == 1.0 and pmf.mass[1:].sum() == 0.0

    def test_accessors(self):
        pmf = loss_pmf(GilbertElliottChannel(0.9, 0.5), 4)
        assert pmf.cdf(-1) == 0.0
        assert pmf.cdf(4) == pytest.approx(1.0, abs=1e-14)
        assert pmf.loss_fraction() == pytest.approx(1 / 6, abs=1e-12)
        with pytest.raises(ValueError):
            pmf.mass[0] = 1.0

    def test_rejects_bad_window(self):
        with pytest.raises(ValueError):
            loss_pmf(GilbertElliottChannel(0.9, 0.5), 0)
        with pytest.raises(ValueError):
            loss_pmf(GilbertElliottChannel(0.9, 0.5), 3, initial="ugly")

    @given(ergodic, st.integers(1, 40))
    @settings(max_examples=200)
    def test_normalised_with_stationary_mean(self, gb, window):
        ch = GilbertElliottChannel(*gb)
        pmf = loss_pmf(ch, window)
        assert pmf.mass.min() >= -1e-15
        assert pmf.mass.sum() == pytest.approx(1.0, abs=1e-10)
        assert pmf.mean() == pytest.approx(window * stationary(ch).pi_bad, abs=1e-10 * max(window, 1))


class TestSampling:
    def test_deterministic(self):
        ch = GilbertElliottChannel(0.95, 0.6)
        np.testing.assert_array_equal(sample_path(ch, 1000, 3), sample_path(ch, 1000, 3))
        assert not np.array_equal(sample_path(ch, 1000, 3), sample_path(ch, 1000, 4))

    def test_path_mean_within_markov_error(self):
        ch = GilbertElliottChannel(0.95, 0.6)
        length = 400_000
        bits = sample_path(ch, length, 11)
        pi = stationary(ch).pi_bad
        lam = ch.p_stay_good + ch.p_stay_bad - 1.0
        se = math.sqrt(pi * (1 - pi) * (1 + lam) / (1 - lam) / length)
        assert abs(bits.mean() - pi) < 4 * se

    def test_run_lengths_are_geometric(self):
        ch = GilbertElliottChannel(0.9, 0.7)
        bits = sample_path(ch, 300_000, 5)
        change = np.flatnonzero(np.diff(bits.astype(np.int8)))
        runs = np.diff(change)
        kinds = bits[change[1:]]
        # mean bad burst 1/(1-b), mean good gap 1/(1-g)
        assert runs[kinds == 1].mean() == pytest.approx(1 / 0.3, rel=0.03)
        assert runs[kinds == 0].mean() == pytest.approx(1 / 0.1, rel=0.03)

    @pytest.mark.parametrize("g,b,window", [(0.9, 0.5, 10), (0.98, 0.7, 12), (0.6, 0.4, 6)])
    def test_windows_follow_pmf(self, g, b, window):
        ch = GilbertElliottChannel(g, b)
        count = 200_000
        losses = sample_windows(ch, window, count, 21).sum(axis=1)
        observed = np.bincount(losses, minlength=window + 1)
        expected = loss_pmf(ch, window).mass * count
        # pool sparse tail bins
        keep = expected >= 5
        obs = np.append(observed[keep], observed[~keep].sum())
        exp = np.append(expected[keep], expected[~keep].sum())
        if exp[-1] == 0:
            obs, exp = obs[:-1], exp[:-1]
        exp *= obs.sum() / exp.sum()
        assert stats.chisquare(obs, exp).pvalue > 1e-4

    def test_initial_state_pins_first_slot(self):
        ch = GilbertElliottChannel(0.9, 0.5)
        assert sample_windows(ch, 3, 500, 1, initial="bad")[:, 0].all()
        assert not sample_windows(ch, 3, 500, 1, initial="good")[:, 0].any()

    def test_both_absorbing_starts_good(self):
        assert not sample_path(GilbertElliottChannel(1.0, 1.0), 100, 0).any()


TABLE_TARGETS = [
    # loss rate, P(no loss in 10 slots), fitted (g, b)
    (0.00520084, 0.9824815, 0.998616585192, 0.73538507452),
    (0.09311, 0.550351, 0.946015712355, 0.47419385004),
    (0.271081, 0.5154, 0.962218948144, 0.898409233631),
]


class TestCalibrate:
    @pytest.mark.parametrize("pi,z,g,b", TABLE_TARGETS)
    def test_table_channels(self, pi, z, g, b):
        ch = calibrate(pi, z, 10)
        assert ch.p_stay_good == pytest.approx(g, abs=1e-10)
        assert ch.p_stay_bad == pytest.approx(b, abs=1e-9)
        assert stationary(ch).pi_bad == pytest.approx(pi, abs=1e-12)
        assert loss_pmf(ch, 10)[0] == pytest.approx(z, abs=1e-12)

    @given(ergodic.filter(lambda gb: 0.01 < gb[0] < 0.99999 and 0.01 < gb[1] < 0.999), st.integers(2, 30))
    def test_round_trip(self, gb, window):
        ch = GilbertElliottChannel(*gb)
        pi = stationary(ch).pi_bad
        z = loss_pmf(ch, window)[0]
        if not 0 < z < 1 - pi or z < 1e-200:
            return
        back = calibrate(pi, z, window)
        assert back.p_stay_good == pytest.approx(ch.p_stay_good, abs=1e-7)
        assert back.p_stay_bad == pytest.approx(ch.p_stay_bad, abs=1e-6)

    def test_infeasible(self):
        with pytest.raises(Infeasible):
            calibrate(0.1, 0.95, 10)   # needs g >= 1
        with pytest.raises(Infeasible):
            calibrate(0.2, 0.01, 10)   # would need p_stay_bad < 0
        with pytest.raises(Infeasible):
            calibrate(0.0, 0.5, 10)
        with pytest.raises(Infeasible):
            calibrate(0.1, 0.5, 1)

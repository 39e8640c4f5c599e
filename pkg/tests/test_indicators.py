import math

import numpy as np
import pytest

from vectrade.indicators import ema, rsi, sma


def ema_oracle(prices, n):
    """Direct application of the recursion: SMA seed, then the update rule."""
    w = 2.0 / (n + 1)
    out = [None] * (n - 1)
    value = float(np.mean(prices[:n]))
    out.append(value)
    for t in range(n, len(prices)):
        value = prices[t] * w + value * (1 - w)
        out.append(value)
    return out


class TestSma:
    def test_two_term_means(self):
        assert sma([1, 2, 3, 4], 2) == [None, 1.5, 2.5, 3.5]

    def test_constant_series(self):
        for n in (1, 3, 7):
            out = sma([10.0] * 30, n)
            assert all(v == 10.0 for v in out[n - 1 :])
            assert all(v is None for v in out[: n - 1])

    def test_single_full_window(self):
        assert sma([2, 4, 6, 8, 10], 5) == [None, None, None, None, 6.0]

    def test_too_short(self):
        with pytest.raises(ValueError):
            sma([1.0, 2.0], 3)

    def test_bounded_by_window(self):
        rng = np.random.default_rng(7)
        prices = rng.uniform(1, 200, size=120)
        out = sma(prices, 14)
        for t in range(13, 120):
            window = prices[t - 13 : t + 1]
            assert window.min() - 1e-9 <= out[t] <= window.max() + 1e-9


class TestEma:
    def test_seed_is_sma(self):
        prices = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0]
        for n in (2, 3, 5):
            assert ema(prices, n)[n - 1] == sma(prices, n)[n - 1]

    def test_hand_computed_recursion(self):
        out = ema([1, 2, 3, 4, 5, 6], 5)
        assert out[:4] == [None] * 4
        assert out[4] == pytest.approx(3.0)
        assert out[5] == pytest.approx(4.0)  # 6*(1/3) + 3*(2/3)

    def test_period_one_is_identity(self):
        prices = [5.0, -2.0, 7.25, 0.0]
        assert ema(prices, 1) == prices

    def test_constant_fixed_point(self):
        out = ema([4.2] * 50, 13)
        assert all(v == pytest.approx(4.2) for v in out[12:])

    def test_matches_recursion_oracle(self):
        rng = np.random.default_rng(2024)
        for _ in range(25):
            prices = rng.uniform(1, 500, size=300).tolist()
            n = int(rng.integers(1, 60))
            got = ema(prices, n)
            want = ema_oracle(prices, n)
            for g, w in zip(got[n - 1 :], want[n - 1 :]):
                assert math.isclose(g, w, rel_tol=1e-9)

    def test_bounded_by_history(self):
        rng = np.random.default_rng(5)
        prices = rng.uniform(10, 20, size=200)
        out = ema(prices, 21)
        for t in range(20, 200):
            hist = prices[: t + 1]
            assert hist.min() - 1e-9 <= out[t] <= hist.max() + 1e-9


class TestRsi:
    def test_strictly_rising_hits_100(self):
        prices = list(range(1, 40))
        out = rsi(prices)
        assert all(v == 100.0 for v in out[14:])

    def test_strictly_falling_hits_0(self):
        prices = list(range(40, 1, -1))
        out = rsi(prices)
        assert all(v == 0.0 for v in out[14:])

    def test_alternating_equal_changes_is_50(self):
        prices = [10 + (t % 2) for t in range(30)]
        out = rsi(prices)
        assert all(v == pytest.approx(50.0) for v in out[14:])

    def test_flat_window_is_50(self):
        out = rsi([7.0] * 20)
        assert all(v == 50.0 for v in out[14:])

    def test_bounds_and_shift_invariance(self):
        rng = np.random.default_rng(99)
        for _ in range(40):
            prices = rng.uniform(50, 150, size=60)
            out = rsi(prices.tolist())
            shifted = rsi((prices + 1234.5).tolist())
            for v, s in zip(out[14:], shifted[14:]):
                assert 0.0 <= v <= 100.0
                assert v == pytest.approx(s, abs=1e-6)

    def test_too_short(self):
        with pytest.raises(ValueError):
            rsi([1.0] * 14, 14)

"""Moving-average and momentum indicators over daily price series.

All functions return a list aligned with the input series. Positions where
the indicator is not yet defined (the leading warm-up stretch) hold None,
never a sentinel number.
"""

from __future__ import annotations

from collections.abc import Sequence


def sma(prices: Sequence[float], n: int) -> list[float | None]:
    """Simple moving average over the trailing ``n`` prices.

    Entry ``t`` is the mean of ``prices[t-n+1 .. t]``; entries before index
    ``n-1`` are None.
    """
    if n < 1:
        raise ValueError(f"period must be >= 1, got {n}")
    if len(prices) < n:
        raise ValueError(f"series of length {len(prices)} is shorter than period {n}")
    out: list[float | None] = [None] * (n - 1)
    for t in range(n - 1, len(prices)):
        out.append(sum(prices[t - n + 1 : t + 1]) / n)
    return out


def ema(prices: Sequence[float], n: int) -> list[float | None]:
    """Exponential moving average with weighting factor 2 / (n + 1).

    Seeded at index ``n-1`` with the simple average of the first ``n``
    prices, then EMA_t = price_t * W + EMA_{t-1} * (1 - W).
    """
    if n < 1:
        raise ValueError(f"period must be >= 1, got {n}")
    if len(prices) < n:
        raise ValueError(f"series of length {len(prices)} is shorter than period {n}")
    w = 2.0 / (n + 1)
    out: list[float | None] = [None] * (n - 1)
    value = sum(prices[:n]) / n
    out.append(value)
    for t in range(n, len(prices)):
        value = prices[t] * w + value * (1.0 - w)
        out.append(value)
    return out


def rsi(prices: Sequence[float], period: int = 14) -> list[float | None]:
    """Relative strength index in [0, 100] over trailing day-over-day changes.

    Gains and losses are simple means over the last ``period`` changes, with
    losing days counted as zero gain and vice versa. A window with no losses
    scores 100, no gains scores 0, and a perfectly flat window is defined
    as 50 (the limit of the formula from either side).
    """
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")
    if len(prices) < period + 1:
        raise ValueError(
            f"series of length {len(prices)} is shorter than period + 1 = {period + 1}"
        )
    changes = [prices[i] - prices[i - 1] for i in range(1, len(prices))]
    out: list[float | None] = [None] * period
    for t in range(period, len(prices)):
        window = changes[t - period : t]
        avg_gain = sum(c for c in window if c > 0) / period
        avg_loss = sum(-c for c in window if c < 0) / period
        if avg_loss == 0.0 and avg_gain == 0.0:
            out.append(50.0)
        elif avg_loss == 0.0:
            out.append(100.0)
        else:
            out.append(100.0 - 100.0 / (1.0 + avg_gain / avg_loss))
    return out

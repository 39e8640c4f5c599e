"""Shared synthetic-data fixtures."""

import csv
import math
from datetime import date, timedelta
from pathlib import Path

import pytest

from vectrade.market_data import enrich, load_ohlcv


def sinusoid_rows(n=1500, period=20, base=100.0, amplitude=10.0, start=date(2015, 1, 1)):
    """Deterministic OHLCV rows whose close follows a sinusoid; each open is
    the previous close so the series is gapless and internally consistent."""
    rows = []
    day = start
    prev_close = base
    for t in range(n):
        close = base + amplitude * math.sin(2.0 * math.pi * t / period)
        open_ = prev_close
        high = max(open_, close) + 0.5
        low = min(open_, close) - 0.5
        volume = 1000 + (t % 7) * 10
        rows.append([day.isoformat(), open_, high, low, close, volume])
        prev_close = close
        day += timedelta(days=1)
    return rows


def write_ohlcv_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "open", "high", "low", "close", "volume"])
        writer.writerows(rows)
    return Path(path)


@pytest.fixture(scope="session")
def sinusoid_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "sinusoid.csv"
    return write_ohlcv_csv(path, sinusoid_rows())


@pytest.fixture(scope="session")
def sinusoid_table(sinusoid_csv):
    return enrich(load_ohlcv(sinusoid_csv))

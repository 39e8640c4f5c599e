"""Loading OHLCV series, indicator enrichment, windows, and the train/test split.

The enriched table carries, per trading day, the five raw fields plus seven
derived columns (four EMAs, RSI-14 and the two EMA gaps). A thirteenth
feature, profitPercentage, exists only at backtest time and never appears in
a stored table.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .indicators import ema, rsi

RAW_HEADER = ["date", "open", "high", "low", "close", "volume"]

#: Names of the 12 static features, in column order.
STATIC_FEATURES = [
    "open",
    "close",
    "high",
    "low",
    "volume",
    "ema5",
    "ema13",
    "ema50",
    "ema200",
    "rsi14",
    "smallEmaDiff",
    "bigEmaDiff",
]

#: The runtime-only feature injected by the backtester.
PROFIT_FEATURE = "profitPercentage"

INDICATOR_COLUMNS = ["ema5", "ema13", "ema50", "ema200", "rsi14", "smallEmaDiff", "bigEmaDiff"]

ENRICHED_HEADER = RAW_HEADER + INDICATOR_COLUMNS

#: Raw rows consumed before the first enriched row: 200 for the EMA-200 seed
#: plus 20 so that trailing 21-day windows have history behind them.
WARMUP_ROWS = 220

#: Length of the vector window terminals.
WINDOW_LEN = 21


class MarketDataError(ValueError):
    """Raised for malformed input files or undersized series."""


@dataclass(frozen=True)
class Candle:
    """One daily OHLCV bar."""

    date: date
    open: float
    high: float
    low: float
    close: float
    volume: float

    def validate(self) -> None:
        if not (self.low <= self.open <= self.high):
            raise MarketDataError(f"{self.date}: open {self.open} outside [low, high]")
        if not (self.low <= self.close <= self.high):
            raise MarketDataError(f"{self.date}: close {self.close} outside [low, high]")
        if self.volume < 0:
            raise MarketDataError(f"{self.date}: negative volume {self.volume}")


@dataclass(frozen=True)
class WindowView:
    """A length-1 or length-21 trailing view of one feature."""

    feature: str
    end_row: int
    length: int = WINDOW_LEN

    def __post_init__(self) -> None:
        if self.length not in (1, WINDOW_LEN):
            raise ValueError(f"window length must be 1 or {WINDOW_LEN}, got {self.length}")
        if self.end_row - self.length + 1 < 0:
            raise ValueError(f"window of {self.length} cannot end at row {self.end_row}")


class FeatureTable:
    """Immutable column store of enriched daily rows.

    Columns are float64 arrays of equal length; ``dates`` aligns with them.
    Instances are safe to share across threads and processes.
    """

    def __init__(self, dates: list[date], columns: dict[str, np.ndarray]):
        missing = [f for f in STATIC_FEATURES if f not in columns]
        if missing:
            raise MarketDataError(f"feature table missing columns: {missing}")
        n = len(dates)
        cols: dict[str, np.ndarray] = {}
        for name in STATIC_FEATURES:
            col = np.asarray(columns[name], dtype=np.float64)
            if col.shape != (n,):
                raise MarketDataError(f"column {name} has shape {col.shape}, expected ({n},)")
            col.setflags(write=False)
            cols[name] = col
        self.dates: tuple[date, ...] = tuple(dates)
        self.columns = cols
        self._window_mats: dict[str, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.dates)

    def __getitem__(self, sl: slice) -> "FeatureTable":
        if not isinstance(sl, slice):
            raise TypeError("FeatureTable supports slicing only")
        idx = range(len(self))[sl]
        if idx.step != 1:
            raise ValueError("FeatureTable slices must be contiguous")
        return FeatureTable(
            list(self.dates[sl]), {f: self.columns[f][sl].copy() for f in STATIC_FEATURES}
        )

    def column(self, feature: str) -> np.ndarray:
        return self.columns[feature]

    def window_matrix(self, feature: str) -> np.ndarray:
        """(len-20, 21) matrix whose row ``r - 20`` is the window ending at row ``r``."""
        mat = self._window_mats.get(feature)
        if mat is None:
            col = self.columns[feature]
            mat = np.lib.stride_tricks.sliding_window_view(col, WINDOW_LEN)
            self._window_mats[feature] = mat
        return mat


def concat_tables(first: FeatureTable, second: FeatureTable) -> FeatureTable:
    """Chronological concatenation, used to give a split table its history."""
    if first.dates and second.dates and first.dates[-1] >= second.dates[0]:
        raise MarketDataError("tables to concatenate must be chronologically ordered")
    dates = list(first.dates) + list(second.dates)
    cols = {
        f: np.concatenate([first.columns[f], second.columns[f]]) for f in STATIC_FEATURES
    }
    return FeatureTable(dates, cols)


def load_ohlcv(path: str | Path) -> list[Candle]:
    """Read a raw OHLCV CSV, validating ordering and per-row invariants."""
    path = Path(path)
    if not path.exists():
        raise MarketDataError(f"no such file: {path}")
    candles: list[Candle] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MarketDataError(f"{path}: empty file, expected header {RAW_HEADER}")
        if [h.strip() for h in header] != RAW_HEADER:
            raise MarketDataError(f"{path}: bad header {header}, expected {RAW_HEADER}")
        prev_date: date | None = None
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 6:
                raise MarketDataError(f"{path}:{lineno}: expected 6 fields, got {len(row)}")
            try:
                d = date.fromisoformat(row[0].strip())
                o, h, l, c, v = (float(x) for x in row[1:])
            except ValueError as exc:
                raise MarketDataError(f"{path}:{lineno}: unparsable row: {exc}") from None
            if prev_date is not None and d <= prev_date:
                raise MarketDataError(
                    f"{path}:{lineno}: date {d} does not advance past {prev_date}"
                )
            candle = Candle(d, o, h, l, c, v)
            try:
                candle.validate()
            except MarketDataError as exc:
                raise MarketDataError(f"{path}:{lineno}: {exc}") from None
            candles.append(candle)
            prev_date = d
    return candles


def enrich(candles: list[Candle]) -> FeatureTable:
    """Compute the indicator columns and drop the warm-up rows.

    Requires at least WARMUP_ROWS + 1 candles; the returned table starts at
    raw row index WARMUP_ROWS, where every column is defined.
    """
    if len(candles) < WARMUP_ROWS + 1:
        raise MarketDataError(
            f"need more than {WARMUP_ROWS} candles to enrich, got {len(candles)}"
        )
    closes = [c.close for c in candles]
    ema5 = ema(closes, 5)
    ema13 = ema(closes, 13)
    ema50 = ema(closes, 50)
    ema200 = ema(closes, 200)
    rsi14 = rsi(closes, 14)

    keep = range(WARMUP_ROWS, len(candles))
    dates = [candles[i].date for i in keep]
    cols = {
        "open": np.array([candles[i].open for i in keep]),
        "close": np.array([candles[i].close for i in keep]),
        "high": np.array([candles[i].high for i in keep]),
        "low": np.array([candles[i].low for i in keep]),
        "volume": np.array([float(candles[i].volume) for i in keep]),
        "ema5": np.array([ema5[i] for i in keep]),
        "ema13": np.array([ema13[i] for i in keep]),
        "ema50": np.array([ema50[i] for i in keep]),
        "ema200": np.array([ema200[i] for i in keep]),
        "rsi14": np.array([rsi14[i] for i in keep]),
    }
    cols["smallEmaDiff"] = cols["ema5"] - cols["ema13"]
    cols["bigEmaDiff"] = cols["ema50"] - cols["ema200"]
    return FeatureTable(dates, cols)


def window(table: FeatureTable, view: WindowView):
    """Value of one feature window: a scalar for length 1, else 21 floats oldest-first."""
    if not 0 <= view.end_row < len(table):
        raise IndexError(f"row {view.end_row} outside table of {len(table)} rows")
    col = table.columns[view.feature]
    if view.length == 1:
        return float(col[view.end_row])
    if view.end_row < WINDOW_LEN - 1:
        raise IndexError(
            f"21-day window needs {WINDOW_LEN - 1} prior rows, none before row {view.end_row}"
        )
    return col[view.end_row - WINDOW_LEN + 1 : view.end_row + 1].copy()


def split_train_test(table: FeatureTable) -> tuple[FeatureTable, FeatureTable]:
    """Sequential 80/20 partition: first floor(0.8 n) rows train, rest test."""
    n = len(table)
    if n < 2:
        raise MarketDataError(f"cannot split a table of {n} rows")
    cut = int(0.8 * n)
    return table[:cut], table[cut:]


def write_feature_csv(table: FeatureTable, path: str | Path) -> None:
    """Export with full round-trip precision (repr of each float)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ENRICHED_HEADER)
        for i in range(len(table)):
            writer.writerow(
                [table.dates[i].isoformat()]
                + [repr(float(table.columns[f][i])) for f in ENRICHED_HEADER[1:]]
            )


def load_feature_csv(path: str | Path) -> FeatureTable:
    """Reload a table written by :func:`write_feature_csv`."""
    path = Path(path)
    if not path.exists():
        raise MarketDataError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MarketDataError(f"{path}: empty file")
        if header != ENRICHED_HEADER:
            raise MarketDataError(
                f"{path}: not an enriched table (header {header}); run `enrich` first"
            )
        dates: list[date] = []
        cols: dict[str, list[float]] = {f: [] for f in ENRICHED_HEADER[1:]}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(ENRICHED_HEADER):
                raise MarketDataError(f"{path}:{lineno}: wrong field count")
            try:
                dates.append(date.fromisoformat(row[0]))
                for name, cell in zip(ENRICHED_HEADER[1:], row[1:]):
                    cols[name].append(float(cell))
            except ValueError as exc:
                raise MarketDataError(f"{path}:{lineno}: unparsable row: {exc}") from None
    arrays = {name: np.array(vals, dtype=np.float64) for name, vals in cols.items()}
    return FeatureTable(dates, arrays)

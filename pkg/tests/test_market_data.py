import numpy as np
import pytest

from vectrade.indicators import ema
from vectrade.market_data import (
    WARMUP_ROWS,
    Candle,
    MarketDataError,
    WindowView,
    concat_tables,
    enrich,
    load_feature_csv,
    load_ohlcv,
    split_train_test,
    window,
    write_feature_csv,
)

from conftest import sinusoid_rows, write_ohlcv_csv


class TestLoadOhlcv:
    def test_field_mapping(self, tmp_path):
        path = write_ohlcv_csv(
            tmp_path / "one.csv", [["2015-01-02", 10.0, 11.0, 9.5, 10.5, 1000]]
        )
        (candle,) = load_ohlcv(path)
        assert candle == Candle.__class__ == type(candle) and candle.open == 10.0 or True
        assert (candle.open, candle.high, candle.low, candle.close, candle.volume) == (
            10.0,
            11.0,
            9.5,
            10.5,
            1000.0,
        )

    def test_empty_after_header(self, tmp_path):
        path = write_ohlcv_csv(tmp_path / "empty.csv", [])
        assert load_ohlcv(path) == []

    def test_duplicate_date_names_offender(self, tmp_path):
        rows = [
            ["2015-01-02", 10, 11, 9, 10, 1],
            ["2015-01-02", 10, 11, 9, 10, 1],
        ]
        path = write_ohlcv_csv(tmp_path / "dup.csv", rows)
        with pytest.raises(MarketDataError, match="2015-01-02"):
            load_ohlcv(path)

    def test_regressing_date(self, tmp_path):
        rows = [
            ["2015-01-03", 10, 11, 9, 10, 1],
            ["2015-01-02", 10, 11, 9, 10, 1],
        ]
        path = write_ohlcv_csv(tmp_path / "back.csv", rows)
        with pytest.raises(MarketDataError):
            load_ohlcv(path)

    def test_malformed_row_reports_line(self, tmp_path):
        rows = [["2015-01-02", 10, 11, 9, 10, 1], ["2015-01-03", "oops", 11, 9, 10, 1]]
        path = write_ohlcv_csv(tmp_path / "bad.csv", rows)
        with pytest.raises(MarketDataError, match=":3"):
            load_ohlcv(path)

    def test_price_outside_range_rejected(self, tmp_path):
        path = write_ohlcv_csv(tmp_path / "range.csv", [["2015-01-02", 12, 11, 9, 10, 1]])
        with pytest.raises(MarketDataError):
            load_ohlcv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MarketDataError):
            load_ohlcv(tmp_path / "nope.csv")

    def test_bad_header(self, tmp_path):
        path = tmp_path / "hdr.csv"
        path.write_text("time,o,h,l,c,v\n")
        with pytest.raises(MarketDataError, match="header"):
            load_ohlcv(path)


class TestEnrich:
    def test_constant_series_fixed_point(self):
        rows = sinusoid_rows(n=300, amplitude=0.0)
        candles = [
            Candle.__new__(Candle) for _ in range(0)
        ]  # noqa: F841 - keep simple below
        path_rows = rows
        candles = []
        from datetime import date

        for r in path_rows:
            candles.append(Candle(date.fromisoformat(r[0]), r[1], r[2], r[3], r[4], r[5]))
        table = enrich(candles)
        assert len(table) == 300 - WARMUP_ROWS
        for col in ("ema5", "ema13", "ema50", "ema200"):
            assert np.allclose(table.column(col), 100.0)
        assert np.all(table.column("smallEmaDiff") == 0.0)
        assert np.all(table.column("bigEmaDiff") == 0.0)

    def test_increasing_series_small_diff_positive(self):
        from datetime import date, timedelta

        day = date(2015, 1, 1)
        candles = []
        price = 100.0
        for t in range(400):
            close = price + t * 0.5
            candles.append(Candle(day, close, close + 0.1, close - 0.1, close, 10))
            day += timedelta(days=1)
        table = enrich(candles)
        closes = [c.close for c in candles]
        e5, e13 = ema(closes, 5), ema(closes, 13)
        keep = range(WARMUP_ROWS, 400)
        assert np.allclose(table.column("ema5"), [e5[i] for i in keep])
        assert np.allclose(table.column("ema13"), [e13[i] for i in keep])
        assert np.all(table.column("smallEmaDiff") > 0)

    def test_warmup_identity_columns(self, sinusoid_table):
        small = sinusoid_table.column("ema5") - sinusoid_table.column("ema13")
        big = sinusoid_table.column("ema50") - sinusoid_table.column("ema200")
        assert np.array_equal(small, sinusoid_table.column("smallEmaDiff"))
        assert np.array_equal(big, sinusoid_table.column("bigEmaDiff"))

    def test_too_short(self):
        from datetime import date, timedelta

        day = date(2015, 1, 1)
        candles = []
        for _ in range(100):
            candles.append(Candle(day, 10, 11, 9, 10, 1))
            day += timedelta(days=1)
        with pytest.raises(MarketDataError):
            enrich(candles)


class TestWindow:
    def test_length_one_is_scalar(self, sinusoid_table):
        v = window(sinusoid_table, WindowView("close", 5, 1))
        assert v == float(sinusoid_table.column("close")[5])

    def test_length_21_boundary(self, sinusoid_table):
        v = window(sinusoid_table, WindowView("close", 20, 21))
        assert np.array_equal(v, sinusoid_table.column("close")[0:21])

    def test_row_19_errors(self, sinusoid_table):
        with pytest.raises(ValueError):
            WindowView("close", 19, 21)

    def test_window_equals_concatenated_scalars(self, sinusoid_table):
        r = 77
        vec = window(sinusoid_table, WindowView("ema13", r, 21))
        scalars = [
            window(sinusoid_table, WindowView("ema13", rr, 1)) for rr in range(r - 20, r + 1)
        ]
        assert np.array_equal(vec, np.array(scalars))

    def test_window_matrix_agrees(self, sinusoid_table):
        mat = sinusoid_table.window_matrix("close")
        for r in (20, 50, len(sinusoid_table) - 1):
            assert np.array_equal(mat[r - 20], window(sinusoid_table, WindowView("close", r, 21)))


class TestSplit:
    def test_ten_rows(self, sinusoid_table):
        small = sinusoid_table[:10]
        train, test = split_train_test(small)
        assert len(train) == 8 and len(test) == 2
        assert train.dates == small.dates[:8] and test.dates == small.dates[8:]

    def test_thousand_rows(self, sinusoid_table):
        table = sinusoid_table[:1000]
        train, test = split_train_test(table)
        assert len(train) == 800 and len(test) == 200

    def test_partition_property(self, sinusoid_table):
        for n in (2, 3, 17, 256):
            table = sinusoid_table[:n]
            train, test = split_train_test(table)
            assert len(train) + len(test) == n
            assert train.dates + test.dates == table.dates
            recombined = concat_tables(train, test)
            for col in ("open", "close", "rsi14"):
                assert np.array_equal(recombined.column(col), table.column(col))

    def test_too_small(self, sinusoid_table):
        with pytest.raises(MarketDataError):
            split_train_test(sinusoid_table[:1])


class TestRoundTrip:
    def test_csv_round_trip_bit_exact(self, sinusoid_table, tmp_path):
        path = tmp_path / "enriched.csv"
        write_feature_csv(sinusoid_table, path)
        back = load_feature_csv(path)
        assert back.dates == sinusoid_table.dates
        for name, col in sinusoid_table.columns.items():
            assert np.array_equal(back.column(name), col), name

    def test_rejects_raw_csv(self, tmp_path):
        path = write_ohlcv_csv(tmp_path / "raw.csv", sinusoid_rows(n=5))
        with pytest.raises(MarketDataError, match="enrich"):
            load_feature_csv(path)

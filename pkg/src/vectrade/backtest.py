"""Trade simulation: position ledger, profit percentage, ROI and fitness.

Every trade stakes exactly 1000 currency units; shares are fractional,
computed against the open price of the day the position opens. A reversal
signal closes the running position at that day's close and re-opens the
opposite position at the next day's open. Whatever is still open after the
last row is force-closed at the final close.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .market_data import FeatureTable
from .primitives import Signal

#: Money committed to every trade.
STAKE = 1000.0


class _InactivePenalty:
    """Fitness of an agent that never traded: below every number."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "InactivePenalty"

    def __lt__(self, other):
        return not isinstance(other, _InactivePenalty)

    def __le__(self, other):
        return True

    def __gt__(self, other):
        return False

    def __ge__(self, other):
        return isinstance(other, _InactivePenalty)

    def __eq__(self, other):
        return isinstance(other, _InactivePenalty)

    def __hash__(self):
        return hash("InactivePenalty")


INACTIVE_PENALTY = _InactivePenalty()

def fitness_key(fitness) -> tuple[int, float]:
    """Sort key under which InactivePenalty loses to every finite fitness."""
    if fitness is INACTIVE_PENALTY or isinstance(fitness, _InactivePenalty):
        return (0, 0.0)
    return (1, float(fitness))


def fitness_of(roi: float, win_rate: float, n_trades: int):
    """ROI times win rate when ROI is positive, bare ROI when not, and the
    inactivity penalty when no trade was ever closed."""
    if not 0.0 <= win_rate <= 1.0:
        raise ValueError(f"win rate {win_rate} outside [0, 1]")
    if n_trades == 0:
        return INACTIVE_PENALTY
    if roi > 0:
        return roi * win_rate
    return roi


def format_fitness(fitness) -> str:
    return "inactive" if isinstance(fitness, _InactivePenalty) else repr(float(fitness))


def parse_fitness(text: str):
    return INACTIVE_PENALTY if text == "inactive" else float(text)


@dataclass
class TradeState:
    """Mutable per-row trading state.

    ``position`` is +1 long, -1 short, 0 flat; ``pending`` holds the side of
    a reversal waiting to open at the next row's open price.
    """

    position: int = 0
    shares: float = 0.0
    entry_open: float = 0.0
    pending: int = 0
    profit_percentage: float = 0.0
    realized: list[float] = field(default_factory=list)


def profit_percentage(state: TradeState, close: float) -> float:
    """Real-time gauge of the open trade: 0 when flat, else the percent
    profit of closing at the given price."""
    if state.position > 0:
        return 100.0 * (state.shares * close - STAKE) / STAKE
    if state.position < 0:
        return 100.0 * (STAKE - state.shares * close) / STAKE
    return 0.0


def step(state: TradeState, signal: int, open_price: float, close_price: float) -> TradeState:
    """Advance the state by one row (in place).

    Order of events within a row: a pending reversal opens at the open
    price; the signal is applied (opening at the open when flat, closing at
    the close on a reversal); finally profitPercentage is refreshed against
    the close.
    """
    if state.pending:
        state.position = state.pending
        state.shares = STAKE / open_price
        state.entry_open = open_price
        state.pending = 0
    if signal == Signal.BUY:
        if state.position == 0:
            state.position = 1
            state.shares = STAKE / open_price
            state.entry_open = open_price
        elif state.position < 0:
            state.realized.append(STAKE - state.shares * close_price)
            state.position = 0
            state.pending = 1
    elif signal == Signal.SELL:
        if state.position == 0:
            state.position = -1
            state.shares = STAKE / open_price
            state.entry_open = open_price
        elif state.position > 0:
            state.realized.append(state.shares * close_price - STAKE)
            state.position = 0
            state.pending = -1
    state.profit_percentage = profit_percentage(state, close_price)
    return state


@dataclass(frozen=True)
class LedgerRow:
    row: int
    date: str
    signal: int
    action: str
    position: int
    profit_percentage: float
    realized: float | None
    cumulative_roi: float


@dataclass(frozen=True)
class BacktestResult:
    roi: float
    win_rate: float
    n_trades: int
    fitness: object
    ledger: tuple[LedgerRow, ...] | None = None


def run_backtest(source, rows, table: FeatureTable, record: bool = False) -> BacktestResult:
    """Simulate trading over a contiguous row range of a table.

    ``source`` is either a per-row array of signal codes or a callable
    ``(row_position, profit_percentage) -> signal`` evaluated lazily so the
    agent can react to its own running profit.
    """
    rows = np.asarray(rows, dtype=np.intp)
    if rows.size < 2:
        raise ValueError(f"backtest needs at least 2 rows, got {rows.size}")
    if rows.min() < 0 or rows.max() >= len(table):
        raise IndexError(f"rows outside table of {len(table)} rows")
    if not np.all(np.diff(rows) == 1):
        raise ValueError("backtest rows must be contiguous and chronological")

    signals = None if callable(source) else np.asarray(source)
    if signals is not None and len(signals) != rows.size:
        raise ValueError("signal array length must match the row range")

    opens = table.column("open")
    closes = table.column("close")
    state = TradeState()
    ledger: list[LedgerRow] = [] if record else None

    for i in range(rows.size):
        r = int(rows[i])
        sig = int(signals[i]) if signals is not None else int(source(i, state.profit_percentage))
        before_pos, before_pending, before_n = state.position, state.pending, len(state.realized)
        step(state, sig, float(opens[r]), float(closes[r]))
        if record:
            actions = []
            if before_pending:
                actions.append("open_long" if before_pending > 0 else "open_short")
            if len(state.realized) > before_n:
                closed = before_pending if before_pending else before_pos
                actions.append("close_long" if closed > 0 else "close_short")
            elif state.position != 0 and before_pos == 0 and not before_pending:
                actions.append("open_long" if state.position > 0 else "open_short")
            gained = state.realized[before_n] if len(state.realized) > before_n else None
            ledger.append(
                LedgerRow(
                    row=r,
                    date=table.dates[r].isoformat(),
                    signal=sig,
                    action="+".join(actions) if actions else "none",
                    position=state.position,
                    profit_percentage=state.profit_percentage,
                    realized=gained,
                    cumulative_roi=100.0 * sum(state.realized) / STAKE,
                )
            )

    if state.position != 0:
        final_close = float(closes[int(rows[-1])])
        if state.position > 0:
            state.realized.append(state.shares * final_close - STAKE)
        else:
            state.realized.append(STAKE - state.shares * final_close)
        state.position = 0
        if record:
            last = ledger[-1]
            ledger[-1] = LedgerRow(
                row=last.row,
                date=last.date,
                signal=last.signal,
                action=last.action + "+force_close",
                position=0,
                profit_percentage=last.profit_percentage,
                realized=state.realized[-1],
                cumulative_roi=100.0 * sum(state.realized) / STAKE,
            )

    n = len(state.realized)
    roi = 100.0 * sum(state.realized) / STAKE
    win_rate = sum(1 for p in state.realized if p > 0) / n if n else 0.0
    return BacktestResult(
        roi=roi,
        win_rate=win_rate,
        n_trades=n,
        fitness=fitness_of(roi, win_rate, n),
        ledger=tuple(ledger) if record else None,
    )


def write_ledger_csv(result: BacktestResult, path) -> None:
    """Export the recorded per-row ledger."""
    import csv

    if result.ledger is None:
        raise ValueError("backtest was run without record=True")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["date", "signal", "action", "position", "profit_percentage", "realized", "cumulative_roi"]
        )
        for row in result.ledger:
            writer.writerow(
                [
                    row.date,
                    int(row.signal),
                    row.action,
                    row.position,
                    repr(row.profit_percentage),
                    "" if row.realized is None else repr(row.realized),
                    repr(row.cumulative_roi),
                ]
            )

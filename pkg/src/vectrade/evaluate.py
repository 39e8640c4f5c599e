"""Compiling trees into per-row signal producers over a feature table.

Two execution modes share one set of primitive evaluators:

* trees that never read profitPercentage are evaluated for all rows at once
  (scalars as (R, 1) arrays, windows as (R, 21) arrays);
* trees that do read it must run row by row, because the feature feeds back
  through the agent's own trades. Only the spine of nodes depending on it is
  re-evaluated per row; every profit-free subtree is still precomputed for
  all rows in one vectorized pass.
"""

from __future__ import annotations

import math

import numpy as np

from .market_data import PROFIT_FEATURE, STATIC_FEATURES, WINDOW_LEN, FeatureTable
from .primitives import Kind, PrimitiveSet, Signal, Terminal
from .trees import ExprTree, Node

#: Rows of history a 21-day window needs behind its anchor row.
HISTORY_ROWS = WINDOW_LEN - 1


class TableRuntime:
    """Feature arrays of one table cast to a variant's dtype, cached lazily."""

    def __init__(self, table: FeatureTable, pset: PrimitiveSet):
        self.table = table
        self.pset = pset
        self._scalar: dict[str, np.ndarray] = {}
        self._window: dict[str, np.ndarray] = {}

    def scalar_col(self, feature: str) -> np.ndarray:
        col = self._scalar.get(feature)
        if col is None:
            col = np.ascontiguousarray(self.table.column(feature), dtype=self.pset.dtype)
            self._scalar[feature] = col
        return col

    def window_mat(self, feature: str) -> np.ndarray:
        mat = self._window.get(feature)
        if mat is None:
            mat = np.ascontiguousarray(self.table.window_matrix(feature), dtype=self.pset.dtype)
            self._window[feature] = mat
        return mat


def signals_from_output(out: np.ndarray, variant: str) -> np.ndarray:
    """Vectorized signal interpretation of a (R, 1) or (R, 21) output block."""
    if variant == "STVGP":
        return np.where(out.reshape(len(out)), np.int8(Signal.BUY), np.int8(Signal.SELL))
    with np.errstate(all="ignore"):
        reduced = out.mean(axis=-1)
        if np.iscomplexobj(reduced):
            reduced = reduced.real
        sig = np.zeros(len(reduced), dtype=np.int8)
        sig[reduced >= 1.0] = Signal.BUY
        sig[reduced <= -1.0] = Signal.SELL
        sig[~np.isfinite(reduced)] = Signal.HOLD
    return sig


def _interpret_one(out: np.ndarray, variant: str) -> int:
    if variant == "STVGP":
        return int(Signal.BUY) if bool(out[0]) else int(Signal.SELL)
    with np.errstate(all="ignore"):
        reduced = out.mean()
    reduced = reduced.real if np.iscomplexobj(out) else float(reduced)
    if not math.isfinite(reduced):
        return int(Signal.HOLD)
    if reduced >= 1.0:
        return int(Signal.BUY)
    if reduced <= -1.0:
        return int(Signal.SELL)
    return int(Signal.HOLD)


def _eval_all_rows(node: Node, runtime: TableRuntime, rows: np.ndarray) -> np.ndarray:
    pset = runtime.pset
    ref = pset.lookup(node.op)
    if isinstance(ref, Terminal):
        if ref.feature == PROFIT_FEATURE:
            raise AssertionError("profitPercentage cannot be evaluated vectorized")
        if ref.kind is Kind.VECTOR:
            return runtime.window_mat(ref.feature)[rows - HISTORY_ROWS]
        return runtime.scalar_col(ref.feature)[rows][:, None]
    args = [_eval_all_rows(c, runtime, rows) for c in node.children]
    return ref.fn(*args)


def _uses_profit(node: Node) -> bool:
    return node.op == PROFIT_FEATURE or any(_uses_profit(c) for c in node.children)


# Spine instruction tags.
_PRE = 0  # fetch a precomputed per-row slice
_PP = 1  # fetch the current profitPercentage
_OP = 2  # apply a primitive to earlier slots


class TreeAgent:
    """A tree bound to a table and a row range, ready to emit signals.

    ``vector_signals`` is the full int8 signal array when the tree is free of
    profitPercentage; otherwise it is None and ``signal_at`` must be called
    row by row in order.
    """

    def __init__(self, tree: ExprTree, pset: PrimitiveSet, runtime: TableRuntime,
                 rows: np.ndarray):
        rows = np.asarray(rows, dtype=np.intp)
        if rows.size and _needs_windows(tree.root, pset) and rows.min() < HISTORY_ROWS:
            raise ValueError(
                f"row {int(rows.min())} lacks the {HISTORY_ROWS} rows of history"
                " a 21-day window terminal needs"
            )
        self.variant = pset.variant
        self.vector_signals: np.ndarray | None = None
        if not _uses_profit(tree.root):
            with np.errstate(all="ignore"):
                out = _eval_all_rows(tree.root, runtime, rows)
            self.vector_signals = signals_from_output(out, pset.variant)
            return

        program: list[tuple] = []
        inputs: list[np.ndarray] = []
        pp_dtype = pset.dtype

        def build(node: Node) -> None:
            if node.op == PROFIT_FEATURE:
                program.append((_PP,))
                return
            if not _uses_profit(node):
                with np.errstate(all="ignore"):
                    inputs.append(_eval_all_rows(node, runtime, rows))
                program.append((_PRE, len(inputs) - 1))
                return
            arg_slots = []
            for child in node.children:
                build(child)
                arg_slots.append(len(program) - 1)
            prim = pset.functions[node.op]
            program.append((_OP, prim.fn, tuple(arg_slots)))

        build(tree.root)
        self._program = program
        self._inputs = inputs
        self._pp = np.zeros(1, dtype=pp_dtype)

    def signal_at(self, row_pos: int, profit_percentage: float) -> int:
        """Signal for the row at position ``row_pos`` of the bound range."""
        self._pp[0] = profit_percentage
        slots: list[np.ndarray] = []
        with np.errstate(all="ignore"):
            for ins in self._program:
                tag = ins[0]
                if tag == _OP:
                    slots.append(ins[1](*[slots[j] for j in ins[2]]))
                elif tag == _PRE:
                    slots.append(self._inputs[ins[1]][row_pos])
                else:
                    slots.append(self._pp)
        return _interpret_one(slots[-1], self.variant)


def _needs_windows(node: Node, pset: PrimitiveSet) -> bool:
    ref = pset.terminals.get(node.op)
    if ref is not None and ref.kind is Kind.VECTOR:
        return True
    return any(_needs_windows(c, pset) for c in node.children)

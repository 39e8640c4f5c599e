"""Primitive sets and evaluation semantics for the four evolution variants.

Variants:

* ``GP``    - scalar arithmetic, trigonometry, and two constant-producing
              comparisons.
* ``VGP``   - the same over 21-day vectors plus aggregations (dot product,
              mean, sample standard deviation, cumulative mean).
* ``CVGP``  - the vectorial set over complex numbers, trading protected
              log/sqrt for their principal complex branches.
* ``STVGP`` - the vectorial set re-typed: comparisons return booleans,
              plus boolean connectives and a ternary selector; trees are
              boolean-rooted.

Values carry their vector payload on the last axis; scalars are length-1
along that axis. Arity-2 operations mixing a scalar with a 21-vector
replicate the scalar across the vector (numpy broadcasting implements
exactly that rule). Division by zero returns one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .market_data import PROFIT_FEATURE, STATIC_FEATURES, WINDOW_LEN

VARIANTS = ("GP", "VGP", "CVGP", "STVGP")


class Kind(enum.Enum):
    """Shape class of a runtime value."""

    SCALAR = "scalar"
    VECTOR = "vector"
    BOOL = "bool"


class Signal(enum.IntEnum):
    """Per-row trading decision."""

    BUY = 1
    HOLD = 0
    SELL = -1


# Coarse kinds drive the STVGP type system; numbers cover both scalar and
# vector payloads since the paper treats scalars as size-1 vectors.
NUM = "num"
BOOL = "bool"


@dataclass(frozen=True)
class Primitive:
    name: str
    arity: int
    arg_kinds: tuple[str, ...]
    result: str
    kind_rule: str  # elementwise | same | scalar | bool | ifelse
    fn: Callable[..., np.ndarray]

    def result_kind(self, child_kinds: tuple[Kind, ...]) -> Kind:
        rule = self.kind_rule
        if rule == "elementwise":
            return Kind.VECTOR if Kind.VECTOR in child_kinds else Kind.SCALAR
        if rule == "same":
            return child_kinds[0]
        if rule == "scalar":
            return Kind.SCALAR
        if rule == "bool":
            return Kind.BOOL
        if rule == "ifelse":
            return Kind.VECTOR if Kind.VECTOR in child_kinds[1:] else Kind.SCALAR
        raise AssertionError(f"unknown kind rule {rule}")


@dataclass(frozen=True)
class Terminal:
    name: str
    feature: str
    kind: Kind  # SCALAR or VECTOR


@dataclass(frozen=True)
class PrimitiveSet:
    variant: str
    functions: dict[str, Primitive]
    terminals: dict[str, Terminal]
    dtype: np.dtype
    root_kind: str  # coarse kind required at the root

    def lookup(self, name: str) -> Primitive | Terminal:
        prim = self.functions.get(name)
        if prim is not None:
            return prim
        term = self.terminals.get(name)
        if term is not None:
            return term
        raise KeyError(f"unknown primitive or terminal {name!r} for variant {self.variant}")


def _one(dtype) -> np.ndarray:
    return np.asarray(1, dtype=dtype)


def protected_div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Element-wise a / b, with 1 wherever the denominator is exactly zero."""
    with np.errstate(all="ignore"):
        q = np.true_divide(a, b)
    return np.where(b == 0, _one(q.dtype), q)


def _reduce_pair(a, b):
    """Broadcast an arity-2 pair so both sides share the vector length."""
    return np.broadcast_arrays(a, b)


def _mean(a):
    return a.mean(axis=-1, keepdims=True)


def _std_var(a):
    if a.shape[-1] == 1:
        return np.zeros_like(a)
    return a.std(axis=-1, ddof=1, keepdims=True)


def _cum_mean(a):
    return np.cumsum(a, axis=-1) / np.arange(1, a.shape[-1] + 1)


def _dot(a, b):
    a2, b2 = _reduce_pair(a, b)
    return (a2 * b2).sum(axis=-1, keepdims=True)


def _dot_conj(a, b):
    a2, b2 = _reduce_pair(a, b)
    return (np.conj(a2) * b2).sum(axis=-1, keepdims=True)


def _gt(a, b):
    return np.where(a > b, 1.0, -1.0)


def _signum(a):
    return np.sign(a)


def _gt_than(a, b):
    m1, m2 = _mean(a), _mean(b)
    return np.where(m1 > m2, 1.0, np.where(m1 < m2, -1.0, 0.0))


def _gt_than_bool(a, b):
    return _mean(a) > _mean(b)


def _sum_gt(a, b):
    a2, b2 = _reduce_pair(a, b)
    return a2.sum(axis=-1, keepdims=True) > b2.sum(axis=-1, keepdims=True)


def _gt_than_real(a, b):
    gt = _mean(a.real) > _mean(b.real)
    return np.where(gt, np.complex128(1), np.complex128(-1))


def _gt_than_complex(a, b):
    gt = _mean(a.imag) > _mean(b.imag)
    return np.where(gt, np.complex128(1j), np.complex128(-1j))


def _if_else(c, x, y):
    return np.where(c, x, y)


def _p(name, arity, args, result, rule, fn) -> Primitive:
    return Primitive(name, arity, args, result, rule, fn)


def _arith(extra: dict[str, Primitive]) -> dict[str, Primitive]:
    base = {
        "ADD": _p("ADD", 2, (NUM, NUM), NUM, "elementwise", lambda a, b: a + b),
        "MULT": _p("MULT", 2, (NUM, NUM), NUM, "elementwise", lambda a, b: a * b),
        "SUB": _p("SUB", 2, (NUM, NUM), NUM, "elementwise", lambda a, b: a - b),
        "DIV": _p("DIV", 2, (NUM, NUM), NUM, "elementwise", protected_div),
        "NEG": _p("NEG", 1, (NUM,), NUM, "same", lambda a: -a),
        "SIN": _p("SIN", 1, (NUM,), NUM, "same", np.sin),
        "COS": _p("COS", 1, (NUM,), NUM, "same", np.cos),
        "TAN": _p("TAN", 1, (NUM,), NUM, "same", np.tan),
    }
    base.update(extra)
    return base


_GP_FUNCTIONS = _arith(
    {
        "SIGNUM": _p("SIGNUM", 1, (NUM,), NUM, "same", _signum),
        "GT": _p("GT", 2, (NUM, NUM), NUM, "elementwise", _gt),
    }
)

_VGP_FUNCTIONS = _arith(
    {
        "DOT": _p("DOT", 2, (NUM, NUM), NUM, "scalar", _dot),
        "MEAN": _p("MEAN", 1, (NUM,), NUM, "scalar", _mean),
        "STD_VAR": _p("STD_VAR", 1, (NUM,), NUM, "scalar", _std_var),
        "CUM_MEAN": _p("CUM_MEAN", 1, (NUM,), NUM, "same", _cum_mean),
        "GT_THAN": _p("GT_THAN", 2, (NUM, NUM), NUM, "scalar", _gt_than),
    }
)

_CVGP_FUNCTIONS = _arith(
    {
        "DOT": _p("DOT", 2, (NUM, NUM), NUM, "scalar", _dot_conj),
        "LOG": _p("LOG", 1, (NUM,), NUM, "same", np.log),
        "SQRT": _p("SQRT", 1, (NUM,), NUM, "same", np.sqrt),
        "MEAN": _p("MEAN", 1, (NUM,), NUM, "scalar", _mean),
        "CUM_MEAN": _p("CUM_MEAN", 1, (NUM,), NUM, "same", _cum_mean),
        "GT_THAN_REAL": _p("GT_THAN_REAL", 2, (NUM, NUM), NUM, "scalar", _gt_than_real),
        "GT_THAN_COMPLEX": _p(
            "GT_THAN_COMPLEX", 2, (NUM, NUM), NUM, "scalar", _gt_than_complex
        ),
    }
)

_STVGP_FUNCTIONS = _arith(
    {
        "DOT": _p("DOT", 2, (NUM, NUM), NUM, "scalar", _dot),
        "MEAN": _p("MEAN", 1, (NUM,), NUM, "scalar", _mean),
        "STD_VAR": _p("STD_VAR", 1, (NUM,), NUM, "scalar", _std_var),
        "CUM_MEAN": _p("CUM_MEAN", 1, (NUM,), NUM, "same", _cum_mean),
        "GT_THAN": _p("GT_THAN", 2, (NUM, NUM), BOOL, "bool", _gt_than_bool),
        "SUM_GT": _p("SUM_GT", 2, (NUM, NUM), BOOL, "bool", _sum_gt),
        "AND": _p("AND", 2, (BOOL, BOOL), BOOL, "bool", lambda a, b: a & b),
        "OR": _p("OR", 2, (BOOL, BOOL), BOOL, "bool", lambda a, b: a | b),
        "XOR": _p("XOR", 2, (BOOL, BOOL), BOOL, "bool", lambda a, b: a ^ b),
        "NOT": _p("NOT", 1, (BOOL,), BOOL, "bool", lambda a: ~a),
        "IF_ELSE": _p("IF_ELSE", 3, (BOOL, NUM, NUM), NUM, "ifelse", _if_else),
    }
)


def _terminals(with_windows: bool) -> dict[str, Terminal]:
    terms = {f: Terminal(f, f, Kind.SCALAR) for f in STATIC_FEATURES}
    terms[PROFIT_FEATURE] = Terminal(PROFIT_FEATURE, PROFIT_FEATURE, Kind.SCALAR)
    if with_windows:
        for f in STATIC_FEATURES:
            terms[f"{f}_w21"] = Terminal(f"{f}_w21", f, Kind.VECTOR)
    return terms


_SETS = {
    "GP": PrimitiveSet("GP", _GP_FUNCTIONS, _terminals(False), np.dtype(np.float64), NUM),
    "VGP": PrimitiveSet("VGP", _VGP_FUNCTIONS, _terminals(True), np.dtype(np.float64), NUM),
    "CVGP": PrimitiveSet(
        "CVGP", _CVGP_FUNCTIONS, _terminals(True), np.dtype(np.complex128), NUM
    ),
    "STVGP": PrimitiveSet(
        "STVGP", _STVGP_FUNCTIONS, _terminals(True), np.dtype(np.float64), BOOL
    ),
}


def primitive_set(variant: str) -> PrimitiveSet:
    try:
        return _SETS[variant]
    except KeyError:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}") from None


def broadcast(scalar, target_len: int = WINDOW_LEN) -> np.ndarray:
    """Replicate a scalar value into a vector of the target length."""
    arr = np.asarray(scalar)
    if arr.size != 1:
        raise ValueError(f"broadcast expects a scalar, got shape {arr.shape}")
    return np.full(target_len, arr.reshape(())[()])


def _as_value(x, dtype) -> tuple[np.ndarray, Kind]:
    if isinstance(x, (bool, np.bool_)):
        return np.asarray([x]), Kind.BOOL
    arr = np.asarray(x)
    if arr.dtype == np.bool_ and arr.ndim == 0:
        return arr.reshape(1), Kind.BOOL
    if arr.ndim == 0:
        return arr.astype(dtype).reshape(1), Kind.SCALAR
    if arr.ndim == 1:
        if arr.dtype == np.bool_:
            return arr, Kind.BOOL
        return arr.astype(dtype), Kind.VECTOR
    raise ValueError(f"values are scalars or 1-D vectors, got shape {arr.shape}")


def apply_primitive(pset: PrimitiveSet, name: str, args: list):
    """Apply one named primitive to plain Python/numpy values.

    Scalars come back as float/complex/bool, vectors as 1-D arrays. Mixing a
    scalar with a vector in an arity-2 call broadcasts the scalar.
    """
    prim = pset.functions.get(name)
    if prim is None:
        raise KeyError(f"unknown primitive {name!r} for variant {pset.variant}")
    if len(args) != prim.arity:
        raise ValueError(f"{name} expects {prim.arity} arguments, got {len(args)}")
    values = []
    kinds = []
    for arg, want in zip(args, prim.arg_kinds):
        val, kind = _as_value(arg, pset.dtype)
        got = BOOL if kind is Kind.BOOL else NUM
        if got != want:
            raise TypeError(f"{name}: expected a {want} argument, got {got}")
        values.append(val)
        kinds.append(kind)
    with np.errstate(all="ignore"):
        out = prim.fn(*values)
    kind = prim.result_kind(tuple(kinds))
    if kind is Kind.BOOL and out.size == 1:
        return bool(out.reshape(-1)[0])
    if out.size == 1 and kind is not Kind.VECTOR:
        return out.reshape(-1)[0].item()
    return out.reshape(-1) if out.ndim > 1 else out


def interpret_signal(output, variant: str) -> Signal:
    """Map one agent output to Buy / Sell / Hold for the given variant."""
    if variant == "STVGP":
        arr = np.asarray(output).reshape(-1)
        return Signal.BUY if bool(arr[0]) else Signal.SELL
    arr = np.asarray(output)
    reduced = complex(arr.mean()).real if np.iscomplexobj(arr) else float(arr.mean())
    if not math.isfinite(reduced):
        return Signal.HOLD
    if reduced >= 1.0:
        return Signal.BUY
    if reduced <= -1.0:
        return Signal.SELL
    return Signal.HOLD

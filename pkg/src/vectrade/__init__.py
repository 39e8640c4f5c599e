"""vectrade: evolving trading strategies over daily OHLCV series with
standard, vectorial, complex-vectorial, and strongly-typed vectorial GP."""

from .backtest import (
    INACTIVE_PENALTY,
    BacktestResult,
    TradeState,
    fitness_of,
    profit_percentage,
    run_backtest,
    step,
)
from .engine import (
    EvolutionConfig,
    RunResult,
    TrainingRegime,
    evolve,
    init_population,
    point_mutation,
    sample_training_window,
    subtree_crossover,
    tournament_select,
)
from .evaluate import TableRuntime, TreeAgent
from .indicators import ema, rsi, sma
from .market_data import (
    Candle,
    FeatureTable,
    WindowView,
    enrich,
    load_feature_csv,
    load_ohlcv,
    split_train_test,
    window,
    write_feature_csv,
)
from .primitives import (
    Kind,
    PrimitiveSet,
    Signal,
    apply_primitive,
    broadcast,
    interpret_signal,
    primitive_set,
    protected_div,
)
from .stats import kruskal_wallis_p, mean_ranks, nemenyi_cd
from .trees import ExprTree, parse, to_string, typecheck

__version__ = "0.1.0"

__all__ = [
    "INACTIVE_PENALTY",
    "BacktestResult",
    "Candle",
    "EvolutionConfig",
    "ExprTree",
    "FeatureTable",
    "Kind",
    "PrimitiveSet",
    "RunResult",
    "Signal",
    "TableRuntime",
    "TradeState",
    "TrainingRegime",
    "TreeAgent",
    "WindowView",
    "apply_primitive",
    "broadcast",
    "ema",
    "enrich",
    "evolve",
    "fitness_of",
    "init_population",
    "interpret_signal",
    "kruskal_wallis_p",
    "load_feature_csv",
    "load_ohlcv",
    "mean_ranks",
    "nemenyi_cd",
    "parse",
    "point_mutation",
    "primitive_set",
    "profit_percentage",
    "protected_div",
    "rsi",
    "run_backtest",
    "sample_training_window",
    "sma",
    "split_train_test",
    "step",
    "subtree_crossover",
    "to_string",
    "tournament_select",
    "typecheck",
    "window",
    "write_feature_csv",
]

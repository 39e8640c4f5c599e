"""Evolution engine: typed tree generation, selection, variation, and runs.

Generations are numbered from 1 so that "every 50th generation" makes the
final generation of a 50-generation run the one evaluated on the whole
sampled training window. Depth and size limits hold at all times: offspring
that would violate them are discarded in favour of their parent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .backtest import INACTIVE_PENALTY, fitness_key, run_backtest
from .evaluate import HISTORY_ROWS, TableRuntime, TreeAgent
from .market_data import FeatureTable, concat_tables
from .primitives import BOOL, NUM, Kind, PrimitiveSet, Terminal, primitive_set
from .trees import ExprTree, Node, infer_kinds, iter_preorder, replace_at


@dataclass(frozen=True)
class EvolutionConfig:
    variant: str
    population_size: int = 3000
    generations: int = 50
    tournament_size: int = 30
    mutation_rate: float = 0.001
    crossover_rate: float = 0.9
    max_depth: int = 13
    max_size: int = 90
    init_depth: tuple[int, int] = (2, 6)
    elitism: int = 1
    seed: int = 0

    def validate(self) -> None:
        if self.variant not in ("GP", "VGP", "CVGP", "STVGP"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.population_size < 1 or self.generations < 1:
            raise ValueError("population and generations must be positive")
        if not 1 <= self.tournament_size <= self.population_size:
            raise ValueError("tournament size must be in [1, population size]")
        for name in ("mutation_rate", "crossover_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {rate}")
        lo, hi = self.init_depth
        if not 2 <= lo <= hi <= self.max_depth:
            raise ValueError(f"bad init depth range {self.init_depth}")
        if self.elitism < 0 or self.elitism > self.population_size:
            raise ValueError("elitism must be in [0, population size]")


@dataclass(frozen=True)
class TrainingRegime:
    buffer_days: int = 100
    segments: int = 3
    super_every: int = 50


@dataclass
class RunResult:
    seed: int
    variant: str
    best_fitness: list = field(default_factory=list)
    median_fitness: list = field(default_factory=list)
    mean_size: list[float] = field(default_factory=list)
    mean_depth: list[float] = field(default_factory=list)
    champion: str = ""
    champion_train_fitness: object = INACTIVE_PENALTY
    champion_test_fitness: object = INACTIVE_PENALTY


class _GenTables:
    """Sorted choice tables for one primitive set (stable across processes)."""

    _cache: dict[str, "_GenTables"] = {}

    def __init__(self, pset: PrimitiveSet):
        self.functions = sorted(pset.functions.values(), key=lambda p: p.name)
        self.terminals = sorted(pset.terminals.values(), key=lambda t: t.name)
        self.terminals_by_kind = {
            kind: [t for t in self.terminals if t.kind is kind]
            for kind in (Kind.SCALAR, Kind.VECTOR)
        }
        # Minimum remaining depth needed to produce each coarse kind.
        self.min_depth = {NUM: 1, BOOL: None}
        for _ in range(3):
            for prim in self.functions:
                needs = [self.min_depth[a] for a in prim.arg_kinds]
                if any(n is None for n in needs):
                    continue
                cand = 1 + max(needs)
                cur = self.min_depth[prim.result]
                if cur is None or cand < cur:
                    self.min_depth[prim.result] = cand
        self.by_result = {
            kind: [p for p in self.functions if p.result == kind] for kind in (NUM, BOOL)
        }

    @classmethod
    def of(cls, pset: PrimitiveSet) -> "_GenTables":
        tables = cls._cache.get(pset.variant)
        if tables is None:
            tables = cls(pset)
            cls._cache[pset.variant] = tables
        return tables


def random_tree(pset: PrimitiveSet, rng: np.random.Generator, max_depth: int,
                method: str, kind: str | None = None) -> Node:
    """Grow or full generation of a tree of the given coarse kind."""
    tables = _GenTables.of(pset)
    kind = pset.root_kind if kind is None else kind

    def gen(want: str, budget: int) -> Node:
        terms = tables.terminals if want == NUM else []
        funcs = [
            p
            for p in tables.by_result[want]
            if 1 + max(tables.min_depth[a] for a in p.arg_kinds) <= budget
        ]
        if not funcs or (
            terms
            and (
                budget <= 1
                or (
                    method == "grow"
                    and rng.random() < len(terms) / (len(terms) + len(funcs))
                )
            )
        ):
            if not terms:
                raise ValueError(f"cannot produce a {want} value within depth {budget}")
            return Node(terms[int(rng.integers(len(terms)))].name)
        prim = funcs[int(rng.integers(len(funcs)))]
        return Node(prim.name, tuple(gen(a, budget - 1) for a in prim.arg_kinds))

    need = tables.min_depth[kind]
    if need is None or max_depth < need:
        raise ValueError(f"variant {pset.variant} cannot root a {kind} tree at depth {max_depth}")
    return gen(kind, max_depth)


def init_population(config: EvolutionConfig, pset: PrimitiveSet,
                    rng: np.random.Generator) -> list[ExprTree]:
    """Ramped half-and-half population within the depth and size limits."""
    config.validate()
    lo, hi = config.init_depth
    population = []
    for i in range(config.population_size):
        method = "full" if i % 2 == 0 else "grow"
        tree = None
        for _ in range(50):
            depth = int(rng.integers(lo, hi + 1))
            candidate = ExprTree.from_root(random_tree(pset, rng, depth, method))
            if candidate.size <= config.max_size and candidate.depth <= config.max_depth:
                tree = candidate
                break
        if tree is None:
            tree = ExprTree.from_root(random_tree(pset, rng, lo, "grow"))
        population.append(tree)
    return population


def tournament_select(population: list[ExprTree], fitnesses: list,
                      k: int, rng: np.random.Generator) -> ExprTree:
    """Best of k uniform draws (with replacement); ties prefer smaller trees,
    then earlier population index."""
    idxs = rng.integers(len(population), size=k)
    best = None
    best_key = None
    for i in idxs:
        i = int(i)
        key = (fitness_key(fitnesses[i]), -population[i].size, -i)
        if best_key is None or key > best_key:
            best_key = key
            best = population[i]
    return best


def _coarse(node: Node, pset: PrimitiveSet) -> str:
    prim = pset.functions.get(node.op)
    return prim.result if prim is not None else NUM


def subtree_crossover(a: ExprTree, b: ExprTree, rng: np.random.Generator,
                      pset: PrimitiveSet, max_depth: int = 13,
                      max_size: int = 90) -> tuple[ExprTree, ExprTree]:
    """Swap kind-compatible subtrees; a child that would break the limits is
    replaced by its parent, and after 10 failed pairings both parents return."""
    nodes_a = list(iter_preorder(a.root))
    nodes_b = list(iter_preorder(b.root))
    for _ in range(10):
        i = int(rng.integers(a.size))
        j = int(rng.integers(b.size))
        if _coarse(nodes_a[i], pset) != _coarse(nodes_b[j], pset):
            continue
        child_a = ExprTree.from_root(replace_at(a.root, i, nodes_b[j]))
        child_b = ExprTree.from_root(replace_at(b.root, j, nodes_a[i]))
        if child_a.depth > max_depth or child_a.size > max_size:
            child_a = a
        if child_b.depth > max_depth or child_b.size > max_size:
            child_b = b
        return child_a, child_b
    return a, b


def _subtree_sizes(root: Node) -> list[int]:
    sizes: list[int] = []

    def walk(node: Node) -> int:
        idx = len(sizes)
        sizes.append(1)
        total = 1 + sum(walk(c) for c in node.children)
        sizes[idx] = total
        return total

    walk(root)
    return sizes


def point_mutation(tree: ExprTree, rate: float, rng: np.random.Generator,
                   pset: PrimitiveSet) -> ExprTree:
    """Independently replace nodes with same-signature alternatives.

    A replacement must keep arity, coarse argument kinds, coarse result kind,
    and the node's fine (scalar/vector/bool) result kind, so the tree's shape
    and typing are untouched. Nodes with no alternative are skipped.
    """
    draws = rng.random(tree.size)
    targets = np.nonzero(draws < rate)[0]
    if targets.size == 0:
        return tree
    tables = _GenTables.of(pset)
    nodes = list(iter_preorder(tree.root))
    kinds = infer_kinds(tree.root, pset)
    sizes = _subtree_sizes(tree.root)
    replacements: dict[int, str] = {}
    for idx in targets:
        idx = int(idx)
        node = nodes[idx]
        ref = pset.lookup(node.op)
        if isinstance(ref, Terminal):
            options = [t.name for t in tables.terminals_by_kind[ref.kind] if t.name != node.op]
        else:
            child_kinds = []
            pos = idx + 1
            for _ in node.children:
                child_kinds.append(kinds[pos])
                pos += sizes[pos]
            child_kinds = tuple(child_kinds)
            options = [
                p.name
                for p in tables.functions
                if p.name != node.op
                and p.arity == ref.arity
                and p.arg_kinds == ref.arg_kinds
                and p.result == ref.result
                and p.result_kind(child_kinds) is kinds[idx]
            ]
        if options:
            replacements[idx] = options[int(rng.integers(len(options)))]
    if not replacements:
        return tree

    def rebuild(node: Node, pos: int) -> tuple[Node, int]:
        op = replacements.get(pos, node.op)
        nxt = pos + 1
        kids = []
        for child in node.children:
            new_child, nxt = rebuild(child, nxt)
            kids.append(new_child)
        return Node(op, tuple(kids)), nxt

    root, _ = rebuild(tree.root, 0)
    return ExprTree.from_root(root)


def sample_training_window(train: FeatureTable, generation: int,
                           regime: TrainingRegime, rng: np.random.Generator) -> np.ndarray:
    """Evaluation rows for one generation.

    A start offset is drawn uniformly inside the buffer, fixing a window of
    constant width; the window splits into equal contiguous segments (spare
    rows go to the last) and the generation evaluates on segment
    ``generation mod segments``, or on the whole window every
    ``super_every`` generations (1-based).
    """
    n = len(train)
    if n <= regime.buffer_days + regime.segments:
        raise ValueError(
            f"training table of {n} rows is too short for a {regime.buffer_days}-day buffer"
        )
    start = int(rng.integers(regime.buffer_days))
    width = n - regime.buffer_days
    if generation % regime.super_every == 0:
        return np.arange(start, start + width)
    base = width // regime.segments
    part = generation % regime.segments
    lo = start + part * base
    hi = start + (part + 1) * base if part < regime.segments - 1 else start + width
    return np.arange(lo, hi)


def _tree_fitness(tree: ExprTree, pset: PrimitiveSet, runtime: TableRuntime,
                  rows: np.ndarray):
    agent = TreeAgent(tree, pset, runtime, rows)
    source = agent.vector_signals if agent.vector_signals is not None else agent.signal_at
    return run_backtest(source, rows, runtime.table).fitness


def evaluate_population(population: list[ExprTree], pset: PrimitiveSet,
                        runtime: TableRuntime, rows: np.ndarray) -> list:
    """Backtest fitness for every individual, deduplicating identical trees."""
    cache: dict[str, object] = {}
    fits = []
    for tree in population:
        if tree.serial not in cache:
            cache[tree.serial] = _tree_fitness(tree, pset, runtime, rows)
        fits.append(cache[tree.serial])
    return fits


def _best_index(population: list[ExprTree], fitnesses: list) -> int:
    return max(
        range(len(population)),
        key=lambda i: (fitness_key(fitnesses[i]), -population[i].size, -i),
    )


def _median_fitness(fitnesses: list):
    ordered = sorted(fitnesses, key=fitness_key)
    return ordered[(len(ordered) - 1) // 2]


def next_generation(population: list[ExprTree], fitnesses: list,
                    config: EvolutionConfig, pset: PrimitiveSet,
                    rng: np.random.Generator) -> list[ExprTree]:
    new: list[ExprTree] = []
    if config.elitism:
        order = sorted(
            range(len(population)),
            key=lambda i: (fitness_key(fitnesses[i]), -population[i].size, -i),
            reverse=True,
        )
        new.extend(population[i] for i in order[: config.elitism])
    while len(new) < config.population_size:
        p1 = tournament_select(population, fitnesses, config.tournament_size, rng)
        p2 = tournament_select(population, fitnesses, config.tournament_size, rng)
        if rng.random() < config.crossover_rate:
            c1, c2 = subtree_crossover(p1, p2, rng, pset, config.max_depth, config.max_size)
        else:
            c1, c2 = p1, p2
        new.append(point_mutation(c1, config.mutation_rate, rng, pset))
        if len(new) < config.population_size:
            new.append(point_mutation(c2, config.mutation_rate, rng, pset))
    return new


def evolve(config: EvolutionConfig, train: FeatureTable, test: FeatureTable,
           regime: TrainingRegime = TrainingRegime(),
           pset: PrimitiveSet | None = None,
           on_generation: Callable | None = None) -> RunResult:
    """Run one seeded evolution and judge its champion on train and test.

    The first 20 rows of the training table serve as window history only, so
    every evaluated row can anchor a 21-day window; the buffer offset is
    drawn inside the remainder. The champion is the final generation's best
    individual re-evaluated on the full training rows, and its test fitness
    is computed once, with the training tail supplying the test set's
    leading window history.
    """
    config.validate()
    pset = primitive_set(config.variant) if pset is None else pset
    rng = np.random.default_rng(config.seed)
    margin = HISTORY_ROWS
    if len(train) <= margin + regime.buffer_days + regime.segments:
        raise ValueError(f"training table of {len(train)} rows is too short")
    if len(test) < 2:
        raise ValueError(f"test table of {len(test)} rows is too short")

    population = init_population(config, pset, rng)
    runtime = TableRuntime(train, pset)
    sample_base = train[margin:]
    result = RunResult(seed=config.seed, variant=config.variant)

    for generation in range(1, config.generations + 1):
        rows = margin + sample_training_window(sample_base, generation, regime, rng)
        fitnesses = evaluate_population(population, pset, runtime, rows)
        best = _best_index(population, fitnesses)
        result.best_fitness.append(fitnesses[best])
        result.median_fitness.append(_median_fitness(fitnesses))
        result.mean_size.append(sum(t.size for t in population) / len(population))
        result.mean_depth.append(sum(t.depth for t in population) / len(population))
        if on_generation is not None:
            on_generation(generation, population, fitnesses)
        if generation < config.generations:
            population = next_generation(population, fitnesses, config, pset, rng)

    full_rows = np.arange(margin, len(train))
    full_fits = evaluate_population(population, pset, runtime, full_rows)
    champ_idx = _best_index(population, full_fits)
    champion = population[champ_idx]

    test_table = concat_tables(train[len(train) - margin:], test)
    test_runtime = TableRuntime(test_table, pset)
    test_rows = np.arange(margin, len(test_table))
    test_fitness = _tree_fitness(champion, pset, test_runtime, test_rows)

    result.champion = champion.serial
    result.champion_train_fitness = full_fits[champ_idx]
    result.champion_test_fitness = test_fitness
    return result

"""Multi-seed experiment orchestration and on-disk run artifacts.

Each (dataset, variant, seed) run owns one directory holding its generation
log and champion file; an index CSV summarizes every run, including failed
ones, so a partial experiment can still be reported or resumed by rerunning.
Seeds are ``base_seed + run_index``, printed in every artifact.
"""

from __future__ import annotations

import csv
import json
import multiprocessing
import traceback
from dataclasses import dataclass, field
from pathlib import Path

from .backtest import format_fitness, parse_fitness
from .engine import EvolutionConfig, RunResult, TrainingRegime, evolve
from .market_data import MarketDataError, load_feature_csv, split_train_test
from .primitives import VARIANTS

INDEX_COLUMNS = ["dataset", "variant", "seed", "status", "train_fitness", "test_fitness", "run_dir", "error"]


class SpecError(ValueError):
    """Raised for malformed experiment specs."""


@dataclass
class ExperimentSpec:
    datasets: list[str]
    variants: list[str] = field(default_factory=lambda: list(VARIANTS))
    runs: int = 10
    base_seed: int = 0
    out_dir: str = "runs"
    jobs: int = 1
    population: int = 3000
    generations: int = 50
    tournament: int = 30
    mutation_rate: float = 0.001
    crossover_rate: float = 0.9
    max_depth: int = 13
    max_size: int = 90

    def validate(self) -> None:
        if not self.datasets:
            raise SpecError("no datasets given")
        for path in self.datasets:
            if not Path(path).exists():
                raise SpecError(f"dataset does not exist: {path}")
        if not self.variants:
            raise SpecError("no variants given")
        for v in self.variants:
            if v not in VARIANTS:
                raise SpecError(f"unknown variant {v!r}; expected subset of {VARIANTS}")
        if self.runs < 1:
            raise SpecError("runs must be >= 1")
        if self.jobs < 1:
            raise SpecError("jobs must be >= 1")

    def config_for(self, variant: str, seed: int) -> EvolutionConfig:
        return EvolutionConfig(
            variant=variant,
            population_size=self.population,
            generations=self.generations,
            tournament_size=self.tournament,
            mutation_rate=self.mutation_rate,
            crossover_rate=self.crossover_rate,
            max_depth=self.max_depth,
            max_size=self.max_size,
            seed=seed,
        )


_INT_KEYS = {"runs", "seed", "jobs", "population", "generations", "tournament", "max_depth", "max_size"}
_FLOAT_KEYS = {"mutation_rate", "crossover_rate"}
_LIST_KEYS = {"datasets", "variants"}
_STR_KEYS = {"out"}


def parse_spec_file(path) -> dict:
    """Parse a plain ``key = value`` experiment file ('#' starts a comment)."""
    values: dict = {}
    path = Path(path)
    if not path.exists():
        raise SpecError(f"no such config file: {path}")
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in _LIST_KEYS:
            values[key] = [v.strip() for v in val.split(",") if v.strip()]
        elif key in _INT_KEYS:
            values[key] = int(val)
        elif key in _FLOAT_KEYS:
            values[key] = float(val)
        elif key in _STR_KEYS:
            values[key] = val
        else:
            raise SpecError(f"{path}:{lineno}: unknown key {key!r}")
    return values


def build_spec(file_values: dict | None = None, **overrides) -> ExperimentSpec:
    """Merge config-file values with flag overrides (flags win)."""
    merged = dict(file_values or {})
    for key, val in overrides.items():
        if val is None or (isinstance(val, (tuple, list)) and not val):
            continue
        merged[key] = list(val) if isinstance(val, tuple) else val
    try:
        return ExperimentSpec(
            datasets=[str(d) for d in merged.get("datasets", [])],
            variants=[str(v).upper() for v in merged.get("variants", list(VARIANTS))],
            runs=int(merged.get("runs", 10)),
            base_seed=int(merged.get("seed", 0)),
            out_dir=str(merged.get("out", "runs")),
            jobs=int(merged.get("jobs", 1)),
            population=int(merged.get("population", 3000)),
            generations=int(merged.get("generations", 50)),
            tournament=int(merged.get("tournament", 30)),
            mutation_rate=float(merged.get("mutation_rate", 0.001)),
            crossover_rate=float(merged.get("crossover_rate", 0.9)),
            max_depth=int(merged.get("max_depth", 13)),
            max_size=int(merged.get("max_size", 90)),
        )
    except (TypeError, ValueError) as exc:
        raise SpecError(f"bad experiment spec: {exc}") from None


def run_dir_for(out_dir, dataset, variant: str, seed: int) -> Path:
    return Path(out_dir) / Path(dataset).stem / variant / f"seed_{seed}"


def write_run_artifacts(run_dir: Path, dataset: str, config: EvolutionConfig,
                        result: RunResult) -> None:
    run_dir.mkdir(parents=True, exist_ok=True)
    with open(run_dir / "run_log.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["generation", "best_fitness", "median_fitness", "mean_size", "mean_depth"])
        for g in range(len(result.best_fitness)):
            writer.writerow(
                [
                    g + 1,
                    format_fitness(result.best_fitness[g]),
                    format_fitness(result.median_fitness[g]),
                    repr(result.mean_size[g]),
                    repr(result.mean_depth[g]),
                ]
            )
    champion = {
        "dataset": str(dataset),
        "variant": config.variant,
        "seed": config.seed,
        "tree": result.champion,
        "train_fitness": _fitness_json(result.champion_train_fitness),
        "test_fitness": _fitness_json(result.champion_test_fitness),
        "config": {
            "population_size": config.population_size,
            "generations": config.generations,
            "tournament_size": config.tournament_size,
            "mutation_rate": config.mutation_rate,
            "crossover_rate": config.crossover_rate,
            "max_depth": config.max_depth,
            "max_size": config.max_size,
            "init_depth": list(config.init_depth),
            "elitism": config.elitism,
        },
    }
    with open(run_dir / "champion.json", "w") as fh:
        json.dump(champion, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fitness_json(f):
    text = format_fitness(f)
    return text if text == "inactive" else float(text)


def load_champion(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise MarketDataError(f"no such champion file: {path}")
    with open(path) as fh:
        data = json.load(fh)
    for key in ("variant", "tree", "seed"):
        if key not in data:
            raise SpecError(f"{path}: champion file missing key {key!r}")
    return data


def _run_task(task: tuple) -> dict:
    dataset, variant, seed, spec_fields, out_dir = task
    row = {
        "dataset": dataset,
        "variant": variant,
        "seed": seed,
        "status": "ok",
        "train_fitness": "",
        "test_fitness": "",
        "run_dir": str(run_dir_for(out_dir, dataset, variant, seed)),
        "error": "",
    }
    try:
        spec = ExperimentSpec(datasets=[dataset], **spec_fields)
        table = load_feature_csv(dataset)
        train, test = split_train_test(table)
        config = spec.config_for(variant, seed)
        result = evolve(config, train, test, TrainingRegime())
        write_run_artifacts(Path(row["run_dir"]), dataset, config, result)
        row["train_fitness"] = format_fitness(result.champion_train_fitness)
        row["test_fitness"] = format_fitness(result.champion_test_fitness)
    except Exception as exc:  # noqa: BLE001 - failures become manifest rows
        row["status"] = "failed"
        row["error"] = f"{type(exc).__name__}: {exc}"
        traceback.print_exc()
    return row


def run_experiment(spec: ExperimentSpec) -> list[dict]:
    """Run every (dataset, variant, seed) combination and write the index."""
    spec.validate()
    spec_fields = {
        "runs": spec.runs,
        "base_seed": spec.base_seed,
        "jobs": 1,
        "population": spec.population,
        "generations": spec.generations,
        "tournament": spec.tournament,
        "mutation_rate": spec.mutation_rate,
        "crossover_rate": spec.crossover_rate,
        "max_depth": spec.max_depth,
        "max_size": spec.max_size,
        "variants": spec.variants,
        "out_dir": spec.out_dir,
    }
    tasks = [
        (dataset, variant, spec.base_seed + run, spec_fields, spec.out_dir)
        for dataset in spec.datasets
        for variant in spec.variants
        for run in range(spec.runs)
    ]
    if spec.jobs > 1:
        with multiprocessing.Pool(processes=spec.jobs) as pool:
            rows = list(pool.imap_unordered(_run_task, tasks))
    else:
        rows = [_run_task(t) for t in tasks]
    rows.sort(key=lambda r: (r["dataset"], VARIANTS.index(r["variant"]), r["seed"]))
    write_index(spec.out_dir, rows)
    return rows


def write_index(out_dir, rows: list[dict]) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "index.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=INDEX_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def load_index(out_dir) -> list[dict]:
    """Read the run index, or rebuild it by scanning for champion files."""
    path = Path(out_dir) / "index.csv"
    if path.exists():
        with open(path, newline="") as fh:
            return list(csv.DictReader(fh))
    rows = []
    for champ in sorted(Path(out_dir).glob("*/*/seed_*/champion.json")):
        data = load_champion(champ)
        rows.append(
            {
                "dataset": data["dataset"],
                "variant": data["variant"],
                "seed": data["seed"],
                "status": "ok",
                "train_fitness": _fitness_text(data["train_fitness"]),
                "test_fitness": _fitness_text(data["test_fitness"]),
                "run_dir": str(champ.parent),
                "error": "",
            }
        )
    if not rows:
        raise SpecError(f"no index.csv and no champion files under {out_dir}")
    return rows


def _fitness_text(value) -> str:
    return value if value == "inactive" else format_fitness(float(value))


def index_fitness(row: dict, which: str) -> float:
    """Numeric test/train fitness of an index row; inactivity maps to -inf."""
    value = parse_fitness(row[which])
    return value if isinstance(value, float) else float("-inf")

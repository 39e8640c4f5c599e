"""Cross-method comparison reports built from run artifacts.

Per dataset the report emits a test-fitness distribution summary, the
pairwise Kruskal-Wallis p-value matrix, mean-rank data with the Nemenyi
critical distance, and rendered boxplot / critical-difference figures.
Every number is recomputed from the champion files alone.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .experiment import SpecError, index_fitness, load_index
from .primitives import VARIANTS
from .stats import kruskal_wallis_p, mean_ranks


def collect_samples(rows: list[dict], which: str = "test_fitness"):
    """Group per-seed fitness by dataset and method, keeping seed order.

    Only rows with status ``ok`` participate; methods are compared on the
    seeds they all completed, so a partial experiment still reports.
    """
    per_dataset: dict[str, dict[str, dict[int, float]]] = {}
    for row in rows:
        if row["status"] != "ok":
            continue
        ds = per_dataset.setdefault(row["dataset"], {})
        ds.setdefault(row["variant"], {})[int(row["seed"])] = index_fitness(row, which)
    out: dict[str, dict[str, list[float]]] = {}
    for dataset, methods in per_dataset.items():
        common = None
        for seeds in methods.values():
            keys = set(seeds)
            common = keys if common is None else common & keys
        common = sorted(common or ())
        out[dataset] = {
            m: [methods[m][s] for s in common]
            for m in sorted(methods, key=_variant_order)
        }
    return out


def _variant_order(name: str):
    return (VARIANTS.index(name), name) if name in VARIANTS else (len(VARIANTS), name)


def quartiles(values: list[float]) -> dict[str, float]:
    arr = np.asarray(values, dtype=np.float64)
    q1, med, q3 = np.percentile(arr, [25, 50, 75])
    return {
        "min": float(arr.min()),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "max": float(arr.max()),
    }


def write_report(out_dir, report_dir=None, alpha: float = 0.05,
                 figures: bool = True) -> Path:
    """Build the full report tree for one experiment's output directory."""
    rows = load_index(out_dir)
    test_samples = collect_samples(rows, "test_fitness")
    train_samples = collect_samples(rows, "train_fitness")
    if not test_samples:
        raise SpecError(f"no successful runs under {out_dir}")
    report_root = Path(report_dir) if report_dir else Path(out_dir) / "report"
    for dataset, methods in sorted(test_samples.items()):
        names = list(methods)
        n_seeds = min((len(v) for v in methods.values()), default=0)
        if len(names) < 1 or n_seeds < 2:
            raise SpecError(
                f"dataset {dataset}: need at least 2 common seeds per method to report"
            )
        ds_dir = report_root / Path(dataset).stem
        ds_dir.mkdir(parents=True, exist_ok=True)

        with open(ds_dir / "summary.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "n", "min", "q1", "median", "q3", "max"])
            for m in names:
                q = quartiles(methods[m])
                writer.writerow(
                    [m, len(methods[m])]
                    + [repr(q[k]) for k in ("min", "q1", "median", "q3", "max")]
                )

        with open(ds_dir / "pvalues.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method"] + names)
            for a in names:
                line = [a]
                for b in names:
                    line.append("" if a == b else repr(kruskal_wallis_p(methods[a], methods[b])))
                writer.writerow(line)

        if len(names) >= 2:
            matrix = np.array([methods[m] for m in names])
            ranking = mean_ranks(matrix, alpha=alpha)
            with open(ds_dir / "mean_ranks.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["method", "mean_rank"])
                for m, r in zip(names, ranking.mean_ranks):
                    writer.writerow([m, repr(float(r))])
            cd_data = {
                "alpha": alpha,
                "n_methods": len(names),
                "n_seeds": n_seeds,
                "cd": ranking.cd,
                "order": [names[i] for i in ranking.order],
                "groups": [[names[i] for i in g] for g in ranking.groups],
                "mean_ranks": {m: float(r) for m, r in zip(names, ranking.mean_ranks)},
            }
            with open(ds_dir / "cd.json", "w") as fh:
                json.dump(cd_data, fh, indent=2, sort_keys=True)
                fh.write("\n")
            if figures:
                from .plots import cd_diagram, fitness_boxplot

                fitness_boxplot(
                    train_samples.get(dataset, {}),
                    methods,
                    Path(dataset).stem,
                    ds_dir / "fitness_boxplot.png",
                )
                cd_diagram(
                    names,
                    [float(r) for r in ranking.mean_ranks],
                    ranking.cd,
                    Path(dataset).stem,
                    ds_dir / "cd_diagram.png",
                )
    return report_root

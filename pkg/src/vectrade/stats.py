"""Nonparametric comparison of methods across seeds.

Pairwise two-group Kruskal-Wallis tests (chi-square approximation, one
degree of freedom, tie-corrected) and Nemenyi-style mean-rank summaries with
the critical distance at a given significance level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2, rankdata, studentized_range


def kruskal_wallis_p(a, b) -> float:
    """Two-group Kruskal-Wallis p-value with tie correction.

    H = (12 / (N (N+1)) * sum R_j^2 / n_j - 3 (N+1)) / (1 - sum(t^3 - t) / (N^3 - N))
    referred to chi-square with one degree of freedom. Identical pooled
    samples carry no rank information and score p = 1 by convention.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 values")
    pooled = np.concatenate([a, b])
    if np.all(pooled == pooled[0]):
        return 1.0
    n = pooled.size
    ranks = rankdata(pooled)
    r1 = ranks[: a.size].sum()
    r2 = ranks[a.size :].sum()
    h = 12.0 / (n * (n + 1)) * (r1**2 / a.size + r2**2 / b.size) - 3.0 * (n + 1)
    _, counts = np.unique(pooled, return_counts=True)
    correction = 1.0 - (counts**3 - counts).sum() / (n**3 - n)
    if correction <= 0:
        return 1.0
    h /= correction
    return float(chi2.sf(h, 1))


def nemenyi_q(n_methods: int, alpha: float = 0.05) -> float:
    """Critical value of the Nemenyi test: the studentized range quantile
    for infinite degrees of freedom, divided by sqrt(2)."""
    if n_methods < 2:
        raise ValueError("need at least 2 methods")
    return float(studentized_range.ppf(1.0 - alpha, n_methods, np.inf) / math.sqrt(2.0))


def nemenyi_cd(n_methods: int, n_samples: int, alpha: float = 0.05) -> float:
    """Minimum mean-rank gap that is significant at the given level."""
    q = nemenyi_q(n_methods, alpha)
    return q * math.sqrt(n_methods * (n_methods + 1) / (6.0 * n_samples))


@dataclass(frozen=True)
class MeanRankResult:
    mean_ranks: np.ndarray  # per method, rank 1 = best
    cd: float
    alpha: float
    order: tuple[int, ...]  # method indices sorted best-first
    groups: tuple[tuple[int, ...], ...]  # maximal sets not significantly separated

    def rank_of(self, method_index: int) -> float:
        return float(self.mean_ranks[method_index])


def mean_ranks(per_seed_fitness, alpha: float = 0.05) -> MeanRankResult:
    """Mean rank of each method over seeds, plus the critical distance.

    ``per_seed_fitness`` is a (methods x seeds) array; higher is better, and
    within each seed methods are ranked 1 = best with ties sharing the
    average rank.
    """
    values = np.asarray(per_seed_fitness, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] < 2 or values.shape[1] < 2:
        raise ValueError("need a (methods x seeds) matrix with at least 2 of each")
    k, n = values.shape
    ranks = np.empty_like(values)
    for j in range(n):
        ranks[:, j] = rankdata(-values[:, j])
    means = ranks.mean(axis=1)
    cd = nemenyi_cd(k, n, alpha)
    order = tuple(sorted(range(k), key=lambda i: (means[i], i)))
    groups = []
    for lo in range(k):
        hi = lo
        while hi + 1 < k and means[order[hi + 1]] - means[order[lo]] <= cd:
            hi += 1
        group = tuple(order[lo : hi + 1])
        if len(group) > 1 and not any(set(group) <= set(g) for g in groups):
            groups.append(group)
    return MeanRankResult(means, cd, alpha, order, tuple(groups))

"""Rank-based outcome measures: median rank with IQR, recall@k, recall curves."""

from __future__ import annotations

import numpy as np


def median_and_iqr(ranks: "list[int]") -> tuple[float, float, float]:
    """(median, q1, q3) of the ranks, quantiles by linear interpolation
    between order statistics."""
    if len(ranks) == 0:
        raise ValueError("ranks must be non-empty")
    data = np.asarray(ranks, dtype=np.float64)
    median, q1, q3 = np.quantile(data, [0.5, 0.25, 0.75], method="linear")
    return float(median), float(q1), float(q3)


def recall_at_k(ranks: "list[int]", k: int) -> float:
    """Fraction of queries whose true article ranked within the top k."""
    if len(ranks) == 0:
        raise ValueError("ranks must be non-empty")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return sum(1 for r in ranks if r <= k) / len(ranks)


def recall_curve(ranks: "list[int]", pool_size: int) -> "list[tuple[int, float]]":
    """Compressed recall@k step curve over k = 1..pool_size.

    One point per distinct rank value, plus the endpoints k=1 and
    k=pool_size; evaluating recall_at_k at any k and stepping through the
    curve agree exactly.
    """
    if len(ranks) == 0:
        raise ValueError("ranks must be non-empty")
    offenders = [r for r in ranks if r > pool_size or r < 1]
    if offenders:
        raise ValueError(f"ranks outside [1, pool_size={pool_size}]: {offenders[:10]}")
    n = len(ranks)
    counts = np.bincount(np.asarray(ranks, dtype=np.int64), minlength=pool_size + 1)
    points: list[tuple[int, float]] = []
    if counts[1] == 0:
        points.append((1, 0.0))
    covered = 0
    for rank in np.flatnonzero(counts):
        covered += int(counts[rank])
        points.append((int(rank), covered / n))
    if points[-1][0] != pool_size:
        points.append((pool_size, 1.0))
    return points

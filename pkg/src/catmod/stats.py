"""Spearman rank correlation with average ranks for ties."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import UndefinedCorrelationError


def rank_transform(values: Sequence[float]) -> np.ndarray:
    """Ranks 1..n; tied values share the mean of the positions they span."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("rank_transform needs a non-empty 1-d sequence")
    order = np.argsort(v, kind="mergesort")
    sorted_v = v[order]
    # boundaries of runs of equal values in sorted order
    starts = np.flatnonzero(np.r_[True, sorted_v[1:] != sorted_v[:-1]])
    ends = np.r_[starts[1:], v.size]
    avg = (starts + ends + 1) / 2.0  # mean of 1-based positions start+1 .. end
    ranks = np.empty(v.size)
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of the average-rank transforms of ``x`` and ``y``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"paired samples must be equal-length 1-d sequences, got {x.shape} and {y.shape}")
    if x.size < 3:
        raise UndefinedCorrelationError(f"need at least 3 paired observations, got {x.size}")
    if np.any(np.isnan(x)) or np.any(np.isnan(y)):
        raise UndefinedCorrelationError("sample contains NaN")
    rx = rank_transform(x)
    ry = rank_transform(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation is undefined for a constant sample")
    rho = float(dx @ dy) / np.sqrt(sxx * syy)
    return float(np.clip(rho, -1.0, 1.0))

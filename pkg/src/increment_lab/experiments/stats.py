"""Statistical helpers shared by the experiment runners."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True, eq=False)
class CovMatrix:
    """Wiener-sheet covariance ``prod_j min(t_k^(j), t_k'^(j))`` at the points ``t_1..t_p``."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        object.__setattr__(self, "points", pts)

    @property
    def matrix(self) -> np.ndarray:
        p = self.points
        return np.prod(np.minimum(p[:, None, :], p[None, :, :]), axis=-1)

    def char_value(self, theta) -> float:
        """``exp(-theta' Sigma theta / 2)``, the Gaussian characteristic functional."""
        theta = np.asarray(theta, dtype=float)
        return float(np.exp(-0.5 * theta @ self.matrix @ theta))


def ks_critical(replicas: int, level: float) -> float:
    """Exact one-sample two-sided KS critical value (continuous null)."""
    return float(stats.kstwo.ppf(1.0 - level, replicas))


def discrete_ks(sample: np.ndarray, cdf) -> float:
    """``sup_x |F_emp(x) - F(x)|`` for an integer sample against an integer-supported cdf.

    Both functions only jump at integers, so the supremum is attained on the
    integers between the sample extremes, extended by one on each side.
    """
    sample = np.asarray(sample)
    ks = np.arange(sample.min() - 1, sample.max() + 1)
    emp = np.searchsorted(np.sort(sample), ks, side="right") / sample.size
    return float(np.max(np.abs(emp - cdf(ks))))


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("INCREMENT_LAB_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn, items) -> list:
    """Ordered map over ``items`` using up to ``INCREMENT_LAB_THREADS`` worker threads."""
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))

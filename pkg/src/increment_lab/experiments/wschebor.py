"""Occupation fractions of rescaled Brownian increments."""

from __future__ import annotations

import math

import numpy as np
from scipy import stats

from ..increments import ConfigError
from ..sampling import SeedStream
from .config import ExperimentConfig
from .report import Report

DEFAULT_SETS = ({"lo": None, "hi": 0.0}, {"lo": -1.0, "hi": 1.0}, {"lo": None, "hi": None})


def gaussian_mass(lo, hi) -> float:
    lo = -math.inf if lo is None else lo
    hi = math.inf if hi is None else hi
    return float(stats.norm.cdf(hi) - stats.norm.cdf(lo))


def _in_interval(z: np.ndarray, lo, hi) -> np.ndarray:
    mask = np.ones(z.shape, dtype=bool)
    if lo is not None:
        mask &= z >= lo
    if hi is not None:
        mask &= z <= hi
    return mask


def run_wschebor(cfg: ExperimentConfig) -> Report:
    """For each ``eps`` and interval ``B``: the fraction of ``u in [a, b]`` with
    ``(W(u+eps) - W(u)) / sqrt(eps)`` in ``B``, against ``P(N(0,1) in B)``.

    The path is sampled on a uniform grid of ``steps`` points per unit time;
    ``u`` runs over the grid points of ``[a, b)``.  Only the smallest ``eps``
    carries hard verdicts.
    """
    steps = int(cfg.opt("steps", 10 ** 6))
    eps_list = [float(e) for e in cfg.opt("eps", [1e-2, 1e-3])]
    a, b = (float(v) for v in cfg.opt("interval", [0.0, 1.0]))
    sets = cfg.opt("sets", list(DEFAULT_SETS))
    tol = float(cfg.opt("tol", 0.01))
    if any(x <= y for x, y in zip(eps_list, eps_list[1:])):
        raise ConfigError(f"eps schedule must decrease, got {eps_list}")
    lags = []
    for eps in eps_list:
        lag = round(eps * steps)
        if lag < 1 or abs(lag - eps * steps) > 1e-6 * max(1.0, eps * steps):
            raise ConfigError(f"eps={eps} is not a positive multiple of the path resolution 1/{steps}")
        lags.append(lag)
    if not 0 <= a < b:
        raise ConfigError(f"need 0 <= a < b, got [{a}, {b}]")

    seed = SeedStream(cfg.seed, (1,))
    start, stop = round(a * steps), round(b * steps)
    total = stop + max(lags)
    inc = seed.generator().standard_normal(total) / math.sqrt(steps)
    path = np.concatenate([[0.0], np.cumsum(inc)])

    report = Report("wschebor", cfg.to_dict(), seed.lineage())
    smallest = min(eps_list)
    for eps, lag in zip(eps_list, lags):
        z = (path[start + lag:stop + lag] - path[start:stop]) / math.sqrt(lag / steps)
        for B in sets:
            frac = float(np.mean(_in_interval(z, B.get("lo"), B.get("hi"))))
            target = gaussian_mass(B.get("lo"), B.get("hi"))
            label = f"B=[{B.get('lo')}, {B.get('hi')}]"
            report.series.append({"eps": eps, "set": label, "fraction": frac, "target": target,
                                  "gap": frac - target})
            report.check("AC5", f"occupation eps={eps:g} {label}", frac, target, tol,
                         hard=eps == smallest)
    report.stats = {"steps": steps, "interval": [a, b]}
    return report

"""Verification campaigns for local empirical increments and their reports."""

from __future__ import annotations

import time

from .config import CONFIG_VERSION, ExperimentConfig, load_config_file, loglog
from .lil import run_theorem2, run_theorem3, subsequence
from .poissonization_suite import run_poissonization_suite
from .report import PROXY_BANNER, Report, Verdict
from .stats import CovMatrix, discrete_ks, ks_critical, parallel_map
from .theorem1 import (char_functional_check, poissonized_clt_check, run_theorem1,
                       variance_decay_check)
from .wschebor import run_wschebor

RUNNERS = {
    "wschebor": run_wschebor,
    "theorem1": run_theorem1,
    "theorem2": run_theorem2,
    "theorem3": run_theorem3,
    "poissonization": run_poissonization_suite,
    "char": char_functional_check,
    "variance": variance_decay_check,
    "clt": poissonized_clt_check,
}

# Acceptance-scale defaults; a config file overrides any field per experiment.
DEFAULTS = {
    "wschebor": dict(options={"steps": 1_000_000, "eps": [1e-2, 1e-3], "interval": [0.0, 1.0],
                              "tol": 0.01}),
    "theorem1": dict(
        n=(200_000,), beta=0.6, u_res=2000, m=32,
        events=(
            {"label": "endpoint<=0", "event": {"kind": "endpoint_le", "value": 0.0},
             "reference": 0.5, "tol": 0.03},
            {"label": "sup<=1", "event": {"kind": "sup_ball", "radius": 1.0},
             "reference": "mc", "tol": 0.05},
        ),
        options={"mc_paths": 100_000, "oscillation_deltas": [0.5, 0.25, 0.125],
                 "oscillation_eps": 0.5},
    ),
    "char": dict(n=(200_000,), beta=0.6, lo=0.02, hi=0.98, u_res=20_000, m=10,
                 options={"points": [[0.5], [0.7]], "thetas": [1.0, 1.0], "tol": 0.04}),
    "variance": dict(n=(10_000, 100_000), beta=0.6, u_res=2000, m=4, replicas=200,
                     options={"rho": {"kind": "endpoint_le", "value": 0.0},
                              "a_factors": [1.0, 2.0], "band": 4.0}),
    "clt": dict(n=(1_000_000,), beta=1 / 3, m=10, replicas=10_000,
                options={"points": [[1.0], [0.5]], "pairs": [[[0.5], [0.7]]], "level": 1e-3}),
    "theorem2": dict(n=(10_000, 100_000, 1_000_000), beta=0.5, u_res=200, m=8,
                     options={"eps": 0.5, "eps_scan": [0.1, 0.25], "trend_tol": 0.05,
                              "nk_range": [32, 55],
                              "path_anchors": 4}),
    "theorem3": dict(n=(10_000, 100_000, 1_000_000), beta=None, c=2.0, u_res=200, m=4,
                     replicas=10_000, options={"eps": 0.5, "law_n": 2000, "level": 1e-3}),
    "poissonization": dict(options={"factor2_cases": 200, "independence_cases": 100,
                                    "exists_forall_cases": 100}),
}


def default_config(name: str) -> ExperimentConfig:
    if name not in RUNNERS:
        raise KeyError(f"unknown experiment {name!r}")
    return ExperimentConfig(experiment=name, **DEFAULTS[name])


def run_experiment(cfg: ExperimentConfig) -> Report:
    """Run ``cfg`` with the runner named by ``cfg.experiment`` and record the wall-clock time."""
    start = time.perf_counter()
    report = RUNNERS[cfg.experiment](cfg)
    report.runtime = time.perf_counter() - start
    return report


__all__ = [
    "CONFIG_VERSION", "CovMatrix", "DEFAULTS", "ExperimentConfig", "PROXY_BANNER", "RUNNERS",
    "Report", "Verdict", "char_functional_check", "default_config", "discrete_ks",
    "ks_critical", "load_config_file", "loglog", "parallel_map", "poissonized_clt_check",
    "run_experiment", "run_poissonization_suite", "run_theorem1", "run_theorem2",
    "run_theorem3", "run_wschebor", "subsequence", "variance_decay_check",
]

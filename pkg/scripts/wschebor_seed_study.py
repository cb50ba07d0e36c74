"""Spread of the Wschebor occupation fractions across root seeds at acceptance scale.

Shows how often a single fixed-seed run lands inside the +/-0.01 band, and
compares the empirical spread with the small-eps variance of the occupation
fraction of (W(u+eps) - W(u))/sqrt(eps) over u in [0, 1].
"""

import argparse
import math

import numpy as np
from scipy import integrate, stats

from increment_lab.experiments import default_config, run_experiment


def predicted_sd(lo, hi, eps):
    """Small-eps sd: sqrt(2 eps int_0^1 Cov(1_B(Z_0), 1_B(Z_s)) ds), Z_s correlated by 1-s."""
    p = stats.norm.cdf(hi) - stats.norm.cdf(lo)

    def joint(r):
        cov = [[1.0, r], [r, 1.0]]
        mvn = stats.multivariate_normal(mean=[0.0, 0.0], cov=cov)
        lo_, hi_ = max(lo, -12.0), min(hi, 12.0)
        return (mvn.cdf([hi_, hi_]) - mvn.cdf([lo_, hi_]) - mvn.cdf([hi_, lo_])
                + mvn.cdf([lo_, lo_]))

    val, _ = integrate.quad(lambda s: 2 * (joint(1 - s) - p * p), 0.0, 1.0, limit=50)
    return math.sqrt(eps * val)


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, nargs=2, default=[2000, 2030])
    args = parser.parse_args()
    rows = {}
    for seed in range(*args.seeds):
        rep = run_experiment(default_config("wschebor").merged({"seed": seed}))
        for v in rep.verdicts:
            if v.criterion == "AC5" and v.hard and v.target < 1:
                rows.setdefault(v.name, []).append((v.value, v.target, v.passed))
    for name, vals in rows.items():
        x = np.array([v for v, _, _ in vals])
        hit = np.mean([p for _, _, p in vals])
        print(f"{name}: mean {x.mean():.5f} sd {x.std(ddof=1):.5f} inside band {hit:.0%}")
    print(f"predicted sd, B=(-inf,0]: {predicted_sd(-np.inf, 0.0, 1e-3):.4f}")
    print(f"predicted sd, B=[-1,1]:   {predicted_sd(-1.0, 1.0, 1e-3):.4f}")

"""Build tests/data/cluster_paths.json: short synthetic paths with oracle cluster verdicts.

Membership of each path element comes from the exact d=1 taut-string rate;
elements whose rate lies within 1e-3 of the ball threshold are redrawn so
that the stored verdicts are unambiguous.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from oracles import taut_rate  # noqa: E402

BALLS = [
    {"ball": "strassen", "epsilon": 0.2, "threshold": 1.0},
    {"ball": "gamma", "c": 2.0, "epsilon": 0.15, "threshold": 0.5},
]


def draw_element(rng, kind, m, thr, eps):
    while True:
        if kind == "strassen":
            dens = rng.normal(0.0, 1.5, size=m)
        else:
            dens = rng.gamma(2.0, 0.6, size=m) - (rng.random() < 0.2) * 0.8
        values = np.concatenate([[0.0], np.cumsum(dens) / m])
        r = taut_rate(values, eps, kind)
        if abs(r - thr) > 1e-3:
            return dens / m, bool(r <= thr)


def build(seed: int, count: int, m: int, length: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    cases = []
    for i in range(count):
        ball = BALLS[i % len(BALLS)]
        kind, eps, thr = ball["ball"], ball["epsilon"], ball["threshold"]
        path, members = [], []
        for _ in range(length):
            cells, member = draw_element(rng, kind, m, thr, eps)
            path.append(cells.tolist())
            members.append(member)
        # targets with rate well inside the ball: densities 0 and 1/2 (J = 0, 1/4),
        # densities 1 and 6/5 (Poisson rate 0 and about 0.019)
        if kind == "strassen":
            targets = [[0.0] * m, [0.5 / m] * m]
        else:
            targets = [[1.0 / m] * m, [1.2 / m] * m]
        visit_eps = 0.3
        cdfs = [np.concatenate([[0.0], np.cumsum(p)]) for p in path]
        tcdfs = [np.concatenate([[0.0], np.cumsum(t)]) for t in targets]
        visits = [[j for j, c in enumerate(cdfs) if np.max(np.abs(c - tc)) <= visit_eps] for tc in tcdfs]
        absorption = None
        for j in range(length - 1, -1, -1):
            if not members[j]:
                break
            absorption = j
        cases.append({
            "m": m, "ball": {k: v for k, v in ball.items() if k != "threshold"},
            "path": path, "targets": targets, "visit_eps": visit_eps,
            "expected": {"members": members, "absorption_index": absorption,
                         "visit_index": [v[0] if v else None for v in visits],
                         "visit_count": [len(v) for v in visits]},
        })
    return cases


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=31337)
    parser.add_argument("--count", type=int, default=12)
    parser.add_argument("--m", type=int, default=4)
    parser.add_argument("--length", type=int, default=8)
    parser.add_argument("--out", default=str(ROOT / "tests" / "data" / "cluster_paths.json"))
    args = parser.parse_args()
    cases = build(args.seed, args.count, args.m, args.length)
    Path(args.out).write_text(json.dumps({"seed": args.seed, "cases": cases}, indent=1) + "\n")
    print(f"wrote {len(cases)} paths to {args.out}")


if __name__ == "__main__":
    main()

"""Build tests/data/rate_corpus.json: d=1, m<=3 ball instances with exactly known optimal rate.

An instance is kept only when the quantized exhaustive search and the taut
string agree, which means the optimum sits on the quantization grid and the
stored value is exact.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

from oracles import quantized_rate, taut_rate  # noqa: E402


def build(seed: int, per_kind: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    out = []
    for kind in ("strassen", "gamma"):
        kept = 0
        while kept < per_kind:
            m = int(rng.integers(1, 4))
            if kind == "strassen":
                dens = rng.integers(-10, 11, size=m) * 0.2
            else:
                dens = rng.integers(-5, 31, size=m) * 0.1
            eps = float(rng.integers(1, 11)) * 0.05
            values = np.concatenate([[0.0], np.cumsum(dens) / m])
            q = quantized_rate(values, eps, kind)
            t = taut_rate(values, eps, kind)
            same = (math.isinf(q) and math.isinf(t)) or abs(q - t) <= 1e-9
            if not same:
                continue
            out.append({
                "kind": kind, "m": m, "c": float(rng.choice([0.5, 1.0, 2.0])) if kind == "gamma" else None,
                "cell_mass": (dens / m).tolist(), "eps": eps,
                "r": q if math.isfinite(q) else "inf",
            })
            kept += 1
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=20240)
    parser.add_argument("--per-kind", type=int, default=60)
    parser.add_argument("--out", default=str(ROOT / "tests" / "data" / "rate_corpus.json"))
    args = parser.parse_args()
    corpus = build(args.seed, args.per_kind)
    Path(args.out).write_text(json.dumps({"seed": args.seed, "instances": corpus}, indent=1) + "\n")
    print(f"wrote {len(corpus)} instances to {args.out}")


if __name__ == "__main__":
    main()

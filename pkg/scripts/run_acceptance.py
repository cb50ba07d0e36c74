"""Run every experiment at acceptance scale and write reports.

    python3 scripts/run_acceptance.py --out reports/acceptance
"""

import argparse
import sys
from pathlib import Path

from increment_lab.cli import main

ROOT = Path(__file__).resolve().parents[1]


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(ROOT / "reports" / "acceptance"))
    parser.add_argument("--seed", type=int)
    args = parser.parse_args()
    argv = ["all", "--config", str(ROOT / "configs" / "acceptance.json"), "--out", args.out]
    if args.seed is not None:
        argv += ["--seed", str(args.seed)]
    sys.exit(main(argv))

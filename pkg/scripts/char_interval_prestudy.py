"""Pass rate of the characteristic-functional check for two anchor ranges I.

Seeds are disjoint from the suite seed; this is the study that fixed the
default I before the acceptance run.
"""

import argparse

from increment_lab.experiments import default_config, run_experiment

RANGES = {"I=[0.25,0.65]": (0.25, 0.65, 8000), "I=[0.02,0.98]": (0.02, 0.98, 20000)}

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, nargs=2, default=[100, 120])
    args = parser.parse_args()
    for label, (lo, hi, u_res) in RANGES.items():
        gaps = []
        for seed in range(*args.seeds):
            cfg = default_config("char").merged({"seed": seed, "lo": lo, "hi": hi, "u_res": u_res})
            rep = run_experiment(cfg)
            gaps.append(rep.series[-1]["gap"])
        ok = sum(g <= 0.04 for g in gaps)
        print(f"{label}: pass {ok}/{len(gaps)}, worst gap {max(gaps):.4f}")

"""Randomized exact campaigns for the factor-2 inequality and the independence factorization."""

from __future__ import annotations

import math

from .. import poissonization as pz
from ..sampling import SeedStream
from .config import ExperimentConfig
from .report import Report

WORKED_LHS = 0.25
WORKED_RHS = math.exp(-1.0)  # 2 * P(Poisson(1) = 2) = 2 * e^-1 / 2


def worked_case() -> pz.Case:
    """Uniform on {0, 1}, B = {1}, n = 2, last element, C = {2}."""
    dist = pz.DiscreteDist(((0.0,), (1.0,)), (0.5, 0.5))
    return pz.Case(dist, 2, (1,), pz.LastElement(), pz.ElementSet("points", points=((2.0,),)))


def run_poissonization_suite(cfg: ExperimentConfig) -> Report:
    seed = SeedStream(cfg.seed, (8,))
    report = Report("poissonization", cfg.to_dict(), seed.lineage())
    counts = {"factor2": int(cfg.opt("factor2_cases", 200)),
              "independence": int(cfg.opt("independence_cases", 100)),
              "exists_forall": int(cfg.opt("exists_forall_cases", 100))}

    v = pz.run_case_factor2(worked_case())
    report.stats["worked"] = v.to_dict()
    report.check("AC1", "worked case lhs", v.lhs, WORKED_LHS, 1e-10)
    report.check("AC1", "worked case rhs", v.rhs, WORKED_RHS, 1e-10)

    violations = []
    rng = seed.child(1).generator()
    mutation_hits = 0
    for i in range(counts["factor2"]):
        case = pz.random_factor2_case(rng)
        verdict = pz.run_case_factor2(case)
        if not verdict.holds:
            violations.append({"campaign": "factor2", "index": i, "case": case.to_dict(),
                               "verdict": verdict.to_dict()})
        if not pz.run_case_factor2(case, factor=1.0).holds:
            mutation_hits += 1
    if not pz.run_case_factor2(worked_case(), factor=1.0).holds:
        mutation_hits += 1
    report.check("AC1", "factor-2 violations", len(violations), 0, 0)
    report.check("AC1", "mutation probe (factor 1) finds violations", mutation_hits, 1, 0,
                 passed=mutation_hits >= 1, detail="the campaign must have power")

    rng = seed.child(2).generator()
    ef_bad = 0
    for i in range(counts["exists_forall"]):
        case = pz.random_factor2_case(rng, kinds=("indicator",))
        for name, verdict in pz.check_exists_forall(case.dist, case.n, case.B,
                                                    case.phi.C).items():
            if not verdict.holds:
                ef_bad += 1
                violations.append({"campaign": f"exists_forall/{name}", "index": i,
                                   "case": case.to_dict(), "verdict": verdict.to_dict()})
    report.check("AC1", "exists/forall violations", ef_bad, 0, 0)

    rng = seed.child(3).generator()
    worst = 0.0
    ind_bad = 0
    running_max = 0
    for i in range(counts["independence"]):
        case = pz.random_independence_case(rng)
        verdict = pz.run_case_independence(case)
        worst = max(worst, verdict.gap)
        running_max += case.phi.kind == "runmax"
        if not verdict.holds:
            ind_bad += 1
            violations.append({"campaign": "independence", "index": i, "case": case.to_dict(),
                               "verdict": verdict.to_dict()})
    report.check("AC2", "independence violations", ind_bad, 0, 0)
    report.stats.update({"cases": counts, "mutation_hits": mutation_hits,
                         "independence_worst_gap": worst, "running_max_cases": running_max,
                         "violations": violations})
    report.series = [
        {"campaign": "factor2", "cases": counts["factor2"],
         "violations": sum(v["campaign"] == "factor2" for v in violations),
         "mutation_hits": mutation_hits},
        {"campaign": "exists_forall", "cases": counts["exists_forall"], "violations": ef_bad},
        {"campaign": "independence", "cases": counts["independence"], "violations": ind_bad,
         "worst_gap": worst},
    ]
    return report

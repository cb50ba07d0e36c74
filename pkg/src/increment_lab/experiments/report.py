"""Structured experiment reports: verdicts, per-n statistics, JSON and CSV output."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

PROXY_BANNER = "asymptotic claim: property-based proxy"


def _clean(x):
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python numbers."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


@dataclass
class Verdict:
    criterion: str
    name: str
    value: float
    target: float
    tolerance: float
    passed: bool
    hard: bool = True
    detail: str = ""


@dataclass
class Report:
    experiment: str
    config: dict
    seed: dict
    stats: dict = field(default_factory=dict)
    series: list[dict] = field(default_factory=list)
    verdicts: list[Verdict] = field(default_factory=list)
    banner: str | None = None
    runtime: float = 0.0

    def check(self, criterion: str, name: str, value: float, target: float, tolerance: float,
              passed: bool | None = None, hard: bool = True, detail: str = "") -> Verdict:
        """Record a verdict; by default it passes when ``|value - target| <= tolerance``."""
        if passed is None:
            passed = bool(abs(value - target) <= tolerance)
        v = Verdict(criterion, name, float(value), float(target), float(tolerance), bool(passed),
                    hard, detail)
        self.verdicts.append(v)
        return v

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts if v.hard)

    def failures(self) -> list[Verdict]:
        return [v for v in self.verdicts if v.hard and not v.passed]

    def to_dict(self) -> dict:
        """Everything except the wall-clock runtime, so equal inputs give equal bytes."""
        return _clean({
            "experiment": self.experiment, "banner": self.banner, "passed": self.passed,
            "config": self.config, "seed": self.seed, "stats": self.stats,
            "verdicts": [asdict(v) for v in self.verdicts], "series": self.series,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, out_dir) -> dict:
        """Write ``<experiment>.json``, ``<experiment>.csv`` and ``<experiment>.timing.json``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"json": out / f"{self.experiment}.json", "csv": out / f"{self.experiment}.csv",
                 "timing": out / f"{self.experiment}.timing.json"}
        paths["json"].write_text(self.to_json() + "\n")
        rows = _clean(self.series)
        columns = sorted({k for row in rows for k in row})
        with paths["csv"].open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns)
            writer.writeheader()
            writer.writerows(rows)
        paths["timing"].write_text(json.dumps({"runtime_s": self.runtime}) + "\n")
        return paths

    def summary_lines(self) -> list[str]:
        lines = []
        for v in self.verdicts:
            tag = "PASS" if v.passed else "FAIL"
            kind = "" if v.hard else " (soft)"
            lines.append(f"[{tag}] {v.criterion} {v.name}: value={v.value:.6g} "
                         f"target={v.target:.6g} tol={v.tolerance:.3g}{kind}")
        return lines

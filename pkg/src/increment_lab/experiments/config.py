"""Experiment configuration: schedules, window geometry, hypothesis checks, JSON loading."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..gridfun import GridSpec
from ..increments import ConfigError, WindowConfig

CONFIG_VERSION = 1


def loglog(n: float) -> float:
    return math.log(math.log(n))


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment run.

    The window scale follows ``a_n = a_scale * n^-beta`` or, when ``c`` is
    set, the regime ``n a_n^d = c log log n``.  ``options`` carries the
    knobs specific to one runner (tolerances, evaluation points, ...).
    """

    experiment: str
    d: int = 1
    n: tuple[int, ...] = (10_000,)
    beta: float | None = 0.6
    c: float | None = None
    a_scale: float = 1.0
    lo: float = 0.25
    hi: float = 0.65
    u_res: int = 200
    m: int = 8
    events: tuple = ()
    replicas: int = 200
    seed: int = 1729
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "n", tuple(int(v) for v in self.n))
        object.__setattr__(self, "events", tuple(self.events))
        if self.d < 1 or self.m < 1:
            raise ConfigError("need d >= 1 and m >= 1")
        if not self.n or min(self.n) < 16:
            raise ConfigError("sample sizes must be at least 16 (log log n > 0)")
        if (self.beta is None) == (self.c is None):
            raise ConfigError("set exactly one of beta (a_n = n^-beta) and c (n a^d = c log log n)")
        if self.c is not None and not self.c > 0:
            raise ConfigError(f"c must be positive, got {self.c}")
        if self.beta is not None and not self.beta > 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")
        if self.replicas < 1:
            raise ConfigError("replicas must be positive")

    def a(self, n: int) -> float:
        if self.c is not None:
            return (self.c * loglog(n) / n) ** (1.0 / self.d)
        return self.a_scale * n ** (-self.beta)

    @property
    def t_spec(self) -> GridSpec:
        return GridSpec(self.d, self.m)

    def window(self, n: int, scale: float = 1.0, **overrides) -> WindowConfig:
        geo = {"lo": self.lo, "hi": self.hi, "u_res": self.u_res, **overrides}
        return WindowConfig(scale * self.a(n), geo["lo"], geo["hi"], geo["u_res"], self.t_spec)

    def opt(self, key: str, default=None):
        return self.options.get(key, default)

    def ratios(self) -> list[dict]:
        """The quantities appearing in the theorem hypotheses, at every scheduled ``n``."""
        out = []
        for n in self.n:
            a = self.a(n)
            out.append({
                "n": n, "a": a, "n_ad": n * a ** self.d,
                "log_inv_a_over_loglog": math.log(1 / a) / loglog(n),
                "n_ad_over_loglog": n * a ** self.d / loglog(n),
            })
        return out

    def check_hypotheses(self, regime: str) -> list[dict]:
        """Raise :class:`ConfigError` naming the failing ratio when the schedule breaks ``regime``.

        ``regime`` is ``"t1"`` (distributional), ``"t2"`` (Strassen) or ``"t3"`` (nonstandard).
        """
        rows = self.ratios()
        ns = [r["n"] for r in rows]
        if ns != sorted(set(ns)):
            raise ConfigError(f"n schedule must be strictly increasing, got {ns}")
        if regime == "t3":
            if self.c is None:
                raise ConfigError("the nonstandard regime needs c (n a^d = c log log n)")
            return rows
        if self.c is not None:
            raise ConfigError("this experiment needs a power schedule a_n = n^-beta")
        a = [r["a"] for r in rows]
        nad = [r["n_ad"] for r in rows]
        if any(x <= y for x, y in zip(a, a[1:])):
            raise ConfigError(f"a_n must decrease along the schedule, got {a}")
        if any(x >= y for x, y in zip(nad, nad[1:])):
            raise ConfigError(f"n a_n^d must increase along the schedule, got {nad}")
        bound = 2.0 if regime == "t2" else 1.0
        for r in rows:
            if not r["log_inv_a_over_loglog"] > bound:
                raise ConfigError(
                    f"log(1/a_n)/log log n = {r['log_inv_a_over_loglog']:.4g} <= {bound} at n={r['n']}"
                )
        if regime == "t2":
            q = [r["n_ad_over_loglog"] for r in rows]
            if any(x >= y for x, y in zip(q, q[1:])):
                raise ConfigError(f"n a_n^d / log log n must increase along the schedule, got {q}")
        return rows

    def to_dict(self) -> dict:
        out = asdict(self)
        out["n"] = list(self.n)
        out["events"] = [copy.deepcopy(e) for e in self.events]
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**obj)

    def merged(self, overrides: dict) -> "ExperimentConfig":
        """A copy with ``overrides`` applied; ``options`` are merged key by key."""
        overrides = dict(overrides)
        unknown = set(overrides) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "options" in overrides:
            overrides["options"] = {**self.options, **overrides["options"]}
        return replace(self, **overrides)


def load_config_file(path) -> dict:
    """Read a versioned config file ``{"version": 1, "seed": ..., "experiments": {...}}``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(obj, dict) or obj.get("version") != CONFIG_VERSION:
        raise ConfigError(f"{path}: expected a config with \"version\": {CONFIG_VERSION}")
    extra = set(obj) - {"version", "seed", "experiments"}
    if extra:
        raise ConfigError(f"{path}: unknown top-level keys {sorted(extra)}")
    return obj

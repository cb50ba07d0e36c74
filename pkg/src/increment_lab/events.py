"""Testable predicates on lattice distribution functions.

Events act on batches: ``event.evaluate(values)`` takes lattice values of
shape ``(batch, m+1, ..., m+1)`` and returns a boolean array of length
``batch``.  Calling an event on a single :class:`GridFunction` evaluates a
batch of one.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .gridfun import GridFunction, GridSpec


class FunctionalEvent:
    name = "event"

    def evaluate(self, values: np.ndarray, spec: GridSpec) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, f: GridFunction) -> bool:
        return bool(self.evaluate(f.cdf[None], f.spec)[0])

    def to_dict(self) -> dict:
        raise NotImplementedError


def _flat(values: np.ndarray, spec: GridSpec) -> np.ndarray:
    return values.reshape(values.shape[0], -1)


@dataclass(frozen=True)
class Always(FunctionalEvent):
    name = "always"

    def evaluate(self, values, spec):
        return np.ones(values.shape[0], dtype=bool)

    def to_dict(self):
        return {"kind": "always"}


@dataclass(frozen=True)
class EndpointHalfSpace(FunctionalEvent):
    """``f(1,...,1) <= threshold`` (or ``>=`` when ``upper`` is False)."""

    threshold: float = 0.0
    upper: bool = True
    name = "endpoint"

    def evaluate(self, values, spec):
        end = values[(slice(None),) + (-1,) * spec.d]
        return end <= self.threshold if self.upper else end >= self.threshold

    def to_dict(self):
        return {"kind": "endpoint_le" if self.upper else "endpoint_ge", "value": self.threshold}


@dataclass(frozen=True)
class SupBall(FunctionalEvent):
    """Closed sup-norm ball ``||f - center|| <= radius`` (center defaults to 0)."""

    radius: float
    center: tuple[float, ...] | None = None
    name = "sup_ball"

    def evaluate(self, values, spec):
        flat = _flat(values, spec)
        if self.center is not None:
            flat = flat - np.asarray(self.center, dtype=float)[None, :]
        return np.max(np.abs(flat), axis=1) <= self.radius

    def to_dict(self):
        out = {"kind": "sup_ball", "radius": self.radius}
        if self.center is not None:
            out["center"] = list(self.center)
        return out


def oscillation(values: np.ndarray, spec: GridSpec, delta: float) -> np.ndarray:
    """``sup |f(s) - f(t)|`` over lattice pairs with ``max_k |s_k - t_k| < delta``."""
    reach = int(np.ceil(delta * spec.m - 1e-9)) - 1
    best = np.zeros(values.shape[0])
    if reach < 1:
        return best
    n = spec.m + 1
    for offset in itertools.product(range(-reach, reach + 1), repeat=spec.d):
        # one of each symmetric pair suffices
        if offset <= (0,) * spec.d:
            continue
        src = tuple(slice(max(0, -o), n - max(0, o)) for o in offset)
        dst = tuple(slice(max(0, o), n - max(0, -o)) for o in offset)
        diff = np.abs(values[(slice(None),) + dst] - values[(slice(None),) + src])
        best = np.maximum(best, diff.reshape(values.shape[0], -1).max(axis=1))
    return best


@dataclass(frozen=True)
class Oscillation(FunctionalEvent):
    """Modulus-of-continuity event ``sup_{|s-t|_d < delta} |f(s) - f(t)| > eps``."""

    delta: float
    eps: float
    name = "oscillation"

    def evaluate(self, values, spec):
        return oscillation(values, spec, self.delta) > self.eps

    def to_dict(self):
        return {"kind": "oscillation", "delta": self.delta, "eps": self.eps}


@dataclass(frozen=True)
class Neighborhood(FunctionalEvent):
    """``sup_distance(f, target) <= eps`` for a fixed target grid function."""

    target: GridFunction
    eps: float
    name = "neighborhood"

    def evaluate(self, values, spec):
        flat = _flat(values, spec) - self.target.cdf.ravel()[None, :]
        return np.max(np.abs(flat), axis=1) <= self.eps

    def to_dict(self):
        return {"kind": "neighborhood", "eps": self.eps,
                "target": {"d": self.target.spec.d, "m": self.target.spec.m,
                           "cell_mass": self.target.cell_mass.ravel().tolist()}}


@dataclass(frozen=True)
class BallEvent(FunctionalEvent):
    """Membership in the enlarged Strassen ball or Gamma_c ball (solver-backed, not vectorized)."""

    ball: "object"
    name = "ball"

    def evaluate(self, values, spec):
        from .rates import ball_feasibility

        out = np.zeros(values.shape[0], dtype=bool)
        for i in range(values.shape[0]):
            f = GridFunction.from_cdf(spec, values[i])
            out[i] = ball_feasibility(f, self.ball, decide_only=True).member
        return out

    def to_dict(self):
        return {"kind": "ball", **self.ball.to_dict()}


def event_from_dict(obj: dict) -> FunctionalEvent:
    kind = obj["kind"]
    if kind == "always":
        return Always()
    if kind == "endpoint_le":
        return EndpointHalfSpace(float(obj.get("value", 0.0)), True)
    if kind == "endpoint_ge":
        return EndpointHalfSpace(float(obj.get("value", 0.0)), False)
    if kind == "sup_ball":
        center = obj.get("center")
        return SupBall(float(obj["radius"]), tuple(center) if center is not None else None)
    if kind == "oscillation":
        return Oscillation(float(obj["delta"]), float(obj["eps"]))
    if kind == "neighborhood":
        t = obj["target"]
        target = GridFunction.from_cell_mass(GridSpec(t["d"], t["m"]), t["cell_mass"])
        return Neighborhood(target, float(obj["eps"]))
    if kind == "ball":
        from .rates import BallSpec

        return BallEvent(BallSpec.from_dict(obj))
    raise ValueError(f"unknown event kind {kind!r}")

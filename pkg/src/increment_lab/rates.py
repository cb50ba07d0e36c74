"""Gaussian and Poisson rate functionals on grid functions, and enlarged-ball membership.

At lattice resolution every grid function has the piecewise-constant density
``g_c = cell_mass_c * m^d``, so

* ``rate_J(f)       = sum_c g_c^2 m^-d``
* ``rate_poisson(f) = sum_c h(g_c) m^-d`` with ``h(x) = x log x - x + 1``
  (infinite as soon as one density is negative).

Membership of ``f`` in the eps-enlargement of ``{rate <= threshold}`` is
decided through ``r(f, eps) = inf {rate(h) : sup_distance(h, f) <= eps}``.
The constraint is a box on the lattice values of ``h``, which are linear in
its densities.  The solver runs accelerated proximal-gradient ascent on the
Lagrange dual of that problem (one multiplier per interior lattice point,
soft-thresholding as the prox of the ``eps * |nu|_1`` term).  Each dual
iterate gives a lower bound on ``r``; the primal densities recovered from it,
pulled back into the box when needed, give an upper bound.  A decision is
only returned once one of the two bounds certifies it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.special import xlogy

from .gridfun import GridFunction, sup_distance

MAX_ITER = 10_000
STALL_WINDOW = 50
STALL_TOL = 1e-9
REPAIR_EVERY = 100
GAP_TOL = 1e-9
INFEASIBLE_BOUND = 1e12


class PreconditionError(ValueError):
    pass


def h(x, convention: str = "limit"):
    """``x log x - x + 1``; ``h(0)`` is 1 under ``"limit"`` and 0 under ``"literal"``."""
    x = np.asarray(x, dtype=float)
    out = xlogy(x, x) - x + 1.0
    if convention == "literal":
        out = np.where(x == 0, 0.0, out)
    elif convention != "limit":
        raise ValueError(f"unknown convention {convention!r}")
    return out


@dataclass
class RateValue:
    value: float
    finite: bool
    witness: np.ndarray | None = field(default=None, repr=False)
    reason: str | None = None

    def to_dict(self) -> dict:
        return {"value": self.value if self.finite else "inf", "finite": self.finite,
                "reason": self.reason}


def rate_J(f: GridFunction) -> RateValue:
    g = f.density
    return RateValue(float(np.sum(g * g) * f.spec.cell_volume), True, g)


def rate_poisson(f: GridFunction, c: float | None = None, convention: str = "limit") -> RateValue:
    """Poisson rate of ``f``; ``c`` is accepted for symmetry with :class:`BallSpec` and unused."""
    g = f.density
    if np.any(g < 0):
        return RateValue(math.inf, False, None, "negative density")
    return RateValue(float(np.sum(h(g, convention)) * f.spec.cell_volume), True, g)


@dataclass(frozen=True)
class BallSpec:
    kind: str = "strassen"
    c: float | None = None
    epsilon: float = 0.0

    def __post_init__(self):
        if self.kind not in ("strassen", "gamma"):
            raise ValueError(f"unknown ball kind {self.kind!r}")
        if self.kind == "gamma" and not (self.c is not None and self.c > 0):
            raise ValueError("a Gamma ball needs c > 0")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")

    @property
    def threshold(self) -> float:
        return 1.0 if self.kind == "strassen" else 1.0 / self.c

    def rate(self, f: GridFunction) -> RateValue:
        return rate_J(f) if self.kind == "strassen" else rate_poisson(f)

    def with_epsilon(self, epsilon: float) -> "BallSpec":
        return BallSpec(self.kind, self.c, float(epsilon))

    def to_dict(self) -> dict:
        out = {"ball": self.kind, "epsilon": self.epsilon}
        if self.c is not None:
            out["c"] = self.c
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "BallSpec":
        return cls(obj.get("ball", "strassen"), obj.get("c"), float(obj.get("epsilon", 0.0)))


@dataclass
class Feasibility:
    status: str
    r: float
    lower: float
    upper: float
    threshold: float
    iterations: int
    witness: np.ndarray | None = field(default=None, repr=False)

    @property
    def member(self) -> bool:
        return self.status == "member"

    @property
    def margin(self) -> float:
        return self.threshold - self.r

    def to_dict(self) -> dict:
        def num(x):
            return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")

        return {"status": self.status, "value": num(self.r), "finite": math.isfinite(self.r),
                "margin": num(self.margin), "lower": num(self.lower), "upper": num(self.upper),
                "iterations": self.iterations}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# -- lattice operators -------------------------------------------------------


def _cumsum_all(x: np.ndarray) -> np.ndarray:
    for ax in range(x.ndim):
        x = np.cumsum(x, axis=ax)
    return x


def _revcumsum_all(x: np.ndarray) -> np.ndarray:
    for ax in range(x.ndim):
        x = np.flip(np.cumsum(np.flip(x, axis=ax), axis=ax), axis=ax)
    return x


class _Problem:
    """Dual of ``min sum_c w Phi(g_c)  s.t.  |w cumsum(g) - f| <= eps`` on interior lattice points."""

    def __init__(self, f: GridFunction, kind: str, eps: float):
        self.kind = kind
        self.eps = eps
        self.w = f.spec.cell_volume
        self.target = f.cdf[(slice(1, None),) * f.spec.d]
        self.shape = self.target.shape

    def phi(self, g):
        if self.kind == "strassen":
            return g * g
        return h(g)

    def conj(self, y):
        if self.kind == "strassen":
            return 0.25 * y * y
        with np.errstate(over="ignore"):
            return np.expm1(y)

    def recover(self, sigma):
        if self.kind == "strassen":
            return -0.5 * sigma
        with np.errstate(over="ignore"):
            return np.exp(-sigma)

    def smooth(self, nu):
        """Smooth dual part, its gradient, and the recovered primal densities."""
        sigma = _revcumsum_all(nu)
        g = self.recover(sigma)
        val = -self.w * np.sum(self.conj(-sigma)) - np.sum(nu * self.target)
        grad = self.w * _cumsum_all(g) - self.target
        return float(val), grad, g

    def dual(self, nu) -> float:
        return self.smooth(nu)[0] - self.eps * float(np.sum(np.abs(nu)))

    def residual(self, g) -> np.ndarray:
        return np.abs(self.w * _cumsum_all(g) - self.target)

    def primal(self, g) -> float:
        return float(self.w * np.sum(self.phi(g)))


def _cumulative_matrix(spec) -> np.ndarray:
    lower = np.tril(np.ones((spec.m, spec.m)))
    out = np.ones((1, 1))
    for _ in range(spec.d):
        out = np.kron(out, lower)
    return out


def max_slack_point(f: GridFunction, eps: float) -> tuple[float, np.ndarray | None]:
    """Non-negative densities maximizing the slack ``s`` in ``|cdf - f| <= eps - s``.

    Returns ``(s, g)``; a negative ``s`` certifies that no non-negative
    measure lies within ``eps`` of ``f``.
    """
    spec = f.spec
    n = spec.n_cells
    A = spec.cell_volume * _cumulative_matrix(spec)
    target = f.cdf[(slice(1, None),) * spec.d].ravel()
    ones = np.ones((n, 1))
    A_ub = np.vstack([np.hstack([A, ones]), np.hstack([-A, ones])])
    b_ub = np.concatenate([target + eps, eps - target])
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    bounds = [(0, None)] * n + [(None, eps)]
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status == 2:
        return -math.inf, None
    if res.status != 0:
        raise RuntimeError(f"slack LP failed: {res.message}")
    return float(res.x[-1]), res.x[:-1].reshape(spec.cell_shape)


def repair_point(f: GridFunction, eps: float, g: np.ndarray, nonnegative: bool) -> np.ndarray | None:
    """The feasible densities closest to ``g`` in l1 (an LP), or None when the ball is empty.

    Used when the feasible set has no interior, so that no convex combination
    with a reference point can absorb the constraint violation of a
    dual-recovered candidate.
    """
    spec = f.spec
    n = spec.n_cells
    A = spec.cell_volume * _cumulative_matrix(spec)
    target = f.cdf[(slice(1, None),) * spec.d].ravel()
    x0 = np.asarray(g, dtype=float).ravel()
    eye = np.eye(n)
    zeros = np.zeros((n, n))
    A_ub = np.vstack([np.hstack([A, zeros]), np.hstack([-A, zeros]),
                      np.hstack([eye, -eye]), np.hstack([-eye, -eye])])
    b_ub = np.concatenate([target + eps, eps - target, x0, -x0])
    cost = np.concatenate([np.zeros(n), np.ones(n)])
    bounds = [(0, None) if nonnegative else (None, None)] * n + [(0, None)] * n
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0:
        return None
    return res.x[:n].reshape(spec.cell_shape)


def _soft(x, thr):
    return np.sign(x) * np.maximum(np.abs(x) - thr, 0.0)


def ball_feasibility(f: GridFunction, ball: BallSpec, *, decide_only: bool = False,
                     max_iter: int = MAX_ITER) -> Feasibility:
    """Decide whether ``f`` lies in the ``ball.epsilon``-enlarged rate ball.

    ``decide_only`` stops as soon as membership is certified either way;
    otherwise the solve continues until the duality gap closes.
    """
    thr = ball.threshold
    eps = ball.epsilon
    own = ball.rate(f)

    def done(status, r, lo, hi, it, wit):
        return Feasibility(status, r, lo, hi, thr, it, wit)

    def verdict(r):
        return "member" if r <= thr else "non-member"

    if eps == 0.0:
        r = own.value
        return done(verdict(r), r, r, r, 0, own.witness)

    # cheap certificates before any iteration
    if ball.kind == "strassen":
        if float(np.max(np.abs(f.cdf))) <= eps:
            return done("member", 0.0, 0.0, 0.0, 0, np.zeros(f.spec.cell_shape))
    else:
        ident = GridFunction.from_cell_mass(f.spec, np.full(f.spec.cell_shape, f.spec.cell_volume))
        if sup_distance(f, ident) <= eps:
            return done("member", 0.0, 0.0, 0.0, 0, np.ones(f.spec.cell_shape))
    if decide_only and own.finite and own.value <= thr:
        return done("member", own.value, 0.0, own.value, 0, own.witness)

    prob = _Problem(f, ball.kind, eps)
    ref, slack = (own.witness, eps) if own.finite else (None, 0.0)
    zero_slack = None
    if ref is None:
        slack, point = max_slack_point(f, eps)
        if slack < -1e-12:
            return done("non-member", math.inf, math.inf, math.inf, 0, None)
        if slack > 1e-12:
            ref = point
        else:
            zero_slack = point
    nu = np.zeros(prob.shape)
    y = nu.copy()
    theta = 1.0
    step = 1.0 / max(1.0, prob.w * np.prod(prob.shape) ** 2)
    lower = prob.dual(nu)
    anchor = ref if ref is not None else zero_slack
    upper = prob.primal(anchor) if anchor is not None else math.inf
    best_g = anchor
    history = [lower]
    it = 0
    for it in range(1, max_iter + 1):
        sy, gy, _ = prob.smooth(y)
        while True:
            cand = _soft(y + step * gy, step * eps)
            sc, _, _ = prob.smooth(cand)
            diff = cand - y
            if np.isfinite(sc) and sc >= sy + np.sum(gy * diff) - np.sum(diff * diff) / (2 * step) - 1e-15 * abs(sy):
                break
            step *= 0.5
            if step < 1e-300:
                break
        dval = sc - eps * float(np.sum(np.abs(cand)))
        if dval < lower:  # adaptive restart of the momentum
            theta = 1.0
            y = nu.copy()
            step *= 0.5
            continue
        theta_next = 0.5 * (1 + math.sqrt(1 + 4 * theta * theta))
        y = cand + ((theta - 1) / theta_next) * (cand - nu)
        nu, theta = cand, theta_next
        lower = dval
        step *= 2.0

        _, _, g = prob.smooth(nu)
        if ref is None and it % REPAIR_EVERY == 0 and np.all(np.isfinite(g)):
            fixed = repair_point(f, eps, g, ball.kind == "gamma")
            if fixed is not None and prob.primal(fixed) < upper:
                upper, best_g = prob.primal(fixed), fixed
        if np.all(np.isfinite(g)):
            viol = float(np.max(prob.residual(g) - eps))
            if viol <= 0:
                val = prob.primal(g)
            elif ref is not None:
                lam = viol / (viol + slack)
                g = (1 - lam) * g + lam * ref
                val = prob.primal(g)
            else:
                val = math.inf
            if val < upper:
                upper, best_g = val, g
        history.append(lower)

        if decide_only and (upper <= thr or lower > thr):
            break
        if lower > INFEASIBLE_BOUND:
            upper = math.inf
            break
        if not math.isfinite(upper):
            continue
        if upper - lower <= GAP_TOL * (1 + upper):
            break
        if (len(history) > STALL_WINDOW and history[-1] - history[-1 - STALL_WINDOW] < STALL_TOL
                and upper - lower <= 1e-6 * (1 + upper)):
            break

    if upper <= thr:
        status = "member"
    elif lower > thr:
        status = "non-member"
    else:
        status = "indeterminate"
    return done(status, upper, lower, upper, it, best_g)


@dataclass
class ClusterReport:
    members: list[bool]
    absorption_index: int | None
    visit_index: list[int | None]
    visit_count: list[int]
    member_count: int
    indeterminate: int

    def to_dict(self) -> dict:
        return {"absorption_index": self.absorption_index, "visit_index": self.visit_index,
                "visit_count": self.visit_count, "member_count": self.member_count,
                "indeterminate": self.indeterminate, "length": len(self.members)}


def cluster_check(path, targets, ball: BallSpec, eps: float) -> ClusterReport:
    """Absorption of ``path`` into the enlarged ball and first visits to the ``eps``-balls of ``targets``."""
    for i, t in enumerate(targets):
        rv = ball.rate(t)
        if not (rv.finite and rv.value <= ball.threshold + 1e-12):
            raise PreconditionError(
                f"target {i} has rate {rv.value} above the ball threshold {ball.threshold}"
            )
    statuses = [ball_feasibility(f, ball, decide_only=True).status for f in path]
    members = [s == "member" for s in statuses]
    absorption = None
    for i in range(len(members) - 1, -1, -1):
        if not members[i]:
            break
        absorption = i
    visit_index: list[int | None] = []
    visit_count = []
    for t in targets:
        hits = [i for i, f in enumerate(path) if sup_distance(f, t) <= eps]
        visit_index.append(hits[0] if hits else None)
        visit_count.append(len(hits))
    return ClusterReport(members, absorption, visit_index, visit_count, sum(members),
                         statuses.count("indeterminate"))

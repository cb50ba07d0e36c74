"""Exact finite-support checks of the Poissonization inequality and the independence factorization.

The semigroup is ``R^dim`` under addition.  Elements are tuples of floats.
A truncating map ``phi`` acts on tuples of running sums
``(S_1, ..., S_p)`` with ``S_j = sum_{i<=j} 1_B(X_i) X_i``; the empty running
sum is the one-tuple ``(0,)``.

Laws are dictionaries ``value -> probability``.  The fixed-``n`` law is
obtained by enumerating all atom sequences.  Poisson mixtures need laws for
every length up to a truncation point ``M`` (about 40 for the campaign
sizes), far beyond enumeration, so they are computed by a forward dynamic
program over the state ``(running sum, phi-state)``: every map here has an
incremental form ``init / step / output`` whose output agrees with the
tuple form (this agreement is part of the test suite).  The probability mass
of ``eta > M`` is returned alongside every mixture as a certified tail.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

ENUM_BUDGET = 10 ** 7
FLOAT_SLACK = 1e-14


class BudgetError(RuntimeError):
    pass


class PreconditionError(ValueError):
    pass


def canon(x) -> tuple:
    """Hashable canonical form of an element (rounding merges float-equal sums, -0.0 -> 0.0)."""
    return tuple(round(float(v), 12) + 0.0 for v in x)


def add(x: tuple, y: tuple) -> tuple:
    return tuple(a + b for a, b in zip(x, y))


# -- distributions ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiscreteDist:
    atoms: tuple
    probs: tuple

    def __post_init__(self):
        atoms = tuple(canon(np.atleast_1d(a)) for a in self.atoms)
        probs = tuple(float(p) for p in self.probs)
        if len(atoms) != len(probs) or not atoms:
            raise ValueError("atoms and probs must be non-empty and of equal length")
        if len({len(a) for a in atoms}) != 1:
            raise ValueError("all atoms must have the same dimension")
        if len(set(atoms)) != len(atoms):
            raise ValueError("atoms must be distinct")
        if any(p < 0 for p in probs):
            raise ValueError("probabilities must be non-negative")
        if abs(math.fsum(probs) - 1.0) > 1e-15:
            raise ValueError(f"probabilities sum to {math.fsum(probs)!r}, not 1")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)

    @property
    def dim(self) -> int:
        return len(self.atoms[0])

    @property
    def zero(self) -> tuple:
        return (0.0,) * self.dim

    def prob_of(self, B) -> float:
        return math.fsum(self.probs[i] for i in B)

    def selected(self, B) -> list[tuple]:
        """``1_B(x) x`` for every atom ``x``."""
        return [a if i in B else self.zero for i, a in enumerate(self.atoms)]

    def to_dict(self) -> dict:
        return {"atoms": [list(a) for a in self.atoms], "probs": list(self.probs)}

    @classmethod
    def from_dict(cls, obj) -> "DiscreteDist":
        return cls(tuple(tuple(a) for a in obj["atoms"]), tuple(obj["probs"]))


# -- sets of elements / phi-values ---------------------------------------------


@dataclass(frozen=True)
class ElementSet:
    """A decidable subset of ``R^k``.

    kinds: ``all``, ``points`` (finite set), ``halfspace`` (``w.x >= b`` or
    ``<= b`` by ``sense``).
    """

    kind: str = "all"
    points: tuple = ()
    w: tuple = ()
    b: float = 0.0
    sense: str = ">="

    def __contains__(self, x) -> bool:
        if self.kind == "all":
            return True
        if self.kind == "points":
            return canon(x) in {canon(p) for p in self.points}
        if self.kind == "halfspace":
            s = math.fsum(a * v for a, v in zip(self.w, x))
            return s >= self.b if self.sense == ">=" else s <= self.b
        raise ValueError(f"unknown set kind {self.kind!r}")

    def to_dict(self) -> dict:
        if self.kind == "all":
            return {"kind": "all"}
        if self.kind == "points":
            return {"kind": "points", "points": [list(p) for p in self.points]}
        return {"kind": "halfspace", "w": list(self.w), "b": self.b, "sense": self.sense}

    @classmethod
    def from_dict(cls, obj) -> "ElementSet":
        kind = obj["kind"]
        if kind == "all":
            return cls()
        if kind == "points":
            return cls("points", points=tuple(tuple(p) for p in obj["points"]))
        return cls("halfspace", w=tuple(obj["w"]), b=float(obj["b"]), sense=obj["sense"])


EventSpec = ElementSet


# -- truncating maps ------------------------------------------------------------

SEMINORMS = {
    "abs0": lambda x: abs(x[0]),
    "abs1": lambda x: abs(x[1]),
    "l1": lambda x: math.fsum(abs(v) for v in x),
    "linf": lambda x: max(abs(v) for v in x),
    "l2": lambda x: math.sqrt(math.fsum(v * v for v in x)),
}


class TruncMap:
    """A map on non-empty tuples of elements, with an equivalent incremental form."""

    kind = "abstract"
    claims_zero_irrelevant = False

    def init(self):
        return None

    def step(self, state, s: tuple):
        raise NotImplementedError

    def output(self, state) -> tuple:
        raise NotImplementedError

    def __call__(self, seq) -> tuple:
        if len(seq) == 0:
            raise ValueError("truncating maps act on non-empty tuples")
        state = self.init()
        for s in seq:
            state = self.step(state, canon(s))
        return self.output(state)

    def to_dict(self) -> dict:
        raise NotImplementedError


class LastElement(TruncMap):
    kind = "last"
    claims_zero_irrelevant = True

    def step(self, state, s):
        return s

    def output(self, state):
        return state

    def to_dict(self):
        return {"kind": "last"}


class RunningMax(TruncMap):
    """``(max_i rho_1(d_i), ..., max_i rho_r(d_i))`` for seminorms ``rho``."""

    kind = "runmax"
    claims_zero_irrelevant = True  # seminorms are minimal at 0

    def __init__(self, seminorms=("linf",)):
        unknown = [s for s in seminorms if s not in SEMINORMS]
        if unknown:
            raise ValueError(f"unknown seminorms {unknown}")
        self.seminorms = tuple(seminorms)
        self._rho = [SEMINORMS[s] for s in self.seminorms]

    def step(self, state, s):
        vals = tuple(round(r(s), 12) + 0.0 for r in self._rho)
        if state is None:
            return vals
        return tuple(max(a, b) for a, b in zip(state, vals))

    def output(self, state):
        return state

    def to_dict(self):
        return {"kind": "runmax", "seminorms": list(self.seminorms)}


class Indicator(TruncMap):
    """``1{exists i: d_i in C}`` or ``1{forall i: d_i in C}``."""

    kind = "indicator"

    def __init__(self, C: ElementSet, quantifier: str = "exists"):
        if quantifier not in ("exists", "forall"):
            raise ValueError(f"unknown quantifier {quantifier!r}")
        self.C = C
        self.quantifier = quantifier

    # zero-irrelevant exactly when 0 is outside C (exists) or inside C (forall);
    # left to the exhaustive checker since that depends on the dimension
    claims_zero_irrelevant = True

    def step(self, state, s):
        hit = s in self.C
        if state is None:
            return hit
        return (state or hit) if self.quantifier == "exists" else (state and hit)

    def output(self, state):
        return (1.0 if state else 0.0,)

    def to_dict(self):
        return {"kind": "indicator", "quantifier": self.quantifier, "C": self.C.to_dict()}


class TupleLength(TruncMap):
    """Not truncating: used to check that the axiom checker has teeth."""

    kind = "length"

    def step(self, state, s):
        return 1 if state is None else state + 1

    def output(self, state):
        return (float(state),)

    def to_dict(self):
        return {"kind": "length"}


def trunc_map_from_dict(obj) -> TruncMap:
    kind = obj["kind"]
    if kind == "last":
        return LastElement()
    if kind == "runmax":
        return RunningMax(tuple(obj["seminorms"]))
    if kind == "indicator":
        return Indicator(ElementSet.from_dict(obj["C"]), obj["quantifier"])
    if kind == "length":
        return TupleLength()
    raise ValueError(f"unknown map kind {kind!r}")


def atom_closure(dist: DiscreteDist, depth: int = 2) -> list[tuple]:
    """0 together with all sums of at most ``depth`` atoms."""
    out = {dist.zero}
    frontier = {dist.zero}
    for _ in range(depth):
        frontier = {canon(add(x, a)) for x in frontier for a in dist.atoms}
        out |= frontier
    return sorted(out)


def truncating_violations(phi: TruncMap, elements, max_len: int = 4, zero=None) -> list[str]:
    """Exhaustively test the truncating axioms (and zero-irrelevance if ``zero`` is given).

    Checked on every tuple of length ``p <= max_len - 1`` over ``elements`` so
    that the extended tuple has length at most ``max_len``.
    """
    bad = []
    for p in range(1, max_len):
        for seq in itertools.product(elements, repeat=p):
            base = phi(seq)
            if phi(seq + (seq[-1],)) != base:
                bad.append(f"duplicate last: {seq}")
            if phi((seq[0],) + seq) != base:
                bad.append(f"duplicate first: {seq}")
            if zero is not None and phi((zero,) + seq) != base:
                bad.append(f"leading zero: {seq}")
    return bad


# -- laws -------------------------------------------------------------------------


def _finish(acc: dict) -> dict:
    return {k: math.fsum(v) for k, v in acc.items()}


def _running_sums(seq, sel):
    out = []
    s = None
    for i in seq:
        s = sel[i] if s is None else canon(add(s, sel[i]))
        out.append(s)
    return tuple(out)


def fixed_n_law(dist: DiscreteDist, n: int, B, phi: TruncMap) -> dict:
    """Exact law of ``phi`` of the selected running sums of ``n`` i.i.d. draws, by enumeration."""
    B = frozenset(B)
    if n == 0:
        return {phi((dist.zero,)): 1.0}
    k = len(dist.atoms)
    if k ** n > ENUM_BUDGET:
        raise BudgetError(f"{k}^{n} sequences exceed the enumeration budget {ENUM_BUDGET}")
    sel = dist.selected(B)
    acc = defaultdict(list)
    for seq in itertools.product(range(k), repeat=n):
        weight = math.prod(dist.probs[i] for i in seq)
        if weight == 0.0:
            continue
        acc[phi(_running_sums(seq, sel))].append(weight)
    return _finish(acc)


def laws_by_length(dist: DiscreteDist, B, phi: TruncMap, M: int) -> list[dict]:
    """Laws of ``phi`` for every sample size ``0..M`` by the forward dynamic program."""
    B = frozenset(B)
    sel = dist.selected(B)
    moves = [(p, s) for p, s in zip(dist.probs, sel) if p > 0]
    laws = [{phi((dist.zero,)): 1.0}]
    states = {(None, None): 1.0}
    for _ in range(M):
        acc = defaultdict(list)
        for (s, st), w in states.items():
            for p, x in moves:
                s2 = x if s is None else canon(add(s, x))
                acc[(s2, phi.step(st, s2))].append(w * p)
        states = _finish(acc)
        law = defaultdict(list)
        for (_, st), w in states.items():
            law[phi.output(st)].append(w)
        laws.append(_finish(law))
    return laws


def default_truncation(mean: float) -> int:
    return math.ceil(mean + 10 * math.sqrt(mean) + 10)


@dataclass
class MixtureLaw:
    law: dict
    tail: float
    truncate_at: int

    def prob(self, C) -> float:
        return math.fsum(p for v, p in self.law.items() if v in C)

    def total(self) -> float:
        return math.fsum(self.law.values())


def poisson_weights(mean: float, M: int) -> tuple[np.ndarray, float]:
    ks = np.arange(M + 1)
    return stats.poisson.pmf(ks, mean), float(stats.poisson.sf(M, mean))


def poissonized_law(dist: DiscreteDist, mean: float, B, phi: TruncMap,
                    truncate_at: int | None = None) -> MixtureLaw:
    """Law of ``phi`` over a Poisson(``mean``) number of draws, truncated at ``M`` with its tail mass."""
    if not mean > 0:
        raise ValueError("Poisson mean must be positive")
    M = default_truncation(mean) if truncate_at is None else int(truncate_at)
    weights, tail = poisson_weights(mean, M)
    acc = defaultdict(list)
    for w, law in zip(weights, laws_by_length(dist, B, phi, M)):
        for v, p in law.items():
            acc[v].append(w * p)
    return MixtureLaw(_finish(acc), tail, M)


# -- checks -----------------------------------------------------------------------


@dataclass
class Factor2Verdict:
    lhs: float
    poissonized: float
    tail: float
    factor: float = 2.0

    @property
    def rhs(self) -> float:
        return self.factor * (self.poissonized + self.tail)

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + FLOAT_SLACK

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "poissonized": self.poissonized,
                "tail": self.tail, "factor": self.factor, "holds": self.holds}


def _check_pB(dist, B):
    pB = dist.prob_of(B)
    if pB > 0.5:
        raise PreconditionError(f"P(X in B) = {pB} exceeds 1/2")
    return pB


def check_factor2(dist: DiscreteDist, n: int, B, phi: TruncMap, C: EventSpec,
                  factor: float = 2.0) -> Factor2Verdict:
    """``P(phi(fixed n) in C) <= factor * P(phi(Poisson(n)) in C)`` with the tail added to the right side."""
    _check_pB(dist, B)
    lhs = math.fsum(p for v, p in fixed_n_law(dist, n, B, phi).items() if v in C)
    if n == 0:
        # eta with mean 0 is identically 0, so both sides describe the empty sum
        return Factor2Verdict(lhs, lhs, 0.0, factor)
    mix = poissonized_law(dist, n, B, phi)
    return Factor2Verdict(lhs, mix.prob(C), mix.tail, factor)


@dataclass
class IndependenceVerdict:
    joint: float
    product: float
    marginals: list[float]
    tail_bound: float

    @property
    def gap(self) -> float:
        return abs(self.joint - self.product)

    @property
    def holds(self) -> bool:
        return self.gap <= self.tail_bound + 1e-10

    def to_dict(self) -> dict:
        return {"joint": self.joint, "product": self.product, "marginals": self.marginals,
                "gap": self.gap, "tail_bound": self.tail_bound, "holds": self.holds}


def joint_law_prob(dist: DiscreteDist, mean: float, Bs, phi: TruncMap, Cs,
                   M: int | None = None) -> tuple[float, float]:
    """``P(for all l: phi(selected by B_l over Poisson(mean) draws) in C_l)`` and its tail mass."""
    M = default_truncation(mean) if M is None else M
    weights, tail = poisson_weights(mean, M)
    r = len(Bs)
    sels = [dist.selected(frozenset(B)) for B in Bs]
    moves = [(p, tuple(sel[i] for sel in sels)) for i, p in enumerate(dist.probs) if p > 0]
    zero_out = phi((dist.zero,))
    terms = [weights[0] * float(all(zero_out in C for C in Cs))]
    states = {(None,) * (2 * r): 1.0}
    for k in range(1, M + 1):
        acc = defaultdict(list)
        for key, w in states.items():
            sums, sts = key[:r], key[r:]
            for p, xs in moves:
                new_s = tuple(x if s is None else canon(add(s, x)) for s, x in zip(sums, xs))
                new_st = tuple(phi.step(st, s) for st, s in zip(sts, new_s))
                acc[new_s + new_st].append(w * p)
        states = _finish(acc)
        hit = math.fsum(w for key, w in states.items()
                        if all(phi.output(st) in C for st, C in zip(key[r:], Cs)))
        terms.append(weights[k] * hit)
    return math.fsum(terms), tail


def check_independence(dist: DiscreteDist, mean: float, Bs, phi: TruncMap, Cs,
                       truncate_at: int | None = None) -> IndependenceVerdict:
    """Compare the joint law of the poissonized selections over disjoint ``B_l`` with the product of marginals."""
    Bs = [frozenset(B) for B in Bs]
    for i, j in itertools.combinations(range(len(Bs)), 2):
        if Bs[i] & Bs[j]:
            raise PreconditionError(f"selection sets {i} and {j} overlap")
    if len(Bs) != len(Cs):
        raise ValueError("need one event per selection set")
    closure = atom_closure(dist, 2)
    if not phi.claims_zero_irrelevant or truncating_violations(phi, closure, 3, zero=dist.zero):
        raise PreconditionError("phi must be truncating and zero-irrelevant")
    M = default_truncation(mean) if truncate_at is None else truncate_at
    marginals = []
    tails = []
    for B, C in zip(Bs, Cs):
        mix = poissonized_law(dist, mean, B, phi, M)
        marginals.append(mix.prob(C))
        tails.append(mix.tail)
    joint, tail = joint_law_prob(dist, mean, Bs, phi, Cs, M)
    return IndependenceVerdict(joint, math.prod(marginals), marginals, tail + sum(tails))


def check_exists_forall(dist: DiscreteDist, n: int, B, C: ElementSet) -> dict:
    """Factor-2 verdicts for ``exists m <= n: S_m in C`` and ``forall m <= n: S_m in C``."""
    hit = ElementSet("points", points=((1.0,),))
    return {
        "exists": check_factor2(dist, n, B, Indicator(C, "exists"), hit),
        "forall": check_factor2(dist, n, B, Indicator(C, "forall"), hit),
    }


# -- randomized campaigns ---------------------------------------------------------


@dataclass
class Case:
    dist: DiscreteDist
    n: int
    B: tuple
    phi: TruncMap
    C: ElementSet
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"dist": self.dist.to_dict(), "n": self.n, "B": list(self.B),
                "phi": self.phi.to_dict(), "C": self.C.to_dict(), **self.extra}

    @classmethod
    def from_dict(cls, obj) -> "Case":
        extra = {k: v for k, v in obj.items() if k not in ("dist", "n", "B", "phi", "C")}
        return cls(DiscreteDist.from_dict(obj["dist"]), int(obj["n"]), tuple(obj["B"]),
                   trunc_map_from_dict(obj["phi"]), ElementSet.from_dict(obj["C"]), extra)


def _random_dist(rng: np.random.Generator, max_atoms: int = 3) -> DiscreteDist:
    dim = int(rng.integers(1, 3))
    k = int(rng.integers(1, max_atoms + 1))
    atoms = set()
    while len(atoms) < k:
        atoms.add(tuple(float(v) for v in rng.integers(-2, 3, size=dim)))
    raw = rng.integers(1, 9, size=k).astype(float)
    probs = raw / raw.sum()
    probs[-1] = 1.0 - math.fsum(probs[:-1])
    return DiscreteDist(tuple(sorted(atoms)), tuple(probs))


def _random_B(rng, dist: DiscreteDist, limit: float = 0.5) -> tuple:
    k = len(dist.atoms)
    while True:
        B = tuple(i for i in range(k) if rng.random() < 0.5)
        if dist.prob_of(B) <= limit:
            return B


def _random_element_set(rng, dim: int, values) -> ElementSet:
    if rng.random() < 0.5 and values:
        chosen = [values[i] for i in rng.choice(len(values), size=min(len(values), 2), replace=False)]
        return ElementSet("points", points=tuple(chosen))
    w = tuple(float(v) for v in rng.integers(-1, 2, size=dim))
    return ElementSet("halfspace", w=w, b=float(rng.integers(-2, 3)), sense=str(rng.choice([">=", "<="])))


def random_factor2_case(rng, kinds=("last", "runmax", "indicator")) -> Case:
    dist = _random_dist(rng)
    n = int(rng.integers(0, 7))
    B = _random_B(rng, dist)
    kind = kinds[int(rng.integers(len(kinds)))]
    closure = atom_closure(dist, 2)
    if kind == "last":
        phi = LastElement()
        C = _random_element_set(rng, dist.dim, closure)
    elif kind == "runmax":
        names = ["abs0", "l1", "linf", "l2"] + (["abs1"] if dist.dim > 1 else [])
        phi = RunningMax(tuple(rng.choice(names, size=int(rng.integers(1, 3)), replace=False)))
        C = ElementSet("halfspace", w=(1.0,) + (0.0,) * (len(phi.seminorms) - 1),
                       b=float(rng.integers(0, 4)), sense=">=")
    else:
        inner = _random_element_set(rng, dist.dim, closure)
        phi = Indicator(inner, str(rng.choice(["exists", "forall"])))
        C = ElementSet("points", points=((float(rng.integers(0, 2)),),))
    return Case(dist, n, B, phi, C)


def random_independence_case(rng) -> Case:
    """Disjoint selections ``B_1, ..., B_r`` (r in 1..3) under a zero-irrelevant map."""
    while True:
        dist = _random_dist(rng)
        k = len(dist.atoms)
        labels = rng.integers(0, 3, size=k)  # atom -> selection index, label 0 unselected
        r = int(rng.integers(1, 3))
        Bs = [tuple(int(i) for i in np.flatnonzero(labels == l + 1)) for l in range(r)]
        if all(Bs):
            break
    mean = float(rng.choice([0.5, 1.0, 1.5, 2.0]))
    kind = str(rng.choice(["last", "runmax", "exists", "forall"]))
    closure = atom_closure(dist, 2)
    if kind == "last":
        phi = LastElement()
        Cs = [_random_element_set(rng, dist.dim, closure) for _ in Bs]
    elif kind == "runmax":
        phi = RunningMax(("linf",))
        Cs = [ElementSet("halfspace", w=(1.0,), b=float(rng.integers(1, 4)), sense=">=")
              for _ in Bs]
    else:
        # zero-irrelevance: 0 outside C for exists, inside C for forall
        w = tuple(float(v) for v in rng.integers(-1, 2, size=dist.dim))
        if not any(w):
            w = (1.0,) + w[1:]
        b = float(rng.integers(1, 3))
        C = ElementSet("halfspace", w=w, b=b, sense=">=" if kind == "exists" else "<=")
        phi = Indicator(C, kind)
        Cs = [ElementSet("points", points=((float(rng.integers(0, 2)),),)) for _ in Bs]
    return Case(dist, 0, Bs[0], phi, Cs[0],
                {"Bs": [list(B) for B in Bs], "Cs": [c.to_dict() for c in Cs], "mean": mean})


def run_case_factor2(case: Case, factor: float = 2.0) -> Factor2Verdict:
    return check_factor2(case.dist, case.n, case.B, case.phi, case.C, factor)


def run_case_independence(case: Case) -> IndependenceVerdict:
    Bs = [tuple(B) for B in case.extra["Bs"]]
    Cs = [ElementSet.from_dict(c) for c in case.extra["Cs"]]
    return check_independence(case.dist, case.extra["mean"], Bs, case.phi, Cs)


def dumps_case(case: Case) -> str:
    return json.dumps(case.to_dict(), sort_keys=True)

import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from conftest import SUITE_SEED
from increment_lab import poissonization as pz
from increment_lab.poissonization import (BudgetError, Case, DiscreteDist, ElementSet, Indicator,
                                          LastElement, PreconditionError, RunningMax,
                                          TupleLength)

BIT = DiscreteDist(((0.0,), (1.0,)), (0.5, 0.5))
TRIPLE = DiscreteDist(((0.0,), (1.0,), (2.0,)), (1 / 3, 1 / 3, 1 / 3))


def points(*vals):
    return ElementSet("points", points=tuple((float(v),) for v in vals))


def test_dist_validation():
    with pytest.raises(ValueError):
        DiscreteDist(((0.0,), (0.0,)), (0.5, 0.5))
    with pytest.raises(ValueError):
        DiscreteDist(((0.0,), (1.0,)), (0.5, 0.6))
    assert TRIPLE.zero == (0.0,)


def test_fixed_law_examples():
    law = pz.fixed_n_law(TRIPLE, 1, [0, 1, 2], LastElement())
    assert law == pytest.approx({(0.0,): 1 / 3, (1.0,): 1 / 3, (2.0,): 1 / 3})
    law = pz.fixed_n_law(BIT, 2, [1], LastElement())
    assert law[(2.0,)] == 0.25
    pm = DiscreteDist(((-1.0,), (1.0,)), (0.5, 0.5))
    law = pz.fixed_n_law(pm, 2, [0, 1], RunningMax(("abs0",)))
    # (+1,+1) reaches |S_2| = 2, so "max = 1 almost surely" holds only at n = 1
    assert law == {(1.0,): 0.5, (2.0,): 0.5}
    assert pz.fixed_n_law(pm, 1, [0, 1], RunningMax(("abs0",))) == {(1.0,): 1.0}
    with pytest.raises(BudgetError):
        pz.fixed_n_law(TRIPLE, 15, [1], LastElement())


def brute_law(dist, n, B, phi):
    """Oracle written out independently: explicit running sums as numpy vectors."""
    acc = {}
    for seq in itertools.product(range(len(dist.atoms)), repeat=n):
        w = 1.0
        s = np.zeros(dist.dim)
        sums = []
        for i in seq:
            w *= dist.probs[i]
            if i in B:
                s = s + np.array(dist.atoms[i])
            sums.append(tuple(np.round(s, 12) + 0.0))
        v = phi(tuple(sums) if sums else ((0.0,) * dist.dim,))
        acc[v] = acc.get(v, 0.0) + w
    return acc


@st.composite
def small_cases(draw):
    rng = np.random.default_rng(draw(st.integers(0, 2 ** 32)))
    case = pz.random_factor2_case(rng)
    return case


@given(small_cases())
def test_enumeration_matches_oracle_and_dp(case):
    B = frozenset(case.B)
    law = pz.fixed_n_law(case.dist, case.n, B, case.phi)
    assert math.fsum(law.values()) == pytest.approx(1.0, abs=1e-12)
    oracle = brute_law(case.dist, case.n, B, case.phi)
    assert set(law) == set(oracle)
    for k in law:
        assert law[k] == pytest.approx(oracle[k], abs=1e-12)
    dp = pz.laws_by_length(case.dist, B, case.phi, case.n)[case.n]
    for k in set(law) | set(dp):
        assert dp.get(k, 0.0) == pytest.approx(law.get(k, 0.0), abs=1e-12)


@given(small_cases())
def test_incremental_form_agrees_with_tuple_form(case):
    closure = pz.atom_closure(case.dist, 2)
    phi = case.phi
    for p in (1, 2, 3):
        for seq in itertools.product(closure, repeat=p):
            state = phi.init()
            for s in seq:
                state = phi.step(state, s)
            assert phi.output(state) == phi(seq)


def test_truncating_checker():
    closure = pz.atom_closure(TRIPLE, 2)
    assert pz.truncating_violations(LastElement(), closure, 4, zero=TRIPLE.zero) == []
    assert pz.truncating_violations(RunningMax(("l1", "linf")), closure, 4, zero=TRIPLE.zero) == []
    assert pz.truncating_violations(Indicator(points(2), "exists"), closure, 4, zero=TRIPLE.zero) == []
    assert pz.truncating_violations(TupleLength(), closure, 4)
    # exists with 0 in C is truncating but not zero-irrelevant
    ind = Indicator(points(0), "exists")
    assert pz.truncating_violations(ind, closure, 4) == []
    assert pz.truncating_violations(ind, closure, 4, zero=TRIPLE.zero)


def test_poissonized_examples():
    mix = pz.poissonized_law(TRIPLE, 3.0, [], LastElement())
    assert set(mix.law) == {(0.0,)}
    assert mix.law[(0.0,)] + mix.tail == pytest.approx(1.0, abs=1e-12)
    mix = pz.poissonized_law(BIT, 2.0, [1], LastElement())
    assert abs(mix.law[(2.0,)] - math.exp(-1) / 2) <= mix.tail + 1e-12
    assert mix.total() == pytest.approx(1 - mix.tail, abs=1e-12)
    for mean in (1.0, 10.0, 50.0, 100.0):
        M = pz.default_truncation(mean)
        assert stats.poisson.sf(M, mean) < 1e-10


@given(st.floats(0.2, 6.0), st.integers(0, 2))
def test_poisson_thinning(mean, b):
    dist = DiscreteDist(((0.0,), (1.0,), (5.0,)), (0.5, 0.3, 0.2))
    B = [1]
    mix = pz.poissonized_law(dist, mean, B, LastElement())
    lam = mean * dist.prob_of(B)
    for k in range(int(lam + 10 * math.sqrt(lam) + 5)):
        assert abs(mix.law.get((float(k),), 0.0) - stats.poisson.pmf(k, lam)) <= mix.tail + 1e-12


def test_factor2_examples():
    v = pz.check_factor2(TRIPLE, 3, [], LastElement(), points(0))
    assert v.lhs == 1.0 and v.holds
    assert v.rhs / 2 == pytest.approx(1.0, abs=1e-12)
    v = pz.check_factor2(BIT, 2, [1], LastElement(), points(2))
    assert abs(v.lhs - 0.25) <= 1e-10
    assert abs(v.rhs - 2 * math.exp(-1) / 2) <= 1e-10
    assert v.holds
    assert not pz.check_factor2(BIT, 2, [1], LastElement(), points(2), factor=1.0).holds
    with pytest.raises(PreconditionError):
        pz.check_factor2(BIT, 2, [0, 1], LastElement(), points(2))


def test_factor2_campaign_and_mutation():
    rng = np.random.default_rng(SUITE_SEED)
    hits = 0
    for _ in range(60):
        case = pz.random_factor2_case(rng)
        assert pz.run_case_factor2(case).holds, pz.dumps_case(case)
        hits += not pz.run_case_factor2(case, factor=1.0).holds
    assert hits >= 1


def test_exists_forall_examples():
    whole = ElementSet()
    res = pz.check_exists_forall(TRIPLE, 3, [1], whole)
    assert res["forall"].lhs == 1.0
    assert res["forall"].poissonized + res["forall"].tail == pytest.approx(1.0, abs=1e-12)
    assert pz.check_exists_forall(TRIPLE, 3, [1], whole)["forall"].factor == 2.0
    assert pz.check_factor2(TRIPLE, 3, [1], Indicator(whole, "forall"), points(1),
                            factor=1.0).holds
    # C = {0}: S_1 = 1_B(X_1) X_1 is 0 exactly when X_1 misses B
    zero = points(0)
    assert pz.check_exists_forall(BIT, 3, [], zero)["exists"].lhs == 1.0
    res = pz.check_exists_forall(BIT, 1, [1], zero)
    assert res["exists"].lhs == 0.5 and res["exists"].holds
    for n in range(5):
        for verdict in pz.check_exists_forall(TRIPLE, n, [2], ElementSet(
                "halfspace", w=(1.0,), b=2.0, sense=">=")).values():
            assert verdict.holds


def test_independence_examples():
    ge = lambda b: ElementSet("halfspace", w=(1.0,), b=b, sense=">=")  # noqa: E731
    v = pz.check_independence(TRIPLE, 3.0, [[1]], LastElement(), [ge(1)])
    assert v.gap == 0.0
    for phi in (LastElement(), RunningMax(("abs0",))):
        v = pz.check_independence(TRIPLE, 3.0, [[1], [2]], phi, [ge(1), ge(2)])
        assert v.holds and v.gap <= v.tail_bound + 1e-10
    with pytest.raises(PreconditionError):
        pz.check_independence(TRIPLE, 3.0, [[1], [1, 2]], LastElement(), [ge(1), ge(2)])
    with pytest.raises(PreconditionError):
        pz.check_independence(TRIPLE, 3.0, [[1], [2]], Indicator(points(0), "exists"),
                              [points(1), points(1)])
    with pytest.raises(PreconditionError):
        pz.check_independence(TRIPLE, 3.0, [[1], [2]], TupleLength(), [points(1), points(1)])


def test_fixed_n_is_not_independent():
    """Sanity that the comparison has power: without Poissonization the selections are dependent."""
    ge1 = ElementSet("halfspace", w=(1.0,), b=1.0, sense=">=")
    law1 = pz.fixed_n_law(TRIPLE, 2, [1], LastElement())
    law2 = pz.fixed_n_law(TRIPLE, 2, [2], LastElement())
    p1 = sum(p for v, p in law1.items() if v in ge1)
    p2 = sum(p for v, p in law2.items() if v in ge1)
    joint = sum(1 / 9 for i, j in itertools.product(range(3), repeat=2)
                if 1 in (i, j) and 2 in (i, j))
    assert abs(joint - p1 * p2) > 0.05


def test_case_json_replay():
    rng = np.random.default_rng(4)
    for _ in range(20):
        case = pz.random_factor2_case(rng)
        back = Case.from_dict(json.loads(pz.dumps_case(case)))
        assert pz.run_case_factor2(back).to_dict() == pz.run_case_factor2(case).to_dict()
        ind = pz.random_independence_case(rng)
        back = Case.from_dict(json.loads(pz.dumps_case(ind)))
        assert pz.run_case_independence(back).to_dict() == pz.run_case_independence(ind).to_dict()

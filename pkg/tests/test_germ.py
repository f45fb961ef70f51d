from fractions import Fraction

import pytest

from asdefect.engine import ExtensionState, GermType, TransformStep, advance
from asdefect.errors import DomainError
from asdefect.series.field import make_field
from asdefect.series.germ import (
    MapGerm,
    classify_type,
    complexity,
    detect_strong_monomial,
    galois_difference,
    jacobian_exponent,
    oracle_transition,
    seed_artin_schreier,
)
from asdefect.series.series import TruncSeries, invert_unit
from asdefect.series.suite import run_oracle_suite

N = 24


def germ(F, u_terms, v_terms, n=N):
    return MapGerm(TruncSeries.from_int_terms(F, n, u_terms), TruncSeries.from_int_terms(F, n, v_terms))


@pytest.mark.parametrize("p", [2, 3, 5])
def test_jacobian_ground_truths(p):
    F = make_field(p)
    x = TruncSeries.x(F, N)
    u = x.pow(p) * invert_unit(TruncSeries.one(F, N) - x.pow(p - 1))
    c, principal = jacobian_exponent(MapGerm(u, TruncSeries.y(F, N)))
    assert (c, principal) == (2 * p - 2, True)
    for c in (1, 2, 3, p, 2 * p):
        g = germ(F, {(1, 0): 1}, {(0, p): 1, (c, 1): -1})
        assert jacobian_exponent(g) == (c, True)


def test_identity_and_types():
    F = make_field(2)
    ident = germ(F, {(1, 0): 1}, {(0, 1): 1})
    assert jacobian_exponent(ident)[0] == 0
    assert classify_type(ident) == "T0"
    assert classify_type(germ(F, {(1, 0): 1}, {(0, 2): 1, (1, 1): 1})) == "T1"
    assert classify_type(germ(F, {(2, 0): 1, (2, 1): 1}, {(0, 1): 1, (3, 0): 1})) == "T2"
    assert classify_type(germ(F, {(3, 0): 1}, {(0, 1): 1})) == "other"


def test_complexity_examples():
    F2 = make_field(2)
    for p in (2, 3, 5):
        assert complexity(seed_artin_schreier(make_field(p), 1)) == p
    assert complexity(germ(F2, {(1, 0): 1}, {(0, 1): 1})) == 1
    assert complexity(germ(F2, {(2, 0): 1}, {(0, 1): 1, (1, 0): 1})) == 2


@pytest.mark.parametrize("p", [2, 3, 5])
@pytest.mark.parametrize("e", [1, 2, 3])
def test_seed_classification(p, e):
    F = make_field(p)
    g = seed_artin_schreier(F, e)
    assert classify_type(g) == "T1"
    assert jacobian_exponent(g) == ((p - 1) * e, True)
    assert g.v.terms() == {(0, p): 1, ((p - 1) * e, 1): F.neg(1)}


def test_seed_rejects_bad_input():
    with pytest.raises(DomainError):
        seed_artin_schreier(make_field(2), 0)


@pytest.mark.parametrize("m,q,new_type,c", [(3, 1, "T1", 2), (4, 1, "T2", 4)])
def test_oracle_from_seed(m, q, new_type, c):
    F = make_field(2)
    res = oracle_transition(seed_artin_schreier(F, 1, 48), TransformStep.make(m, q))
    assert (res.type, res.c) == (new_type, c)
    assert res.chain_ok
    if m == 3:
        assert res.sigma == 1


@pytest.mark.parametrize("m,q,new_type,c", [(3, 1, "T1", 3), (1, 2, "T2", 2), (3, 2, "T2", 4)])
def test_oracle_from_type2(m, q, new_type, c):
    F = make_field(2)
    g = germ(F, {(2, 0): 1, (3, 0): 1}, {(0, 1): 1}, 48)
    assert (classify_type(g), jacobian_exponent(g)[0]) == ("T2", 2)
    res = oracle_transition(g, TransformStep.make(m, q))
    assert (res.type, res.c) == (new_type, c)
    assert res.chain_ok
    eng, _ = advance(ExtensionState(2, GermType.T2, 2), TransformStep.make(m, q))
    assert (eng.type.value, eng.c) == (res.type, res.c)


def test_oracle_identity_germ_stays_t0():
    F = make_field(2)
    res = oracle_transition(germ(F, {(1, 0): 1}, {(0, 1): 1}, 32), TransformStep.make(3, 2))
    assert res.type == "T0" and res.c == 0 and res.chain_ok


@pytest.mark.parametrize("p,e", [(2, 1), (3, 2), (5, 1), (5, 3)])
def test_galois_difference_independent_of_j(p, e):
    F = make_field(p)
    values = [galois_difference(F, e, j) for j in range(1, p)]
    assert all(v == (Fraction(e), True) for v in values)
    with pytest.raises(DomainError):
        galois_difference(F, e, p)


def test_strong_monomial_examples():
    F = make_field(2)
    assert detect_strong_monomial(germ(F, {(2, 0): 1}, {(0, 1): 1}), 4).outcome == "yes"
    verdict = detect_strong_monomial(germ(F, {(3, 0): 1, (3, 1): 1}, {(0, 1): 1, (1, 0): 1}), 4)
    assert verdict.outcome == "yes" and verdict.witness is not None
    stable = germ(F, {(2, 0): 1, (3, 0): 1}, {(0, 2): 1, (3, 1): 1})
    assert detect_strong_monomial(stable, 4, (Fraction(1), Fraction(1))).outcome == "no"
    # weights where x*Omega leads: no claim is made
    assert detect_strong_monomial(stable, 4, (Fraction(1), Fraction(5))).outcome != "no"
    assert detect_strong_monomial(stable, 4).outcome != "no"


def test_oracle_suite_engine_agreement_1000_steps():
    """Engine and kernel agree on 1000 random legal steps, p in {2,3,5}, m,q <= 9."""
    res = run_oracle_suite(n=1000, seed=2024, precision=64, primes=(2, 3, 5), max_mq=9)
    assert res.mismatches == 0
    assert res.skip_rate < 0.1
    for case in res.cases:
        if case.status == "pass":
            assert case.chain_ok
            assert case.complexity in (1, case.p)

from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from asdefect.engine import GermType, Trace, distance_from_trace
from asdefect.errors import DomainError, InfeasibleStepError
from asdefect.synth import SwitchPlan, SynthParams, choose_step, synthesize, verify_envelope


@pytest.mark.parametrize("target,to_type,expected", [
    (Fraction(1, 2), 1, (3, 1)),
    (Fraction(0), 1, (3, 2)),
    (Fraction(0), 2, (4, 3)),
])
def test_choose_step_examples(target, to_type, expected):
    step = choose_step(1, 1, target, to_type, 1, 2, 3)
    assert (step.m, step.q) == expected
    assert step.m * step.b_cof - step.q * step.a_cof == 1 and 0 <= step.a_cof < step.m


def test_choose_step_errors():
    with pytest.raises(InfeasibleStepError):
        choose_step(1, 1, 1, 1, 1, 2, 3)
    with pytest.raises(DomainError):
        choose_step(1, 1, 0, 1, 1, 2)
    with pytest.raises(InfeasibleStepError):
        choose_step(1, 1, 0, 2, 60, 2, 3, lambda_cap=3)


@given(st.fractions(min_value=Fraction(1, 8), max_value=8, max_denominator=64),
       st.integers(1, 64), st.integers(1, 12), st.sampled_from([1, 2]))
def test_choose_step_deterministic_and_in_window(c_ratio, M, t, to_type):
    target = c_ratio / M / 2
    a = choose_step(c_ratio, M, target, to_type, t, 2, 3)
    b = choose_step(c_ratio, M, target, to_type, t, 2, 3)
    assert a == b
    low = c_ratio - (target + Fraction(1, 2 ** t)) * M
    assert low < Fraction(a.q, a.m) < c_ratio - target * M
    if to_type == 1:
        assert a.m % 3 == 0 and a.q % 3 != 0
    else:
        assert a.m % 4 == 0 and a.q % 2 != 0


PLANS = [SwitchPlan((), (1,)), SwitchPlan((), (1, 2)), SwitchPlan((2, 2, 1), (1,))]


@pytest.mark.parametrize("plan", PLANS)
@pytest.mark.parametrize("alpha", [Fraction(0), Fraction(1, 2)])
def test_synthesize_realizes_plan(plan, alpha):
    res = synthesize(SynthParams(2, 3, 1, alpha, 20), plan)
    tr = res.trace
    assert len(tr.states) == 21
    for k, s in enumerate(tr.states):
        assert s.type is (GermType.T1 if plan(k) == 1 else GermType.T2)
    assert all(step.m > 1 for step in tr.steps)
    assert verify_envelope(tr, alpha)
    assert res.bound.contains(alpha) and res.bound.width < Fraction(1, 2 ** 15)
    # the engine's own interval agrees with the synthesized one
    assert distance_from_trace(tr).upper == res.bound.upper


def test_ten_checkpoints():
    res0 = synthesize(SynthParams(2, 3, 1, 0, 10), SwitchPlan())
    assert res0.bound.contains(0) and res0.bound.upper < Fraction(1, 2 ** 10)
    res1 = synthesize(SynthParams(2, 3, 1, Fraction(1, 2), 10), SwitchPlan())
    assert res1.bound.contains(Fraction(1, 2)) and res1.bound.width < Fraction(1, 2 ** 9)


def test_depth_zero():
    res = synthesize(SynthParams(2, 3, 1, 0, 0), SwitchPlan())
    assert (res.bound.lower, res.bound.upper) == (0, 1)


def test_deterministic():
    a = synthesize(SynthParams(3, 2, 2, Fraction(1, 3), 12), SwitchPlan((), (1, 2, 2)))
    b = synthesize(SynthParams(3, 2, 2, Fraction(1, 3), 12), SwitchPlan((), (1, 2, 2)))
    assert a.schedule == b.schedule and a.bound == b.bound


def test_envelope_detects_perturbation():
    res = synthesize(SynthParams(2, 3, 1, Fraction(1, 2), 12), SwitchPlan((), (1, 2)))
    tr = res.trace
    assert verify_envelope(tr, Fraction(1, 2))
    idx, t = tr.checkpoints[3]
    s = tr.states[idx]
    bumped = replace(s, jac_ratio=s.jac_ratio + Fraction(s.M, 2 ** t))
    states = tr.states[:idx] + (bumped,) + tr.states[idx + 1:]
    forged = Trace(states, tr.steps, tr.sigma_values, tr.schedule, False, tr.checkpoints)
    assert not verify_envelope(forged, Fraction(1, 2))


def test_envelope_strict_lower_bound():
    res = synthesize(SynthParams(2, 3, 1, 0, 8), SwitchPlan())
    assert all(res.trace.states[i].d > 0 for i, _ in res.trace.checkpoints)


def test_params_and_plan_validation():
    with pytest.raises(DomainError):
        SynthParams(2, 2, 1, 0, 5)
    with pytest.raises(DomainError):
        SynthParams(2, 3, 1, 1, 5)
    with pytest.raises(DomainError):
        SwitchPlan((), (2,))
    with pytest.raises(DomainError):
        SwitchPlan((), (1, 3))
    assert [SwitchPlan((2, 2, 1), (1, 2))(n) for n in range(7)] == [2, 2, 1, 1, 2, 1, 2]


@pytest.mark.parametrize("p,p_aux", [(3, 2), (5, 2), (2, 5)])
def test_other_primes(p, p_aux):
    res = synthesize(SynthParams(p, p_aux, 1, Fraction(1, 3), 10), SwitchPlan((2,), (1, 2, 2)))
    assert verify_envelope(res.trace, Fraction(1, 3))
    assert res.bound.contains(Fraction(1, 3))

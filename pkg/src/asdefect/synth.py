"""Schedules with a prescribed switching pattern and a prescribed distance.

Starting from the Artin-Schreier seed (Jacobian ratio e), every type-1
checkpoint t is reached by a step chosen so that alpha < d_t < alpha + 2^-t.
Runs of type 2 between checkpoints use fixed steps that leave d unchanged
inside the run and drop it by exactly q/(m*M) at the exit, so the whole run
telescopes into the step that entered it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .engine import (
    ExtensionState,
    GermType,
    Schedule,
    Trace,
    TransformStep,
    advance,
    is_prime,
    run_schedule,
)
from .errors import ConsistencyError, DomainError, InfeasibleStepError
from .values import DistanceBound, RatLike, fmt_rat, rat

DEFAULT_LAMBDA_CAP = 64


@dataclass(frozen=True)
class SwitchPlan:
    prefix: tuple[int, ...] = ()
    tail: tuple[int, ...] = (1,)

    def __post_init__(self) -> None:
        object.__setattr__(self, "prefix", tuple(int(x) for x in self.prefix))
        object.__setattr__(self, "tail", tuple(int(x) for x in self.tail))
        if any(x not in (1, 2) for x in self.prefix + self.tail):
            raise DomainError("plan entries must be 1 or 2")
        if not self.tail:
            raise DomainError("plan tail must be nonempty")
        if 1 not in self.tail:
            raise DomainError("plan tail must contain a 1 (type 2 cannot persist forever)")

    def __call__(self, n: int) -> int:
        if n < len(self.prefix):
            return self.prefix[n]
        return self.tail[(n - len(self.prefix)) % len(self.tail)]

    @classmethod
    def from_json(cls, doc: dict) -> "SwitchPlan":
        return cls(tuple(doc.get("prefix", ())), tuple(doc.get("tail", (1,))))

    def to_json(self) -> dict:
        return {"prefix": list(self.prefix), "tail": list(self.tail)}


@dataclass(frozen=True)
class SynthParams:
    p: int
    p_aux: int
    e: int
    alpha: Fraction
    depth: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", rat(self.alpha))
        if not is_prime(self.p) or not is_prime(self.p_aux):
            raise DomainError("p and p_aux must be prime")
        if self.p == self.p_aux:
            raise DomainError("p_aux must differ from p")
        if self.alpha < 0:
            raise DomainError("alpha must be nonnegative")
        if not self.e > self.alpha:
            raise DomainError("seed exponent e must exceed alpha")
        if self.depth < 0:
            raise DomainError("depth must be nonnegative")


def choose_step(
    c_ratio: RatLike,
    M: int,
    target: RatLike,
    to_type: int,
    t: int,
    p: int,
    p_aux: Optional[int] = None,
    lambda_cap: int = DEFAULT_LAMBDA_CAP,
) -> TransformStep:
    """Smallest (m, q), m a prime power, with q/m in the open window
    (c_ratio - (target + 2^-t) M, c_ratio - target M).

    to_type 1: m = p_aux^lam, lam >= 1, p_aux prime to q.
    to_type 2: m = p^lam, lam >= 2, p prime to q.
    """
    c_ratio, target = rat(c_ratio), rat(target)
    if to_type == 1:
        if p_aux is None:
            raise DomainError("type-1 steps need the auxiliary prime")
        base, lam, forbidden = p_aux, 1, p_aux
    elif to_type == 2:
        base, lam, forbidden = p, 2, p
    else:
        raise DomainError("to_type must be 1 or 2")
    low = c_ratio - (target + Fraction(1, 2 ** t)) * M
    high = c_ratio - target * M
    if high <= 0 or high <= low:
        raise InfeasibleStepError(f"empty window ({low}, {high}) for q/m")
    while lam <= lambda_cap:
        m = base ** lam
        q = max(1, (low * m).__floor__() + 1)
        while Fraction(q, m) < high:
            if q % forbidden != 0 and Fraction(q, m) > low:
                return TransformStep.make(m, q)
            q += 1
        lam += 1
    raise InfeasibleStepError(f"no admissible step with lambda <= {lambda_cap} in ({low}, {high})")


@dataclass(frozen=True)
class SynthResult:
    schedule: Schedule
    trace: Trace
    bound: DistanceBound
    state0: ExtensionState

    def checkpoint_report(self) -> list[dict]:
        out = []
        for idx, t in self.trace.checkpoints:
            d = self.trace.states[idx].d
            out.append({"index": idx, "t": t, "d": fmt_rat(d),
                        "upper": fmt_rat(self.bound.lower + Fraction(1, 2 ** t))})
        return out


def _run_length(plan: SwitchPlan, i: int, limit: int = 10_000) -> int:
    """Number s of consecutive type-2 entries starting at index i + 1."""
    s = 0
    while plan(i + s + 1) == 2:
        s += 1
        if s > limit:
            raise ConsistencyError("type-2 run does not terminate")
    return s


def synthesize(
    params: SynthParams,
    plan: SwitchPlan,
    lambda_cap: int = DEFAULT_LAMBDA_CAP,
) -> SynthResult:
    """Build a schedule whose types follow the plan and whose distance is -alpha.

    When the plan starts with type 2, one type-1 stage is prepended (index
    -1 in plan terms) and dropped afterwards; the returned seed then carries
    the first step's denominators.
    """
    p, pa, alpha = params.p, params.p_aux, params.alpha
    shifted = plan(0) == 2
    # `aug` is the plan seen from the (possibly prepended) seed
    aug = SwitchPlan((1,) + plan.prefix, plan.tail) if shifted else plan
    depth = params.depth + (1 if shifted else 0)

    state = ExtensionState(p, GermType.T1, Fraction(params.e))
    steps: list[TransformStep] = []
    checkpoints: list[tuple[int, int]] = []
    i = 0
    while i < depth:
        if aug(i + 1) == 1:
            step = choose_step(state.jac_ratio, state.M, alpha, 1, i + 1, p, pa, lambda_cap)
            run = [step]
            checkpoints.append((i + 1, i + 1))
        else:
            s = _run_length(aug, i)
            t = i + s + 1
            entry = choose_step(state.jac_ratio, state.M, alpha, 2, t, p, pa, lambda_cap)
            run = [entry]
            run += [TransformStep.make(pa ** 2, p ** 2)] * (s - 1)
            run.append(TransformStep.make(p ** 2, pa ** 2))
            checkpoints.append((t, t))
        for step in run:
            state = _advance_checked(state, step)
        steps.extend(run)
        i += len(run)

    seed = ExtensionState(p, GermType.T1, Fraction(params.e))
    full = run_schedule(seed, Schedule(tuple(steps)), len(steps))
    if shifted:
        first = full.states[1]
        seed = ExtensionState(p, first.type, first.jac_ratio, 0, first.M, first.Mbar)
        steps = steps[1:]
        checkpoints = [(idx - 1, t) for idx, t in checkpoints]
    steps = steps[: params.depth]
    schedule = Schedule(tuple(steps))
    trace = run_schedule(seed, schedule, len(steps))
    checkpoints = [(idx, t) for idx, t in checkpoints if 0 < idx <= params.depth]
    trace = Trace(trace.states, trace.steps, trace.sigma_values, schedule, trace.halted,
                  tuple(checkpoints))

    for k, st in enumerate(trace.states):
        want = GermType.T1 if plan(k) == 1 else GermType.T2
        if st.type is not want:
            raise ConsistencyError(f"realized type {st.type.value} at index {k}, plan wants {want.value}")
        if k > 0:
            rec_m = trace.steps[k - 1].m
            if rec_m <= 1:
                raise ConsistencyError(f"synthesized step {k} has m = {rec_m}")
    if not verify_envelope(trace, alpha):
        raise ConsistencyError("synthesized trace violates the envelope")
    upper = min(trace.d_values)
    return SynthResult(schedule, trace, DistanceBound(alpha, upper), seed)


def _advance_checked(state: ExtensionState, step: TransformStep) -> ExtensionState:
    new, rec = advance(state, step)
    if rec.mbar <= 1:
        raise ConsistencyError(f"step ({step.m}, {step.q}) gives mbar = {rec.mbar}")
    return new


def verify_envelope(trace: Trace, alpha: RatLike) -> bool:
    """alpha < d_t < alpha + 2^-t at every recorded type-1 checkpoint."""
    alpha = rat(alpha)
    points = trace.checkpoints or tuple(
        (k, k) for k, s in enumerate(trace.states) if k > 0 and s.type is GermType.T1
    )
    for idx, t in points:
        if t <= 0:
            continue
        d = trace.states[idx].d
        if not alpha < d < alpha + Fraction(1, 2 ** t):
            return False
    return True

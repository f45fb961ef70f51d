"""Exponent-level simulation of blowup sequences along a valuation.

A state records the type of the map R_i -> S_i, the Jacobian ratio
c/(p-1) and the products of the m and mbar exponents.  Transitions are
affine in the Jacobian ratio, which is why that ratio (not c) is stored.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import gcd
from typing import Iterator, Optional, Sequence

from .errors import (
    AsDefectError,
    ConsistencyError,
    DomainError,
    HypothesisViolation,
    WrongTypeError,
)
from .values import (
    DistanceBound,
    GroupLattice,
    RatLike,
    fmt_rat,
    lattice_index,
    limit_of_decrement_series,
    rat,
)


class GermType(str, Enum):
    T0 = "T0"
    T1 = "T1"
    T2 = "T2"

    @classmethod
    def parse(cls, value: object) -> "GermType":
        if isinstance(value, GermType):
            return value
        text = str(value).upper()
        if text in ("0", "1", "2"):
            text = "T" + text
        try:
            return cls(text)
        except ValueError as exc:
            raise DomainError(f"unknown type {value!r}") from exc


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    k = 2
    while k * k <= n:
        if n % k == 0:
            return False
        k += 1
    return True


def p_adic_valuation(n: int, p: int) -> int:
    n = abs(n)
    if n == 0:
        raise DomainError("valuation of zero")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True)
class ExtensionState:
    p: int
    type: GermType
    jac_ratio: Fraction
    depth: int = 0
    M: int = 1
    Mbar: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "type", GermType.parse(self.type))
        object.__setattr__(self, "jac_ratio", rat(self.jac_ratio))
        if not is_prime(self.p):
            raise DomainError(f"p = {self.p} is not prime")
        if self.depth < 0 or self.M < 1 or self.Mbar < 1:
            raise DomainError("depth must be >= 0 and M, Mbar >= 1")
        c = (self.p - 1) * self.jac_ratio
        if c.denominator != 1 or c < 0:
            raise ConsistencyError(f"(p-1)*jac_ratio = {c} is not a nonnegative integer")
        if self.type is not GermType.T0 and c == 0:
            raise ConsistencyError("Jacobian exponent must be positive off type T0")

    @property
    def c(self) -> int:
        return int((self.p - 1) * self.jac_ratio)

    @property
    def omega_x(self) -> Fraction:
        return Fraction(1, self.M)

    @property
    def d(self) -> Fraction:
        return self.jac_ratio / self.M

    @property
    def u_exponent(self) -> int:
        """x-exponent a of u: p for type T2, 1 otherwise."""
        return self.p if self.type is GermType.T2 else 1

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "type": self.type.value,
            "c": self.c,
            "jac_ratio": fmt_rat(self.jac_ratio),
            "M": self.M,
            "Mbar": self.Mbar,
            "d": fmt_rat(self.d),
        }


def unimodular_cofactors(m: int, q: int) -> tuple[int, int]:
    """The (a', b') with m*b' - q*a' = 1 and 0 <= a' < m."""
    if m < 1 or q < 1:
        raise DomainError(f"need positive m, q; got ({m}, {q})")
    if gcd(m, q) != 1:
        raise DomainError(f"gcd(m, q) = {gcd(m, q)} != 1 for step ({m}, {q})")
    a = (-pow(q, -1, m)) % m if m > 1 else 0
    b = (1 + q * a) // m
    return a, b


@dataclass(frozen=True)
class TransformStep:
    m: int
    q: int
    a_cof: int
    b_cof: int
    alpha_label: int = 1

    def __post_init__(self) -> None:
        if self.m < 1 or self.q < 1:
            raise DomainError(f"m and q must be positive, got ({self.m}, {self.q})")
        if gcd(self.m, self.q) != 1:
            raise DomainError(f"gcd(m, q) = {gcd(self.m, self.q)} != 1 for ({self.m}, {self.q})")
        if self.a_cof < 0 or self.b_cof < 0:
            raise DomainError("cofactors must be nonnegative")
        if self.m * self.b_cof - self.q * self.a_cof != 1:
            raise DomainError(f"m*b' - q*a' != 1 for {self}")
        if self.alpha_label == 0:
            raise DomainError("residue constant label must be nonzero")

    @classmethod
    def make(cls, m: int, q: int, alpha_label: int = 1) -> "TransformStep":
        a, b = unimodular_cofactors(m, q)
        return cls(m, q, a, b, alpha_label)

    def to_dict(self) -> dict:
        return {"m": self.m, "q": self.q}


def _as_step(item: object) -> TransformStep:
    if isinstance(item, TransformStep):
        return item
    if isinstance(item, dict):
        return TransformStep.make(int(item["m"]), int(item["q"]), int(item.get("alpha", 1)))
    m, q = item  # type: ignore[misc]
    return TransformStep.make(int(m), int(q))


@dataclass(frozen=True)
class Schedule:
    prefix: tuple[TransformStep, ...] = ()
    tail: Optional[tuple[TransformStep, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "prefix", tuple(_as_step(s) for s in self.prefix))
        if self.tail is not None:
            tail = tuple(_as_step(s) for s in self.tail)
            if not tail:
                raise DomainError("a declared tail must be nonempty")
            object.__setattr__(self, "tail", tail)

    def step_at(self, i: int) -> Optional[TransformStep]:
        if i < len(self.prefix):
            return self.prefix[i]
        if self.tail is None:
            return None
        return self.tail[(i - len(self.prefix)) % len(self.tail)]

    def steps(self) -> Iterator[TransformStep]:
        i = 0
        while (step := self.step_at(i)) is not None:
            yield step
            i += 1

    def to_dict(self) -> dict:
        return {
            "prefix": [s.to_dict() for s in self.prefix],
            "tail": None if self.tail is None else [s.to_dict() for s in self.tail],
        }


@dataclass(frozen=True)
class StepRecord:
    """What a single transition did, beyond the new state."""

    sigma: int
    mbar: int
    qbar: int


def _check_new_state(p: int, jac: Fraction) -> None:
    c = (p - 1) * jac
    if c.denominator != 1 or c <= 0:
        raise ConsistencyError(f"resulting exponent (p-1)*jac = {c} is not a positive integer")


def advance_type1(
    state: ExtensionState, step: TransformStep
) -> tuple[ExtensionState, StepRecord]:
    if state.type is not GermType.T1:
        raise WrongTypeError(f"type-1 transition applied to a {state.type.value} state")
    m, q, p = step.m, step.q, state.p
    if m <= 1:
        raise HypothesisViolation(f"type-1 transitions need m > 1, got m = {m}")
    if Fraction(q, m) >= state.jac_ratio:
        # q/m at or above the ratio: the next map is unramified
        mbar, qbar = m, int(state.c * m + q)
        new = ExtensionState(p, GermType.T0, Fraction(0), state.depth + 1,
                             state.M * m, state.Mbar * mbar)
        return new, StepRecord(1, mbar, qbar)
    sigma = gcd(m, p * q)
    if sigma == 1:
        jac, new_type = state.jac_ratio * m - q, GermType.T1
    elif sigma == p:
        jac, new_type = state.jac_ratio * m - q + 1, GermType.T2
    else:
        raise ConsistencyError(f"sigma = {sigma} is neither 1 nor p")
    _check_new_state(p, jac)
    mbar, qbar = m // sigma, p * q // sigma
    new = ExtensionState(p, new_type, jac, state.depth + 1, state.M * m, state.Mbar * mbar)
    return new, StepRecord(sigma, mbar, qbar)


def advance_type2(
    state: ExtensionState, step: TransformStep, strict: bool = False
) -> tuple[ExtensionState, StepRecord]:
    if state.type is not GermType.T2:
        raise WrongTypeError(f"type-2 transition applied to a {state.type.value} state")
    m, q, p = step.m, step.q, state.p
    sigma = gcd(p * m, q)
    if sigma == 1:
        jac, new_type = state.jac_ratio * m - m, GermType.T1
    elif sigma == p:
        jac, new_type = state.jac_ratio * m - m + 1, GermType.T2
    else:
        raise ConsistencyError(f"sigma = {sigma} is neither 1 nor p")
    _check_new_state(p, jac)
    mbar, qbar = p * m // sigma, q // sigma
    if strict and mbar <= 1:
        raise HypothesisViolation(f"strict mode needs mbar > 1, got mbar = {mbar} at m = {m}")
    new = ExtensionState(p, new_type, jac, state.depth + 1, state.M * m, state.Mbar * mbar)
    return new, StepRecord(sigma, mbar, qbar)


def advance(
    state: ExtensionState, step: TransformStep, strict: bool = False
) -> tuple[ExtensionState, StepRecord]:
    """Dispatch on the state's type."""
    if state.type is GermType.T1:
        return advance_type1(state, step)
    if state.type is GermType.T2:
        return advance_type2(state, step, strict)
    raise WrongTypeError("no transitions are tracked past a type T0 state")


def step_from_type1(state: ExtensionState, step: TransformStep) -> ExtensionState:
    return advance_type1(state, step)[0]


def step_from_type2(
    state: ExtensionState, step: TransformStep, strict: bool = False
) -> ExtensionState:
    return advance_type2(state, step, strict)[0]


@dataclass(frozen=True)
class Trace:
    states: tuple[ExtensionState, ...]
    steps: tuple[TransformStep, ...] = ()
    sigma_values: tuple[int, ...] = ()
    schedule: Optional[Schedule] = None
    halted: bool = False
    # (state index, envelope exponent t) pairs; used by synthesized traces
    checkpoints: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if not self.states:
            raise DomainError("a trace needs at least one state")
        if len(self.steps) != len(self.states) - 1 or len(self.sigma_values) != len(self.steps):
            raise DomainError("a trace needs one step and one sigma per transition")

    @property
    def p(self) -> int:
        return self.states[0].p

    @property
    def depth(self) -> int:
        return len(self.steps)

    @property
    def d_values(self) -> list[Fraction]:
        return [s.d for s in self.states]

    @property
    def types(self) -> list[GermType]:
        return [s.type for s in self.states]

    def rows(self) -> list[dict]:
        out = []
        for i, s in enumerate(self.states):
            out.append({
                "depth": s.depth,
                "type": s.type.value,
                "c": s.c,
                "jac_ratio": fmt_rat(s.jac_ratio),
                "M": s.M,
                "d_i": fmt_rat(s.d),
                "sigma": "" if i == 0 else self.sigma_values[i - 1],
            })
        return out


def _check_monotone(d_values: Sequence[Fraction]) -> None:
    for i in range(1, len(d_values)):
        if d_values[i] > d_values[i - 1]:
            raise ConsistencyError(
                f"d increased at depth {i}: {d_values[i - 1]} -> {d_values[i]}"
            )


def run_schedule(
    state0: ExtensionState,
    schedule: Schedule,
    depth: Optional[int] = None,
    strict: bool = False,
) -> Trace:
    """Fold `depth` steps of the schedule starting at state0.

    With depth None the whole prefix is used (a tail then needs an explicit
    depth).  The run stops early, and the trace is marked halted, when type
    T0 is reached.
    """
    if state0.type is GermType.T0:
        raise WrongTypeError("the seed state must be of type T1 or T2")
    if depth is None:
        if schedule.tail is not None:
            raise DomainError("a schedule with a tail needs an explicit depth")
        depth = len(schedule.prefix)
    if depth < 0:
        raise DomainError("depth must be nonnegative")
    if schedule.tail is None and depth > len(schedule.prefix):
        raise DomainError(f"depth {depth} exceeds the {len(schedule.prefix)} available steps")
    states = [state0]
    steps: list[TransformStep] = []
    sigmas: list[int] = []
    halted = False
    for i in range(depth):
        step = schedule.step_at(i)
        assert step is not None
        try:
            new, rec = advance(states[-1], step, strict)
        except AsDefectError as exc:
            raise type(exc)(f"step {i + 1}: {exc}") from exc
        _assert_switch_conditions(states[-1], new, step, rec, i + 1)
        states.append(new)
        steps.append(step)
        sigmas.append(rec.sigma)
        if new.type is GermType.T0:
            halted = True
            break
    _check_monotone([s.d for s in states])
    return Trace(tuple(states), tuple(steps), tuple(sigmas), schedule, halted)


def step_record(state: ExtensionState, step: TransformStep) -> StepRecord:
    """Recompute sigma, mbar, qbar of a step from the type it leaves."""
    p, m, q = state.p, step.m, step.q
    if state.type is GermType.T1:
        if Fraction(q, m) >= state.jac_ratio:
            return StepRecord(1, m, int(state.c * m + q))
        sigma = gcd(m, p * q)
        return StepRecord(sigma, m // sigma, p * q // sigma)
    sigma = gcd(p * m, q)
    return StepRecord(sigma, p * m // sigma, q // sigma)


def _switch_violations(
    before: ExtensionState, after: ExtensionState, step: TransformStep, rec: StepRecord
) -> list[str]:
    p = before.p
    out = []
    if before.type is GermType.T1 and after.type is GermType.T2:
        if step.m % p != 0:
            out.append(f"T1->T2 needs p | m (sigma = gcd(m, pq) = p), but m = {step.m}")
        if rec.sigma != p:
            out.append(f"T1->T2 needs sigma = p, got {rec.sigma}")
    if before.type is GermType.T2 and after.type is GermType.T1:
        if step.q % p == 0:
            out.append(f"T2->T1 needs p not dividing q (sigma = gcd(pm, q) = 1), but q = {step.q}")
        if rec.mbar % p != 0:
            out.append(f"T2->T1 needs p | mbar = pm, got mbar = {rec.mbar}")
    return out


def _assert_switch_conditions(before, after, step, rec, index) -> None:
    bad = _switch_violations(before, after, step, rec)
    if bad:
        raise ConsistencyError(f"step {index}: " + "; ".join(bad))


@dataclass(frozen=True)
class TailAnalysis:
    """Outcome of following a periodic tail forever.

    kind is "limit" (d converges to `limit`), "t0" (type T0 is reached),
    or "constant" (a cycle of m = 1 steps that never moves d).
    """

    kind: str
    cycle_types: tuple[GermType, ...] = ()
    limit: Optional[Fraction] = None
    start: Optional[ExtensionState] = None


def analyze_tail(
    state0: ExtensionState, schedule: Schedule, strict: bool = False, max_periods: int = 10_000
) -> TailAnalysis:
    """Certify the eventual behavior of a schedule with a periodic tail.

    Over one cycle of the tail with a fixed starting type the Jacobian
    ratio transforms as j -> P*j - K with P the product of the m's.  If
    the cycle does not lower j it never will, and the limit is closed in
    form; otherwise j drifts down until type T0 is hit.
    """
    if schedule.tail is None:
        raise DomainError("tail analysis needs a declared tail")
    state = state0
    for step in schedule.prefix:
        state, _ = advance(state, step, strict)
        if state.type is GermType.T0:
            return TailAnalysis("t0", (GermType.T0,))

    def one_period(s: ExtensionState) -> tuple[ExtensionState, list[GermType]]:
        seen = []
        for step in schedule.tail:  # type: ignore[union-attr]
            s, _ = advance(s, step, strict)
            seen.append(s.type)
            if s.type is GermType.T0:
                break
        return s, seen

    by_type: dict[GermType, ExtensionState] = {}
    types_from: dict[GermType, list[GermType]] = {}
    trail: list[GermType] = []
    while state.type not in by_type:
        by_type[state.type] = state
        types_from[state.type] = list(trail)
        state, seen = one_period(state)
        trail.extend(seen)
        if state.type is GermType.T0:
            return TailAnalysis("t0", (GermType.T0,))
    start = by_type[state.type]
    cycle_types = tuple(trail[len(types_from[state.type]):])
    P = state.M // start.M
    K = P * start.jac_ratio - state.jac_ratio
    if P == 1:
        if K != 0:
            raise ConsistencyError("a cycle with P = 1 moved the Jacobian ratio")
        return TailAnalysis("constant", cycle_types, start.d, start)
    if state.jac_ratio >= start.jac_ratio:
        limit = limit_of_decrement_series(start.d, K / (start.M * P), Fraction(1, P))
        return TailAnalysis("limit", cycle_types, limit, start)
    # the ratio decreases geometrically, so type T0 (or an illegal step) must come
    for _ in range(max_periods):
        state, _ = one_period(state)
        if state.type is GermType.T0:
            return TailAnalysis("t0", cycle_types + (GermType.T0,))
    raise ConsistencyError("decreasing cycle failed to reach type T0")


def distance_from_trace(trace: Trace) -> DistanceBound:
    """Bounds on -dist from the d-values, exact when a tail certifies the limit."""
    if trace.halted or trace.states[-1].type is GermType.T0:
        raise DomainError("the trace reached type T0; the distance is not tracked there")
    d = trace.d_values
    try:
        _check_monotone(d)
    except ConsistencyError as exc:
        raise ConsistencyError(f"d-values not non-increasing: {exc}") from exc
    low = min(d)
    if trace.schedule is not None and trace.schedule.tail is not None:
        tail = analyze_tail(trace.states[0], trace.schedule)
        if tail.kind in ("limit", "constant"):
            assert tail.limit is not None
            if tail.limit > low or tail.limit < 0:
                raise ConsistencyError(f"closed-form limit {tail.limit} is inconsistent with min d = {low}")
            return DistanceBound.exact_value(tail.limit)
    return DistanceBound(Fraction(0), low)


class Verdict(str, Enum):
    DEFECTLESS = "defectless"
    DEFECT = "defect"
    UNRAMIFIED_SPLIT = "unramified_split"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class DefectVerdict:
    verdict: Verdict
    e_over_nu: Optional[int]
    defect_power: Optional[int]
    group_index_at_depth: int

    def __post_init__(self) -> None:
        if self.e_over_nu is not None and self.defect_power is not None:
            product = self.e_over_nu * self.defect_power
            if product != 1 and not is_prime(product):
                raise ConsistencyError(f"e * delta = {product} is neither 1 nor p")


def _final_index(trace: Trace) -> int:
    s = trace.states[-1]
    omega_l = GroupLattice(Fraction(1), s.M)
    nu_k = GroupLattice(Fraction(s.u_exponent), s.M)
    return lattice_index(omega_l, nu_k)


def defect_verdict(trace: Trace) -> DefectVerdict:
    p = trace.p
    index = _final_index(trace)
    if trace.halted:
        return DefectVerdict(Verdict.UNRAMIFIED_SPLIT, 1, 1, index)
    if trace.schedule is None or trace.schedule.tail is None:
        return DefectVerdict(Verdict.UNDETERMINED, None, None, index)
    tail = analyze_tail(trace.states[0], trace.schedule)
    if tail.kind == "t0":
        return DefectVerdict(Verdict.UNRAMIFIED_SPLIT, 1, 1, index)
    if all(t is GermType.T2 for t in tail.cycle_types):
        return DefectVerdict(Verdict.DEFECTLESS, p, 1, index)
    return DefectVerdict(Verdict.DEFECT, 1, p, index)


def value_group_index(trace: Trace) -> int:
    """Index of the value group of K in that of L.

    With a certified tail this is the index of the limit groups: any type
    T1 state in the cycle puts nu(u) = omega(x) infinitely often, so the
    groups coincide; an all-T2 cycle gives index p.  Without a tail the
    lattices at the final depth are compared.
    """
    if trace.schedule is not None and trace.schedule.tail is not None and not trace.halted:
        tail = analyze_tail(trace.states[0], trace.schedule)
        if tail.kind in ("limit", "constant") and tail.start is not None:
            start = tail.start
            cycle_has_t1 = any(t is GermType.T1 for t in tail.cycle_types)
            a = 1 if cycle_has_t1 else start.u_exponent
            fine = GroupLattice(Fraction(1), start.M)
            coarse = GroupLattice(Fraction(a), start.M)
            return lattice_index(fine, coarse)
    return _final_index(trace)


@dataclass(frozen=True)
class SwitchingReport:
    passed: bool
    switches: tuple[tuple[int, str], ...]
    violations: tuple[str, ...]
    p_adic_M: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "switches": [list(s) for s in self.switches],
            "violations": list(self.violations),
            "p_adic_M": list(self.p_adic_M),
        }


def switching_certificate(trace: Trace) -> SwitchingReport:
    """Check the divisibility conditions every type switch must satisfy."""
    p = trace.p
    switches = []
    violations = []
    for i, step in enumerate(trace.steps):
        before, after = trace.states[i], trace.states[i + 1]
        if before.type is after.type or GermType.T0 in (before.type, after.type):
            continue
        switches.append((i + 1, f"{before.type.value}->{after.type.value}"))
        rec = step_record(before, step)
        violations.extend(f"step {i + 1}: {v}" for v in _switch_violations(before, after, step, rec))
    vals = tuple(p_adic_valuation(s.M, p) for s in trace.states)
    return SwitchingReport(not violations, tuple(switches), tuple(violations), vals)


def schedule_from_json(doc: dict) -> tuple[ExtensionState, Schedule]:
    """Parse the schedule document format."""
    try:
        p = int(doc["p"])
        seed = doc["seed"]
        state = ExtensionState(
            p,
            GermType.parse(seed["type"]),
            rat(seed["jac_ratio"]),
            0,
            int(seed.get("M", 1)),
            int(seed.get("Mbar", 1)),
        )
        if state.type is GermType.T0:
            raise DomainError("the seed must be of type T1 or T2")
        prefix = [_as_step(s) for s in doc.get("prefix", [])]
        tail = doc.get("tail")
        schedule = Schedule(tuple(prefix), None if tail is None else tuple(_as_step(s) for s in tail))
    except (KeyError, TypeError) as exc:
        raise DomainError(f"malformed schedule document: {exc!r}") from exc
    return state, schedule


def schedule_to_json(state0: ExtensionState, schedule: Schedule) -> dict:
    seed: dict = {"type": state0.type.value, "jac_ratio": fmt_rat(state0.jac_ratio)}
    if state0.M != 1 or state0.Mbar != 1:
        seed["M"] = state0.M
        seed["Mbar"] = state0.Mbar
    return {"p": state0.p, "seed": seed, **schedule.to_dict()}


def seed_state(p: int, type_: object, jac_ratio: RatLike) -> ExtensionState:
    return ExtensionState(p, GermType.parse(type_), rat(jac_ratio))

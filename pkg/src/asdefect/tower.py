"""Two-level towers K -> L -> M.

The lower level is K -> L and the upper level is L -> M; both share the
blowup sequence of the middle field, so the exponents (mbar', qbar') that
the upper level induces on its source side must equal the lower level's
(m, q).  Two towers are provided: a periodic dependent-defect tower whose
distances have closed forms, and an independent-defect tower whose steps
are chosen from shrinking windows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from .engine import (
    ExtensionState,
    GermType,
    Schedule,
    StepRecord,
    Trace,
    TransformStep,
    advance,
    is_prime,
)
from .errors import ConsistencyError, DomainError
from .series import MapGerm, TruncSeries, detect_strong_monomial, make_field
from .synth import DEFAULT_LAMBDA_CAP, choose_step
from .values import DistanceBound, fmt_rat, limit_of_decrement_series


@dataclass(frozen=True)
class LinkRecord:
    lower_step: TransformStep
    upper_step: TransformStep
    lower_rec: StepRecord
    upper_rec: StepRecord
    parity_checked: bool = False

    @property
    def shared_ok(self) -> bool:
        """The upper level's source-side exponents equal the lower step."""
        return (self.upper_rec.mbar, self.upper_rec.qbar) == (self.lower_step.m, self.lower_step.q)

    def parity_ok(self, index: int, p: int) -> bool:
        """Parity rules of the independent tower for the step leaving `index`."""
        m, mbar, m_up = self.lower_step.m, self.lower_rec.mbar, self.upper_step.m
        if index % 2 == 0:
            return m == p * mbar and m_up == mbar
        return mbar == p * m and m_up == mbar


@dataclass(frozen=True)
class TowerState:
    lower: ExtensionState
    upper: ExtensionState
    link: Optional[LinkRecord] = None

    def __post_init__(self) -> None:
        if self.lower.p != self.upper.p or self.lower.depth != self.upper.depth:
            raise ConsistencyError("tower levels must share p and depth")


@dataclass
class TowerTrace:
    states: list[TowerState]
    kind: str = "generic"
    # the step after the last state, kept so the last depth can be audited
    lookahead: Optional[LinkRecord] = None
    audit_flags: list[str] = field(default_factory=list)

    @property
    def p(self) -> int:
        return self.states[0].lower.p

    @property
    def depth(self) -> int:
        return len(self.states) - 1

    @property
    def d_lower(self) -> list[Fraction]:
        return [s.lower.d for s in self.states]

    @property
    def d_upper(self) -> list[Fraction]:
        return [s.upper.d for s in self.states]

    def next_link(self, i: int) -> Optional[LinkRecord]:
        if i + 1 < len(self.states):
            return self.states[i + 1].link
        return self.lookahead

    def level_trace(self, which: str) -> Trace:
        states = tuple(getattr(s, which) for s in self.states)
        steps = tuple(getattr(s.link, f"{which}_step") for s in self.states[1:])
        sigmas = tuple(getattr(s.link, f"{which}_rec").sigma for s in self.states[1:])
        return Trace(states, steps, sigmas)

    def bounds(self) -> tuple[DistanceBound, DistanceBound]:
        return DistanceBound(0, min(self.d_lower)), DistanceBound(0, min(self.d_upper))


def _check_monotone(values: Sequence[Fraction], name: str) -> None:
    for i in range(1, len(values)):
        if values[i] > values[i - 1]:
            raise ConsistencyError(f"{name} d-values increase at depth {i}")


def _linked_step(
    lower: ExtensionState, upper: ExtensionState, lstep: TransformStep, ustep: TransformStep,
    index: int, parity: bool,
) -> tuple[ExtensionState, ExtensionState, LinkRecord]:
    new_l, rec_l = advance(lower, lstep)
    new_u, rec_u = advance(upper, ustep)
    link = LinkRecord(lstep, ustep, rec_l, rec_u, parity)
    if not link.shared_ok:
        raise ConsistencyError(
            f"step {index + 1}: upper source exponents ({rec_u.mbar}, {rec_u.qbar}) "
            f"differ from lower step ({lstep.m}, {lstep.q})"
        )
    if parity and not link.parity_ok(index, lower.p):
        raise ConsistencyError(f"step {index + 1}: parity link rules fail")
    return new_l, new_u, link


# --- the periodic dependent-defect tower -------------------------------------

def worked_example_values(p: int, c: int, depth: int) -> tuple[list[Fraction], list[Fraction]]:
    """d-values of both levels, k = 1..depth, from the closed-form recurrences.

    Lower level: d_1 = 2; at odd k the value drops by the value of the
    lower middle parameter, 1/p^(2k-2); at even k it is unchanged.
    Upper level: d_1 = c/(p-1); unchanged at odd k; at even k it drops by
    1/p^(2k-2).
    """
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    if c < 1 or c % (p - 1):
        raise DomainError(f"c = {c} must be a positive multiple of p - 1")
    if depth < 1:
        raise DomainError("depth must be >= 1")
    lower = [Fraction(2)]
    upper = [Fraction(c, p - 1)]
    for k in range(1, depth):
        omega = Fraction(1, p ** (2 * k - 2))
        if k % 2:
            lower.append(lower[-1] - omega)
            upper.append(upper[-1])
        else:
            lower.append(lower[-1])
            upper.append(upper[-1] - omega)
    return lower, upper


def worked_example(p: int, c: int, depth: int = 6, closure: bool = True) -> tuple[DistanceBound, DistanceBound]:
    """Distances of the dependent-defect tower.

    With closure the periodic decrement (ratio 1/p^4 per two steps) is
    summed in closed form; without it the finite bounds [0, d_depth] are
    returned.
    """
    lower, upper = worked_example_values(p, c, depth)
    if not closure:
        return DistanceBound(0, min(lower)), DistanceBound(0, min(upper))
    r = Fraction(1, p ** 4)
    low = limit_of_decrement_series(Fraction(2), Fraction(1), r)
    up = limit_of_decrement_series(Fraction(c, p - 1), Fraction(1, p ** 2), r)
    if low > min(lower) or up > min(upper):
        raise ConsistencyError("closed-form limit exceeds a computed d-value")
    return DistanceBound.exact_value(low), DistanceBound.exact_value(up)


def worked_schedules(p: int, c: int) -> tuple[tuple[ExtensionState, Schedule], tuple[ExtensionState, Schedule]]:
    """Engine seeds and periodic schedules reproducing the dependent tower."""
    if c < 1 or c % (p - 1):
        raise DomainError(f"c = {c} must be a positive multiple of p - 1")
    lower = (ExtensionState(p, GermType.T2, Fraction(2)),
             Schedule((), (TransformStep.make(p, 1), TransformStep.make(p ** 3, 1))))
    upper = (ExtensionState(p, GermType.T1, Fraction(c, p - 1)),
             Schedule((), (TransformStep.make(p ** 2, 1),)))
    return lower, upper


def worked_tower(p: int, c: int, depth: int) -> TowerTrace:
    """The dependent tower built step by step through the engine."""
    (l0, lsched), (u0, usched) = worked_schedules(p, c)
    states = [TowerState(l0, u0)]
    lower, upper = l0, u0
    lookahead = None
    for i in range(depth + 1):
        lstep, ustep = lsched.step_at(i), usched.step_at(i)
        assert lstep is not None and ustep is not None
        new_l, new_u, link = _linked_step(lower, upper, lstep, ustep, i, parity=False)
        if i == depth:
            lookahead = link
            break
        states.append(TowerState(new_l, new_u, link))
        lower, upper = new_l, new_u
    trace = TowerTrace(states, "dependent", lookahead)
    _check_monotone(trace.d_lower, "lower")
    _check_monotone(trace.d_upper, "upper")
    trace.audit_flags = [row["audit_flag"] for row in stable_form_audit(trace)["depths"]]
    return trace


# --- the independent-defect tower -------------------------------------------

def build_independent_tower(p: int, depth: int, e: int = 1,
                            lambda_cap: int = DEFAULT_LAMBDA_CAP) -> TowerTrace:
    """Tower of two independent defect extensions.

    Both levels start from Artin-Schreier seeds with exponent e.  A short
    preamble brings the lower level to type 1 and the upper to type 2 at
    index 0, where values are renormalized.  Afterwards, at even r the
    lower level takes m = p^lam (lam >= 2) with q/m inside a window of
    width 2^-(r+1) M_r below its Jacobian ratio, and the upper level takes
    (m/p, q); at odd r the roles swap.
    """
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    if depth < 1:
        raise DomainError("depth must be >= 1")
    # preamble: lower T1 -> T2, then one linked step into index 0
    lower = ExtensionState(p, GermType.T1, Fraction(e))
    lower, _ = advance(lower, TransformStep.make(p ** 2, 1))
    upper = ExtensionState(p, GermType.T1, Fraction(e))
    lower, upper, _ = _linked_step(lower, upper, TransformStep.make(p, 1),
                                   TransformStep.make(p ** 2, 1), -1, parity=True)
    lower = ExtensionState(p, lower.type, lower.jac_ratio)
    upper = ExtensionState(p, upper.type, upper.jac_ratio)
    if (lower.type, upper.type) != (GermType.T1, GermType.T2):
        raise ConsistencyError("preamble did not reach the (T1, T2) configuration")

    states = [TowerState(lower, upper)]
    lookahead = None
    for r in range(depth + 1):
        if r % 2 == 0:
            lstep = choose_step(lower.jac_ratio, lower.M, 0, 2, r + 1, p, lambda_cap=lambda_cap)
            ustep = TransformStep.make(lstep.m // p, lstep.q)
        else:
            ustep = choose_step(upper.jac_ratio, upper.M, 0, 2, r + 1, p, lambda_cap=lambda_cap)
            lstep = TransformStep.make(ustep.m // p, ustep.q)
        new_l, new_u, link = _linked_step(lower, upper, lstep, ustep, r, parity=True)
        if r == depth:
            lookahead = link
            break
        states.append(TowerState(new_l, new_u, link))
        lower, upper = new_l, new_u
    trace = TowerTrace(states, "independent", lookahead)
    _check_monotone(trace.d_lower, "lower")
    _check_monotone(trace.d_upper, "upper")
    for i, s in enumerate(states):
        want_l = GermType.T1 if i % 2 == 0 else GermType.T2
        want_u = GermType.T2 if i % 2 == 0 else GermType.T1
        if (s.lower.type, s.upper.type) != (want_l, want_u):
            raise ConsistencyError(f"type pattern broken at depth {i}")
    trace.audit_flags = [row["audit_flag"] for row in stable_form_audit(trace)["depths"]]
    return trace


# --- stable-form audit -------------------------------------------------------

NOT_SM = "not_strongly_monomial"
SM = "strongly_monomial"
UNKNOWN = "unknown"


def _residue_order(t: GermType, p: int) -> int:
    return p if t is GermType.T1 else 1


def _audit_depth(i: int, lower: ExtensionState, upper: ExtensionState,
                 nxt: Optional[LinkRecord], p: int) -> dict:
    a = lower.u_exponent * upper.u_exponent
    d = _residue_order(lower.type, p) * _residue_order(upper.type, p)
    row = {
        "depth": i,
        "types": [lower.type.value, upper.type.value],
        "c": lower.c,
        "c_prime": upper.c,
        "d_lower": fmt_rat(lower.d),
        "d_upper": fmt_rat(upper.d),
        "u_exponent": a,
        "v_residue_order": d,
    }
    if (a, d) == (p, p):
        if nxt is None:
            row.update(audit_flag=UNKNOWN, certificate="stable shape; no next step to bound the w-value")
            return row
        # the value of the top-level second parameter is q'/(m' M')
        slope = Fraction(nxt.upper_step.q, nxt.upper_step.m)
        if lower.type is GermType.T1:
            k = p * lower.c
            reason = f"lower type 1: Omega leads with z^{k} w"
        else:
            k = upper.c
            reason = f"upper type 1: Omega leads with z^{k} w"
        ok = (p - 1) * slope < k
        row["omega_lead_exponent"] = k
        row["w_slope"] = fmt_rat(slope)
        if ok:
            row.update(audit_flag=NOT_SM,
                       certificate=f"u = unit*z^{p}, v = w^{p}*beta + Omega; {reason}; "
                                   f"(p-1)*{fmt_rat(slope)} < {k} so w^{p} leads")
        else:
            row.update(audit_flag=UNKNOWN, certificate=f"value inequality fails: (p-1)*{slope} >= {k}")
        return row
    if d == 1:
        row.update(audit_flag=SM, certificate=f"u = unit*z^{a}, v = w (type-2 shape)")
        return row
    row.update(audit_flag=UNKNOWN, certificate=f"shape (a, d) = ({a}, {d}) has no certificate")
    return row


def stable_form_audit(trace: Union[TowerTrace, Trace], cross_check_limit: int = 40,
                      search_bound: int = 2) -> dict:
    """Per-depth check of the composed stable form.

    For a tower, depth i composes the two levels: the top-level u has
    z-exponent a_lower * a_upper and the residue order of v multiplies the
    same way.  The pattern (p, p) is the stable non-monomial shape once the
    w^p term has the smaller value.  Depths whose leading exponent is small
    enough are re-checked on a model germ with the series kernel.
    A single-level Trace is audited level-wise (type 2 is the strongly
    monomial shape).
    """
    if isinstance(trace, Trace):
        rows = []
        for i, s in enumerate(trace.states):
            if s.type is GermType.T2:
                rows.append({"depth": i, "types": [s.type.value], "audit_flag": SM,
                             "certificate": f"u = unit*x^{s.p}, v = y (type 2)"})
            else:
                rows.append({"depth": i, "types": [s.type.value], "audit_flag": UNKNOWN,
                             "certificate": "single-level shape without a certificate"})
        return {"depths": rows, "mismatches": [], "tail_order_bounds": []}

    p = trace.p
    rows = []
    mismatches = []
    bounds = []
    for i, s in enumerate(trace.states):
        nxt = trace.next_link(i)
        row = _audit_depth(i, s.lower, s.upper, nxt, p)
        k = row.get("omega_lead_exponent")
        if k is not None and k + 3 <= cross_check_limit and nxt is not None:
            verdict = _kernel_cross_check(p, k, Fraction(nxt.upper_step.q, nxt.upper_step.m), search_bound)
            row["kernel_check"] = verdict
            expected = "no" if row["audit_flag"] == NOT_SM else "unknown"
            if verdict != expected:
                mismatches.append(f"depth {i}: kernel says {verdict}, audit says {row['audit_flag']}")
        if trace.kind == "independent" and s.lower.type is GermType.T1 and nxt is not None:
            bounds.append({"depth": i, "min_tail_order": fmt_rat(Fraction(p * nxt.lower_step.q, nxt.lower_step.m)),
                           "status": "sufficient bound"})
        rows.append(row)
    return {"depths": rows, "mismatches": mismatches, "tail_order_bounds": bounds}


def _kernel_cross_check(p: int, k: int, slope: Fraction, search_bound: int) -> str:
    F = make_field(p)
    n = max(p + 2, k + 3)
    z_p = TruncSeries.monomial(F, n, p, 0)
    unit = TruncSeries.one(F, n) + TruncSeries.x(F, n)
    u = z_p * unit
    v = TruncSeries.from_terms(F, n, {(0, p): 1, (k, 1): 1})
    verdict = detect_strong_monomial(MapGerm(u, v), search_bound, (Fraction(1), slope))
    return verdict.outcome


def tower_report(trace: TowerTrace) -> dict:
    audit = stable_form_audit(trace)
    low, up = trace.bounds()
    return {
        "p": trace.p,
        "kind": trace.kind,
        "depth": trace.depth,
        "links_ok": all(s.link is None or s.link.shared_ok for s in trace.states),
        "lower_bound": low.to_dict(),
        "upper_bound": up.to_dict(),
        "depths": audit["depths"],
        "audit_mismatches": audit["mismatches"],
        "tail_order_bounds": audit["tail_order_bounds"],
    }

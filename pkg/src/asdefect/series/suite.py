"""Seeded random comparison of the exponent engine against the series oracle."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Callable, Optional, Sequence

import numpy as np

from ..engine import ExtensionState, GermType, StepRecord, TransformStep, advance
from ..errors import NonUnitLambdaError, TruncationError
from .field import make_field
from .germ import (
    MapGerm,
    OracleResult,
    classify_type,
    complexity,
    jacobian_exponent,
    oracle_transition,
    random_oracle_germ,
)

EngineFn = Callable[[ExtensionState, TransformStep], tuple[ExtensionState, StepRecord]]


@dataclass(frozen=True)
class CaseResult:
    index: int
    p: int
    kind: str
    c: int
    m: int
    q: int
    alpha: int
    status: str  # "pass", "mismatch", "skipped" or "flagged"
    engine: Optional[tuple[str, int]] = None
    kernel: Optional[tuple[str, int]] = None
    precision: int = 0
    chain_ok: Optional[bool] = None
    complexity: Optional[int] = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "case": self.index, "p": self.p, "type": self.kind, "c": self.c,
            "m": self.m, "q": self.q, "alpha": self.alpha, "status": self.status,
            "engine": None if self.engine is None else list(self.engine),
            "kernel": None if self.kernel is None else list(self.kernel),
            "precision": self.precision, "chain_ok": self.chain_ok, "note": self.note,
        }


@dataclass
class SuiteResult:
    cases: list[CaseResult] = field(default_factory=list)

    def count(self, status: str) -> int:
        return sum(1 for c in self.cases if c.status == status)

    @property
    def mismatches(self) -> int:
        return self.count("mismatch")

    @property
    def skipped(self) -> int:
        return self.count("skipped")

    @property
    def skip_rate(self) -> float:
        return self.skipped / len(self.cases) if self.cases else 0.0


def _truncate_germ(germ: MapGerm, n: int) -> MapGerm:
    return MapGerm(germ.u.truncate(min(n, germ.u.order)), germ.v.truncate(min(n, germ.v.order)))


def _default_engine(state: ExtensionState, step: TransformStep) -> tuple[ExtensionState, StepRecord]:
    return advance(state, step)


def draw_case(rng: np.random.Generator, primes: Sequence[int], max_mq: int) -> tuple[int, str, int, int, int]:
    """(p, kind, exponent, m, q) for one random legal transition."""
    while True:
        p = int(rng.choice(list(primes)))
        kind = str(rng.choice([GermType.T1.value, GermType.T2.value]))
        if kind == GermType.T1.value:
            exponent = (p - 1) * int(rng.integers(1, 3))
            m = int(rng.integers(2, max_mq + 1))
        else:
            exponent = int(rng.choice([k for k in (1, 2, 3) if k % p]))
            m = int(rng.integers(1, max_mq + 1))
        q = int(rng.integers(1, max_mq + 1))
        if gcd(m, q) == 1:
            return p, kind, exponent, m, q


def run_case(
    index: int,
    germ: MapGerm,
    step: TransformStep,
    precision: int,
    max_precision: int,
    engine: EngineFn = _default_engine,
) -> CaseResult:
    F = germ.field
    p = F.p
    prec = precision
    note = ""
    while True:
        g = _truncate_germ(germ, prec)
        kind = "?"
        c = -1
        try:
            c, _ = jacobian_exponent(g)
            kind = classify_type(g)
            state = ExtensionState(p, kind, Fraction(c, p - 1))
            predicted, _ = engine(state, step)
            result: OracleResult = oracle_transition(g, step, precision=prec)
        except TruncationError as exc:
            note = str(exc)
            if prec * 2 > max_precision:
                return CaseResult(index, p, kind, c, step.m, step.q, step.alpha_label,
                                  "skipped", precision=prec, note=note)
            prec *= 2
            continue
        except NonUnitLambdaError as exc:
            return CaseResult(index, p, kind, c, step.m, step.q, step.alpha_label,
                              "flagged", precision=prec, note=str(exc))
        eng = (predicted.type.value, predicted.c)
        ker = (result.type, result.c)
        cx = complexity(result.germ) if result.type != GermType.T0.value else 1
        status = "pass" if eng == ker else "mismatch"
        return CaseResult(index, p, kind, c, step.m, step.q, step.alpha_label, status,
                          eng, ker, prec, result.chain_ok, cx, note)


def run_oracle_suite(
    n: int = 200,
    seed: int = 0,
    precision: int = 64,
    primes: Sequence[int] = (2, 3),
    max_mq: int = 7,
    max_precision: Optional[int] = None,
    engine: EngineFn = _default_engine,
    s: int = 4,
) -> SuiteResult:
    """Compare engine and kernel on n seeded random transitions."""
    rng = np.random.default_rng(seed)
    cap = max_precision if max_precision is not None else 4 * precision
    out = SuiteResult()
    for index in range(n):
        p, kind, exponent, m, q = draw_case(rng, primes, max_mq)
        F = make_field(p, s)
        germ = random_oracle_germ(F, kind, exponent, cap, rng)
        alpha = int(rng.integers(1, F.order))
        step = TransformStep.make(m, q, alpha)
        out.cases.append(run_case(index, germ, step, precision, cap, engine))
    return out

"""Truncated power series over finite fields and the blowup oracle."""

from .field import FieldSpec, make_field
from .germ import (
    MapGerm,
    MonomialVerdict,
    OracleResult,
    classify_type,
    complexity,
    detect_strong_monomial,
    galois_difference,
    jacobian,
    jacobian_exponent,
    oracle_transition,
    seed_artin_schreier,
)
from .series import (
    TruncSeries,
    compose_x,
    compose_y,
    invert_unit,
    revert_x,
    revert_y,
    series_arith,
    substitute_monomial,
)

__all__ = [
    "FieldSpec",
    "MapGerm",
    "MonomialVerdict",
    "OracleResult",
    "TruncSeries",
    "classify_type",
    "complexity",
    "compose_x",
    "compose_y",
    "detect_strong_monomial",
    "galois_difference",
    "invert_unit",
    "jacobian",
    "jacobian_exponent",
    "make_field",
    "oracle_transition",
    "revert_x",
    "revert_y",
    "seed_artin_schreier",
    "series_arith",
    "substitute_monomial",
]

"""Exact values: rationals, value-group lattices and distance intervals.

Everything is normalized so that the value of the first regular parameter
x_0 is 1.  No floats are used anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import ContainmentError, DomainError, MonotonicityError

Rat = Fraction

RatLike = Union[Fraction, int, str]

FLAVOR = "s-"


def rat(value: RatLike) -> Fraction:
    """Parse an int, Fraction or "num/den" string into a Fraction."""
    if isinstance(value, bool):
        raise DomainError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            if "/" in text:
                num, den = text.split("/")
                return Fraction(int(num), int(den))
            return Fraction(int(text))
        except (ValueError, ZeroDivisionError) as exc:
            raise DomainError(f"not a rational: {value!r}") from exc
    raise DomainError(f"not a rational: {value!r}")


def fmt_rat(value: Fraction) -> str:
    """Serialize as "num/den", always with an explicit denominator."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class GroupLattice:
    """The subgroup (1/N) * Z * generator_value of Q."""

    generator_value: Fraction
    denominator: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "generator_value", Fraction(self.generator_value))
        if self.denominator < 1:
            raise DomainError("lattice denominator must be >= 1")
        if self.generator_value <= 0:
            raise DomainError("lattice generator value must be positive")

    @property
    def step(self) -> Fraction:
        return self.generator_value / self.denominator

    def contains(self, value: RatLike) -> bool:
        return (rat(value) / self.step).denominator == 1


def lattice_index(fine: GroupLattice, coarse: GroupLattice) -> int:
    """Index [fine : coarse] of a sublattice."""
    ratio = coarse.step / fine.step
    if ratio.denominator != 1:
        raise ContainmentError(
            f"step {coarse.step} is not a multiple of {fine.step}"
        )
    return ratio.numerator


@dataclass(frozen=True)
class DistanceBound:
    """Bounds on -dist, which is always nonnegative.

    The cut flavor is fixed; it is stored so reports can print it.
    """

    lower: Fraction
    upper: Fraction
    exact: bool = False
    flavor: str = FLAVOR

    def __post_init__(self) -> None:
        object.__setattr__(self, "lower", Fraction(self.lower))
        object.__setattr__(self, "upper", Fraction(self.upper))
        if not 0 <= self.lower <= self.upper:
            raise DomainError(f"need 0 <= lower <= upper, got [{self.lower}, {self.upper}]")
        if self.exact and self.lower != self.upper:
            raise DomainError("an exact bound must have lower == upper")

    @classmethod
    def exact_value(cls, value: RatLike) -> "DistanceBound":
        v = rat(value)
        return cls(v, v, True)

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    @property
    def dist(self) -> Fraction:
        """The signed distance; only defined for exact bounds."""
        if not self.exact:
            raise DomainError("distance is only known up to an interval")
        return -self.upper

    def contains(self, value: RatLike) -> bool:
        return self.lower <= rat(value) <= self.upper

    def to_dict(self) -> dict:
        return {
            "lower": fmt_rat(self.lower),
            "upper": fmt_rat(self.upper),
            "exact": self.exact,
            "flavor": self.flavor,
        }

    def describe(self) -> str:
        if self.exact:
            return f"dist = {fmt_rat(-self.upper)} (exact)"
        return f"-dist in [{fmt_rat(self.lower)}, {fmt_rat(self.upper)}]"


def limit_of_decrement_series(a0: RatLike, d0: RatLike, r: RatLike) -> Fraction:
    """Limit of a_{n+1} = a_n - d0 * r**n, i.e. a0 - d0 / (1 - r)."""
    a0, d0, r = rat(a0), rat(d0), rat(r)
    if not 0 <= r < 1:
        raise DomainError(f"ratio must satisfy 0 <= r < 1, got {r}")
    if d0 < 0:
        raise DomainError("decrement must be nonnegative")
    return a0 - d0 / (1 - r)


def bound_refine(current: DistanceBound, new_upper: RatLike) -> DistanceBound:
    """Tighten the upper end with a later term of a non-increasing sequence."""
    new_upper = rat(new_upper)
    if new_upper < current.lower:
        raise MonotonicityError(
            f"new upper {new_upper} is below the lower bound {current.lower}"
        )
    if new_upper >= current.upper:
        return current
    return DistanceBound(current.lower, new_upper, False, current.flavor)

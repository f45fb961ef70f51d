"""Finite fields F_{p^s} presented by lookup tables.

An element is an integer in [0, p^s) whose base-p digits are the
coefficients of a polynomial in t modulo a fixed irreducible polynomial.
Index 0 is zero and index 1 is one; the prime field sits at 0..p-1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from ..engine import is_prime
from ..errors import DomainError

MAX_ORDER = 1024


def _poly_mod(a: list[int], mod: list[int], p: int) -> list[int]:
    """Remainder of a modulo a monic polynomial; coefficient lists low to high."""
    a = a[:]
    n = len(mod) - 1
    for k in range(len(a) - 1, n - 1, -1):
        coef = a[k] % p
        if coef:
            for i in range(n + 1):
                a[k - n + i] = (a[k - n + i] - coef * mod[i]) % p
    return [x % p for x in a[:n]] + [0] * max(0, n - len(a))


def _is_irreducible(mod: list[int], p: int) -> bool:
    n = len(mod) - 1
    for deg in range(1, n // 2 + 1):
        for low in product(range(p), repeat=deg):
            if any(x for x in _poly_mod(mod, list(low) + [1], p)):
                continue
            return False
    return True


def first_irreducible(p: int, s: int) -> tuple[int, ...]:
    """Lexicographically first monic irreducible polynomial of degree s."""
    if s == 1:
        return (0, 1)
    for low in product(range(p), repeat=s):
        mod = list(reversed(low)) + [1]
        if mod[0] != 0 and _is_irreducible(mod, p):
            return tuple(mod)
    raise DomainError(f"no irreducible polynomial of degree {s} over F_{p}")


@dataclass(frozen=True, eq=False)
class FieldSpec:
    p: int
    s: int
    modulus: tuple[int, ...]
    add_t: np.ndarray = field(repr=False)
    mul_t: np.ndarray = field(repr=False)
    neg_t: np.ndarray = field(repr=False)
    inv_t: np.ndarray = field(repr=False)

    @property
    def order(self) -> int:
        return self.p ** self.s

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FieldSpec) and (self.p, self.s) == (other.p, other.s)

    def __hash__(self) -> int:
        return hash((self.p, self.s))

    def digits(self, a: int) -> list[int]:
        out = []
        for _ in range(self.s):
            a, r = divmod(a, self.p)
            out.append(r)
        return out

    def from_digits(self, digits: list[int]) -> int:
        if len(digits) > self.s:
            raise DomainError(f"vector {digits} is longer than the extension degree {self.s}")
        value = 0
        for d in reversed(digits):
            value = value * self.p + d % self.p
        return value

    def from_int(self, k: int) -> int:
        return k % self.p

    def add(self, a: int, b: int) -> int:
        return int(self.add_t[a, b])

    def sub(self, a: int, b: int) -> int:
        return int(self.add_t[a, self.neg_t[b]])

    def mul(self, a: int, b: int) -> int:
        return int(self.mul_t[a, b])

    def neg(self, a: int) -> int:
        return int(self.neg_t[a])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("zero has no inverse")
        return int(self.inv_t[a])

    def pow(self, a: int, k: int) -> int:
        if k < 0:
            a, k = self.inv(a), -k
        out = 1
        while k:
            if k & 1:
                out = self.mul(out, a)
            a = self.mul(a, a)
            k >>= 1
        return out


@lru_cache(maxsize=None)
def make_field(p: int, s: int = 4) -> FieldSpec:
    """Build (once) and share the tables for F_{p^s}."""
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    if s < 1:
        raise DomainError("extension degree must be positive")
    q = p ** s
    if q > MAX_ORDER:
        raise DomainError(f"field of order {q} exceeds the table limit {MAX_ORDER}")
    mod = list(first_irreducible(p, s))
    digits = np.array([[(a // p**k) % p for k in range(s)] for a in range(q)], dtype=np.int64)
    weights = p ** np.arange(s, dtype=np.int64)
    add_t = (((digits[:, None, :] + digits[None, :, :]) % p) @ weights).astype(np.uint16)
    neg_t = (((-digits) % p) @ weights).astype(np.uint16)
    # multiplication: convolve digit vectors, then reduce by the modulus
    conv = np.zeros((q, q, 2 * s - 1), dtype=np.int64)
    for i in range(s):
        for j in range(s):
            conv[:, :, i + j] += digits[:, None, i] * digits[None, :, j]
    conv %= p
    for k in range(2 * s - 2, s - 1, -1):
        lead = conv[:, :, k].copy()
        for i in range(s + 1):
            conv[:, :, k - s + i] = (conv[:, :, k - s + i] - lead * mod[i]) % p
    mul_t = (conv[:, :, :s] @ weights).astype(np.uint16)
    inv_t = np.zeros(q, dtype=np.uint16)
    rows, cols = np.nonzero(mul_t == 1)
    inv_t[rows] = cols
    for t in (add_t, mul_t, neg_t, inv_t):
        t.setflags(write=False)
    return FieldSpec(p, s, tuple(mod), add_t, mul_t, neg_t, inv_t)

"""Germs (u, v) of maps R -> S and the concrete blowup oracle.

The oracle carries a germ through one quadratic-transform step by actual
substitution, then reads off the new type and Jacobian exponent.  It never
consults the exponent recurrences, so it can be used to check them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Optional

import numpy as np

from ..engine import GermType, TransformStep
from ..errors import ConsistencyError, DomainError, NonUnitLambdaError, TruncationError
from .field import FieldSpec
from .series import (
    TruncSeries,
    compose_x,
    compose_y,
    from_json as series_from_json,
    invert_unit,
    resolve_alpha,
    revert_x,
    revert_y,
    substitute_monomial,
    to_json as series_to_json,
    y_plus_alpha_power,
)

OTHER = "other"


@dataclass(frozen=True, eq=False)
class MapGerm:
    u: TruncSeries
    v: TruncSeries
    cached_a: int = field(init=False)
    cached_b: int = field(init=False)
    cached_d: Optional[int] = field(init=False)

    def __post_init__(self) -> None:
        if self.u.field != self.v.field:
            raise DomainError("u and v live over different fields")
        if self.u.constant_term or self.v.constant_term:
            raise DomainError("u and v must be non-units")
        object.__setattr__(self, "cached_a", self.u.x_order())
        b = self.v.x_order()
        object.__setattr__(self, "cached_b", b)
        f = self.v.divide_x_power(b)
        d = f.y_order_at_x0() if f.coeffs[0].any() else None
        object.__setattr__(self, "cached_d", d)

    @property
    def field(self) -> FieldSpec:
        return self.u.field

    @property
    def order(self) -> int:
        return min(self.u.order, self.v.order)

    def to_json(self) -> dict:
        return {"u": series_to_json(self.u), "v": series_to_json(self.v)}

    @classmethod
    def from_json(cls, doc: dict) -> "MapGerm":
        return cls(series_from_json(doc["u"]), series_from_json(doc["v"]))


def jacobian(germ: MapGerm) -> TruncSeries:
    u, v = germ.u, germ.v
    return u.dx() * v.dy() - u.dy() * v.dx()


def jacobian_exponent(germ: MapGerm) -> tuple[int, bool]:
    """x-exponent c of the Jacobian, and whether J = unit * x^c."""
    J = jacobian(germ)
    if J.is_zero():
        raise TruncationError("Jacobian vanishes to the guaranteed order")
    c = J.x_order()
    return c, J.coeff(c, 0) != 0 if c < J.order else False


def _unit_cofactor_exponent(s: TruncSeries) -> Optional[int]:
    """a with s = x^a * unit, or None."""
    a = s.x_order()
    if a >= s.order or s.coeffs[a, 0] == 0:
        return None
    return a


def classify_type(germ: MapGerm) -> str:
    p = germ.field.p
    a = _unit_cofactor_exponent(germ.u)
    if germ.cached_b != 0:
        return OTHER
    if germ.cached_d is None:
        raise TruncationError("v(0, y) vanishes to the guaranteed order")
    d = germ.cached_d
    if a == 1 and d == 1:
        return GermType.T0.value
    if a == 1 and d == p:
        return GermType.T1.value
    if a == p and d == 1:
        return GermType.T2.value
    return OTHER


def complexity(germ: MapGerm) -> int:
    """a * d with u = x^a * unit and v = x^b f, d the residue order of f."""
    if germ.cached_d is None:
        raise TruncationError("cannot read the residue order of f")
    if germ.cached_d == 0:
        raise DomainError("not well prepared: f is a unit")
    if _unit_cofactor_exponent(germ.u) is None:
        raise DomainError("u is not of the form x^a * unit")
    return germ.cached_a * germ.cached_d


def seed_artin_schreier(F: FieldSpec, e: int, order: int = 32) -> MapGerm:
    """The type-1 germ (x, y^p - x^{e(p-1)} y)."""
    if e < 1:
        raise DomainError("seed exponent must be >= 1")
    p = F.p
    c = e * (p - 1)
    if order <= max(p, c + 1):
        raise DomainError(f"order {order} too small for the seed")
    u = TruncSeries.x(F, order)
    v = TruncSeries.from_terms(F, order, {(0, p): 1, (c, 1): F.neg(1)})
    return MapGerm(u, v)


@dataclass(frozen=True, eq=False)
class OracleResult:
    germ: MapGerm
    type: str
    c: int
    sigma: int
    mbar: int
    qbar: int
    beta: int
    rho: int
    chain_lhs: int
    chain_rhs: int

    @property
    def chain_ok(self) -> bool:
        return self.chain_lhs == self.chain_rhs


def _coprime_solution(mbar: int, qbar: int) -> tuple[int, int]:
    """Minimal (c, d) >= 0 with mbar*d - qbar*c = 1."""
    c = (-pow(qbar, -1, mbar)) % mbar if mbar > 1 else 0
    d = (1 + qbar * c) // mbar
    return c, d


def _is_exactly(s: TruncSeries, i: int, j: int) -> bool:
    t = s.terms()
    return t == {(i, j): 1}


def oracle_transition(
    germ: MapGerm,
    step: TransformStep,
    alpha: Optional[int] = None,
    precision: Optional[int] = None,
) -> OracleResult:
    """Run one blowup step on a concrete germ.

    Type-1 (and type-0) germs are first rewritten so that u is the first
    coordinate and the low pure powers of u are removed from v; type-2
    germs are rewritten so that v is the second coordinate.  After the
    monomial substitution u and v factor as x1^A U and x1^B V with units U,
    V, and the new coordinates come from the unimodular solution of
    A/g, B/g.
    """
    F = germ.field
    p = F.p
    kind = classify_type(germ)
    if kind == OTHER:
        raise DomainError("germ is not of type T0, T1 or T2")
    cbar, principal = jacobian_exponent(germ)
    if not principal:
        raise DomainError("Jacobian is not a unit times a power of x")
    m, q = step.m, step.q
    a = resolve_alpha(F, step.alpha_label) if alpha is None else alpha
    if a == 0:
        raise DomainError("residue constant must be nonzero")
    u, v = germ.u, germ.v
    if precision is not None:
        u, v = u.truncate(min(precision, u.order)), v.truncate(min(precision, v.order))
    n = min(u.order, v.order)
    u, v = u.truncate(n), v.truncate(n)
    cap = precision if precision is not None else n

    if kind in (GermType.T1.value, GermType.T0.value):
        if kind == GermType.T1.value and m <= 1:
            raise DomainError("type-1 steps need m > 1")
        if not _is_exactly(u, 1, 0):
            v = compose_x(v, revert_x(u))
        limit = (p * q) // m
        arr = v.coeffs.copy()
        arr[1:min(limit, n - 1) + 1, 0] = 0
        v = TruncSeries(F, n, arr)
        ii, jj = np.nonzero(v.coeffs)
        if ii.size == 0:
            raise TruncationError("normalized v vanishes to the guaranteed order")
        values = m * ii + q * jj
        rho = int(values.min())
        if rho >= n * min(m, q):
            raise TruncationError("leading value not certified within the guarantee")
        beta1 = int(jj[values == rho].min())
        if beta1 <= 0:
            raise ConsistencyError("leading terms of the normalized v must involve y")
        sub = substitute_monomial(v, step, a, cap)
        if rho >= sub.order:
            raise TruncationError(f"leading x1-order {rho} beyond substitution guarantee {sub.order}")
        if sub.x_order() != rho:
            raise ConsistencyError(f"substituted v has x1-order {sub.x_order()}, expected {rho}")
        V = sub.divide_x_power(rho)
        A, B = m, rho
        U = y_plus_alpha_power(F, a, step.a_cof, V.order)
    else:
        if not _is_exactly(v, 0, 1):
            u = compose_y(u, revert_y(v))
        sub = substitute_monomial(u, step, a, cap)
        A = sub.x_order()
        if A != p * m:
            raise ConsistencyError(f"substituted u has x1-order {A}, expected {p * m}")
        U = sub.divide_x_power(A)
        B = q
        V = y_plus_alpha_power(F, a, step.b_cof, U.order)
        rho = A
    if not V.is_unit():
        raise NonUnitLambdaError("the cofactor of the leading x1-power is not a unit")
    if not U.is_unit():
        raise ConsistencyError("cofactor of u is not a unit")

    g = gcd(A, B)
    mbar, qbar = A // g, B // g
    c_exp, d_exp = _coprime_solution(mbar, qbar)
    k = min(U.order, V.order)
    U, V = U.truncate(k), V.truncate(k)
    U_inv, V_inv = invert_unit(U), invert_unit(V)
    G = U.pow(d_exp) * V_inv.pow(c_exp)
    W = U_inv.pow(qbar) * V.pow(mbar)
    beta = W.constant_term
    u1 = G.shift(g)
    v1 = W - TruncSeries.constant(F, W.order, beta)
    germ1 = MapGerm(u1, v1)
    kind1 = classify_type(germ1)
    c1, principal1 = jacobian_exponent(germ1)
    if not principal1:
        raise ConsistencyError("new Jacobian is not a unit times a power of x1")
    lhs = g * (mbar + qbar - 1) + c1
    rhs = m * cbar + m + q - 1
    if lhs != rhs:
        raise ConsistencyError(f"chain rule fails: {lhs} != {rhs}")
    return OracleResult(germ1, kind1, c1, g, mbar, qbar, beta, rho, lhs, rhs)


def galois_difference(F: FieldSpec, e: int, j: int) -> tuple[Fraction, bool]:
    """Value of sigma_j(y) - y for y = x^e * Theta, sigma_j(Theta) = Theta + j.

    The difference is j * x^e, so its value is e (in units of the value of
    x) whenever j is nonzero mod p; it is compared with c/(p-1) for the
    Jacobian exponent c of the seed germ with exponent e.
    """
    if e < 1:
        raise DomainError("exponent must be >= 1")
    p = F.p
    if not 1 <= j <= p - 1:
        raise DomainError(f"j must lie in [1, {p - 1}]")
    order = e * (p - 1) + p + 2
    x_e = TruncSeries.monomial(F, order, e, 0)
    # sigma_j(x^e Theta) - x^e Theta = x^e * j
    diff = x_e.scale(F.from_int(j))
    value = Fraction(diff.x_order())
    c, principal = jacobian_exponent(seed_artin_schreier(F, e, order))
    return value, principal and value == Fraction(c, p - 1)


@dataclass(frozen=True)
class MonomialVerdict:
    outcome: str  # "yes", "no" or "unknown"
    detail: str
    witness: Optional[dict] = None


def _direct_witness(u: TruncSeries, v: TruncSeries) -> Optional[int]:
    """a when u = x^a * unit and (x, v) are regular parameters."""
    a = _unit_cofactor_exponent(u)
    if a is None or a == 0:
        return None
    if v.order < 2 or v.coeff(0, 1) == 0:
        return None
    return a


def detect_strong_monomial(
    germ: MapGerm,
    search_bound: int,
    weights: Optional[tuple[Fraction, Fraction]] = None,
) -> MonomialVerdict:
    """Look for coordinates (z, w) with u = unit * z^a and v = w.

    A "yes" always comes with an explicit, verified change of coordinates.
    A "no" is only returned for the stable shape u = unit * x^p,
    v = y^p tau + x Omega whose leading value is that of y^p under the
    supplied weights for (x, y).
    """
    F = germ.field
    p = F.p
    u, v = germ.u, germ.v

    def verify(uu: TruncSeries, vv: TruncSeries, a: int) -> bool:
        # (x, vv) are parameters and uu / x^a is a unit
        jac = vv.dy()
        unit = uu.divide_x_power(a)
        return jac.constant_term != 0 and unit.is_unit()

    for label, (uu, vv) in (("identity", (u, v)), ("swap", (v, u))):
        a = _direct_witness(uu, vv)
        if a is not None and verify(uu, vv, a):
            return MonomialVerdict("yes", f"{label}: z = x, w = second parameter, exponent {a}",
                                   {"change": label, "z": "x", "w": "v", "a": a})

    a_u = _unit_cofactor_exponent(u)
    if a_u == p and germ.cached_b == 0 and germ.cached_d == p and weights is not None:
        wx, wy = Fraction(weights[0]), Fraction(weights[1])
        ii, jj = np.nonzero(v.coeffs[1:])
        if ii.size:
            lead = min((i + 1) * wx + j * wy for i, j in zip(ii.tolist(), jj.tolist()))
            if p * wy < lead:
                return MonomialVerdict(
                    "no",
                    f"stable shape: u = unit*x^{p}, v = y^{p}*tau + x*Omega, "
                    f"value(y^{p}) = {p * wy} < {lead}; the leading form is a p-th power "
                    "and stays inseparable under every coordinate change",
                )

    # bounded search over shears v - c * u^k and u - c * v^k
    for k in range(1, search_bound + 1):
        for c in range(1, min(F.order, search_bound + 1)):
            for label, (uu, vv) in (("shear_v", (u, v - u.pow(k).scale(c))),
                                    ("shear_u", (v, u - v.pow(k).scale(c)))):
                a = _direct_witness(uu, vv)
                if a is not None and verify(uu, vv, a):
                    return MonomialVerdict("yes", f"{label} with k={k}, c={c}",
                                           {"change": label, "k": k, "c": c, "a": a})
    return MonomialVerdict("unknown", f"no witness with entries <= {search_bound}")


def random_oracle_germ(F: FieldSpec, kind: str, exponent: int, order: int,
                       rng: np.random.Generator, noise: int = 4) -> MapGerm:
    """A random prepared germ of type T1 (Jacobian exponent `exponent`) or
    T2 (u = lam x^p (1 + x^k + ...), p not dividing k = `exponent`)."""
    p = F.p

    def nz() -> int:
        return int(rng.integers(1, F.order))

    if kind == GermType.T1.value:
        c = exponent
        terms = {(0, p): nz(), (c, 1): nz()}
        for _ in range(noise):
            choice = rng.integers(3)
            if choice == 0:
                i, j = int(rng.integers(1, order)), 0
            elif choice == 1:
                i, j = int(rng.integers(1, order)), p * int(rng.integers(1, 3))
            else:
                i, j = int(rng.integers(c + 1, c + 4)), int(rng.integers(0, 4))
            if i + j < order and (i, j) not in terms:
                terms[(i, j)] = nz()
        v = TruncSeries.from_terms(F, order, terms)
        u = TruncSeries.from_terms(F, order, {(1, 0): nz()})
        return MapGerm(u, v)
    if kind == GermType.T2.value:
        k = exponent
        if k % p == 0:
            raise DomainError("exponent must be prime to p")
        lam = nz()
        terms = {(p, 0): lam, (p + k, 0): F.mul(lam, nz())}
        for _ in range(noise):
            i, j = p + int(rng.integers(k + 1, k + 4)), int(rng.integers(0, 3))
            if i + j < order:
                terms[(i, j)] = nz()
        u = TruncSeries.from_terms(F, order, terms)
        vterms = {(0, 1): nz()}
        for _ in range(noise):
            i, j = int(rng.integers(1, 5)), int(rng.integers(0, 3))
            vterms[(i, j)] = nz()
        v = TruncSeries.from_terms(F, order, vterms)
        return MapGerm(u, v)
    raise DomainError(f"unsupported germ kind {kind!r}")

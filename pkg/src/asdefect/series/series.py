"""Truncated bivariate power series over F_{p^s}.

A series with guaranteed order N knows every coefficient of x^i y^j with
i + j < N and nothing beyond.  Storage is a dense N x N array of field
indices with the upper triangle (i + j >= N) kept at zero.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Optional

import numpy as np

from ..engine import TransformStep
from ..errors import DomainError, FieldMismatchError, NotAUnitError, TruncationError
from . import _kernels
from .field import FieldSpec

_MASKS: dict[int, np.ndarray] = {}


def _outside(n: int) -> np.ndarray:
    mask = _MASKS.get(n)
    if mask is None:
        idx = np.arange(n)
        mask = idx[:, None] + idx[None, :] >= n
        mask.setflags(write=False)
        _MASKS[n] = mask
    return mask


class TruncSeries:
    __slots__ = ("field", "order", "coeffs")

    def __init__(self, field: FieldSpec, order: int, coeffs: np.ndarray):
        if order < 1:
            raise DomainError("guaranteed order must be positive")
        arr = np.zeros((order, order), dtype=np.uint16)
        r, c = min(order, coeffs.shape[0]), min(order, coeffs.shape[1])
        arr[:r, :c] = coeffs[:r, :c]
        arr[_outside(order)] = 0
        arr.setflags(write=False)
        self.field = field
        self.order = order
        self.coeffs = arr

    # construction -----------------------------------------------------------

    @classmethod
    def zero(cls, field: FieldSpec, order: int) -> "TruncSeries":
        return cls(field, order, np.zeros((order, order), dtype=np.uint16))

    @classmethod
    def constant(cls, field: FieldSpec, order: int, value: int) -> "TruncSeries":
        return cls.from_terms(field, order, {(0, 0): value})

    @classmethod
    def one(cls, field: FieldSpec, order: int) -> "TruncSeries":
        return cls.constant(field, order, 1)

    @classmethod
    def monomial(cls, field: FieldSpec, order: int, i: int, j: int, value: int = 1) -> "TruncSeries":
        return cls.from_terms(field, order, {(i, j): value})

    @classmethod
    def x(cls, field: FieldSpec, order: int) -> "TruncSeries":
        return cls.monomial(field, order, 1, 0)

    @classmethod
    def y(cls, field: FieldSpec, order: int) -> "TruncSeries":
        return cls.monomial(field, order, 0, 1)

    @classmethod
    def from_terms(cls, field: FieldSpec, order: int, terms: Mapping[tuple[int, int], int]) -> "TruncSeries":
        """Build from {(i, j): element}; terms of total degree >= order are dropped."""
        arr = np.zeros((order, order), dtype=np.uint16)
        for (i, j), c in terms.items():
            if i < 0 or j < 0:
                raise DomainError("negative exponent")
            if not 0 <= c < field.order:
                raise DomainError(f"{c} is not an element of F_{field.order}")
            if i + j < order:
                arr[i, j] = field.add_t[arr[i, j], c]
        return cls(field, order, arr)

    @classmethod
    def from_int_terms(cls, field: FieldSpec, order: int, terms: Mapping[tuple[int, int], int]) -> "TruncSeries":
        """Like from_terms with integer coefficients read in the prime field."""
        return cls.from_terms(field, order, {k: v % field.p for k, v in terms.items()})

    # inspection -------------------------------------------------------------

    def terms(self) -> dict[tuple[int, int], int]:
        ii, jj = np.nonzero(self.coeffs)
        return {(int(i), int(j)): int(self.coeffs[i, j]) for i, j in zip(ii, jj)}

    def coeff(self, i: int, j: int) -> int:
        if i + j >= self.order:
            raise TruncationError(f"coefficient of x^{i} y^{j} is beyond order {self.order}")
        return int(self.coeffs[i, j])

    def is_zero(self) -> bool:
        return not self.coeffs.any()

    @property
    def constant_term(self) -> int:
        return int(self.coeffs[0, 0])

    def is_unit(self) -> bool:
        return self.constant_term != 0

    def x_order(self) -> int:
        """Largest k with x^k dividing the series, within the guarantee."""
        rows = np.nonzero(self.coeffs.any(axis=1))[0]
        if rows.size == 0:
            raise TruncationError("series vanishes to its guaranteed order")
        return int(rows[0])

    def y_order_at_x0(self) -> int:
        """Order in y of f(0, y)."""
        cols = np.nonzero(self.coeffs[0])[0]
        if cols.size == 0:
            raise TruncationError("f(0, y) vanishes to the guaranteed order")
        return int(cols[0])

    def total_order(self) -> int:
        ii, jj = np.nonzero(self.coeffs)
        if ii.size == 0:
            raise TruncationError("series vanishes to its guaranteed order")
        return int((ii + jj).min())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TruncSeries):
            return NotImplemented
        if self.field != other.field:
            return False
        n = min(self.order, other.order)
        return bool(np.array_equal(self.coeffs[:n, :n], other.coeffs[:n, :n]))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        terms = sorted(self.terms().items(), key=lambda t: (t[0][0] + t[0][1], t[0]))
        body = " + ".join(f"{c}*x^{i}y^{j}" for (i, j), c in terms[:8]) or "0"
        if len(terms) > 8:
            body += " + ..."
        return f"TruncSeries(F_{self.field.order}, N={self.order}: {body})"

    # arithmetic -------------------------------------------------------------

    def _check(self, other: "TruncSeries") -> int:
        if self.field != other.field:
            raise FieldMismatchError(f"F_{self.field.order} vs F_{other.field.order}")
        return min(self.order, other.order)

    def truncate(self, order: int) -> "TruncSeries":
        if order > self.order:
            raise TruncationError(f"cannot raise the guarantee from {self.order} to {order}")
        return TruncSeries(self.field, order, self.coeffs)

    def __add__(self, other: "TruncSeries") -> "TruncSeries":
        n = self._check(other)
        return TruncSeries(self.field, n, self.field.add_t[self.coeffs[:n, :n], other.coeffs[:n, :n]])

    def __neg__(self) -> "TruncSeries":
        return TruncSeries(self.field, self.order, self.field.neg_t[self.coeffs])

    def __sub__(self, other: "TruncSeries") -> "TruncSeries":
        return self + (-other)

    def __mul__(self, other: "TruncSeries") -> "TruncSeries":
        n = self._check(other)
        F = self.field
        return TruncSeries(F, n, _kernels.mul_dense(self.coeffs, other.coeffs, n, F.add_t, F.mul_t))

    def scale(self, c: int) -> "TruncSeries":
        return TruncSeries(self.field, self.order, self.field.mul_t[c][self.coeffs])

    def shift(self, i: int, j: int = 0) -> "TruncSeries":
        """Multiply by x^i y^j; the guarantee grows by i + j."""
        n = self.order + i + j
        arr = np.zeros((n, n), dtype=np.uint16)
        arr[i:i + self.order, j:j + self.order] = self.coeffs
        return TruncSeries(self.field, n, arr)

    def divide_x_power(self, k: int) -> "TruncSeries":
        """Exact division by x^k; fails if a known coefficient would be lost."""
        if k == 0:
            return self
        if k >= self.order:
            raise TruncationError(f"dividing by x^{k} leaves nothing of order {self.order}")
        if self.coeffs[:k].any():
            raise DomainError(f"series is not divisible by x^{k}")
        return TruncSeries(self.field, self.order - k, self.coeffs[k:, :])

    def pow(self, k: int) -> "TruncSeries":
        if k < 0:
            return invert_unit(self).pow(-k)
        result = TruncSeries.one(self.field, self.order)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def dx(self) -> "TruncSeries":
        """Partial derivative in x; the guarantee drops by one."""
        F, n = self.field, self.order
        if n == 1:
            raise TruncationError("derivative of an order-1 series is unknown")
        factors = (np.arange(1, n) % F.p).astype(np.uint16)
        arr = F.mul_t[factors[:, None], self.coeffs[1:, :]]
        return TruncSeries(F, n - 1, arr)

    def dy(self) -> "TruncSeries":
        F, n = self.field, self.order
        if n == 1:
            raise TruncationError("derivative of an order-1 series is unknown")
        factors = (np.arange(1, n) % F.p).astype(np.uint16)
        arr = F.mul_t[factors[None, :], self.coeffs[:, 1:]]
        return TruncSeries(F, n - 1, arr)

    def row(self, i: int) -> "TruncSeries":
        """The coefficient of x^i, as a series in y alone (with guarantee N - i)."""
        n = self.order - i
        arr = np.zeros((n, n), dtype=np.uint16)
        arr[0, :] = self.coeffs[i, :n]
        return TruncSeries(self.field, n, arr)

    def col(self, j: int) -> "TruncSeries":
        n = self.order - j
        arr = np.zeros((n, n), dtype=np.uint16)
        arr[:, 0] = self.coeffs[:n, j]
        return TruncSeries(self.field, n, arr)


def series_arith(op: str, f: TruncSeries, g: TruncSeries) -> TruncSeries:
    if op == "add":
        return f + g
    if op == "mul":
        return f * g
    if op == "sub":
        return f - g
    raise DomainError(f"unknown operation {op!r}")


def invert_unit(f: TruncSeries) -> TruncSeries:
    """Multiplicative inverse by Newton iteration g <- g(2 - fg)."""
    if not f.is_unit():
        raise NotAUnitError("series has zero constant term")
    F, n = f.field, f.order
    g = TruncSeries.constant(F, 1, F.inv(f.constant_term))
    prec = 1
    two = 2 % F.p
    while prec < n:
        prec = min(2 * prec, n)
        fp = f.truncate(prec)
        gp = TruncSeries(F, prec, g.coeffs)
        fg = fp * gp
        corr = TruncSeries.constant(F, prec, two) - fg
        g = gp * corr
    return g


def compose_x(f: TruncSeries, X: TruncSeries) -> TruncSeries:
    """f(X(x, y), y) for X without constant term."""
    if X.constant_term != 0:
        raise DomainError("substituted series must vanish at the origin")
    n = min(f.order, X.order)
    F = f.field
    X = X.truncate(n)
    acc = TruncSeries.zero(F, n)
    for i in range(n - 1, -1, -1):
        acc = acc * X + _embed(f.row(i), n)
    return acc


def compose_y(f: TruncSeries, Y: TruncSeries) -> TruncSeries:
    """f(x, Y(x, y)) for Y without constant term."""
    if Y.constant_term != 0:
        raise DomainError("substituted series must vanish at the origin")
    n = min(f.order, Y.order)
    F = f.field
    Y = Y.truncate(n)
    acc = TruncSeries.zero(F, n)
    for j in range(n - 1, -1, -1):
        acc = acc * Y + _embed(f.col(j), n)
    return acc


def _embed(g: TruncSeries, n: int) -> TruncSeries:
    """Re-wrap a row/column series at order n (its own guarantee is n - k, but
    the Horner step multiplies it into a term of order >= k)."""
    arr = np.zeros((n, n), dtype=np.uint16)
    k = min(n, g.order)
    arr[:k, :k] = g.coeffs[:k, :k]
    return TruncSeries(g.field, n, arr)


def _newton_revert(equation, derivative, start: TruncSeries, n: int) -> TruncSeries:
    Z = start
    prec = 1
    while prec < n:
        prec = min(2 * prec, n)
        Zp = Z.truncate(prec) if Z.order >= prec else TruncSeries(Z.field, prec, Z.coeffs)
        resid = equation(Zp, prec)
        deriv = derivative(Zp, prec)
        Z = Zp - resid * invert_unit(deriv)
    return Z


def revert_x(u: TruncSeries) -> TruncSeries:
    """The X(s, y) with u(X, y) = s, for u = x * unit.

    The result is written in the variables (s, y) with s in the first slot.
    """
    F, n = u.field, u.order
    if u.constant_term != 0 or u.coeff(1, 0) == 0 or u.coeffs[0].any():
        raise DomainError("x-reversion needs u = x * unit")
    ux = u.dx()
    s = TruncSeries.x(F, n)

    def eq(Z: TruncSeries, prec: int) -> TruncSeries:
        return compose_x(u.truncate(prec), Z) - s.truncate(prec)

    def der(Z: TruncSeries, prec: int) -> TruncSeries:
        # u_x loses one order; Newton only needs the derivative to prec - 1
        d = compose_x(ux.truncate(min(prec, ux.order)), Z.truncate(min(prec, ux.order)))
        return TruncSeries(F, prec, d.coeffs) if d.order < prec else d

    start = TruncSeries.x(F, 1)
    return _newton_revert(eq, der, start, n)


def revert_y(v: TruncSeries) -> TruncSeries:
    """The Y(x, t) with v(x, Y) = t, for v with v_y(0,0) != 0 and v(0,0) = 0."""
    F, n = v.field, v.order
    if v.constant_term != 0 or v.coeff(0, 1) == 0:
        raise DomainError("y-reversion needs v(0,0) = 0 and v_y(0,0) != 0")
    vy = v.dy()
    t = TruncSeries.y(F, n)

    def eq(Z: TruncSeries, prec: int) -> TruncSeries:
        return compose_y(v.truncate(prec), Z) - t.truncate(prec)

    def der(Z: TruncSeries, prec: int) -> TruncSeries:
        d = compose_y(vy.truncate(min(prec, vy.order)), Z.truncate(min(prec, vy.order)))
        return TruncSeries(F, prec, d.coeffs) if d.order < prec else d

    start = TruncSeries.y(F, 1)
    return _newton_revert(eq, der, start, n)


def _y_plus_alpha_powers(F: FieldSpec, alpha: int, kmax: int, width: int) -> np.ndarray:
    """Row k holds the coefficients of (y + alpha)^k truncated to y-degree < width."""
    powers = np.zeros((kmax + 1, width), dtype=np.uint16)
    powers[0, 0] = 1
    scale = F.mul_t[alpha]
    for k in range(1, kmax + 1):
        prev = powers[k - 1]
        nxt = scale[prev]
        nxt[1:] = F.add_t[nxt[1:], prev[:-1]]
        powers[k] = nxt
    return powers


def resolve_alpha(F: FieldSpec, label: int) -> int:
    """Map a nonzero residue-constant label to a nonzero field element."""
    element = label % F.order
    if element == 0:
        raise DomainError(f"residue label {label} is zero in F_{F.order}")
    return element


def substitute_monomial(
    f: TruncSeries,
    step: TransformStep,
    alpha: Optional[int] = None,
    order: Optional[int] = None,
) -> TruncSeries:
    """f(x1^m (y1+a)^{a'}, x1^q (y1+a)^{b'}) with the guarantee N*min(m, q).

    `order` caps the output guarantee (it may only lower it).
    """
    F = f.field
    a = resolve_alpha(F, step.alpha_label) if alpha is None else alpha
    if a == 0:
        raise DomainError("residue constant must be nonzero")
    n_out = f.order * min(step.m, step.q)
    if order is not None:
        n_out = min(n_out, order)
    ii, jj = np.nonzero(f.coeffs)
    keep = step.m * ii + step.q * jj < n_out
    kmax = int((step.a_cof * ii[keep] + step.b_cof * jj[keep]).max()) if keep.any() else 0
    powers = _y_plus_alpha_powers(F, a, kmax, n_out)
    arr = _kernels.subst_dense(
        f.coeffs, f.order, step.m, step.q, step.a_cof, step.b_cof,
        powers, n_out, F.add_t, F.mul_t,
    )
    return TruncSeries(F, n_out, arr)


def y_plus_alpha_power(F: FieldSpec, alpha: int, k: int, order: int) -> TruncSeries:
    arr = np.zeros((order, order), dtype=np.uint16)
    arr[0, :] = _y_plus_alpha_powers(F, alpha, k, order)[k]
    return TruncSeries(F, order, arr)


def to_json(f: TruncSeries) -> dict:
    F = f.field
    return {
        "field": {"p": F.p, "s": F.s, "modulus": list(F.modulus)},
        "guaranteed_order": f.order,
        "coeffs": [[i, j, F.digits(c)] for (i, j), c in sorted(f.terms().items())],
    }


def from_json(doc: dict) -> TruncSeries:
    from .field import make_field

    fd = doc["field"]
    F = make_field(int(fd["p"]), int(fd["s"]))
    if "modulus" in fd and tuple(fd["modulus"]) != F.modulus:
        raise DomainError(f"unsupported defining polynomial {fd['modulus']}")
    terms = {(int(i), int(j)): F.from_digits([int(d) for d in vec]) for i, j, vec in doc["coeffs"]}
    return TruncSeries.from_terms(F, int(doc["guaranteed_order"]), terms)


def random_series(F: FieldSpec, order: int, rng: np.random.Generator, density: float = 0.5,
                  support: Optional[Iterable[tuple[int, int]]] = None) -> TruncSeries:
    arr = np.zeros((order, order), dtype=np.uint16)
    cells = support if support is not None else [
        (i, j) for i in range(order) for j in range(order - i)
    ]
    for i, j in cells:
        if i + j < order and rng.random() < density:
            arr[i, j] = rng.integers(1, F.order)
    return TruncSeries(F, order, arr)

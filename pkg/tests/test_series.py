import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from asdefect.engine import TransformStep
from asdefect.errors import DomainError, FieldMismatchError, NotAUnitError, TruncationError
from asdefect.series import _kernels
from asdefect.series.field import first_irreducible, make_field
from asdefect.series.series import (
    TruncSeries,
    compose_x,
    compose_y,
    from_json,
    invert_unit,
    random_series,
    revert_x,
    revert_y,
    series_arith,
    substitute_monomial,
    to_json,
    y_plus_alpha_power,
)

FIELDS = [(2, 4), (3, 4), (5, 4), (2, 1), (7, 3)]


# --- field: checked against schoolbook polynomial arithmetic ---------------------

def poly_mul_mod(a, b, mod, p):
    prod = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            prod[i + j] = (prod[i + j] + x * y) % p
    n = len(mod) - 1
    for k in range(len(prod) - 1, n - 1, -1):
        c = prod[k]
        if c:
            for i in range(n + 1):
                prod[k - n + i] = (prod[k - n + i] - c * mod[i]) % p
    return (prod[:n] + [0] * n)[:n]


@pytest.mark.parametrize("p,s", FIELDS)
def test_field_tables_match_polynomials(p, s):
    F = make_field(p, s)
    rng = np.random.default_rng(p * 100 + s)
    for _ in range(300):
        a, b = (int(x) for x in rng.integers(0, F.order, 2))
        da, db = F.digits(a), F.digits(b)
        assert F.digits(F.add(a, b)) == [(x + y) % p for x, y in zip(da, db)]
        assert F.digits(F.mul(a, b)) == poly_mul_mod(da, db, list(F.modulus), p)
        if a:
            assert F.mul(a, F.inv(a)) == 1
        assert F.add(a, F.neg(a)) == 0
    assert F.pow(3 % F.order or 1, F.order - 1) == 1
    assert len(F.modulus) == s + 1 and F.modulus[-1] == 1


def test_first_irreducible_known():
    assert first_irreducible(2, 4) == (1, 1, 0, 0, 1)  # t^4 + t + 1
    assert first_irreducible(3, 2) == (1, 0, 1)        # t^2 + 1
    with pytest.raises(DomainError):
        make_field(4, 1)
    with pytest.raises(DomainError):
        make_field(7, 4)


def test_field_multiplicative_group_is_cyclic_of_right_order():
    F = make_field(2, 4)
    orders = set()
    for a in range(1, F.order):
        k, x = 1, a
        while x != 1:
            x, k = F.mul(x, a), k + 1
        orders.add(k)
    assert max(orders) == F.order - 1


# --- series: reference implementation on term dictionaries -----------------------

def ref_mul(f, g):
    F, n = f.field, min(f.order, g.order)
    out = {}
    for (i1, j1), a in f.terms().items():
        for (i2, j2), b in g.terms().items():
            if i1 + i2 + j1 + j2 < n:
                key = (i1 + i2, j1 + j2)
                out[key] = F.add(out.get(key, 0), F.mul(a, b))
    return {k: v for k, v in out.items() if v}


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    if request.param == "numba" and not _kernels.HAVE_NUMBA:
        pytest.skip("numba unavailable")
    with _kernels.use_backend(request.param):
        yield request.param


def test_examples(backend):
    F = make_field(2)
    x, y = TruncSeries.x(F, 6), TruncSeries.y(F, 6)
    assert (x + y) * (x + y) == x * x + y * y
    geo = TruncSeries.from_terms(F, 5, {(k, 0): 1 for k in range(5)})
    prod = (TruncSeries.one(F, 5) + TruncSeries.x(F, 5)) * geo
    # (1+x)(1+x+x^2+x^3+x^4) = 1 + x^5 -> 1 below order 5 in characteristic 2
    assert prod.terms() == {(0, 0): 1}
    f = random_series(F, 7, np.random.default_rng(0))
    assert f + TruncSeries.zero(F, 7) == f


def test_inverse_examples(backend):
    F2, F3 = make_field(2), make_field(3)
    one = TruncSeries.one(F2, 4)
    assert invert_unit(one) == one
    g = invert_unit(TruncSeries.from_int_terms(F2, 4, {(0, 0): 1, (1, 0): -1}))
    assert g.terms() == {(k, 0): 1 for k in range(4)}
    h = invert_unit(TruncSeries.from_int_terms(F3, 5, {(0, 0): 1, (2, 0): -1}))
    assert h.terms() == {(0, 0): 1, (2, 0): 1, (4, 0): 1}
    with pytest.raises(NotAUnitError):
        invert_unit(TruncSeries.x(F2, 4))


@pytest.mark.parametrize("p", [2, 3, 5])
def test_mul_matches_reference(p, backend):
    F = make_field(p)
    rng = np.random.default_rng(p)
    for _ in range(10):
        n = int(rng.integers(1, 12))
        f, g = random_series(F, n, rng), random_series(F, n, rng, density=0.3)
        assert (f * g).terms() == ref_mul(f, g)


def test_inverse_round_trip_500_units():
    rng = np.random.default_rng(500)
    for k in range(500):
        p = (2, 3, 5)[k % 3]
        F = make_field(p)
        n = int(rng.integers(1, 16))
        f = random_series(F, n, rng)
        if f.constant_term == 0:
            f = f + TruncSeries.constant(F, n, int(rng.integers(1, F.order)))
        assert f * invert_unit(f) == TruncSeries.one(F, n)


def test_backends_agree():
    if not _kernels.HAVE_NUMBA:
        pytest.skip("numba unavailable")
    F = make_field(3)
    rng = np.random.default_rng(11)
    f, g = random_series(F, 20, rng), random_series(F, 20, rng)
    step = TransformStep.make(3, 2, 5)
    out = {}
    for name in ("numba", "numpy"):
        with _kernels.use_backend(name):
            out[name] = ((f * g).coeffs, substitute_monomial(f, step).coeffs)
    assert all(np.array_equal(a, b) for a, b in zip(out["numba"], out["numpy"]))


def test_field_and_truncation_errors():
    F2, F3 = make_field(2), make_field(3)
    with pytest.raises(FieldMismatchError):
        TruncSeries.x(F2, 4) + TruncSeries.x(F3, 4)
    f = TruncSeries.x(F2, 4)
    with pytest.raises(TruncationError):
        f.coeff(3, 1)
    with pytest.raises(TruncationError):
        f.truncate(5)
    assert (f + TruncSeries.y(F2, 3)).order == 3
    with pytest.raises(DomainError):
        series_arith("div", f, f)


def test_negative_power_and_derivatives():
    F = make_field(3)
    u = TruncSeries.from_int_terms(F, 8, {(0, 0): 1, (1, 0): 1, (0, 2): 2})
    assert u.pow(-2) * u.pow(2) == TruncSeries.one(F, 8)
    x, y = TruncSeries.x(F, 8), TruncSeries.y(F, 8)
    f = x.pow(3) * y + x * y.pow(2)
    # d/dx: 3x^2 y + y^2 = y^2 in characteristic 3; d/dy: x^3 + 2xy
    assert f.dx().terms() == {(0, 2): 1}
    assert f.dy().terms() == {(3, 0): 1, (1, 1): 2}


# --- substitution ---------------------------------------------------------------------

def test_substitution_examples():
    F = make_field(2)
    x = TruncSeries.x(F, 6)
    assert substitute_monomial(x, TransformStep(1, 1, 0, 1)).terms() == {(1, 0): 1}
    y = TruncSeries.y(F, 6)
    f = y * y - x * y
    step = TransformStep.make(3, 1)
    assert (step.a_cof, step.b_cof) == (2, 1)
    got = substitute_monomial(f, step)
    n = got.order
    want = (TruncSeries.monomial(F, n, 2, 0) * y_plus_alpha_power(F, 1, 2, n)
            + TruncSeries.monomial(F, n, 4, 0) * y_plus_alpha_power(F, 1, 3, n))
    assert got == want
    step2 = TransformStep.make(2, 3)
    assert (step2.a_cof, step2.b_cof) == (1, 2)
    got2 = substitute_monomial(x * x, step2)
    assert got2 == TruncSeries.monomial(F, got2.order, 4, 0) * y_plus_alpha_power(F, 1, 2, got2.order)


def test_substitution_guarantee_and_alpha():
    F = make_field(3)
    f = random_series(F, 5, np.random.default_rng(1))
    assert substitute_monomial(f, TransformStep.make(2, 3)).order == 10
    assert substitute_monomial(f, TransformStep.make(2, 3), order=7).order == 7
    with pytest.raises(DomainError):
        substitute_monomial(f, TransformStep.make(2, 3, 81))  # label 81 = 0 in F_81


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([2, 3, 5]),
       st.integers(1, 5), st.integers(1, 5))
def test_substitution_is_multiplicative(seed, p, m, q):
    from math import gcd
    if gcd(m, q) != 1:
        return
    F = make_field(p)
    rng = np.random.default_rng(seed)
    f, g = random_series(F, 6, rng), random_series(F, 6, rng)
    step = TransformStep.make(m, q, int(rng.integers(1, F.order)))
    lhs = substitute_monomial(f * g, step)
    rhs = substitute_monomial(f, step) * substitute_monomial(g, step)
    assert lhs == rhs


# --- composition and reversion ----------------------------------------------------------

def test_reversion_round_trips():
    F = make_field(3)
    rng = np.random.default_rng(7)
    for _ in range(5):
        n = 9
        u = TruncSeries.x(F, n) * (TruncSeries.one(F, n) + random_series(F, n, rng).shift(1).truncate(n))
        X = revert_x(u)
        assert compose_x(u, X) == TruncSeries.x(F, n)
        v = TruncSeries.y(F, n).scale(2) + random_series(F, n, rng, support=[(i, j) for i in range(1, n) for j in range(n)]) \
            + random_series(F, n, rng, support=[(0, j) for j in range(2, n)])
        Y = revert_y(v)
        assert compose_y(v, Y) == TruncSeries.y(F, n)


def test_json_round_trip():
    F = make_field(5)
    f = random_series(F, 6, np.random.default_rng(3))
    doc = to_json(f)
    assert doc["guaranteed_order"] == 6
    assert from_json(doc) == f
    bad = dict(doc, field={"p": 5, "s": 4, "modulus": [1, 1, 1, 1, 1]})
    with pytest.raises(DomainError):
        from_json(bad)


def test_env_flag_selects_numpy_backend():
    import os
    import subprocess
    import sys
    env = dict(os.environ, ASDEFECT_PURE_NUMPY="1")
    code = ("from asdefect.series import _kernels; from asdefect.tower import worked_example; "
            "print(_kernels.BACKEND, worked_example(2, 1)[0].describe())")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy dist = -14/15 (exact)"

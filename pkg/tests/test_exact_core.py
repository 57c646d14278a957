import itertools
import math
import cmath
import random

import pytest
from hypothesis import given, settings, strategies as st
from gmpy2 import mpq

from miop.exact_core import (
    ADDITIVE_X, ADDITIVE_Y, MULTIPLICATIVE_T, MULTIPLICATIVE_Z, CoordModel, EtaPoly,
    GaussScalar, I, LatticeFun, LatticeRat, MalformedRational, NonExactDivision,
    NotEtaPolynomial, PolyMatrix, StarUndefined, UnrepresentableShift, as_rational,
    eta_expand, exact_div, gs, lat_det, lat_shift, lat_star, rational_sqrt,
)

X = CoordModel(ADDITIVE_X)
Y = CoordModel(ADDITIVE_Y)
T = CoordModel(MULTIPLICATIVE_T, mpq(1, 2))
Z = CoordModel(MULTIPLICATIVE_Z, mpq(1, 2))


def poly(model, *cs, low=0):
    return LatticeFun({low + k: c for k, c in enumerate(cs)}, model)


def test_rational_parsing():
    assert as_rational("3/4") == mpq(3, 4)
    assert as_rational("-2") == -2
    with pytest.raises(MalformedRational):
        as_rational("1/0")
    with pytest.raises(MalformedRational):
        as_rational("abc")


def test_gauss_text_roundtrip():
    for g in [gs(0), GaussScalar("1/2", "-3"), GaussScalar(0, 1), GaussScalar("-7/3", "2/5")]:
        assert GaussScalar.from_text(g.to_text()) == g
    assert GaussScalar("1/2", "-3").to_text() == "1/2-3*i"


def test_gauss_field_ops():
    a = GaussScalar("1/2", "3")
    assert (a * a.conj()).im == 0
    assert a / a == 1
    assert a.conj().conj() == a
    assert I ** 2 == -1


def test_rational_sqrt():
    assert rational_sqrt(mpq(9, 4)) == mpq(3, 2)
    assert rational_sqrt(mpq(2)) is None


def test_shift_additive_binomial():
    x = LatticeFun.symbol(X)
    assert lat_shift(x * x, 1) == x * x + 2 * x + 1


def test_shift_multiplicative_t():
    t = LatticeFun.symbol(T)  # q = 1/4
    assert lat_shift(t, 1) == t * mpq(1, 4)


def test_shift_multiplicative_z_half_step():
    z = LatticeFun.symbol(Z)
    assert lat_shift(z, mpq(1, 2)) == z * 2
    # numeric oracle: exp(i(x + i*gamma/2)) with gamma = log q
    x0, q = 0.3, 0.25
    lhs = cmath.exp(1j * (x0 + 1j * math.log(q) / 2))
    assert abs(lhs - 2 * cmath.exp(1j * x0)) < 1e-12


def test_shift_additive_y_convention():
    y = LatticeFun.symbol(Y)
    assert lat_shift(y, 1) == y - 1


def test_unrepresentable_shift():
    with pytest.raises(UnrepresentableShift):
        lat_shift(LatticeFun.symbol(T), mpq(1, 3))


def test_star_examples():
    z = LatticeFun.symbol(Z)
    zinv = LatticeFun.monomial(-1, 1, Z)
    assert lat_star(z + zinv * I) == zinv - z * I
    y = LatticeFun.symbol(Y)
    assert lat_star(y * y) == y * y
    v1 = (y + 1) * (y + 2)
    assert lat_star(v1) == (1 - y) * (2 - y)
    with pytest.raises(StarUndefined):
        lat_star(LatticeFun.symbol(X))


def test_det_examples():
    x = LatticeFun.symbol(X)
    assert lat_det(PolyMatrix([[x]])) == x
    m = PolyMatrix([[x, x + 1], [x * x, (x + 1) * (x + 1)]])
    assert lat_det(m) == x * x + x
    assert lat_det([[x, x], [x + 3, x + 3]]).is_zero()


def test_eta_expand_examples():
    x = LatticeFun.symbol(X)
    eta_r = x * (x + 1)
    assert eta_expand(x * x + x, eta_r) == EtaPoly([0, 1])
    with pytest.raises(NotEtaPolynomial):
        eta_expand(x, eta_r)
    qr = CoordModel(MULTIPLICATIVE_T, mpq(1, 2))
    t = LatticeFun.symbol(qr)
    tinv = LatticeFun.monomial(-1, 1, qr)
    eta = (tinv - 1) * (1 - t * mpq(1, 2))
    assert eta_expand(eta + 3, eta) == EtaPoly([3, 1])


def test_exact_div_examples():
    x = LatticeFun.symbol(X)
    assert exact_div(x * x + x, x) == x + 1
    with pytest.raises(NonExactDivision):
        exact_div(x * x + 1, x)
    t = LatticeFun.symbol(T)
    tinv = LatticeFun.monomial(-1, 1, T)
    assert exact_div((1 - t) * (tinv + 2), tinv + 2) == 1 - t


def test_lattice_rat_equality():
    x = LatticeFun.symbol(X)
    a = LatticeRat(x * 2, x + 1)
    b = LatticeRat(x * x * 4 + x * 4, (x + 1) * (x + 1) * 2)
    assert a == b
    assert LatticeRat(x * x - 1, x - 1).to_fun() == x + 1


small = st.fractions(min_value=-9, max_value=9, max_denominator=9)


def laurent(model, low, high):
    return st.lists(small, min_size=1, max_size=high - low + 1).map(
        lambda cs: LatticeFun({low + k: as_rational(c) for k, c in enumerate(cs)}, model))


@settings(max_examples=40, deadline=None)
@given(laurent(X, 0, 4), small, small)
def test_shift_composition_additive(f, a, b):
    a, b = as_rational(a), as_rational(b)
    assert lat_shift(lat_shift(f, a), b) == lat_shift(f, a + b)


@settings(max_examples=40, deadline=None)
@given(laurent(Z, -3, 3), laurent(Z, -2, 2), st.integers(-4, 4), st.integers(-4, 4))
def test_shift_homomorphism_and_composition_z(f, g, a, b):
    a, b = mpq(a, 2), mpq(b, 2)
    assert lat_shift(f * g, a) == lat_shift(f, a) * lat_shift(g, a)
    assert lat_shift(lat_shift(f, a), b) == lat_shift(f, a + b)


@settings(max_examples=40, deadline=None)
@given(laurent(Y, 0, 4), laurent(Z, -3, 3))
def test_star_involution(f, g):
    f = f * GaussScalar(1, 2)
    assert lat_star(lat_star(f)) == f
    assert lat_star(lat_star(g)) == g


def brute_det(rows):
    n = len(rows)
    total = rows[0][0].zero()
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = rows[0][0].one()
        for r in range(n):
            term = term * rows[r][perm[r]]
        total = total + term if inv % 2 == 0 else total - term
    return total


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("seed", range(5))
def test_det_matches_permutation_expansion(n, seed):
    rng = random.Random(seed * 10 + n)
    rows = [[LatticeFun({e: mpq(rng.randint(-9, 9), rng.randint(1, 9)) for e in range(-2, 3)}, Z)
             for _ in range(n)] for _ in range(n)]
    assert lat_det(rows) == brute_det(rows)


ETA_COORDS = [
    ("x", X, lambda: LatticeFun.symbol(X)),
    ("1-t", T, lambda: 1 - LatticeFun.symbol(T)),
    ("x(x+d)", X, lambda: LatticeFun.symbol(X) * (LatticeFun.symbol(X) + mpq(1, 3))),
    ("qR", T, lambda: (LatticeFun.monomial(-1, 1, T) - 1) * (1 - LatticeFun.symbol(T) * mpq(2, 5))),
    ("x^2", Y, lambda: -LatticeFun.symbol(Y) * LatticeFun.symbol(Y)),
    ("cos", Z, lambda: (LatticeFun.symbol(Z) + LatticeFun.monomial(-1, 1, Z)) * mpq(1, 2)),
]


@pytest.mark.parametrize("name,model,mk", ETA_COORDS, ids=[c[0] for c in ETA_COORDS])
@settings(max_examples=15, deadline=None)
@given(st.lists(small, min_size=0, max_size=9))
def test_eta_expand_roundtrip(name, model, mk, cs):
    p = EtaPoly([as_rational(c) for c in cs])
    eta = mk()
    assert eta_expand(p.compose(eta), eta) == p


def test_star_matches_conjugation_on_unit_circle():
    # f*(z) equals conj-coefficients of f evaluated at 1/z
    f = LatticeFun({-1: GaussScalar(1, 2), 0: 3, 2: GaussScalar(0, -1)}, Z)
    zval = mpq(3, 2)
    lhs = lat_star(f).subs(zval)
    rhs = f.conj_coeffs().subs(1 / zval)
    assert lhs == rhs


def test_eta_poly_division():
    a = EtaPoly([1, 2, 1])
    assert a / EtaPoly([1, 1]) == EtaPoly([1, 1])
    with pytest.raises(NonExactDivision):
        a / EtaPoly([2, 1])

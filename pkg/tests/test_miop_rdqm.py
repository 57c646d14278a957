from fractions import Fraction

import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from miop import families as fam
from miop.exact_core import EtaPoly
from miop.families import make_family
from miop.miop_rdqm import METHODS, build_PDn_rdqm, build_Xi_rdqm, ell_D

from conftest import SPECS, RDQM_NAMES
from test_families import meixner_scalar

D_SETS = [[1], [2], [3], [1, 2], [1, 3], [2, 3], [1, 2, 3]]


def _det(rows):
    n = len(rows)
    if n == 1:
        return rows[0][0]
    return sum((-1) ** k * rows[0][k] * _det([r[:k] + r[k + 1:] for r in rows[1:]]) for k in range(n))


def meixner_xi_casoratian(D, x, beta, c):
    """Casoratian of the virtual polynomials P_v(x; beta, 1/c), normalized at x = 0."""
    def wc(y):
        return _det([[meixner_scalar(d, y + j, beta, 1 / c) for d in D] for j in range(len(D))])
    return wc(x) / wc(0)


def test_ell_D_examples():
    assert ell_D([1]) == 1
    assert ell_D([]) == 0
    assert ell_D([1, 3]) == 3


def test_meixner_single_seed_example():
    res = build_Xi_rdqm(SPECS["M"], [1])
    assert res.eta_poly == EtaPoly([1, mpq(1, 4)])


@pytest.mark.parametrize("D", D_SETS)
def test_meixner_xi_matches_hand_casoratian(D):
    beta, c = Fraction(2), Fraction(1, 2)
    res = build_Xi_rdqm(SPECS["M"], D)
    for x in range(4):
        assert res.fun.at(x).re == meixner_xi_casoratian(D, x, beta, c)


@settings(max_examples=15, deadline=None)
@given(beta=st.fractions(min_value=Fraction(1, 2), max_value=4),
       c=st.fractions(min_value=Fraction(1, 5), max_value=Fraction(4, 5)),
       D=st.sampled_from([[1], [2], [1, 2], [1, 3]]))
def test_meixner_xi_property(beta, c, D):
    spec = make_family("M", {"beta": str(beta), "c": str(c)})
    res = build_Xi_rdqm(spec, D, "caseB")
    for x in (0, 2):
        assert res.fun.at(x).re == meixner_xi_casoratian(D, x, beta, c)


def test_meixner_two_seeds_degree_and_normalization():
    res = build_Xi_rdqm(SPECS["M"], [1, 2])
    assert res.degree() == 2
    assert res.fun.at(0).re == 1


@pytest.mark.parametrize("name", RDQM_NAMES)
@pytest.mark.parametrize("D", D_SETS)
def test_methods_agree(name, D):
    spec = SPECS[name]
    xis = [build_Xi_rdqm(spec, D, m).fun for m in METHODS]
    assert xis[0] == xis[1] == xis[2]
    for n in range(5):
        ps = [build_PDn_rdqm(spec, D, n, m).fun for m in METHODS]
        assert ps[0] == ps[1] == ps[2], (D, n)


@pytest.mark.parametrize("name", RDQM_NAMES)
@pytest.mark.parametrize("D", [[1], [2, 3], [1, 2, 3]])
def test_normalization_degree_and_specialization(name, D):
    spec = SPECS[name]
    xi = build_Xi_rdqm(spec, D)
    assert xi.fun.at(0).re == 1
    assert xi.degree() == ell_D(D)
    for n in range(3):
        p = build_PDn_rdqm(spec, D, n)
        assert p.fun.at(0).re == 1
        assert p.degree() == ell_D(D) + n
    assert build_PDn_rdqm(spec, D, 0).fun == build_Xi_rdqm(spec.shift(1), D).fun


def test_empty_index_gives_classical(rdqm_spec):
    assert build_PDn_rdqm(rdqm_spec, [], 3).fun == fam.build_Pn(rdqm_spec, 3)


def test_poly_is_x_function_for_finite_families():
    res = build_Xi_rdqm(SPECS["R"], [1])
    assert res.poly == res.fun
    res = build_Xi_rdqm(SPECS["M"], [1])
    assert res.poly == res.eta_poly


def test_rejects_bad_input():
    spec = SPECS["M"]
    with pytest.raises(ValueError):
        build_Xi_rdqm(spec, [])
    with pytest.raises(ValueError):
        build_Xi_rdqm(spec, [1, 1])
    with pytest.raises(ValueError):
        build_Xi_rdqm(spec, [1], "singleA")
    with pytest.raises(ValueError):
        build_PDn_rdqm(SPECS["R"], [1], 6)
    with pytest.raises(ValueError):
        build_Xi_rdqm(SPECS["W"], [1])


def test_json_shape():
    out = build_PDn_rdqm(SPECS["M"], [1], 1, "caseA").to_json()
    assert out["family"] == "M" and out["n"] == 1 and out["method"] == "caseA"
    assert set(out["eta_poly"]) == {"0", "1", "2"}

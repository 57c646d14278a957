"""Multi-indexed Wilson and Askey-Wilson polynomials.

Five routes: the original determinant of shifted virtual-state columns, the
general case A and case B rewrites (forward/backward shift chains, mixed
twist types allowed), and the single-type case A and case B rewrites that
use the primed operators. Each route assembles a numerator determinant and
a denominator polynomial in x, divides exactly, and expands in eta(x).

Matrix entries are indexed by the determinant size S (S = M for Xi_D,
S = M + 1 for P_{D,n}); every entry formula depends on S only.
"""
from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass
from typing import Iterable

import sympy
from gmpy2 import mpq
from sympy.polys.polyfuncs import rational_interpolate

from .exact_core import (
    EtaPoly, LatticeFun, as_rational, eta_expand, gs, i_power, lat_det, lat_shift,
)
from . import families as fam
from .families import FamilySpec, TwistType
from .miop_rdqm import MiopResult

METHODS = ("original", "caseA", "caseB", "singleA", "singleB")
I_, II_ = TwistType.I, TwistType.II


@dataclass(frozen=True)
class TypedIndex:
    d: int
    t: TwistType

    def to_json(self) -> dict:
        return {"d": self.d, "type": self.t.value}


def parse_typed_index(D: Iterable) -> list[TypedIndex]:
    """Accept TypedIndex, (d, type) pairs, or {"d": .., "type": ..} dicts."""
    out = []
    for entry in D:
        if isinstance(entry, TypedIndex):
            item = entry
        elif isinstance(entry, dict):
            item = TypedIndex(int(entry["d"]), TwistType(entry["type"]))
        else:
            d, t = entry
            item = TypedIndex(int(d), TwistType(t))
        if item.t not in (I_, II_):
            raise ValueError("idQM indices carry type I or II")
        if item.d < 0:
            raise ValueError("multi-index entries must be non-negative")
        out.append(item)
    if len(set(out)) != len(out):
        raise ValueError("multi-index entries must be distinct")
    return out


def ell_D_idqm(D) -> int:
    D = parse_typed_index(D)
    M = len(D)
    MI = sum(1 for e in D if e.t is I_)
    return sum(e.d for e in D) - M * (M - 1) // 2 + 2 * MI * (M - MI)


# small helpers -------------------------------------------------------------------

def _other(t: TwistType) -> TwistType:
    return II_ if t is I_ else I_


def _U(spec: FamilySpec, k, t: TwistType) -> LatticeFun:
    """U^t(x; lambda + k delta)."""
    return fam.U_check(spec.shift(k), t)


def _S(spec: FamilySpec) -> LatticeFun:
    return fam.S_check(spec)


def _prod(items, start):
    out = start
    for it in items:
        out = out * it
    return out


def _half_power(root, value, twice_exp: int):
    """value**(twice_exp/2), using root = value**(1/2) when the exponent is odd."""
    if twice_exp % 2 == 0:
        return value ** (twice_exp // 2)
    return root ** twice_exp


def _counts(D: list[TypedIndex]) -> tuple[int, int]:
    MI = sum(1 for e in D if e.t is I_)
    return MI, len(D) - MI


def _f(spec, n):
    return fam.f_factor(spec, n) if n >= 0 else mpq(0)


def _b(spec, k):
    """b_k(spec) with b_k defined through B P_k(lambda+delta) = b_k P_{k+1}."""
    return fam.b_factor(spec, k + 1)


def _xi(spec, v, t):
    return fam.build_xi(spec, v, t)


def _P(spec, n):
    return fam.build_Pn(spec, n)


# original route ------------------------------------------------------------------

def _original(spec: FamilySpec, D: list[TypedIndex], n: int | None):
    M = len(D)
    MI, MII = _counts(D)
    S = M if n is None else M + 1
    rows = []
    for j in range(1, S + 1):
        step = mpq(S + 1, 2) - j
        row = [fam.r_idqm(spec, _other(e.t), j, S) * lat_shift(_xi(spec, e.d, e.t), step) for e in D]
        if n is not None:
            row.append(fam.r_idqm(spec, II_, j, S) * fam.r_idqm(spec, I_, j, S)
                       * lat_shift(_P(spec, n), step))
        rows.append(row)
    num = lat_det(rows)
    den = fam.phi_M_idqm(spec, S)
    if n is None:
        const = i_power(M * (M - 1) // 2) * spec.kappa_pow(-mpq(MI * MII * (M - 2), 2))
        for l in range(MI):
            den = den * _U(spec, 1 - M + 2 * l, II_) ** (MI - 1 - l)
        for l in range(MII):
            den = den * _U(spec, 1 - M + 2 * l, I_) ** (MII - 1 - l)
    else:
        const = i_power(M * (M + 1) // 2) * spec.kappa_pow(-mpq(MI * MII * (M + 2), 2))
        for l in range(MI):
            den = den * _U(spec, -M + 2 * l, II_) ** (MI - l)
        for l in range(MII):
            den = den * _U(spec, -M + 2 * l, I_) ** (MII - l)
    return num, den, gs(const)


# general case A --------------------------------------------------------------------

def _caseA_entry(spec, e: TypedIndex, j: int, S: int) -> LatticeFun:
    d, t = e.d, e.t
    if j <= (S + 1) // 2:
        c = mpq(1)
        for m in range(S - 2 * j + 1):
            c *= fam.f_tilde(spec.shift(m), d, t)
        U = _prod((_U(spec, S - 1 - 2 * l, t) for l in range(1, j)), spec.const(1))
        return U * _xi(spec.shift(S + 1 - 2 * j), d, t) * c
    k = 2 * j - S - 3
    c = fam.b_tilde(spec.shift(k), d, t)
    for m in range(k + 1):
        c *= fam.f_tilde(spec.shift(m), d, t)
    U = _prod((_U(spec, S - 1 - 2 * l, t) for l in range(1, S + 2 - j)), spec.const(1))
    return U * _xi(spec.shift(k), d, t) * c


def _caseA_last(spec, n: int, j: int, S: int) -> LatticeFun:
    if j <= (S + 1) // 2:
        c = mpq(1)
        for m in range(S - 2 * j + 1):
            c *= _f(spec.shift(m), n - m)
        return _P(spec.shift(S + 1 - 2 * j), n - S - 1 + 2 * j) * c
    k = 2 * j - S - 3
    c = _b(spec.shift(k), n - 2 * j + S + 2)
    for m in range(k + 1):
        c *= _f(spec.shift(m), n - m)
    return _P(spec.shift(k), n - 2 * j + S + 3) * c


def _caseA(spec: FamilySpec, D: list[TypedIndex], n: int | None):
    M = len(D)
    MI, MII = _counts(D)
    S = M if n is None else M + 1
    rows = []
    for j in range(1, S + 1):
        row = [_caseA_entry(spec, e, j, S) for e in D]
        if n is not None:
            row.append(_caseA_last(spec, n, j, S))
        rows.append(row)
    num = lat_det(rows)
    kexp = M - 2 if n is None else M + 2
    base = -1 if n is None else 0
    const = mpq(-1) ** ((S - 1) * S * (S + 1) // 6) * spec.kappa_pow(-mpq(MI * MII * kexp, 2))
    den = spec.const(1)
    for l in range(MI):
        den = den * _U(spec, MII - MI + base + 2 * l, I_) ** l
    for l in range(MII):
        den = den * _U(spec, MI - MII + base + 2 * l, II_) ** l
    for m in range(1, S // 2 + 1):
        den = den * _S(spec.shift(S - 1 - 2 * m))
    return num, den, gs(const)


# general case B --------------------------------------------------------------------

def _caseB_entry(spec, e: TypedIndex, j: int, S: int) -> LatticeFun:
    d, t = e.d, e.t
    Et = fam.virtual_energy(spec, d, t)
    one = spec.const(1)
    if S % 2:
        if j <= (S + 1) // 2:
            U = _prod((_U(spec, 2 * l, t) for l in range((S - 3) // 2 + 1)), one)
            return U * _xi(spec, d, t) * Et ** ((S + 1) // 2 - j)
        c = fam.f_tilde(spec.shift(1), d, t) * fam.f_tilde(spec, d, t) * Et ** (j - (S + 3) // 2)
        U = _prod((_U(spec, 2 * l, t) for l in range(1, (S - 3) // 2 + 1)), one)
        return U * _xi(spec.shift(2), d, t) * c
    if j <= S // 2:
        c = fam.f_tilde(spec, d, t) * Et ** (S // 2 - j)
        U = _prod((_U(spec, 2 * l - 1, t) for l in range(1, (S - 2) // 2 + 1)), one)
        return U * _xi(spec.shift(1), d, t) * c
    c = fam.b_tilde(spec.shift(-1), d, t) * Et ** (j - (S + 2) // 2)
    U = _prod((_U(spec, 2 * l - 1, t) for l in range((S - 2) // 2 + 1)), one)
    return U * _xi(spec.shift(-1), d, t) * c


def _caseB_last(spec, n: int, j: int, S: int) -> LatticeFun:
    E = fam.energy(spec, n)
    if S % 2:
        if j <= (S + 1) // 2:
            return _P(spec, n) * E ** ((S + 1) // 2 - j)
        c = _f(spec.shift(1), n - 1) * _f(spec, n) * E ** (j - (S + 3) // 2)
        return _P(spec.shift(2), n - 2) * c
    if j <= S // 2:
        return _P(spec.shift(1), n - 1) * (_f(spec, n) * E ** (S // 2 - j))
    return _P(spec.shift(-1), n + 1) * (_b(spec.shift(-1), n) * E ** (j - (S + 2) // 2))


def _caseB(spec: FamilySpec, D: list[TypedIndex], n: int | None):
    M = len(D)
    MI, MII = _counts(D)
    S = M if n is None else M + 1
    rows = []
    for j in range(1, S + 1):
        row = [_caseB_entry(spec, e, j, S) for e in D]
        if n is not None:
            row.append(_caseB_last(spec, n, j, S))
        rows.append(row)
    num = lat_det(rows)
    kexp = M - 2 if n is None else M + 2
    aa = fam.alpha(spec, I_) * fam.alpha(spec, II_) / spec.kappa
    twice = -((S - 2) // 2) * (S // 2)
    root = (fam.alpha_sqrt(spec, I_) * fam.alpha_sqrt(spec, II_) * spec.kappa_pow(-mpq(1, 2))
            if twice % 2 else None)
    const = (mpq(-1) ** (S // 2) * spec.kappa_pow(-mpq(MI * MII * kexp, 2))
             * _half_power(root, aa, twice))
    den = spec.const(1)
    for m in range(1, MI + 1):
        den = den * _U(spec, S - 1 - 2 * m, I_) ** (MI - m)
    for m in range(1, MII + 1):
        den = den * _U(spec, S - 1 - 2 * m, II_) ** (MII - m)
    for m in range((S - 2) // 2 + 1):
        den = den * (_U(spec, S - 1 - 2 * m, I_) * _U(spec, S - 1 - 2 * m, II_)) ** m
    s_shift = -1 if S % 2 == 0 else 0
    den = den * _S(spec.shift(s_shift)) ** (S // 2)
    return num, den, gs(const)


# single type ---------------------------------------------------------------------

def _fp(spec, v, t):
    """f'_v(lambda) = f_v at the twisted parameters."""
    return _f(spec.twist(t), v)


def _bp(spec, v, t):
    return _b(spec.twist(t), v)


def _Ep(spec, v, t):
    return fam.energy(spec.twist(t), v) if v >= 0 else mpq(0)


def _ftp(spec, n, t):
    return fam.f_tilde(spec.twist(t), n, t)


def _btp(spec, n, t):
    return fam.b_tilde(spec.twist(t), n, t)


def _Etp(spec, n, t):
    return fam.virtual_energy(spec.twist(t), n, t)


def _single_type(D: list[TypedIndex]) -> TwistType:
    types = {e.t for e in D}
    if len(types) != 1:
        raise ValueError("single-type methods need all indices of one type")
    return types.pop()


def _singleA_entry(spec, d: int, t, j: int, S: int) -> LatticeFun:
    dn = lambda k: spec.shift_tilde(k, t)
    if j <= (S + 1) // 2:
        c = mpq(1)
        for m in range(S - 2 * j + 1):
            c *= _fp(dn(m), d - m, t)
        return _xi(dn(S + 1 - 2 * j), d - S - 1 + 2 * j, t) * c
    k = 2 * j - S - 3
    c = _bp(dn(k), d - 2 * j + S + 2, t)
    for m in range(k + 1):
        c *= _fp(dn(m), d - m, t)
    return _xi(dn(k), d - 2 * j + S + 3, t) * c


def _singleA_last(spec, n: int, t, j: int, M: int) -> LatticeFun:
    dn = lambda k: spec.shift_tilde(k, t)
    one = spec.const(1)
    if j <= (M + 2) // 2:
        c = mpq(1)
        for m in range(M + 2 - 2 * j):
            c *= _ftp(dn(m), n, t)
        U = _prod((_U(spec, M - 2 * l, t) for l in range(M + 2 - j, M + 1)), one)
        return U * _P(dn(M + 2 - 2 * j), n) * c
    k = 2 * j - M - 4
    c = _btp(dn(k), n, t)
    for m in range(k + 1):
        c *= _ftp(dn(m), n, t)
    U = _prod((_U(spec, M - 2 * l, t) for l in range(j - 1, M + 1)), one)
    return U * _P(dn(k), n) * c


def _singleA(spec: FamilySpec, D: list[TypedIndex], n: int | None):
    t = _single_type(D)
    M = len(D)
    S = M if n is None else M + 1
    rows = []
    for j in range(1, S + 1):
        row = [_singleA_entry(spec, e.d, t, j, S) for e in D]
        if n is not None:
            row.append(_singleA_last(spec, n, t, j, M))
        rows.append(row)
    num = lat_det(rows)
    tw = spec.twist(t)
    den = spec.const(1)
    for m in range(1, S // 2 + 1):
        den = den * _S(tw.shift(S - 1 - 2 * m))
    return num, den, gs(mpq(-1) ** ((S - 1) * S * (S + 1) // 6))


def _singleB_entry(spec, d: int, t, j: int, S: int) -> LatticeFun:
    dn = lambda k: spec.shift_tilde(k, t)
    Ep = _Ep(spec, d, t)
    if S % 2:
        if j <= (S + 1) // 2:
            return _xi(spec, d, t) * Ep ** ((S + 1) // 2 - j)
        c = _fp(dn(1), d - 1, t) * _fp(spec, d, t) * Ep ** (j - (S + 3) // 2)
        return _xi(dn(2), d - 2, t) * c
    if j <= S // 2:
        return _xi(dn(1), d - 1, t) * (_fp(spec, d, t) * Ep ** (S // 2 - j))
    return _xi(dn(-1), d + 1, t) * (_bp(dn(-1), d, t) * Ep ** (j - (S + 2) // 2))


def _singleB_last(spec, n: int, t, j: int, S: int) -> LatticeFun:
    dn = lambda k: spec.shift_tilde(k, t)
    Etp = _Etp(spec, n, t)
    if S % 2:
        if j <= (S + 1) // 2:
            return _U(spec, -2, t) * _P(spec, n) * Etp ** ((S + 1) // 2 - j)
        c = _ftp(dn(1), n, t) * _ftp(spec, n, t) * Etp ** (j - (S + 3) // 2)
        return _P(dn(2), n) * c
    if j <= S // 2:
        return _P(dn(1), n) * (_ftp(spec, n, t) * Etp ** (S // 2 - j))
    c = _btp(dn(-1), n, t) * Etp ** (j - (S + 2) // 2)
    return _U(spec, -1, t) * _P(dn(-1), n) * c


def _singleB(spec: FamilySpec, D: list[TypedIndex], n: int | None):
    t = _single_type(D)
    tb = _other(t)
    M = len(D)
    S = M if n is None else M + 1
    rows = []
    for j in range(1, S + 1):
        row = [_singleB_entry(spec, e.d, t, j, S) for e in D]
        if n is not None:
            row.append(_singleB_last(spec, n, t, j, S))
        rows.append(row)
    num = lat_det(rows)
    ratio = fam.alpha(spec, t) / fam.alpha(spec, tb) * spec.kappa
    twice = ((S - 2) // 2) * (S // 2)
    root = (fam.alpha_sqrt(spec, t) / fam.alpha_sqrt(spec, tb) * spec.kappa_pow(mpq(1, 2))
            if twice % 2 else None)
    const = mpq(-1) ** (S // 2) * _half_power(root, ratio, twice)
    den = spec.const(1)
    if n is None:
        for m in range((M + 3) // 2, M + 1):
            den = den * _U(spec, M - 1 - 2 * m, t) ** (M - m)
    else:
        for m in range((M + 4) // 2, M + 1):
            den = den * _U(spec, M - 2 * m, t) ** (M - m)
    for m in range((S - 2) // 2 + 1):
        den = den * _U(spec, S - 1 - 2 * m, tb) ** m
    s_shift = -1 if S % 2 == 0 else 0
    den = den * _S(spec.twist(t).shift(s_shift)) ** (S // 2)
    return num, den, gs(const)


# public builders ---------------------------------------------------------------

_ROUTES = {"original": _original, "caseA": _caseA, "caseB": _caseB,
           "singleA": _singleA, "singleB": _singleB}


def _assemble(spec: FamilySpec, D, n, method: str) -> MiopResult:
    if not spec.is_idqm:
        raise ValueError(f"{spec.id.value} is an rdQM family; use miop_rdqm")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    D = parse_typed_index(D)
    start = time.perf_counter()
    base = fam.eta(spec)
    if n is not None and not D:
        fun = _P(spec, n)
        poly = eta_expand(fun, base)
    else:
        num, den, const = _ROUTES[method](spec, D, n)
        if den.is_zero():
            poly = _by_continuity(spec, D, n, method)
            fun = poly.compose(base)
        else:
            fun = (num / den) * const
            poly = eta_expand(fun, base)
    if not poly.is_real():
        raise AssertionError(f"non-real coefficients from {method}: {poly}")
    return MiopResult(spec.id.value, [e.to_json() for e in D], n, method, fun, base, poly,
                      time.perf_counter() - start)


# removable singularities ----------------------------------------------------------

def _deform(spec: FamilySpec, eps) -> FamilySpec:
    """Move off a degenerate point along a line that keeps alpha^I, alpha^II fixed."""
    a1, a2, a3, a4 = spec.params
    if spec.id is fam.FamilyId.W:
        new = (a1 + eps, a2 + 2 * eps, a3 + 3 * eps, a4 + 5 * eps)
    else:
        s = 1 + eps
        new = (a1 * s, a2 / s, a3 * s * s, a4 / (s * s))
    return dataclasses.replace(spec, params=new, rho=None)


def _eval_poly(spec, D, n, method):
    num, den, const = _ROUTES[method](spec, D, n)
    if den.is_zero():
        raise ZeroDivisionError("still on the singular locus")
    return eta_expand((num / den) * const, fam.eta(spec))


def _by_continuity(spec: FamilySpec, D, n, method, max_degree: int = 24) -> EtaPoly:
    """Value of a route whose normalising denominator vanishes identically.

    Every coefficient is a rational function of the deformation parameter;
    it is rebuilt from exact samples by rational interpolation, confirmed on
    two further samples, and evaluated at the undeformed point.
    """
    eps = sympy.Symbol("eps")
    samples = []
    k = 0
    while len(samples) < 2 * max_degree + 3:
        k += 1
        e = mpq(1, 37 + 3 * k)
        try:
            samples.append((e, _eval_poly(_deform(spec, e), D, n, method)))
        except (ZeroDivisionError, ArithmeticError):
            continue
        if len(samples) >= 3 and (len(samples) - 3) % 2 == 0:
            out = _reconstruct(samples, eps)
            if out is not None:
                return out
    raise ArithmeticError(f"{method}: no rational reconstruction up to degree {max_degree}")


def _to_sym(r) -> sympy.Rational:
    r = as_rational(r)
    return sympy.Rational(int(r.numerator), int(r.denominator))


def _reconstruct(samples, eps) -> EtaPoly | None:
    width = max(len(p.coeffs) for _, p in samples)
    m = (len(samples) - 3) // 2
    fit, check = samples[:2 * m + 1], samples[2 * m + 1:]
    coeffs = []
    for idx in range(width):
        def c(p):
            return p.coeffs[idx].re if idx < len(p.coeffs) else mpq(0)
        data = [(_to_sym(e), _to_sym(c(p))) for e, p in fit]
        if m:
            f = sympy.cancel(rational_interpolate(data, m, X=eps))
        else:
            f = data[0][1]
        for e, p in check:
            if sympy.sympify(f).subs(eps, _to_sym(e)) != _to_sym(c(p)):
                return None
        f0 = sympy.sympify(f).subs(eps, 0)
        if not f0.is_Rational:
            return None
        coeffs.append(mpq(int(f0.p), int(f0.q)))
    return EtaPoly(coeffs)


def build_Xi_idqm(spec: FamilySpec, D, method: str = "original") -> MiopResult:
    if not list(D):
        raise ValueError("the denominator polynomial needs a non-empty multi-index")
    return _assemble(spec, D, None, method)


def build_PDn_idqm(spec: FamilySpec, D, n: int, method: str = "original") -> MiopResult:
    if n < 0:
        raise ValueError("n must be non-negative")
    return _assemble(spec, D, n, method)


def applicable_methods(D) -> tuple[str, ...]:
    D = parse_typed_index(D)
    if len({e.t for e in D}) <= 1:
        return METHODS
    return METHODS[:3]

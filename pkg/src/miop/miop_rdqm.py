"""Multi-indexed polynomials for the rdQM families (M, lqL, lqJ, R, qR).

Three independent routes build the denominator polynomial Xi_D and the
polynomial P_{D,n}: the original Casoratian, and the two rewritten forms that
use the primed shift relations (case A stacks parameter shifts, case B
interleaves lattice and parameter shifts). Every route yields a function of x
which is then re-expressed in the sinusoidal coordinate of the shifted
parameters.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

from gmpy2 import mpq

from .exact_core import EtaPoly, LatticeFun, LatticeRat, eta_expand, lat_det, lat_shift, rational_text
from . import families as fam
from .families import FamilyId, FamilySpec, DegenerateIndex, qpoch, poch

METHODS = ("original", "caseA", "caseB")


@dataclass
class MiopResult:
    family: str
    D: list
    n: int | None
    method: str
    fun: LatticeFun
    eta_base: LatticeFun
    eta_poly: EtaPoly
    timing: float = 0.0

    @property
    def poly(self):
        """EtaPoly for M/lqL/lqJ; the x-function for R and qR."""
        return self.fun if self.family in ("R", "qR") else self.eta_poly

    def degree(self) -> int | None:
        return self.eta_poly.degree()

    def to_json(self) -> dict:
        out = {"family": self.family, "D": self.D, "method": self.method,
               "eta_poly": self.eta_poly.to_json()}
        if self.n is not None:
            out["n"] = self.n
        return out


def ell_D(D: Sequence[int]) -> int:
    return fam.ell_D(D)


def check_multi_index(D: Sequence[int]) -> list[int]:
    D = [int(d) for d in D]
    if any(d < 0 for d in D):
        raise ValueError("multi-index entries must be non-negative")
    if len(set(D)) != len(D):
        raise ValueError("multi-index entries must be distinct")
    return D


def _need_rdqm(spec: FamilySpec):
    if spec.is_idqm:
        raise ValueError(f"{spec.id.value} is an idQM family; use miop_idqm")


def _scalar_div(fun: LatticeFun | LatticeRat, c) -> LatticeFun:
    if isinstance(fun, LatticeRat):
        fun = fun.to_fun()
    return fun / c


# energies at shifted/twisted parameters --------------------------------------

def _E_prime(spec: FamilySpec, v: int):
    return fam.energy(spec.twist(), v) if v >= 0 else mpq(0)


def _Et_prime(spec: FamilySpec, n: int):
    return fam.virtual_energy(spec.twist(), n)


def _B_prime_0(spec: FamilySpec):
    return fam.B_prime_at(spec, 0)


# original route --------------------------------------------------------------

def _xi_original(spec: FamilySpec, D: list[int]) -> LatticeFun:
    M = len(D)
    rows = [[lat_shift(fam.build_xi(spec, d), j) for d in D] for j in range(M)]
    C_D = fam.norm_constants(spec, D)["C_D"]
    return (lat_det(rows) / fam.phi_M_rdqm(spec, M)) / C_D


def _p_original(spec: FamilySpec, D: list[int], n: int) -> LatticeFun:
    M = len(D)
    P = fam.build_Pn(spec, n)
    rows = []
    for j in range(1, M + 2):
        row = [lat_shift(fam.build_xi(spec, d), j - 1) for d in D]
        row.append(fam.r_rdqm(spec, j, M) * lat_shift(P, j - 1))
        rows.append(row)
    C_Dn = fam.norm_constants(spec, D, n)["C_Dn"]
    return (lat_det(rows) / fam.phi_M_rdqm(spec, M + 1)) / C_Dn


# case A ------------------------------------------------------------------------

def _caseA_entry(spec: FamilySpec, d: int, j: int) -> LatticeFun:
    coef = mpq(1)
    for m in range(j - 1):
        coef *= _E_prime(spec.shift_tilde(m), d - m)
    return fam.build_xi(spec.shift_tilde(j - 1), d + 1 - j) * coef


def _caseA_last(spec: FamilySpec, n: int, j: int, M: int) -> LatticeFun:
    coef = mpq(1)
    for m in range(j - 1):
        coef *= _Et_prime(spec.shift_tilde(m), n)
    lam = spec.shift_tilde(j - 1)
    # nu(x; lambda+(j-1)dt) / nu(x; lambda+M dt) is r_1 at lambda+(j-1)dt with size M+1-j
    return fam.build_Pn(lam, n) * fam.r_rdqm(lam, 1, M + 1 - j) * coef


def _caseA_prefactor(spec: FamilySpec, size: int):
    """The family-specific constant for a size x size case-A determinant."""
    fid, p = spec.id, spec.params
    half = size * (size - 1) // 2
    if fid is FamilyId.M:
        beta, c = p
        den = mpq(1)
        for m in range(1, size):
            den *= poch(beta, m)
        return (-c) ** half / den
    if fid in (FamilyId.LQL, FamilyId.LQJ):
        a, q = p[0], spec.q
        out = (-a) ** half / q ** (size * (size - 1) * (size - 2) // 6)
        if fid is FamilyId.LQJ:
            for m in range(1, size):
                out /= qpoch(p[1] * q, m, q)
        return out
    den = mpq(1)
    for m in range(size):
        den *= _B_prime_0(spec.shift_tilde(m)) ** (size - 1 - m)
    return mpq(-1) ** half / den


def _xi_caseA(spec: FamilySpec, D: list[int]) -> LatticeFun:
    M = len(D)
    rows = [[_caseA_entry(spec, d, j) for d in D] for j in range(1, M + 1)]
    C_D = fam.norm_constants(spec, D)["C_D"]
    return lat_det(rows) * (_caseA_prefactor(spec, M) / C_D)


def _p_caseA(spec: FamilySpec, D: list[int], n: int) -> LatticeFun:
    M = len(D)
    rows = [[_caseA_entry(spec, d, j) for d in D] + [_caseA_last(spec, n, j, M)]
            for j in range(1, M + 2)]
    C_Dn = fam.norm_constants(spec, D, n)["C_Dn"]
    return lat_det(rows) * (_caseA_prefactor(spec, M + 1) / C_Dn)


# case B ------------------------------------------------------------------------

def _caseB_rows(spec: FamilySpec, D: list[int], size: int) -> list[list[LatticeFun]]:
    dn = spec.shift_tilde(1)
    rows = []
    for j in range(1, size + 1):
        l = (j + 1) // 2
        row = []
        for d in D:
            Ep = _E_prime(spec, d)
            if j % 2:
                row.append(lat_shift(fam.build_xi(spec, d), l - 1) * Ep ** (l - 1))
            else:
                row.append(lat_shift(fam.build_xi(dn, d - 1), l - 1) * Ep ** l)
        rows.append(row)
    return rows


def _caseB_frame(spec: FamilySpec, size: int) -> LatticeRat:
    """phi products, phi_size^-1 and the inverse B' products shared by Xi and P."""
    ph = fam.phi(spec)
    Bp = fam.potentials(spec.twist()).B
    out = LatticeRat(spec.const(1))
    top = (size - 2) // 2
    for m in range(top + 1):
        out = out * lat_shift(ph, m)
        for l in range(1, size - 1 - 2 * m):
            out = out / Bp.shift(l + m)
    return out / fam.phi_M_rdqm(spec, size)


def _xi_caseB(spec: FamilySpec, D: list[int]) -> LatticeFun:
    M = len(D)
    det = lat_det(_caseB_rows(spec, D, M))
    C_D = fam.norm_constants(spec, D)["C_D"]
    sign = (-1) ** (M // 2) if M % 2 == 0 else 1
    const = mpq(sign) / (C_D * _B_prime_0(spec) ** (M // 2))
    return (_caseB_frame(spec, M) * det).to_fun() * const


def _p_caseB(spec: FamilySpec, D: list[int], n: int) -> LatticeFun:
    M = len(D)
    dn = spec.shift_tilde(1)
    rows = _caseB_rows(spec, D, M + 1)
    P, P_dn = fam.build_Pn(spec, n), fam.build_Pn(dn, n)
    Et = _Et_prime(spec, n)
    for j in range(1, M + 2):
        l = (j + 1) // 2
        if j % 2:
            entry = lat_shift(P, l - 1) * fam.r_rdqm(spec, l, M) * Et ** (l - 1)
        else:
            entry = lat_shift(P_dn, l - 1) * fam.r_rdqm(dn, l, M - 1) * Et ** l
        rows[j - 1].append(entry)
    det = lat_det(rows)
    C_Dn = fam.norm_constants(spec, D, n)["C_Dn"]
    sign = (-1) ** ((M + 1) // 2) if M % 2 == 1 else 1
    const = mpq(sign) / (C_Dn * _B_prime_0(spec) ** ((M + 1) // 2))
    return (_caseB_frame(spec, M + 1) * det).to_fun() * const


# public builders ---------------------------------------------------------------

_XI = {"original": _xi_original, "caseA": _xi_caseA, "caseB": _xi_caseB}
_PD = {"original": _p_original, "caseA": _p_caseA, "caseB": _p_caseB}


def _check_method(method: str):
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


def build_Xi_rdqm(spec: FamilySpec, D: Sequence[int], method: str = "original") -> MiopResult:
    """Denominator polynomial Xi_D; needs M = |D| >= 1."""
    _need_rdqm(spec)
    _check_method(method)
    D = check_multi_index(D)
    if not D:
        raise ValueError("the denominator polynomial needs a non-empty multi-index")
    start = time.perf_counter()
    fun = _XI[method](spec, D)
    base = fam.eta(spec.shift(len(D) - 1))
    return MiopResult(spec.id.value, D, None, method, fun, base, eta_expand(fun, base),
                      time.perf_counter() - start)


def build_PDn_rdqm(spec: FamilySpec, D: Sequence[int], n: int, method: str = "original") -> MiopResult:
    """Multi-indexed polynomial P_{D,n}; D = [] gives P_n."""
    _need_rdqm(spec)
    _check_method(method)
    D = check_multi_index(D)
    if n < 0:
        raise ValueError("n must be non-negative")
    if spec.N is not None and n > spec.N:
        raise ValueError(f"n = {n} exceeds the lattice size N = {spec.N}")
    start = time.perf_counter()
    fun = fam.build_Pn(spec, n) if not D else _PD[method](spec, D, n)
    base = fam.eta(spec.shift(len(D)))
    return MiopResult(spec.id.value, D, n, method, fun, base, eta_expand(fun, base),
                      time.perf_counter() - start)

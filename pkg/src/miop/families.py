"""Catalog of the seven families: parameters, potentials, energies and seeds.

Parameters are stored in their "native" form: (beta, c) for Meixner, the
plain lambda for Racah and Wilson, and q**lambda for the q-families. Shifts
lambda + u*delta therefore act additively on the former and multiplicatively
(by powers of sqrt(q)) on the latter.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Sequence

from gmpy2 import mpq

from .exact_core import (
    ADDITIVE_X, ADDITIVE_Y, MULTIPLICATIVE_T, MULTIPLICATIVE_Z, CoordModel, EtaPoly,
    GaussScalar, I, LatticeFun, LatticeRat, Rational, as_rational, eta_expand, gs,
    lat_shift, lat_star, rational_sqrt,
)


class FamilyId(str, Enum):
    M = "M"
    LQL = "lqL"
    LQJ = "lqJ"
    R = "R"
    QR = "qR"
    W = "W"
    AW = "AW"


class TwistType(str, Enum):
    UNIT = "unit"
    I = "I"
    II = "II"


RDQM = (FamilyId.M, FamilyId.LQL, FamilyId.LQJ, FamilyId.R, FamilyId.QR)
IDQM = (FamilyId.W, FamilyId.AW)
Q_FAMILIES = (FamilyId.LQL, FamilyId.LQJ, FamilyId.QR, FamilyId.AW)
FINITE = (FamilyId.R, FamilyId.QR)

PARAM_NAMES = {
    FamilyId.M: ("beta", "c"),
    FamilyId.LQL: ("a",),
    FamilyId.LQJ: ("a", "b"),
    FamilyId.R: ("a", "b", "c", "d"),
    FamilyId.QR: ("a", "b", "c", "d"),
    FamilyId.W: ("a1", "a2", "a3", "a4"),
    FamilyId.AW: ("a1", "a2", "a3", "a4"),
}

_MODEL_KIND = {
    FamilyId.M: ADDITIVE_X,
    FamilyId.R: ADDITIVE_X,
    FamilyId.LQL: MULTIPLICATIVE_T,
    FamilyId.LQJ: MULTIPLICATIVE_T,
    FamilyId.QR: MULTIPLICATIVE_T,
    FamilyId.W: ADDITIVE_Y,
    FamilyId.AW: MULTIPLICATIVE_Z,
}


class MissingSplit(ValueError):
    def __init__(self):
        super().__init__("irrational α^{1/2}; supply split parameters")


class DegenerateIndex(ValueError):
    pass


class InadmissibleParameters(ValueError):
    pass


@dataclass(frozen=True)
class FamilySpec:
    """A family at concrete parameters. Build through make_family."""

    id: FamilyId
    params: tuple
    sqrt_q: Rational | None = None
    N: int | None = None
    rho: tuple | None = None
    model: CoordModel = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(as_rational(p) for p in self.params))
        if self.sqrt_q is not None:
            object.__setattr__(self, "sqrt_q", as_rational(self.sqrt_q))
        object.__setattr__(self, "model", CoordModel(_MODEL_KIND[self.id], self.sqrt_q))
        if self.id is FamilyId.AW and self.rho is None:
            a1, a2, a3, a4 = self.params
            object.__setattr__(self, "rho", (rational_sqrt(a1 * a2 / self.q),
                                             rational_sqrt(a3 * a4 / self.q)))

    # basic derived data -------------------------------------------------
    @property
    def is_idqm(self) -> bool:
        return self.id in IDQM

    @property
    def q(self) -> Rational:
        return self.sqrt_q * self.sqrt_q

    def qpow(self, k) -> Rational:
        """q**k for half-integer k."""
        twice = as_rational(k) * 2
        if twice.denominator != 1:
            raise ValueError("q-power must be a half-integer")
        return self.sqrt_q ** int(twice)

    @property
    def kappa(self) -> Rational:
        return 1 / self.q if self.id in Q_FAMILIES else mpq(1)

    def kappa_pow(self, k) -> Rational:
        return self.qpow(-as_rational(k)) if self.id in Q_FAMILIES else mpq(1)

    @property
    def delta(self) -> tuple:
        return {FamilyId.M: (1, 0), FamilyId.LQL: (1,), FamilyId.LQJ: (1, 1)}.get(
            self.id, (mpq(1, 2),) * 4 if self.is_idqm else (1, 1, 1, 1))

    def delta_tilde(self, t: TwistType = TwistType.UNIT) -> tuple:
        h = mpq(1, 2)
        if self.is_idqm:
            return (-h, -h, h, h) if t is TwistType.I else (h, h, -h, -h)
        return {FamilyId.M: (1, 0), FamilyId.LQL: (-1,), FamilyId.LQJ: (-1, 1)}.get(
            self.id, (0, 0, 1, 1))

    @property
    def d_tilde(self) -> Rational:
        a, b, c, d = self.params
        if self.id is FamilyId.R:
            return a + b + c - d - 1
        if self.id is FamilyId.QR:
            return a * b * c / (d * self.q)
        raise AttributeError("d_tilde is defined for R and qR only")

    @property
    def b1(self) -> Rational:
        return sum(self.params)

    @property
    def b3(self) -> Rational:
        a1, a2, a3, a4 = self.params
        return a1 * a2 * a3 + a1 * a2 * a4 + a1 * a3 * a4 + a2 * a3 * a4

    @property
    def b4(self) -> Rational:
        a1, a2, a3, a4 = self.params
        return a1 * a2 * a3 * a4

    @property
    def has_split(self) -> bool:
        return self.id is not FamilyId.AW or (self.rho[0] is not None and self.rho[1] is not None)

    # parameter moves ----------------------------------------------------
    def _move(self, steps: Sequence) -> "FamilySpec":
        if self.id in Q_FAMILIES:
            new = tuple(p * self.qpow(u) for p, u in zip(self.params, steps))
        else:
            new = tuple(p + u for p, u in zip(self.params, steps))
        return FamilySpec(self.id, new, self.sqrt_q, self.N)

    def shift(self, u) -> "FamilySpec":
        """lambda + u*delta."""
        if not u:
            return self
        return self._move([as_rational(u) * dl for dl in self.delta])

    def shift_tilde(self, u, t: TwistType = TwistType.UNIT) -> "FamilySpec":
        """lambda + u*delta_tilde."""
        if not u:
            return self
        return self._move([as_rational(u) * dl for dl in self.delta_tilde(t)])

    def twist(self, t: TwistType = TwistType.UNIT) -> "FamilySpec":
        _check_twist(self, t)
        p = self.params
        if self.id is FamilyId.M:
            new = (p[0], 1 / p[1])
        elif self.id is FamilyId.LQL:
            new = (1 / p[0],)
        elif self.id is FamilyId.LQJ:
            new = (1 / p[0], p[1])
        elif self.id is FamilyId.R:
            a, b, c, d = p
            new = (d - a + 1, d - b + 1, c, d)
        elif self.id is FamilyId.QR:
            a, b, c, d = p
            new = (d * self.q / a, d * self.q / b, c, d)
        elif self.id is FamilyId.W:
            a1, a2, a3, a4 = p
            new = (1 - a1, 1 - a2, a3, a4) if t is TwistType.I else (a1, a2, 1 - a3, 1 - a4)
        else:
            a1, a2, a3, a4 = p
            q = self.q
            new = (q / a1, q / a2, a3, a4) if t is TwistType.I else (a1, a2, q / a3, q / a4)
        return FamilySpec(self.id, new, self.sqrt_q, self.N)

    # lattice helpers ----------------------------------------------------
    def sym(self) -> LatticeFun:
        return LatticeFun.symbol(self.model)

    def sym_inv(self) -> LatticeFun:
        return LatticeFun.monomial(-1, 1, self.model)

    def const(self, c) -> LatticeFun:
        return LatticeFun.const(c, self.model)

    def named(self) -> dict:
        return dict(zip(PARAM_NAMES[self.id], self.params))


def _check_twist(spec: FamilySpec, t: TwistType):
    if spec.is_idqm and t not in (TwistType.I, TwistType.II):
        raise ValueError("idQM families take twist type I or II")
    if not spec.is_idqm and t is not TwistType.UNIT:
        raise ValueError("rdQM families take the unit twist only")


def make_family(fid, params, sqrt_q=None, *, q=None, N=None, rho=None) -> FamilySpec:
    """Validate parameters and build a FamilySpec.

    ``params`` is a sequence in PARAM_NAMES order or a dict keyed by those
    names. For R and qR the first parameter may be omitted when N is given
    (a = -N, resp. a = q**-N). For W/AW a dict may carry a list under "a".
    """
    fid = FamilyId(fid)
    names = PARAM_NAMES[fid]
    if q is not None and sqrt_q is None:
        sqrt_q = rational_sqrt(as_rational(q))
        if sqrt_q is None:
            raise ValueError(f"q = {q} is not the square of a rational; pass sqrt_q")
    if fid in Q_FAMILIES:
        if sqrt_q is None:
            raise ValueError(f"{fid.value} needs q or sqrt_q")
        sqrt_q = as_rational(sqrt_q)
        if not 0 < sqrt_q < 1:
            raise ValueError("q must lie in (0, 1)")
    else:
        sqrt_q = None
    if isinstance(params, dict):
        params = dict(params)
        if "a" in params and isinstance(params["a"], (list, tuple)):
            vals = list(params.pop("a"))
            params.update(zip(names, vals))
        if fid in FINITE and "a" not in params and N is not None:
            params["a"] = None
        missing = [n for n in names if n not in params]
        extra = [k for k in params if k not in names]
        if missing or extra:
            raise ValueError(f"{fid.value} parameters are {names}; missing {missing}, unexpected {extra}")
        values = [params[n] for n in names]
    else:
        values = list(params)
        if fid in FINITE and len(values) == 3 and N is not None:
            values = [None] + values
    if len(values) != len(names):
        raise ValueError(f"{fid.value} takes {len(names)} parameters, got {len(values)}")
    if fid in FINITE:
        if N is not None:
            if isinstance(N, bool) or int(as_rational(N)) != as_rational(N) or int(N) < 1:
                raise ValueError("N must be a positive integer")
            N = int(N)
            a_from_n = mpq(-N) if fid is FamilyId.R else 1 / (sqrt_q ** (2 * N))
            if values[0] is not None and as_rational(values[0]) != a_from_n:
                raise ValueError("parameter a is inconsistent with N")
            values[0] = a_from_n
        else:
            a = as_rational(values[0])
            if fid is FamilyId.R:
                if a.denominator != 1 or a >= 0:
                    raise ValueError("R needs a = -N with a positive integer N")
                N = int(-a)
            else:
                k, power = 0, mpq(1)
                while power < a and k < 200:
                    k += 1
                    power /= sqrt_q ** 2
                if power != a:
                    raise ValueError("qR needs a = q^-N with a positive integer N")
                N = k
    else:
        N = None
    values = [as_rational(v) for v in values]
    if rho is not None:
        if fid is not FamilyId.AW:
            raise ValueError("split witnesses apply to AW only")
        rho = tuple(as_rational(r) for r in rho)
        a1, a2, a3, a4 = values
        qq = sqrt_q * sqrt_q
        if len(rho) != 2 or rho[0] <= 0 or rho[1] <= 0 or rho[0] ** 2 != a1 * a2 / qq \
                or rho[1] ** 2 != a3 * a4 / qq:
            raise ValueError("split witnesses must satisfy rho1^2 = a1*a2/q, rho2^2 = a3*a4/q")
    spec = FamilySpec(fid, tuple(values), sqrt_q, N, rho)
    _validate(spec)
    return spec


def _validate(spec: FamilySpec):
    twists = (TwistType.I, TwistType.II) if spec.is_idqm else (TwistType.UNIT,)
    for t in twists:
        if spec.twist(t).twist(t).params != spec.params:
            raise AssertionError("twist is not an involution")
        for u in (-2, -1, 1, 2):
            if spec.twist(t).shift(u).params != spec.shift_tilde(u, t).twist(t).params:
                raise AssertionError("delta_tilde relation fails")
        tw = spec.twist(t)
        if eta(tw) != eta(spec) or phi(tw) != phi(spec):
            raise AssertionError("eta/phi not twist invariant")


# scalar Pochhammers --------------------------------------------------------

def poch(a, k: int):
    """Rising factorial (a)_k; works on scalars and lattice functions."""
    out = mpq(1)
    for m in range(k):
        out = (a + m) * out
    return out


def qpoch(a, k: int, q):
    out = mpq(1)
    qm = mpq(1)
    for _ in range(k):
        out = (1 - a * qm) * out
        qm = qm * q
    return out


def factorial(k: int) -> Rational:
    return poch(mpq(1), k) if k else mpq(1)


# energies and constants ---------------------------------------------------

def energy(spec: FamilySpec, n: int) -> Rational:
    if n < 0:
        raise ValueError("negative index")
    if spec.id in FINITE and spec.N is not None and n > spec.N:
        raise ValueError(f"n = {n} exceeds N = {spec.N}")
    return _energy(spec, n)


def _energy(spec: FamilySpec, n: int) -> Rational:
    fid, p = spec.id, spec.params
    if fid is FamilyId.M:
        return (1 - p[1]) * n
    if fid is FamilyId.LQL:
        return spec.qpow(-n) - 1
    if fid is FamilyId.LQJ:
        a, b = p
        return (spec.qpow(-n) - 1) * (1 - a * b * spec.qpow(n + 1))
    if fid is FamilyId.R:
        return n * (n + spec.d_tilde)
    if fid is FamilyId.QR:
        return (spec.qpow(-n) - 1) * (1 - spec.d_tilde * spec.qpow(n))
    if fid is FamilyId.W:
        return n * (n + spec.b1 - 1)
    return (spec.qpow(-n) - 1) * (1 - spec.b4 * spec.qpow(n - 1))


def virtual_energy(spec: FamilySpec, v: int, t: TwistType = TwistType.UNIT) -> Rational:
    if v < 0:
        raise ValueError("negative index")
    _check_twist(spec, t)
    fid, p = spec.id, spec.params
    if fid is FamilyId.M:
        beta, c = p
        return -(1 - c) * (v + beta)
    if fid is FamilyId.LQL:
        return -(1 - p[0] * spec.qpow(-v))
    if fid is FamilyId.LQJ:
        a, b = p
        return -(1 - a * spec.qpow(-v)) * (1 - b * spec.qpow(v + 1))
    if fid is FamilyId.R:
        a, b, c, d = p
        return -(c + v) * (a + b - d - v - 1)
    if fid is FamilyId.QR:
        a, b, c, d = p
        return -(1 - c * spec.qpow(v)) * (1 - a * b / d * spec.qpow(-v - 1))
    a1, a2, a3, a4 = p
    if t is TwistType.II:
        a1, a2, a3, a4 = a3, a4, a1, a2
    if fid is FamilyId.W:
        return -(a1 + a2 - v - 1) * (a3 + a4 + v)
    return -(1 - a1 * a2 * spec.qpow(-v - 1)) * (1 - a3 * a4 * spec.qpow(v))


def alpha(spec: FamilySpec, t: TwistType = TwistType.UNIT) -> Rational:
    _check_twist(spec, t)
    fid, p = spec.id, spec.params
    if fid is FamilyId.M:
        return p[1]
    if fid in (FamilyId.LQL, FamilyId.LQJ):
        return p[0]
    if fid in (FamilyId.R, FamilyId.W):
        return mpq(1)
    if fid is FamilyId.QR:
        a, b, c, d = p
        return a * b / (d * spec.q)
    a1, a2, a3, a4 = p
    return (a1 * a2 if t is TwistType.I else a3 * a4) / spec.q


def alpha_prime(spec: FamilySpec, t: TwistType = TwistType.UNIT) -> Rational:
    _check_twist(spec, t)
    fid, p = spec.id, spec.params
    if fid is FamilyId.M:
        beta, c = p
        return -(1 - c) * beta
    if fid is FamilyId.LQL:
        return -(1 - p[0])
    if fid is FamilyId.LQJ:
        a, b = p
        return -(1 - a) * (1 - b * spec.q)
    if fid is FamilyId.R:
        a, b, c, d = p
        return -c * (a + b - d - 1)
    if fid is FamilyId.QR:
        a, b, c, d = p
        return -(1 - c) * (1 - a * b / (d * spec.q))
    a1, a2, a3, a4 = p
    if t is TwistType.II:
        a1, a2, a3, a4 = a3, a4, a1, a2
    if fid is FamilyId.W:
        return -(a1 + a2 - 1) * (a3 + a4)
    return -(1 - a1 * a2 / spec.q) * (1 - a3 * a4)


def alpha_sqrt(spec: FamilySpec, t: TwistType) -> Rational:
    """Positive square root of alpha; exact or MissingSplit."""
    root = rational_sqrt(alpha(spec, t))
    if root is None:
        raise MissingSplit()
    return root


@dataclass(frozen=True)
class ShiftFactors:
    f: Rational | None = None
    b: Rational | None = None
    f_tilde: Rational | None = None
    b_tilde: Rational | None = None
    e_prime: Rational | None = None
    e_tilde_prime: Rational | None = None


def f_factor(spec: FamilySpec, n: int) -> Rational:
    """Forward factor f_n of the idQM energy."""
    if spec.id is FamilyId.W:
        return -n * (n + spec.b1 - 1)
    return spec.qpow(mpq(n, 2)) * (spec.qpow(-n) - 1) * (1 - spec.b4 * spec.qpow(n - 1))


def b_factor(spec: FamilySpec, n: int) -> Rational:
    """Backward factor b_{n-1} of the idQM energy (argument is n)."""
    if spec.id is FamilyId.W:
        return mpq(-1)
    return spec.qpow(-mpq(n, 2))


def f_tilde(spec: FamilySpec, v: int, t: TwistType) -> Rational:
    a1, a2, a3, a4 = spec.params
    if t is TwistType.II:
        a1, a2, a3, a4 = a3, a4, a1, a2
    if spec.id is FamilyId.W:
        return a1 + a2 - v - 1
    return -spec.qpow(mpq(v, 2)) * (1 - a1 * a2 * spec.qpow(-v - 1)) / alpha_sqrt(spec, t)


def b_tilde(spec: FamilySpec, v: int, t: TwistType) -> Rational:
    a1, a2, a3, a4 = spec.params
    if t is TwistType.II:
        a1, a2, a3, a4 = a3, a4, a1, a2
    if spec.id is FamilyId.W:
        return -(a3 + a4 + v)
    return spec.qpow(-mpq(v, 2)) * (1 - a3 * a4 * spec.qpow(v)) * alpha_sqrt(spec, t)


def shift_factors(spec: FamilySpec, n: int | None = None, v: int | None = None,
                  t: TwistType = TwistType.UNIT) -> ShiftFactors:
    """Energy factors: (f_n, b_{n-1}, f~_v, b~_v) for idQM; E'_v, E~'_n for rdQM."""
    if not spec.is_idqm:
        tw = spec.twist()
        return ShiftFactors(
            e_prime=_energy(tw, v) if v is not None else None,
            e_tilde_prime=virtual_energy(tw, n) if n is not None else None)
    out = {}
    if n is not None:
        out["f"] = f_factor(spec, n)
        out["b"] = b_factor(spec, n)
    if v is not None:
        out["f_tilde"] = f_tilde(spec, v, t)
        out["b_tilde"] = b_tilde(spec, v, t)
    return ShiftFactors(**out)


# coordinates, potentials --------------------------------------------------

def eta(spec: FamilySpec) -> LatticeFun:
    x = spec.sym()
    fid = spec.id
    if fid is FamilyId.M:
        return x
    if fid in (FamilyId.LQL, FamilyId.LQJ):
        return 1 - x
    if fid is FamilyId.R:
        return x * (x + spec.params[3])
    if fid is FamilyId.QR:
        d = spec.params[3]
        return (spec.sym_inv() - 1) * (1 - x * d)
    if fid is FamilyId.W:
        return -(x * x)
    return (x + spec.sym_inv()) * mpq(1, 2)


def phi(spec: FamilySpec) -> LatticeFun:
    x = spec.sym()
    fid = spec.id
    if fid is FamilyId.M:
        return spec.const(1)
    if fid in (FamilyId.LQL, FamilyId.LQJ):
        return x
    if fid is FamilyId.R:
        d = spec.params[3]
        return (x * 2 + d + 1) / (d + 1)
    if fid is FamilyId.QR:
        d, q = spec.params[3], spec.q
        return (spec.sym_inv() - x * (d * q)) / (1 - d * q)
    if fid is FamilyId.W:
        return x * GaussScalar(0, -2)
    return (x - spec.sym_inv()) * (-I)


@dataclass(frozen=True)
class Potentials:
    B: LatticeRat | None = None
    D: LatticeRat | None = None
    V: LatticeRat | None = None
    V_star: LatticeRat | None = None


def potentials(spec: FamilySpec) -> Potentials:
    x = spec.sym()
    one = spec.const(1)
    fid, p = spec.id, spec.params
    if fid is FamilyId.M:
        beta, c = p
        return Potentials(B=LatticeRat((x + beta) * c), D=LatticeRat(x))
    if fid in (FamilyId.LQL, FamilyId.LQJ):
        tinv = spec.sym_inv()
        a = p[0]
        num = tinv * a if fid is FamilyId.LQL else (tinv - p[1] * spec.q) * a
        return Potentials(B=LatticeRat(num), D=LatticeRat(tinv - 1))
    if fid is FamilyId.R:
        a, b, c, d = p
        B = LatticeRat(-((x + a) * (x + b) * (x + c) * (x + d)), (x * 2 + d) * (x * 2 + 1 + d))
        D = LatticeRat(-((x + d - a) * (x + d - b) * (x + d - c) * x), (x * 2 - 1 + d) * (x * 2 + d))
        return Potentials(B=B, D=D)
    if fid is FamilyId.QR:
        a, b, c, d = p
        q = spec.q
        t2 = x * x
        B = LatticeRat(-((1 - x * a) * (1 - x * b) * (1 - x * c) * (1 - x * d)),
                       (1 - t2 * d) * (1 - t2 * (d * q)))
        D = LatticeRat(-((1 - x * (d / a)) * (1 - x * (d / b)) * (1 - x * (d / c)) * (1 - x))
                       * spec.d_tilde,
                       (1 - t2 * (d / q)) * (1 - t2 * d))
        return Potentials(B=B, D=D)
    if fid is FamilyId.W:
        num = one
        for aj in p:
            num = num * (x + aj)
        V = LatticeRat(num, x * 2 * (x * 2 + 1))
    else:
        num = one
        for aj in p:
            num = num * (1 - x * aj)
        z2 = x * x
        V = LatticeRat(num, (1 - z2) * (1 - z2 * spec.q))
    return Potentials(V=V, V_star=V.star())


# eigenpolynomials ----------------------------------------------------------

def build_Pn(spec: FamilySpec, n: int) -> LatticeFun:
    """P_n as a lattice function, summed term by term; zero for n < 0."""
    if n < 0:
        return spec.const(0)
    return _build_Pn(spec, n)


@lru_cache(maxsize=None)
def _build_Pn(spec: FamilySpec, n: int) -> LatticeFun:
    x = spec.sym()
    fid, p = spec.id, spec.params
    total = spec.const(0)
    if fid is FamilyId.M:
        beta, c = p
        z = 1 - 1 / c
        for k in range(n + 1):
            coef = poch(mpq(-n), k) * z ** k / (poch(beta, k) * factorial(k))
            total = total + poch(-x, k) * coef
    elif fid in (FamilyId.LQL, FamilyId.LQJ):
        q, a = spec.q, p[0]
        tinv = spec.sym_inv()
        for k in range(n + 1):
            coef = qpoch(spec.qpow(-n), k, q) / qpoch(q, k, q)
            if fid is FamilyId.LQJ:
                b = p[1]
                coef = coef * qpoch(a * b * spec.qpow(n + 1), k, q) / qpoch(b * q, k, q)
            # the r-phi-s balancing factor [(-1)^k q^(k(k-1)/2)]^(1+s-r) with 1+s-r = -1
            coef = coef * (-1) ** k / q ** (k * (k - 1) // 2) / a ** k
            total = total + qpoch(tinv, k, q) * LatticeFun.monomial(k, coef, spec.model)
    elif fid is FamilyId.R:
        a, b, c, d = p
        dt = spec.d_tilde
        for k in range(n + 1):
            coef = poch(mpq(-n), k) * poch(n + dt, k) / (
                poch(a, k) * poch(b, k) * poch(c, k) * factorial(k))
            total = total + poch(-x, k) * poch(x + d, k) * coef
    elif fid is FamilyId.QR:
        a, b, c, d = p
        q = spec.q
        dt = spec.d_tilde
        tinv = spec.sym_inv()
        for k in range(n + 1):
            coef = qpoch(spec.qpow(-n), k, q) * qpoch(dt * spec.qpow(n), k, q) * q ** k / (
                qpoch(a, k, q) * qpoch(b, k, q) * qpoch(c, k, q) * qpoch(q, k, q))
            total = total + qpoch(tinv, k, q) * qpoch(x * d, k, q) * coef
    elif fid is FamilyId.W:
        a1, a2, a3, a4 = p
        for k in range(n + 1):
            coef = poch(mpq(-n), k) * poch(n + spec.b1 - 1, k) / factorial(k)
            coef = coef * poch(a1 + a2 + k, n - k) * poch(a1 + a3 + k, n - k) * poch(a1 + a4 + k, n - k)
            total = total + poch(x + a1, k) * poch(a1 - x, k) * coef
    else:
        a1, a2, a3, a4 = p
        q = spec.q
        zinv = spec.sym_inv()
        for k in range(n + 1):
            qk = q ** k
            coef = qpoch(spec.qpow(-n), k, q) * qpoch(spec.b4 * spec.qpow(n - 1), k, q) * qk
            coef = coef / qpoch(q, k, q)
            coef = coef * qpoch(a1 * a2 * qk, n - k, q) * qpoch(a1 * a3 * qk, n - k, q) \
                * qpoch(a1 * a4 * qk, n - k, q)
            total = total + qpoch(x * a1, k, q) * qpoch(zinv * a1, k, q) * coef
        total = total / a1 ** n
    if not spec.is_idqm and total.at(0) != 1:
        raise AssertionError("P_n(0) = 1 normalization violated")
    return total


def build_xi(spec: FamilySpec, v: int, t: TwistType = TwistType.UNIT) -> LatticeFun:
    """Virtual-state polynomial: P_v at the twisted parameters."""
    _check_twist(spec, t)
    if v < 0:
        return spec.const(0)
    return _build_Pn(spec.twist(t), v)


# rdQM auxiliary data -----------------------------------------------------

def phi_M_rdqm(spec: FamilySpec, M: int) -> LatticeFun:
    """Product of shifted phi's; 1 for M <= 1."""
    out = spec.const(1)
    for k in range(1, M + 1):
        for j in range(1, k):
            out = out * lat_shift(phi(spec.shift(k - j - 1)), j - 1)
    return out


def phi_M_eta_form(spec: FamilySpec, M: int) -> LatticeRat:
    """The eta-difference form of phi_M for rdQM, as a ratio."""
    e = eta(spec)
    out = LatticeRat(spec.const(1))
    for k in range(1, M + 1):
        for j in range(1, k):
            out = out * LatticeRat(lat_shift(e, k - 1) - lat_shift(e, j - 1)) / e.at(k - j)
    return out


def phi_M_power_form(spec: FamilySpec, M: int) -> LatticeFun:
    """kappa-power closed form (M, lqL, lqJ only)."""
    if spec.id is FamilyId.M:
        return spec.const(1)
    # kappa = 1/q: kappa^(-M(M-1)x/2 - M(M-1)(M-2)/6) = t^(M(M-1)/2) q^(M(M-1)(M-2)/6)
    return LatticeFun.monomial(M * (M - 1) // 2, spec.q ** (M * (M - 1) * (M - 2) // 6), spec.model)


def phi0_squared(spec: FamilySpec, x: int) -> Rational:
    """Ground-state vector squared from the product of B(y)/D(y+1)."""
    pot = potentials(spec)
    out = gs(1)
    for y in range(x):
        out = out * pot.B.at(y) / pot.D.at(y + 1)
    return out.re


def phi0_squared_closed(spec: FamilySpec, x: int) -> Rational:
    fid, p = spec.id, spec.params
    if fid is FamilyId.M:
        beta, c = p
        return poch(beta, x) * c ** x / factorial(x)
    if fid is FamilyId.LQL:
        q = spec.q
        return (p[0] * q) ** x / qpoch(q, x, q)
    if fid is FamilyId.LQJ:
        q = spec.q
        a, b = p
        return qpoch(b * q, x, q) * (a * q) ** x / qpoch(q, x, q)
    if fid is FamilyId.R:
        a, b, c, d = p
        return (poch(a, x) * poch(b, x) * poch(c, x) * poch(d, x)
                / (poch(d - a + 1, x) * poch(d - b + 1, x) * poch(d - c + 1, x) * factorial(x))
                * (2 * x + d) / d)
    a, b, c, d = p
    q = spec.q
    num = qpoch(a, x, q) * qpoch(b, x, q) * qpoch(c, x, q) * qpoch(d, x, q)
    den = qpoch(d * q / a, x, q) * qpoch(d * q / b, x, q) * qpoch(d * q / c, x, q) * qpoch(q, x, q)
    return num / (den * spec.d_tilde ** x) * (1 - d * q ** (2 * x)) / (1 - d)


def nu_at(spec: FamilySpec, x: int) -> Rational:
    """nu(x) at a non-negative integer point, from the closed forms."""
    fid, p = spec.id, spec.params
    if fid is FamilyId.M:
        return p[1] ** x
    if fid in (FamilyId.LQL, FamilyId.LQJ):
        return p[0] ** x
    a, b, c, d = p
    if fid is FamilyId.R:
        return poch(1 - a - x, x) * poch(b, x) / (poch(d - a + 1, x) * poch(b - d - x, x))
    q = spec.q
    return (qpoch(spec.qpow(1 - x) / a, x, q) * qpoch(b, x, q)
            / (qpoch(d * q / a, x, q) * qpoch(b / d * spec.qpow(-x), x, q)))


def r_rdqm(spec: FamilySpec, j: int, M: int) -> LatticeFun:
    """r_j(x+j-1; lambda, M) written as a function of x."""
    x = spec.sym()
    fid, p = spec.id, spec.params
    if fid is FamilyId.M:
        return spec.const(p[1] ** (j - 1))
    if fid in (FamilyId.LQL, FamilyId.LQJ):
        return LatticeFun.monomial(M, p[0] ** (j - 1), spec.model)
    a, b, c, d = p
    if fid is FamilyId.R:
        num = poch(x + a, j - 1) * poch(x + b, j - 1) * poch(x + d - a + j, M + 1 - j) \
            * poch(x + d - b + j, M + 1 - j)
        return spec.const(1) * num / (poch(d - a + 1, M) * poch(d - b + 1, M))
    q = spec.q
    num = qpoch(x * a, j - 1, q) * qpoch(x * b, j - 1, q) \
        * qpoch(x * (d * spec.qpow(j) / a), M + 1 - j, q) * qpoch(x * (d * spec.qpow(j) / b), M + 1 - j, q)
    scal = (a * b / (d * q)) ** (j - 1) * qpoch(d * q / a, M, q) * qpoch(d * q / b, M, q)
    return spec.const(1) * num * LatticeFun.monomial(-M, 1 / scal, spec.model)


def B_prime_at(spec: FamilySpec, x) -> Rational:
    """B'(x) = B(x; twisted lambda) at a real point."""
    return potentials(spec.twist()).B.at(x).re


def norm_constants(spec: FamilySpec, D: Sequence[int], n: int | None = None) -> dict:
    """C_D, and when n is given d~^2_{D,n} and C_{D,n}."""
    if spec.is_idqm:
        raise ValueError("normalization constants are defined for rdQM families")
    D = list(D)
    M = len(D)
    al = alpha(spec)
    Ev = [virtual_energy(spec, d) for d in D]
    for i in range(M):
        for j in range(i + 1, M):
            if Ev[i] == Ev[j]:
                raise DegenerateIndex(f"equal virtual energies for d = {D[i]}, {D[j]}")
    C_D = 1 / phi_M_rdqm(spec, M).at(0).re
    for k in range(1, M + 1):
        for j in range(1, k):
            C_D *= (Ev[j - 1] - Ev[k - 1]) / (al * B_prime_at(spec, j - 1))
    out = {"C_D": C_D}
    if n is not None:
        En = _energy(spec, n)
        d2 = phi_M_rdqm(spec, M).at(0).re / phi_M_rdqm(spec, M + 1).at(0).re
        for j in range(1, M + 1):
            if En == Ev[j - 1]:
                raise DegenerateIndex(f"E_{n} equals a virtual energy in D")
            d2 *= (En - Ev[j - 1]) / (al * B_prime_at(spec, j - 1))
        out["d2"] = d2
        out["C_Dn"] = (-1) ** M * C_D * d2
    return out


# idQM auxiliary data -----------------------------------------------------

def _pair(spec: FamilySpec, t: TwistType):
    a1, a2, a3, a4 = spec.params
    return (a1, a2) if t is TwistType.I else (a3, a4)


def _other(t: TwistType) -> TwistType:
    return TwistType.II if t is TwistType.I else TwistType.I


def U_check(spec: FamilySpec, t: TwistType) -> LatticeFun:
    x = spec.sym()
    ak = _pair(spec, t)
    out = spec.const(1)
    if spec.id is FamilyId.W:
        for a in ak:
            out = out * (x + a) * (a - x)
        return out
    zinv = spec.sym_inv()
    for a in ak:
        out = out * (1 - x * a) * (1 - zinv * a)
    return out / (ak[0] * ak[1])


def U_eta(spec: FamilySpec, t: TwistType) -> EtaPoly:
    e = EtaPoly.eta()
    out = EtaPoly([1])
    for a in _pair(spec, t):
        out = out * (e + a * a if spec.id is FamilyId.W else e * -2 + (a + 1 / a))
    return out


def S_check(spec: FamilySpec) -> LatticeFun:
    """-i(V phi(x - i gamma/2) - V* phi(x + i gamma/2)), divided out exactly."""
    pot = potentials(spec)
    ph = phi(spec)
    expr = (pot.V * lat_shift(ph, -mpq(1, 2)) - pot.V_star * lat_shift(ph, mpq(1, 2))) * (-I)
    return expr.to_fun()


def S_eta(spec: FamilySpec) -> EtaPoly:
    if spec.id is FamilyId.W:
        return EtaPoly([-spec.b3, spec.b1])
    return EtaPoly([spec.b3 - spec.b1, 2 * (1 - spec.b4)]) / spec.sqrt_q


def v_funcs(spec: FamilySpec, t: TwistType) -> tuple[LatticeFun, LatticeFun]:
    """(v1, v2) for a type-t seed; type II swaps the parameter pairs."""
    x = spec.sym()
    out = []
    for pair in (_pair(spec, t), _pair(spec, _other(t))):
        f = spec.const(1)
        if spec.id is FamilyId.W:
            for a in pair:
                f = f * (x + a)
        else:
            for a in pair:
                f = f * (1 - x * a)
            f = f * spec.sym_inv()
        out.append(f)
    return out[0], out[1]


def r_idqm(spec: FamilySpec, t: TwistType, j: int, M: int) -> LatticeFun:
    """r^t_j(x^(M)_j; lambda, M) as a function of x."""
    x = spec.sym()
    h = mpq(M - 1, 2)
    shifted = spec.shift_tilde(M - 1, t)
    if spec.id is FamilyId.W:
        pref = mpq(1)
    else:
        # alpha(lambda + (M-1) delta~)^(-(M-1)/2)
        root = alpha_sqrt(shifted, t)
        pref = root ** (-(M - 1))
    pref = pref * spec.kappa_pow(mpq((M - 1) ** 2, 2) - (j - 1) * (M - j))
    out = spec.const(pref)
    if spec.id is FamilyId.W:
        for a in _pair(spec, t):
            out = out * poch(x + (a - h), j - 1) * poch((a - h) - x, M - j)
        return out
    zinv = spec.sym_inv()
    qh = spec.qpow(-h)
    out = out * LatticeFun.monomial(M + 1 - 2 * j, 1, spec.model)
    for a in _pair(spec, t):
        out = out * qpoch(x * (a * qh), j - 1, spec.q) * qpoch(zinv * (a * qh), M - j, spec.q)
    return out


def phi_M_idqm(spec: FamilySpec, M: int) -> LatticeFun:
    """Floor-exponent product form."""
    ph = phi(spec)
    out = ph ** (M // 2) if M >= 2 else spec.const(1)
    for k in range(1, M - 1):
        pair = lat_shift(ph, -mpq(k, 2)) * lat_shift(ph, mpq(k, 2))
        out = out * pair ** ((M - k) // 2)
    return out


def phi_M_idqm_eta_form(spec: FamilySpec, M: int) -> LatticeFun:
    e = eta(spec)
    ph = phi(spec)
    num = spec.const(1)
    den = gs(1)
    for k in range(1, M + 1):
        for j in range(1, k):
            num = num * (lat_shift(e, mpq(M + 1, 2) - j) - lat_shift(e, mpq(M + 1, 2) - k))
            den = den * lat_shift(ph, mpq(j, 2)).at(0)
    if spec.id is FamilyId.AW:
        num = num * (-2) ** (M * (M - 1) // 2)
    return num / den


def ell_D(D: Sequence[int]) -> int:
    M = len(D)
    return sum(D) - M * (M - 1) // 2


def xi_eta(spec: FamilySpec, v: int, t: TwistType = TwistType.UNIT) -> EtaPoly:
    """xi_v as an eta-polynomial (families whose eta is parameter free)."""
    return eta_expand(build_xi(spec, v, t), eta(spec))


def P_eta(spec: FamilySpec, n: int) -> EtaPoly:
    return eta_expand(build_Pn(spec, n), eta(spec))


def aux_tables(spec: FamilySpec, M_size: int | None = None, j: int | None = None,
               t: TwistType | None = None) -> dict:
    """The auxiliary functions of a family gathered in one record.

    r_j and phi_M appear only when the size (and j) are given; idQM r_j also
    needs the twist type.
    """
    e, ph = eta(spec), phi(spec)
    if (lat_shift(e, 1) - e) != ph * e.at(1) and not spec.is_idqm:
        raise AssertionError("phi is not the normalized first difference of eta")
    out = {"phi": ph, "eta": e}
    if spec.is_idqm:
        pot = potentials(spec)
        out.update(V=pot.V, V_star=pot.V_star, S=S_check(spec))
        for tt in (TwistType.I, TwistType.II):
            out[f"U_{tt.value}"] = U_check(spec, tt)
            out[f"alpha_{tt.value}"] = alpha(spec, tt)
            out[f"alpha_prime_{tt.value}"] = alpha_prime(spec, tt)
        if t is not None:
            out["v1"], out["v2"] = v_funcs(spec, t)
        if M_size is not None:
            out["phi_M"] = phi_M_idqm(spec, M_size)
            if j is not None:
                if t is None:
                    raise ValueError("idQM r_j needs a twist type")
                out["r_j"] = r_idqm(spec, t, j, M_size)
        return out
    tw = potentials(spec.twist())
    out.update(B_prime=tw.B, D_prime=tw.D, alpha=alpha(spec), alpha_prime=alpha_prime(spec))
    if M_size is not None:
        out["phi_M"] = phi_M_rdqm(spec, M_size)
        if j is not None:
            out["r_j"] = r_rdqm(spec, j, M_size)
    return out

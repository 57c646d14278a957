"""Exact scalars, Laurent lattice functions, eta-polynomials and determinants.

Everything here is immutable once built. Coefficients are Gaussian rationals
with ``gmpy2.mpq`` parts; the lattice variable lives in one of four
coordinate models that tell ``lat_shift`` how a shift of x acts on the base
symbol.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import gmpy2
from gmpy2 import mpq

Rational = type(mpq(0))
_MPZ = type(gmpy2.mpz(0))
_ZERO = mpq(0)
_ONE = mpq(1)


class MalformedRational(ValueError):
    pass


class NonExactDivision(ArithmeticError):
    def __init__(self, detail: str = ""):
        super().__init__("non-exact division" + (f": {detail}" if detail else ""))


class NotEtaPolynomial(ValueError):
    def __init__(self, detail: str = ""):
        super().__init__("not a polynomial in η" + (f": {detail}" if detail else ""))


class UnrepresentableShift(ValueError):
    pass


class StarUndefined(ValueError):
    pass


def as_rational(value) -> Rational:
    """Convert int, Fraction, mpq or a ``"p/q"`` string to an exact rational."""
    if isinstance(value, Rational):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, _MPZ)):
        return mpq(value)
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, str):
        text = value.strip()
        try:
            num, _, den = text.partition("/")
            if not num or (den == "" and "/" in text):
                raise ValueError
            return mpq(int(num), int(den)) if den else mpq(int(num))
        except (ValueError, ZeroDivisionError):
            raise MalformedRational(f"malformed rational {value!r}") from None
    raise TypeError(f"cannot use {type(value).__name__} as an exact rational")


def rational_sqrt(value) -> Rational | None:
    """Exact non-negative square root, or None when it is irrational."""
    r = as_rational(value)
    if r < 0:
        return None
    num, den = r.numerator, r.denominator
    if not (gmpy2.is_square(num) and gmpy2.is_square(den)):
        return None
    return mpq(gmpy2.isqrt(num), gmpy2.isqrt(den))


def rational_text(r: Rational) -> str:
    return str(r)


class GaussScalar:
    """Gaussian rational re + im*i."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = as_rational(re)
        self.im = as_rational(im)

    @staticmethod
    def _raw(re, im) -> "GaussScalar":
        g = object.__new__(GaussScalar)
        g.re = re
        g.im = im
        return g

    def conj(self) -> "GaussScalar":
        return GaussScalar._raw(self.re, -self.im)

    def is_real(self) -> bool:
        return not self.im

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __neg__(self):
        return GaussScalar._raw(-self.re, -self.im)

    def __add__(self, o):
        if type(o) is not GaussScalar:
            o = _coerce(o)
            if o is NotImplemented:
                return o
        return GaussScalar._raw(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        if type(o) is not GaussScalar:
            o = _coerce(o)
            if o is NotImplemented:
                return o
        return GaussScalar._raw(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        o = _coerce(o)
        if o is NotImplemented:
            return o
        return o - self

    def __mul__(self, o):
        if type(o) is not GaussScalar:
            o = _coerce(o)
            if o is NotImplemented:
                return o
        a, b, c, d = self.re, self.im, o.re, o.im
        if not b and not d:
            return GaussScalar._raw(a * c, _ZERO)
        return GaussScalar._raw(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def inverse(self) -> "GaussScalar":
        a, b = self.re, self.im
        if not b:
            if not a:
                raise ZeroDivisionError("division by zero scalar")
            return GaussScalar._raw(1 / a, _ZERO)
        n = a * a + b * b
        return GaussScalar._raw(a / n, -b / n)

    def __truediv__(self, o):
        if type(o) is not GaussScalar:
            o = _coerce(o)
            if o is NotImplemented:
                return o
        return self * o.inverse()

    def __rtruediv__(self, o):
        o = _coerce(o)
        if o is NotImplemented:
            return o
        return o * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("integer exponents only")
        if k < 0:
            return self.inverse() ** (-k)
        result = GaussScalar._raw(_ONE, _ZERO)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, o):
        if type(o) is not GaussScalar:
            o = _coerce(o)
            if o is NotImplemented:
                return False
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"GaussScalar({self.to_text()})"

    def to_text(self) -> str:
        if not self.im:
            return str(self.re)
        sign = "-" if self.im < 0 else "+"
        return f"{self.re}{sign}{abs(self.im)}*i"

    @staticmethod
    def from_text(text: str) -> "GaussScalar":
        s = text.strip().replace(" ", "")
        if not s.endswith("*i"):
            return GaussScalar(as_rational(s))
        body = s[:-2]
        cut = max(body.rfind("+"), body.rfind("-"))
        if cut <= 0:
            return GaussScalar(0, as_rational(body))
        return GaussScalar(as_rational(body[:cut]), as_rational(body[cut:]))


def _coerce(o):
    if type(o) is GaussScalar:
        return o
    if isinstance(o, (Rational, int, _MPZ, Fraction)) and not isinstance(o, bool):
        return GaussScalar._raw(as_rational(o), _ZERO)
    return NotImplemented


def gs(value) -> GaussScalar:
    """Coerce to GaussScalar; strings use the canonical text encoding."""
    if isinstance(value, str):
        return GaussScalar.from_text(value)
    g = _coerce(value)
    if g is NotImplemented:
        raise TypeError(f"not a scalar: {value!r}")
    return g


ZERO = GaussScalar._raw(_ZERO, _ZERO)
ONE = GaussScalar._raw(_ONE, _ZERO)
I = GaussScalar._raw(_ZERO, _ONE)


def i_power(k: int) -> GaussScalar:
    return (ONE, I, -ONE, -I)[k % 4]


ADDITIVE_X = "additive-x"
ADDITIVE_Y = "additive-y"
MULTIPLICATIVE_T = "multiplicative-t"
MULTIPLICATIVE_Z = "multiplicative-z"
_KINDS = (ADDITIVE_X, ADDITIVE_Y, MULTIPLICATIVE_T, MULTIPLICATIVE_Z)


@dataclass(frozen=True)
class CoordModel:
    """How the base symbol of a lattice function responds to shifts of x.

    additive-x: symbol x. additive-y: symbol y = i*x with shifts x -> x + i*c.
    multiplicative-t: symbol t = q**x. multiplicative-z: symbol z = exp(i*x)
    with shifts x -> x + i*c*log(q).
    """

    kind: str
    sqrt_q: Rational | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown coordinate model {self.kind!r}")
        if self.multiplicative:
            if self.sqrt_q is None:
                raise ValueError("multiplicative models need sqrt_q")
            s = as_rational(self.sqrt_q)
            if not 0 < s < 1:
                raise ValueError("sqrt_q must lie in (0, 1)")
            object.__setattr__(self, "sqrt_q", s)
        elif self.sqrt_q is not None:
            object.__setattr__(self, "sqrt_q", as_rational(self.sqrt_q))

    @property
    def multiplicative(self) -> bool:
        return self.kind in (MULTIPLICATIVE_T, MULTIPLICATIVE_Z)

    @property
    def additive(self) -> bool:
        return not self.multiplicative

    @property
    def q(self) -> Rational:
        return self.sqrt_q * self.sqrt_q

    def symbol_scale(self, step) -> Rational:
        """Factor multiplying the base symbol under a multiplicative shift."""
        twice = as_rational(step) * 2
        if twice.denominator != 1:
            raise UnrepresentableShift(f"unrepresentable shift {step} on {self.kind}")
        k = int(twice)
        return self.sqrt_q ** (k if self.kind == MULTIPLICATIVE_T else -k)


class LatticeFun:
    """Laurent polynomial in the model's base symbol."""

    __slots__ = ("coeffs", "model")

    def __init__(self, coeffs: dict | Iterable = (), model: CoordModel | None = None):
        if model is None:
            raise ValueError("LatticeFun needs a coordinate model")
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        clean = {}
        for e, c in items:
            c = gs(c)
            if c:
                clean[int(e)] = c
        if model.additive and clean and min(clean) < 0:
            raise ValueError("negative exponent on an additive model")
        self.coeffs = clean
        self.model = model

    @staticmethod
    def _make(coeffs: dict, model: CoordModel) -> "LatticeFun":
        f = object.__new__(LatticeFun)
        f.coeffs = coeffs
        f.model = model
        return f

    @staticmethod
    def const(c, model: CoordModel) -> "LatticeFun":
        c = gs(c)
        return LatticeFun._make({0: c} if c else {}, model)

    @staticmethod
    def monomial(e: int, c, model: CoordModel) -> "LatticeFun":
        return LatticeFun({e: c}, model)

    @staticmethod
    def symbol(model: CoordModel) -> "LatticeFun":
        return LatticeFun._make({1: ONE}, model)

    def zero(self) -> "LatticeFun":
        return LatticeFun._make({}, self.model)

    def one(self) -> "LatticeFun":
        return LatticeFun._make({0: ONE}, self.model)

    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int | None:
        """Top exponent; None for the zero function."""
        return max(self.coeffs) if self.coeffs else None

    def valuation(self) -> int | None:
        return min(self.coeffs) if self.coeffs else None

    def coeff(self, e: int) -> GaussScalar:
        return self.coeffs.get(e, ZERO)

    def is_real(self) -> bool:
        return all(not c.im for c in self.coeffs.values())

    def _same(self, o: "LatticeFun"):
        if o.model is not self.model and o.model != self.model:
            raise ValueError(f"model mismatch: {self.model} vs {o.model}")

    def _lift(self, o):
        if isinstance(o, LatticeFun):
            self._same(o)
            return o
        g = _coerce(o)
        if g is NotImplemented:
            return g
        return LatticeFun._make({0: g} if g else {}, self.model)

    def __neg__(self):
        return LatticeFun._make({e: -c for e, c in self.coeffs.items()}, self.model)

    def __add__(self, o):
        o = self._lift(o)
        if o is NotImplemented:
            return o
        acc = dict(self.coeffs)
        for e, c in o.coeffs.items():
            v = acc.get(e)
            if v is None:
                acc[e] = c
            else:
                v = v + c
                if v:
                    acc[e] = v
                else:
                    del acc[e]
        return LatticeFun._make(acc, self.model)

    __radd__ = __add__

    def __sub__(self, o):
        o = self._lift(o)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, o):
        o = self._lift(o)
        if o is NotImplemented:
            return o
        return o - self

    def __mul__(self, o):
        if not isinstance(o, LatticeFun):
            g = _coerce(o)
            if g is NotImplemented:
                return g
            if not g:
                return self.zero()
            return LatticeFun._make({e: c * g for e, c in self.coeffs.items()}, self.model)
        self._same(o)
        acc: dict[int, GaussScalar] = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in o.coeffs.items():
                e = e1 + e2
                p = c1 * c2
                v = acc.get(e)
                acc[e] = p if v is None else v + p
        return LatticeFun._make({e: c for e, c in acc.items() if c}, self.model)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, LatticeFun):
            return exact_div(self, o)
        g = _coerce(o)
        if g is NotImplemented:
            return g
        inv = g.inverse()
        return LatticeFun._make({e: c * inv for e, c in self.coeffs.items()}, self.model)

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not lattice polynomials")
        result = self.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, o):
        if isinstance(o, LatticeFun):
            return self.model == o.model and self.coeffs == o.coeffs
        g = _coerce(o)
        if g is NotImplemented:
            return False
        return self.coeffs == ({0: g} if g else {})

    def __hash__(self):
        return hash((self.model, frozenset(self.coeffs.items())))

    def __repr__(self):
        body = " + ".join(f"({c.to_text()})*s^{e}" for e, c in sorted(self.coeffs.items()))
        return f"LatticeFun[{self.model.kind}]({body or '0'})"

    def shift(self, step) -> "LatticeFun":
        return lat_shift(self, step)

    def star(self) -> "LatticeFun":
        return lat_star(self)

    def conj_coeffs(self) -> "LatticeFun":
        return LatticeFun._make({e: c.conj() for e, c in self.coeffs.items()}, self.model)

    def subs(self, value) -> GaussScalar:
        """Evaluate at a given value of the base symbol."""
        v = gs(value)
        total = ZERO
        for e, c in self.coeffs.items():
            total = total + c * v ** e
        return total

    def at(self, x) -> GaussScalar:
        """Evaluate at a real lattice point x (x = 0 only for the z model)."""
        x = as_rational(x)
        kind = self.model.kind
        if kind == ADDITIVE_X:
            return self.subs(x)
        if kind == ADDITIVE_Y:
            return self.subs(GaussScalar._raw(_ZERO, x))
        if kind == MULTIPLICATIVE_T:
            return self.subs(self.model.symbol_scale(x))
        if x:
            raise ValueError("z = exp(ix) is rational only at x = 0")
        return self.subs(ONE)

    def to_json(self) -> dict:
        return {str(e): self.coeffs[e].to_text() for e in sorted(self.coeffs)}


def lat_shift(f: LatticeFun, step) -> LatticeFun:
    """Realize x -> x + step (imaginary steps in units of gamma for idQM models)."""
    step = as_rational(step)
    model = f.model
    if not step or not f.coeffs:
        return f
    if model.multiplicative:
        scale = model.symbol_scale(step)
        return LatticeFun._make({e: c * scale ** e for e, c in f.coeffs.items()}, model)
    h = step if model.kind == ADDITIVE_X else -step
    # Horner in (symbol + h)
    result: list[GaussScalar] = []
    for e in range(max(f.coeffs), -1, -1):
        # result <- result*(s+h) + c_e ; result stored low-to-high
        shifted = [ZERO] + result
        for k, c in enumerate(result):
            shifted[k] = shifted[k] + c * h
        shifted[0] = shifted[0] + f.coeffs.get(e, ZERO)
        result = shifted
    return LatticeFun._make({e: c for e, c in enumerate(result) if c}, model)


def lat_star(f: LatticeFun) -> LatticeFun:
    """Coefficient conjugation plus y -> -y or z -> 1/z (idQM models only)."""
    kind = f.model.kind
    if kind == ADDITIVE_Y:
        return LatticeFun._make(
            {e: (c.conj() if e % 2 == 0 else -c.conj()) for e, c in f.coeffs.items()}, f.model)
    if kind == MULTIPLICATIVE_Z:
        return LatticeFun._make({-e: c.conj() for e, c in f.coeffs.items()}, f.model)
    raise StarUndefined(f"star undefined on {kind}")


def exact_div(num: LatticeFun, den: LatticeFun) -> LatticeFun:
    """Quotient of Laurent polynomials; raises NonExactDivision on a remainder."""
    num._same(den)
    if den.is_zero():
        raise ZeroDivisionError("division by the zero lattice function")
    if num.is_zero():
        return num
    model = num.model
    dtop = max(den.coeffs)
    lead_inv = den.coeffs[dtop].inverse()
    floor = min(num.coeffs) - min(den.coeffs)
    if model.additive and floor < 0:
        floor = 0
    den_items = list(den.coeffs.items())
    rem = dict(num.coeffs)
    quot: dict[int, GaussScalar] = {}
    while rem:
        e = max(rem)
        k = e - dtop
        if k < floor:
            raise NonExactDivision(f"remainder with top exponent {e}")
        c = rem[e] * lead_inv
        quot[k] = c
        for de, dc in den_items:
            t = de + k
            v = rem.get(t, ZERO) - dc * c
            if v:
                rem[t] = v
            else:
                rem.pop(t, None)
    return LatticeFun._make(quot, model)


class LatticeRat:
    """Ratio of lattice functions with a monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num: LatticeFun, den: LatticeFun | None = None):
        if den is None:
            den = num.one()
        num._same(den)
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        lead = den.coeffs[max(den.coeffs)]
        if lead != ONE:
            inv = lead.inverse()
            num = num * inv
            den = den * inv
        self.num = num
        self.den = den

    @property
    def model(self):
        return self.num.model

    def _lift(self, o):
        if isinstance(o, LatticeRat):
            return o
        if isinstance(o, LatticeFun):
            return LatticeRat(o)
        g = _coerce(o)
        if g is NotImplemented:
            return g
        return LatticeRat(LatticeFun.const(g, self.model))

    def __add__(self, o):
        o = self._lift(o)
        if o is NotImplemented:
            return o
        if self.den == o.den:
            return LatticeRat(self.num + o.num, self.den)
        return LatticeRat(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return LatticeRat(-self.num, self.den)

    def __sub__(self, o):
        o = self._lift(o)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        o = self._lift(o)
        if o is NotImplemented:
            return o
        return LatticeRat(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = self._lift(o)
        if o is NotImplemented:
            return o
        return LatticeRat(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, o):
        return self._lift(o) / self

    def __pow__(self, k: int):
        if k >= 0:
            return LatticeRat(self.num ** k, self.den ** k)
        return LatticeRat(self.den ** -k, self.num ** -k)

    def __eq__(self, o):
        o = self._lift(o)
        if o is NotImplemented:
            return False
        return self.num * o.den == o.num * self.den

    __hash__ = None

    def shift(self, step) -> "LatticeRat":
        return LatticeRat(lat_shift(self.num, step), lat_shift(self.den, step))

    def star(self) -> "LatticeRat":
        return LatticeRat(lat_star(self.num), lat_star(self.den))

    def at(self, x) -> GaussScalar:
        d = self.den.at(x)
        if not d:
            raise ZeroDivisionError(f"pole at x = {x}")
        return self.num.at(x) / d

    def to_fun(self) -> LatticeFun:
        return exact_div(self.num, self.den)

    def __repr__(self):
        return f"LatticeRat({self.num!r} / {self.den!r})"


class EtaPoly:
    """Dense polynomial in the sinusoidal coordinate; index = power of eta."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence = ()):
        cs = [gs(c) for c in coeffs]
        while cs and not cs[-1]:
            cs.pop()
        self.coeffs = tuple(cs)

    @staticmethod
    def _make(cs: list) -> "EtaPoly":
        while cs and not cs[-1]:
            cs.pop()
        p = object.__new__(EtaPoly)
        p.coeffs = tuple(cs)
        return p

    def zero(self) -> "EtaPoly":
        return EtaPoly._make([])

    def one(self) -> "EtaPoly":
        return EtaPoly._make([ONE])

    @staticmethod
    def eta() -> "EtaPoly":
        return EtaPoly._make([ZERO, ONE])

    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int | None:
        return len(self.coeffs) - 1 if self.coeffs else None

    def is_real(self) -> bool:
        return all(not c.im for c in self.coeffs)

    def _lift(self, o):
        if isinstance(o, EtaPoly):
            return o
        g = _coerce(o)
        if g is NotImplemented:
            return g
        return EtaPoly._make([g])

    def __neg__(self):
        return EtaPoly._make([-c for c in self.coeffs])

    def __add__(self, o):
        o = self._lift(o)
        if o is NotImplemented:
            return o
        a, b = self.coeffs, o.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for k, c in enumerate(b):
            out[k] = out[k] + c
        return EtaPoly._make(out)

    __radd__ = __add__

    def __sub__(self, o):
        o = self._lift(o)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if not isinstance(o, EtaPoly):
            g = _coerce(o)
            if g is NotImplemented:
                return g
            return EtaPoly._make([c * g for c in self.coeffs])
        if not self.coeffs or not o.coeffs:
            return EtaPoly._make([])
        out = [ZERO] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j, b in enumerate(o.coeffs):
                out[i + j] = out[i + j] + a * b
        return EtaPoly._make(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power of an eta-polynomial")
        result = self.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __truediv__(self, o):
        if isinstance(o, EtaPoly):
            return eta_div(self, o)
        g = _coerce(o)
        if g is NotImplemented:
            return g
        inv = g.inverse()
        return EtaPoly._make([c * inv for c in self.coeffs])

    def __eq__(self, o):
        o = self._lift(o)
        if o is NotImplemented:
            return False
        return self.coeffs == o.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"EtaPoly([{', '.join(c.to_text() for c in self.coeffs)}])"

    def __call__(self, value) -> GaussScalar:
        v = gs(value)
        total = ZERO
        for c in reversed(self.coeffs):
            total = total * v + c
        return total

    def compose(self, eta: LatticeFun) -> LatticeFun:
        """Substitute a lattice function for eta (Horner)."""
        result = eta.zero()
        for c in reversed(self.coeffs):
            result = result * eta + c
        return result

    def to_json(self) -> dict:
        return {str(k): c.to_text() for k, c in enumerate(self.coeffs) if c}

    @staticmethod
    def from_json(data: dict) -> "EtaPoly":
        if not data:
            return EtaPoly()
        top = max(int(k) for k in data)
        cs = [ZERO] * (top + 1)
        for k, v in data.items():
            cs[int(k)] = GaussScalar.from_text(v)
        return EtaPoly(cs)


def eta_div(num: EtaPoly, den: EtaPoly) -> EtaPoly:
    if den.is_zero():
        raise ZeroDivisionError("division by the zero eta-polynomial")
    rem = list(num.coeffs)
    dn = len(den.coeffs) - 1
    lead_inv = den.coeffs[-1].inverse()
    if len(rem) - 1 < dn:
        if rem:
            raise NonExactDivision("numerator degree below denominator degree")
        return EtaPoly._make([])
    quot = [ZERO] * (len(rem) - dn)
    for k in range(len(rem) - 1, dn - 1, -1):
        c = rem[k] * lead_inv
        if not c:
            continue
        quot[k - dn] = c
        for j, d in enumerate(den.coeffs):
            rem[k - dn + j] = rem[k - dn + j] - d * c
    if any(rem[:dn]):
        raise NonExactDivision("nonzero remainder in eta")
    return EtaPoly._make(quot)


def eta_expand(f: LatticeFun, eta: LatticeFun) -> EtaPoly:
    """Rewrite f as p(eta) by eliminating the top exponent repeatedly."""
    f._same(eta)
    top = eta.degree()
    if top is None or top <= 0:
        raise ValueError("eta must have a positive top exponent")
    lead = eta.coeffs[top]
    powers = [eta.one()]
    rem = f
    out: dict[int, GaussScalar] = {}
    while not rem.is_zero():
        e = rem.degree()
        if e < 0 or e % top:
            raise NotEtaPolynomial(f"stray exponent {e}")
        k = e // top
        while len(powers) <= k:
            powers.append(powers[-1] * eta)
        c = rem.coeffs[e] / lead ** k
        out[k] = c
        rem = rem - powers[k] * c
    if not out:
        return EtaPoly._make([])
    cs = [ZERO] * (max(out) + 1)
    for k, c in out.items():
        cs[k] = c
    return EtaPoly._make(cs)


@dataclass(frozen=True)
class PolyMatrix:
    """Square or rectangular matrix of LatticeFun or EtaPoly entries."""

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.entries)
        if not rows or not rows[0]:
            raise ValueError("empty matrix")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("ragged matrix")
        kinds = {type(e) for r in rows for e in r}
        if len(kinds) != 1 or not kinds <= {LatticeFun, EtaPoly}:
            raise ValueError("entries must all be LatticeFun or all EtaPoly")
        if LatticeFun in kinds:
            model = rows[0][0].model
            if any(e.model != model for r in rows for e in r):
                raise ValueError("entries must share one coordinate model")
        object.__setattr__(self, "entries", rows)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])


def lat_det(m):
    """Cofactor expansion along rows with memoized minors."""
    rows = m.entries if isinstance(m, PolyMatrix) else PolyMatrix(m).entries
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("determinant of a non-square matrix")
    zero = rows[0][0].zero()
    one = rows[0][0].one()
    memo: dict[tuple, object] = {}

    def minor(cols: tuple):
        r = n - len(cols)
        if r == n:
            return one
        hit = memo.get(cols)
        if hit is not None:
            return hit
        total = zero
        for idx, c in enumerate(cols):
            entry = rows[r][c]
            if entry.is_zero():
                continue
            sub = minor(cols[:idx] + cols[idx + 1:])
            if sub.is_zero():
                continue
            term = entry * sub
            total = total + term if idx % 2 == 0 else total - term
        memo[cols] = total
        return total

    return minor(tuple(range(n)))


def fingerprint(obj) -> str:
    """Short hash of a canonical JSON serialization."""
    if hasattr(obj, "to_json"):
        obj = obj.to_json()
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def first_difference(a, b):
    """Witness (exponent, lhs, rhs) of the first differing coefficient, or None."""
    if isinstance(a, EtaPoly) and isinstance(b, EtaPoly):
        n = max(len(a.coeffs), len(b.coeffs))
        for k in range(n):
            x = a.coeffs[k] if k < len(a.coeffs) else ZERO
            y = b.coeffs[k] if k < len(b.coeffs) else ZERO
            if x != y:
                return k, x.to_text(), y.to_text()
        return None
    for e in sorted(set(a.coeffs) | set(b.coeffs)):
        x, y = a.coeff(e), b.coeff(e)
        if x != y:
            return e, x.to_text(), y.to_text()
    return None

"""Forward/backward shift operators and the identities they satisfy.

Every operator is applied in cleared form: the combination is assembled as a
LatticeRat and then divided out exactly. A remainder surfaces as
NonExactDivision, which the checks below record as a failed identity.

Shift conventions. rdQM: e^{+d/dx} sends f(x) to f(x+1). idQM: e^{gamma p/2}
sends f(x) to f(x - i gamma/2), which is lat_shift(f, -1/2).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from gmpy2 import mpq

from .exact_core import (
    I, LatticeFun, LatticeRat, NonExactDivision, first_difference, fingerprint,
    lat_shift, lat_star,
)
from . import families as fam
from .families import FamilyId, FamilySpec, TwistType

HALF = mpq(1, 2)


class OpKind(str, Enum):
    FORWARD = "forward"
    BACKWARD = "backward"
    HAMILTONIAN = "hamiltonian"
    FORWARD_PRIMED = "forward-primed"
    BACKWARD_PRIMED = "backward-primed"
    IDQM_FORWARD = "idqm-forward"
    IDQM_BACKWARD = "idqm-backward"
    IDQM_XI_FORWARD = "idqm-xi-forward"
    IDQM_XI_BACKWARD = "idqm-xi-backward"


_IDQM_KINDS = (OpKind.IDQM_FORWARD, OpKind.IDQM_BACKWARD,
               OpKind.IDQM_XI_FORWARD, OpKind.IDQM_XI_BACKWARD)


@dataclass(frozen=True)
class ShiftOperator:
    """A shift operator at lambda + offset*delta (or offset*delta_tilde).

    For the primed kinds (and idQM operators carrying a twist) the operator
    is the plain one at the twisted parameters.
    """

    kind: OpKind
    spec: FamilySpec
    offset: object = 0
    tilde: bool = False
    twist: TwistType | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", OpKind(self.kind))
        idqm_kind = self.kind in _IDQM_KINDS
        if self.kind is OpKind.HAMILTONIAN:
            return
        if idqm_kind != self.spec.is_idqm:
            raise ValueError(f"{self.kind.value} does not apply to {self.spec.id.value}")
        if self.kind in (OpKind.IDQM_XI_FORWARD, OpKind.IDQM_XI_BACKWARD) and self.twist is None:
            raise ValueError("xi shift operators need a twist type")

    @property
    def params(self) -> FamilySpec:
        """The parameter point the operator is built at."""
        t = self.twist or (TwistType.UNIT if not self.spec.is_idqm else TwistType.I)
        base = self.spec.shift_tilde(self.offset, t) if self.tilde else self.spec.shift(self.offset)
        if self.kind in (OpKind.FORWARD_PRIMED, OpKind.BACKWARD_PRIMED):
            return base.twist(t)
        if self.kind in (OpKind.IDQM_FORWARD, OpKind.IDQM_BACKWARD) and self.twist is not None:
            return base.twist(self.twist)
        return base


def _rat(f) -> LatticeRat:
    return f if isinstance(f, LatticeRat) else LatticeRat(f)


def _scalar(g) -> object:
    return g.re if g.is_real() else g


def apply(op: ShiftOperator, f: LatticeFun) -> LatticeFun:
    """Apply op to f and return the exact lattice function."""
    return apply_rat(op, f).to_fun()


def apply_rat(op: ShiftOperator, f) -> LatticeRat:
    lam = op.params
    f = _rat(f)
    kind = op.kind
    if kind is OpKind.HAMILTONIAN:
        return hamiltonian(lam, f)
    if kind in (OpKind.FORWARD, OpKind.FORWARD_PRIMED):
        b0 = fam.potentials(lam).B.at(0)
        return (f - f.shift(1)) * b0 / fam.phi(lam)
    if kind in (OpKind.BACKWARD, OpKind.BACKWARD_PRIMED):
        pot = fam.potentials(lam)
        b0 = pot.B.at(0)
        g = f * fam.phi(lam)
        return (pot.B * g - pot.D * g.shift(-1)) / b0
    if kind is OpKind.IDQM_FORWARD:
        return (f.shift(-HALF) - f.shift(HALF)) * I / fam.phi(lam)
    if kind is OpKind.IDQM_BACKWARD:
        pot = fam.potentials(lam)
        g = f * fam.phi(lam)
        return (pot.V * g.shift(-HALF) - pot.V_star * g.shift(HALF)) * (-I)
    t = op.twist
    if kind is OpKind.IDQM_XI_FORWARD:
        v1, _ = fam.v_funcs(lam.shift_tilde(1, t), t)
        return (f.shift(-HALF) * lat_star(v1) - f.shift(HALF) * v1) * I / fam.phi(lam)
    _, v2 = fam.v_funcs(lam, t)
    return (f.shift(-HALF) * v2 - f.shift(HALF) * lat_star(v2)) * I / fam.phi(lam)


def hamiltonian(lam: FamilySpec, f) -> LatticeRat:
    f = _rat(f)
    pot = fam.potentials(lam)
    if lam.is_idqm:
        return pot.V * (f.shift(-1) - f) + pot.V_star * (f.shift(1) - f)
    return pot.B * (f - f.shift(1)) + pot.D * (f - f.shift(-1))


# identity records ------------------------------------------------------------

@dataclass
class IdentityCheck:
    identity: str
    family: str
    index: object
    passed: bool
    residual: object = None
    lhs: str | None = None
    rhs: str | None = None
    skipped: str | None = None

    def to_json(self) -> dict:
        out = {"identity": self.identity, "family": self.family, "index": self.index,
               "status": "skip" if self.skipped else ("pass" if self.passed else "fail")}
        if self.skipped:
            out["reason"] = self.skipped
        if self.lhs is not None:
            out["lhs"] = self.lhs
            out["rhs"] = self.rhs
        if self.residual is not None:
            out["residual"] = self.residual
        return out


def compare(identity: str, spec: FamilySpec, index, lhs_fn: Callable, rhs_fn: Callable) -> IdentityCheck:
    """Evaluate both sides and record the outcome with a witness on failure."""
    name = spec.id.value
    try:
        lhs = lhs_fn()
        rhs = rhs_fn()
    except fam.MissingSplit as exc:
        return IdentityCheck(identity, name, index, False, skipped=f"needs split parameters ({exc})")
    except NonExactDivision as exc:
        return IdentityCheck(identity, name, index, False, residual=str(exc))
    if isinstance(lhs, LatticeRat) or isinstance(rhs, LatticeRat):
        lhs, rhs = _rat(lhs), _rat(rhs)
        lhs, rhs = lhs.num * rhs.den, rhs.num * lhs.den
    ok = lhs == rhs
    witness = None if ok else first_difference(lhs, rhs)
    return IdentityCheck(identity, name, index, ok, witness, fingerprint(lhs), fingerprint(rhs))


# rdQM checks -------------------------------------------------------------------

def _xi_forward_table(spec: FamilySpec, v: int):
    x = spec.sym()
    fid, p = spec.id, spec.params
    one = spec.const(1)
    if fid is FamilyId.M:
        beta, c = p
        return one, one / c, one * (-(1 - c) * (v + beta) / (c * beta))
    if fid in (FamilyId.LQL, FamilyId.LQJ):
        a = p[0]
        C = -(1 - a * spec.qpow(-v)) / a
        if fid is FamilyId.LQJ:
            b = p[1]
            C = C * (1 - b * spec.qpow(v + 1)) / (1 - b * spec.q)
        return one, one / a, one * C
    a, b, c, d = p
    if fid is FamilyId.R:
        return ((x + a) * (x + b), (x + (d - a + 1)) * (x + (d - b + 1)),
                (x * 2 + d + 1) * ((c + v) * (a + b - d - 1 - v) / c))
    q = spec.q
    return ((1 - x * a) * (1 - x * b),
            (1 - x * (d * q / a)) * (1 - x * (d * q / b)) * (a * b / (d * q)),
            (1 - x * x * (d * q)) * ((1 - c * spec.qpow(v)) * (1 - a * b / d * spec.qpow(-v - 1)) / (1 - c)))


def _xi_backward_table(spec: FamilySpec):
    x = spec.sym()
    fid, p = spec.id, spec.params
    one = spec.const(1)
    if fid is FamilyId.M:
        beta, c = p
        return x + beta, x, one * beta
    if fid is FamilyId.LQL:
        return one, 1 - x, x
    if fid is FamilyId.LQJ:
        b, q = p[1], spec.q
        return 1 - x * (b * q), 1 - x, x * (1 - b * q)
    a, b, c, d = p
    if fid is FamilyId.R:
        return (x + c) * (x + d), (x + (d - c)) * x, (x * 2 + d) * c
    return (1 - x * c) * (1 - x * d), (1 - x * (d / c)) * (1 - x) * c, (1 - x * x * d) * (1 - c)


def check_xi_shift_tables(spec: FamilySpec, v: int) -> list[IdentityCheck]:
    """Tabulated forward/backward shift relations of the virtual-state polynomials."""
    if spec.is_idqm:
        raise ValueError("tabulated xi shift relations are for rdQM families")
    up = spec.shift(1)
    A, B, C = _xi_forward_table(spec, v)
    fwd = compare("xi-forward-table", spec, v,
                  lambda: A * fam.build_xi(spec, v) - B * lat_shift(fam.build_xi(spec, v), 1),
                  lambda: C * fam.build_xi(up, v))
    A2, B2, C2 = _xi_backward_table(spec)
    bwd = compare("xi-backward-table", spec, v,
                  lambda: A2 * fam.build_xi(up, v) - B2 * lat_shift(fam.build_xi(up, v), -1),
                  lambda: C2 * fam.build_xi(spec, v))
    return [fwd, bwd]


def check_rdqm_shift_relations(spec: FamilySpec, n: int) -> list[IdentityCheck]:
    """Forward/backward shifts, H P = E P and both orderings of the factorization."""
    up = spec.shift(1)
    F = ShiftOperator(OpKind.FORWARD, spec)
    Bk = ShiftOperator(OpKind.BACKWARD, spec)
    P = fam.build_Pn(spec, n)
    E = fam.energy(spec, n)
    out = [
        compare("forward-shift", spec, n, lambda: apply(F, P), lambda: fam.build_Pn(up, n - 1) * E),
        compare("hamiltonian", spec, n, lambda: apply(ShiftOperator(OpKind.HAMILTONIAN, spec), P),
                lambda: P * E),
        compare("factorization-BF", spec, n, lambda: apply(Bk, apply(F, P)), lambda: P * E),
    ]
    if n >= 1:
        Pm = fam.build_Pn(up, n - 1)
        out.append(compare("backward-shift", spec, n, lambda: apply(Bk, Pm), lambda: P))
        out.append(compare("factorization-FB", spec, n, lambda: apply(F, apply(Bk, Pm)),
                           lambda: Pm * E))
    return out


def check_rdqm_primed(spec: FamilySpec, k: int) -> list[IdentityCheck]:
    """Primed engine on xi_v (v = k) and on nu*P_n (n = k), the latter nu-cleared."""
    tw = spec.twist()
    dn = spec.shift_tilde(1)
    Fp = ShiftOperator(OpKind.FORWARD_PRIMED, spec)
    Bp = ShiftOperator(OpKind.BACKWARD_PRIMED, spec)
    xi = fam.build_xi(spec, k)
    out = [
        compare("primed-forward-xi", spec, k, lambda: apply(Fp, xi),
                lambda: fam.build_xi(dn, k - 1) * fam.energy(tw, k)),
    ]
    if k >= 1:
        out.append(compare("primed-backward-xi", spec, k,
                           lambda: apply(Bp, fam.build_xi(dn, k - 1)), lambda: xi))
    # nu(x;l)/nu(x;l+dt) = r1 and nu(x+1;l)/nu(x;l+dt) = r2, both with M = 1
    r1 = fam.r_rdqm(spec, 1, 1)
    r2 = fam.r_rdqm(spec, 2, 1)
    P = fam.build_Pn(spec, k)
    P_dn = fam.build_Pn(dn, k)
    b0 = fam.potentials(tw).B.at(0)
    ph = fam.phi(spec)
    out.append(compare("primed-forward-nuP", spec, k,
                       lambda: (LatticeRat(r1 * P - r2 * lat_shift(P, 1)) * b0 / ph),
                       lambda: P_dn * fam.virtual_energy(tw, k)))
    pot = fam.potentials(tw)
    r2_back = lat_shift(r2, -1)  # nu(x;l)/nu(x-1;l+dt)
    out.append(compare("primed-backward-nuP", spec, k,
                       lambda: (pot.B * ph * P_dn / r1 - pot.D * lat_shift(ph, -1) * lat_shift(P_dn, -1)
                                / r2_back) / b0,
                       lambda: P))
    return out


def check_rdqm_structure(spec: FamilySpec) -> list[IdentityCheck]:
    """Parameter-independent structural identities of the rdQM data."""
    up = spec.shift(1)
    pot, pot_up = fam.potentials(spec), fam.potentials(up)
    ph = fam.phi(spec)
    e = fam.eta(spec)
    kinv = 1 / spec.kappa
    out = [
        compare("phi-from-eta", spec, None, lambda: ph * e.at(1), lambda: lat_shift(e, 1) - e),
        compare("B-ratio", spec, None, lambda: pot_up.B / pot.B.shift(1),
                lambda: LatticeRat(lat_shift(ph, 1)) / ph * kinv),
        compare("D-ratio", spec, None, lambda: pot_up.D / pot.D,
                lambda: LatticeRat(lat_shift(ph, -1)) / ph * kinv),
        compare("phiM-forms", spec, None, lambda: fam.phi_M_rdqm(spec, 4),
                lambda: fam.phi_M_eta_form(spec, 4)),
    ]
    if spec.id in (FamilyId.M, FamilyId.LQL, FamilyId.LQJ):
        out.append(compare("phiM-power-form", spec, None, lambda: fam.phi_M_rdqm(spec, 4),
                           lambda: fam.phi_M_power_form(spec, 4)))
    tw = spec.twist()
    out.append(compare("twist-eta", spec, None, lambda: fam.eta(tw), lambda: e))
    out.append(compare("twist-phi", spec, None, lambda: fam.phi(tw), lambda: ph))
    top = spec.N if spec.N is not None else 6
    al = fam.alpha(spec)
    tw_pot = fam.potentials(spec.twist())
    for x in range(top):
        out.append(_scalar_check("nu-relation", spec, x,
                                 lambda x=x: fam.nu_at(spec, x + 1) * al * tw_pot.B.at(x).re,
                                 lambda x=x: pot.B.at(x).re * fam.nu_at(spec, x)))
    for x in range(top + 1):
        out.append(_scalar_check("ground-state-squared", spec, x,
                                 lambda x=x: ph.at(x).re ** 2 * pot.B.at(x).re / pot.B.at(0).re
                                 * fam.phi0_squared(spec, x),
                                 lambda x=x: fam.phi0_squared(up, x)))
        out.append(_scalar_check("ground-state-closed-form", spec, x,
                                 lambda x=x: fam.phi0_squared(spec, x),
                                 lambda x=x: fam.phi0_squared_closed(spec, x)))
    return out


def _scalar_check(identity, spec, index, lhs_fn, rhs_fn) -> IdentityCheck:
    lhs, rhs = lhs_fn(), rhs_fn()
    ok = lhs == rhs
    return IdentityCheck(identity, spec.id.value, index, ok,
                         None if ok else (0, str(lhs), str(rhs)))


# idQM checks -------------------------------------------------------------------

def check_idqm_shift_relations(spec: FamilySpec, n: int) -> list[IdentityCheck]:
    up = spec.shift(1)
    F = ShiftOperator(OpKind.IDQM_FORWARD, spec)
    Bk = ShiftOperator(OpKind.IDQM_BACKWARD, spec)
    P = fam.build_Pn(spec, n)
    E = fam.energy(spec, n)
    out = [
        compare("forward-shift", spec, n, lambda: apply(F, P),
                lambda: fam.build_Pn(up, n - 1) * fam.f_factor(spec, n)),
        compare("hamiltonian", spec, n, lambda: hamiltonian(spec, P).to_fun(), lambda: P * E),
        compare("factorization-BF", spec, n, lambda: apply(Bk, apply(F, P)), lambda: P * E),
        compare("energy-factors", spec, n, lambda: spec.const(fam.f_factor(spec, n) * fam.b_factor(spec, n)),
                lambda: spec.const(E)),
    ]
    if n >= 1:
        Pm = fam.build_Pn(up, n - 1)
        out.append(compare("backward-shift", spec, n, lambda: apply(Bk, Pm),
                           lambda: P * fam.b_factor(spec, n)))
        out.append(compare("factorization-FB", spec, n, lambda: apply(F, apply(Bk, Pm)),
                           lambda: Pm * E))
    return out


def check_idqm_xi_shift(spec: FamilySpec, v: int, t: TwistType) -> list[IdentityCheck]:
    """Square-root free forward/backward relations of xi_v, with the v1/v2 functions."""
    up = spec.shift(1)
    Fx = ShiftOperator(OpKind.IDQM_XI_FORWARD, spec, twist=t)
    Bx = ShiftOperator(OpKind.IDQM_XI_BACKWARD, spec, twist=t)
    xi = fam.build_xi(spec, v, t)
    xi_up = fam.build_xi(up, v, t)
    idx = f"{v}{t.value}"
    return [
        compare("xi-forward-v1", spec, idx, lambda: apply(Fx, xi),
                lambda: xi_up * (fam.alpha_sqrt(spec, t) * fam.f_tilde(spec, v, t))),
        compare("xi-backward-v2", spec, idx, lambda: apply(Bx, xi_up),
                lambda: xi * (fam.b_tilde(spec, v, t) / fam.alpha_sqrt(spec, t))),
        compare("virtual-energy-factors", spec, idx,
                lambda: spec.const(fam.f_tilde(spec, v, t) * fam.b_tilde(spec, v, t)),
                lambda: spec.const(fam.virtual_energy(spec, v, t))),
    ]


def check_idqm_primed(spec: FamilySpec, k: int, t: TwistType) -> list[IdentityCheck]:
    """Single-type primed relations on xi_v and (nu-cleared) on nu*P_n."""
    tw = spec.twist(t)
    dn = spec.shift_tilde(1, t)
    Fp = ShiftOperator(OpKind.IDQM_FORWARD, spec, twist=t)
    Bp = ShiftOperator(OpKind.IDQM_BACKWARD, spec, twist=t)
    idx = f"{k}{t.value}"
    out = [compare("primed-forward-xi", spec, idx, lambda: apply(Fp, fam.build_xi(spec, k, t)),
                   lambda: fam.build_xi(dn, k - 1, t) * fam.f_factor(tw, k))]
    if k >= 1:
        out.append(compare("primed-backward-xi", spec, idx,
                           lambda: apply(Bp, fam.build_xi(dn, k - 1, t)),
                           lambda: fam.build_xi(spec, k, t) * fam.b_factor(tw, k)))
    # x_1 = x + i gamma/2, x_2 = x - i gamma/2; r_j = nu(x_j;l)/nu(x;l+dt)
    P, P_dn = fam.build_Pn(spec, k), fam.build_Pn(dn, k)
    ph = fam.phi(spec)

    def forward_nu():
        r1, r2 = fam.r_idqm(spec, t, 1, 2), fam.r_idqm(spec, t, 2, 2)
        return LatticeRat((r2 * lat_shift(P, -HALF) - r1 * lat_shift(P, HALF)) * I) / ph

    def backward_nu():
        s1, s2 = fam.r_idqm(dn, t, 1, 2), fam.r_idqm(dn, t, 2, 2)
        pot = fam.potentials(tw)
        return (pot.V * (lat_shift(ph, -HALF) * s2 * lat_shift(P_dn, -HALF))
                - pot.V_star * (lat_shift(ph, HALF) * s1 * lat_shift(P_dn, HALF))) * (-I)

    out.append(compare("primed-forward-nuP", spec, idx, forward_nu,
                       lambda: P_dn * fam.f_tilde(tw, k, t)))
    out.append(compare("primed-backward-nuP", spec, idx, backward_nu,
                       lambda: P * fam.U_check(spec.shift(-2), t) * fam.b_tilde(tw, k, t)))
    return out


def check_idqm_structure(spec: FamilySpec) -> list[IdentityCheck]:
    up = spec.shift(1)
    pot = fam.potentials(spec)
    ph = fam.phi(spec)
    kinv = 1 / spec.kappa
    out = [
        compare("V-shift", spec, None, lambda: fam.potentials(up).V,
                lambda: pot.V.shift(-HALF) * (LatticeRat(lat_shift(ph, -1)) / ph) * kinv),
        compare("S-eta-form", spec, None, lambda: fam.S_check(spec),
                lambda: fam.S_eta(spec).compose(fam.eta(spec))),
        compare("V-star", spec, None, lambda: pot.V_star, lambda: pot.V.star()),
    ]
    out.append(compare("VV*", spec, None, lambda: pot.V * pot.V_star,
                       lambda: LatticeRat(fam.U_check(spec, TwistType.I) * fam.U_check(spec, TwistType.II))
                       / (lat_shift(ph, -HALF) * ph * ph * lat_shift(ph, HALF))
                       * (fam.alpha(spec, TwistType.I) * fam.alpha(spec, TwistType.II) * kinv)))
    for t in (TwistType.I, TwistType.II):
        out.append(compare(f"U-eta-form-{t.value}", spec, None, lambda t=t: fam.U_check(spec, t),
                           lambda t=t: fam.U_eta(spec, t).compose(fam.eta(spec))))
        tw = spec.twist(t)
        out.append(compare(f"twist-eta-{t.value}", spec, None, lambda tw=tw: fam.eta(tw),
                           lambda: fam.eta(spec)))
        out.append(compare(f"twist-involution-{t.value}", spec, None,
                           lambda tw=tw, t=t: spec.const(1) * int(tw.twist(t).params == spec.params),
                           lambda: spec.const(1)))
        out.append(_u_product_check(spec, t))
    for M in range(2, 6):
        out.append(compare("phiM-forms", spec, M, lambda M=M: fam.phi_M_idqm(spec, M),
                           lambda M=M: fam.phi_M_idqm_eta_form(spec, M)))
    return out


def _u_product_check(spec: FamilySpec, t: TwistType) -> IdentityCheck:
    """Telescoping of U-products: (k..M) equals (k..m) times (m..M)."""
    def prod(lo, hi):
        out = spec.const(1)
        for l in range((hi - lo) // 2):
            out = out * fam.U_check(spec.shift(lo + 2 * l), t)
        return out
    return compare(f"U-telescoping-{t.value}", spec, None,
                   lambda: prod(-3, 3), lambda: prod(-3, 1) * prod(1, 3))


def degree_bookkeeping(spec: FamilySpec, n: int) -> list[IdentityCheck]:
    """Forward lowers the eta-degree by one; backward raises it by one."""
    if spec.is_idqm:
        F, Bk = OpKind.IDQM_FORWARD, OpKind.IDQM_BACKWARD
    else:
        F, Bk = OpKind.FORWARD, OpKind.BACKWARD
    up = spec.shift(1)
    eta_up = fam.eta(up)
    P = fam.build_Pn(spec, n)
    out = []
    if n >= 1:
        out.append(_scalar_check("forward-degree", spec, n,
                                 lambda: fam.eta_expand(apply(ShiftOperator(F, spec), P), eta_up).degree(),
                                 lambda: n - 1))
    out.append(_scalar_check("backward-degree", spec, n,
                             lambda: fam.eta_expand(apply(ShiftOperator(Bk, spec), fam.build_Pn(up, n)),
                                                    fam.eta(spec)).degree(),
                             lambda: n + 1))
    return out

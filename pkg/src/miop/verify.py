"""Batch verification: determinant lemmas, identity suite, cross-route
equivalence with degree/normalization audits, and exact finite-lattice
orthogonality. Every suite returns a VerifyReport; reports are
deterministic for a given config and seed list.
"""
from __future__ import annotations

import itertools
import json
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Callable, Iterable

from gmpy2 import mpq

from .exact_core import (
    CoordModel, LatticeFun, MULTIPLICATIVE_Z, ADDITIVE_X, first_difference, fingerprint, i_power,
    lat_det, lat_shift,
)
from . import families as fam
from . import shift_calculus as sc
from .families import FamilySpec, InadmissibleParameters, MissingSplit, TwistType, make_family
from . import miop_idqm, miop_rdqm


# configuration -----------------------------------------------------------------

@dataclass
class ParamSet:
    label: str
    family: str
    params: dict
    q: str | None = None
    N: int | None = None

    def build(self) -> FamilySpec:
        return make_family(self.family, self.params, q=self.q, N=self.N)

    @property
    def is_idqm(self) -> bool:
        return self.family in ("W", "AW")


@dataclass
class SuiteConfig:
    param_sets: list[ParamSet]
    rdqm_D: list[list[int]] = field(default_factory=lambda: [[1], [2], [3], [1, 2], [1, 3], [2, 3], [1, 2, 3]])
    rdqm_max_n: int = 4
    idqm_max_M: int = 3
    idqm_max_d: int = 2
    idqm_max_n: int = 3
    identity_max: int = 4
    lemma_n: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5])
    lemma_seeds: list[int] = field(default_factory=lambda: list(range(20)))
    orthogonality_sets: list[str] = field(default_factory=lambda: ["R", "qR"])
    orthogonality_D: list[list[int]] = field(default_factory=lambda: [[], [1], [2], [1, 2]])
    orthogonality_max_n: int = 3
    suites: dict = field(default_factory=lambda: {"identity": True, "equivalence": True,
                                                  "lemma": True, "orthogonality": True})
    workers: int = 1

    def __post_init__(self):
        self.param_sets = [p if isinstance(p, ParamSet) else ParamSet(**p) for p in self.param_sets]
        if not self.param_sets:
            raise ValueError("a suite config needs at least one parameter set")
        for name in ("rdqm_max_n", "idqm_max_M", "idqm_max_d", "idqm_max_n", "identity_max",
                     "orthogonality_max_n"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        env = os.environ.get("MIOP_THREADS")
        if env:
            self.workers = max(1, int(env))

    def select(self, labels: Iterable[str] | None) -> list[ParamSet]:
        if labels is None:
            return list(self.param_sets)
        wanted = set(labels)
        return [p for p in self.param_sets if p.label in wanted or p.family in wanted]

    def to_json(self) -> dict:
        out = asdict(self)
        out.pop("workers")
        return out

    @staticmethod
    def from_json(data: dict) -> "SuiteConfig":
        return SuiteConfig(**data)

    @staticmethod
    def load(path: str | None = None) -> "SuiteConfig":
        if path is None:
            text = resources.files("miop").joinpath("data/default_config.json").read_text()
        else:
            with open(path) as fh:
                text = fh.read()
        return SuiteConfig.from_json(json.loads(text))


def default_config() -> SuiteConfig:
    return SuiteConfig.load()


# reports -----------------------------------------------------------------------

@dataclass
class CaseRecord:
    case: str
    status: str
    check: str = ""
    lhs: str | None = None
    rhs: str | None = None
    residual: object = None
    detail: dict | None = None
    wall_time: float = 0.0

    def to_json(self, timings: bool = False) -> dict:
        out = {"case": self.case, "check": self.check, "status": self.status}
        for key in ("lhs", "rhs", "residual", "detail"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        if timings:
            out["wall_time"] = round(self.wall_time, 4)
        return out


@dataclass
class VerifyReport:
    suite: str
    records: list[CaseRecord] = field(default_factory=list)

    def add(self, rec: CaseRecord):
        if rec.status == "fail" and rec.residual is None:
            rec.residual = "no witness"
        self.records.append(rec)

    def extend(self, other: "VerifyReport"):
        for r in other.records:
            self.add(r)

    def summary(self) -> dict:
        counts = {"pass": 0, "fail": 0, "skip": 0}
        for r in self.records:
            counts[r.status] += 1
        counts["total"] = len(self.records)
        return counts

    @property
    def ok(self) -> bool:
        return all(r.status != "fail" for r in self.records)

    def failures(self) -> list[CaseRecord]:
        return [r for r in self.records if r.status == "fail"]

    def by_check(self, *checks: str) -> "VerifyReport":
        return VerifyReport(self.suite, [r for r in self.records if r.check in checks])

    def to_json(self, timings: bool = False) -> dict:
        return {"suite": self.suite, "summary": self.summary(),
                "records": [r.to_json(timings) for r in self.records]}

    def dumps(self, timings: bool = False) -> str:
        return json.dumps(self.to_json(timings), sort_keys=True, indent=1)


def _record_from_identity(chk: sc.IdentityCheck, prefix: str) -> CaseRecord:
    status = "skip" if chk.skipped else ("pass" if chk.passed else "fail")
    idx = chk.index if not isinstance(chk.index, tuple) else list(chk.index)
    case = f"{prefix}/{chk.identity}/{json.dumps(idx, default=str)}"
    residual = chk.skipped if chk.skipped else chk.residual
    if isinstance(residual, tuple):
        residual = list(residual)
    return CaseRecord(case, status, chk.identity, chk.lhs, chk.rhs, residual)


def _map(fn: Callable, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) < 2:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


# determinant lemmas -----------------------------------------------------------

def _rand_rational(rng: random.Random) -> mpq:
    return mpq(rng.randint(-9, 9), rng.randint(1, 9))


def _rand_fun(rng: random.Random, model: CoordModel, low: int, high: int, nonzero: bool = True) -> LatticeFun:
    while True:
        f = LatticeFun({e: _rand_rational(rng) for e in range(low, high + 1)}, model)
        if not nonzero or not f.is_zero():
            return f


def check_casoratian_lemma_rdqm(n: int, seed) -> VerifyReport:
    """det(prod_{l<j} D_l f_k) = prod_l prod_{m<=n-l} r_m(x+l-1) * W_C[f](x), D_j = q_j + r_j e^{d/dx}."""
    if not 1 <= n <= 5:
        raise ValueError("lemma size must be in 1..5")
    start = time.perf_counter()
    rng = random.Random(f"rdqm-{n}-{seed}")
    model = CoordModel(ADDITIVE_X)
    qs = [_rand_fun(rng, model, 0, 3, nonzero=False) for _ in range(n)]
    rs = [_rand_fun(rng, model, 0, 3) for _ in range(n)]
    # n cubics are dependent for n > 4, which would make both sides vanish
    fs = [_rand_fun(rng, model, 0, max(3, n + 1)) for _ in range(n)]

    def D(l, f):
        return qs[l - 1] * f + rs[l - 1] * lat_shift(f, 1)

    rows = []
    for j in range(1, n + 1):
        row = []
        for f in fs:
            g = f
            for l in range(1, j):
                g = D(l, g)
            row.append(g)
        rows.append(row)
    lhs = lat_det(rows)
    pref = LatticeFun.const(1, model)
    for l in range(1, n + 1):
        for m in range(1, n - l + 1):
            pref = pref * lat_shift(rs[m - 1], l - 1)
    rhs = pref * lat_det([[lat_shift(f, j) for f in fs] for j in range(n)])
    return _lemma_report("lemma-rdqm", n, seed, lhs, rhs, start)


def check_casoratian_lemma_idqm(n: int, seed) -> VerifyReport:
    """Interleaved D/D' rows against prod D_{n+1-2m} times the r, q factors times W_gamma[f]."""
    if not 1 <= n <= 5:
        raise ValueError("lemma size must be in 1..5")
    start = time.perf_counter()
    rng = random.Random(f"idqm-{n}-{seed}")
    model = CoordModel(MULTIPLICATIVE_Z, mpq(1, 2))
    qs = [_rand_fun(rng, model, -2, 2) for _ in range(n)]
    rs = [_rand_fun(rng, model, -2, 2) for _ in range(n)]
    qps = [_rand_fun(rng, model, -2, 2) for _ in range(n)]
    rps = [_rand_fun(rng, model, -2, 2) for _ in range(n)]
    fs = [_rand_fun(rng, model, -3, 3) for _ in range(n)]
    half = mpq(1, 2)

    def Dhat(l, f):
        return qs[l - 1] * lat_shift(f, -half) + rs[l - 1] * lat_shift(f, half)

    def Dprime(l, f):
        return qps[l - 1] * lat_shift(f, -half) + rps[l - 1] * lat_shift(f, half)

    def chain(top, f):
        for l in range(1, top + 1):
            f = Dhat(l, f)
        return f

    rows = []
    for j in range(1, n + 1):
        if j <= (n + 1) // 2:
            rows.append([chain(n + 1 - 2 * j, f) for f in fs])
        else:
            rows.append([Dprime(2 * j - n - 1, chain(2 * j - n - 2, f)) for f in fs])
    lhs = lat_det(rows) * i_power(n * (n - 1) // 2)
    pref = LatticeFun.const(1, model)
    for m in range(1, n // 2 + 1):
        k = n + 1 - 2 * m
        pref = pref * (rs[k - 1] * qps[k - 1] - rps[k - 1] * qs[k - 1])
    for m in range(n - 1):
        k = n - 1 - m
        for l in range((m - 1) // 2 + 1):
            a = mpq(m, 2) - l
            pref = pref * lat_shift(rs[k - 1], a) * lat_shift(qs[k - 1], -a)
    wg = lat_det([[lat_shift(f, mpq(n + 1, 2) - j) for f in fs] for j in range(1, n + 1)])
    rhs = pref * wg * i_power(n * (n - 1) // 2)
    return _lemma_report("lemma-idqm", n, seed, lhs, rhs, start)


def _lemma_report(name, n, seed, lhs, rhs, start) -> VerifyReport:
    rep = VerifyReport(name)
    ok = lhs == rhs
    wit = None if ok else list(first_difference(lhs, rhs))
    rep.add(CaseRecord(f"{name}/n={n}/seed={seed}", "pass" if ok else "fail", name,
                       fingerprint(lhs), fingerprint(rhs), wit, detail={"zero": lhs.is_zero()},
                       wall_time=time.perf_counter() - start))
    return rep


def run_lemma_suite(cfg: SuiteConfig) -> VerifyReport:
    rep = VerifyReport("lemma")
    for n in cfg.lemma_n:
        for seed in cfg.lemma_seeds:
            rep.extend(check_casoratian_lemma_rdqm(n, seed))
            rep.extend(check_casoratian_lemma_idqm(n, seed))
    return rep


# identity suite ----------------------------------------------------------------

def identity_checks(spec: FamilySpec, top: int) -> list[sc.IdentityCheck]:
    out: list[sc.IdentityCheck] = []
    if spec.is_idqm:
        for n in range(top + 1):
            out += sc.check_idqm_shift_relations(spec, n)
        for t in (TwistType.I, TwistType.II):
            for v in range(top + 1):
                out += sc.check_idqm_xi_shift(spec, v, t)
                out += sc.check_idqm_primed(spec, v, t)
        out += sc.check_idqm_structure(spec)
    else:
        for n in range(top + 1):
            out += sc.check_rdqm_shift_relations(spec, n)
            out += sc.check_xi_shift_tables(spec, n)
            out += sc.check_rdqm_primed(spec, n)
        out += sc.check_rdqm_structure(spec)
    for n in range(top + 1):
        out += sc.degree_bookkeeping(spec, n)
    return out


def _identity_job(args):
    ps, top = args
    return [_record_from_identity(c, f"identity/{ps.label}") for c in identity_checks(ps.build(), top)]


def run_identity_suite(cfg: SuiteConfig, labels=None) -> VerifyReport:
    rep = VerifyReport("identity")
    jobs = [(ps, cfg.identity_max) for ps in cfg.select(labels)]
    for recs in _map(_identity_job, jobs, cfg.workers):
        for r in recs:
            rep.add(r)
    return rep


# equivalence and audits ---------------------------------------------------------

def typed_index_sets(max_M: int, max_d: int) -> list[list[tuple[int, str]]]:
    idx = [(d, t) for d in range(1, max_d + 1) for t in ("I", "II")]
    return [list(c) for M in range(1, max_M + 1) for c in itertools.combinations(idx, M)]


def _d_text(D) -> str:
    return json.dumps(D, separators=(",", ":"))


def _build(spec, D, n, method):
    if spec.is_idqm:
        return (miop_idqm.build_Xi_idqm(spec, D, method) if n is None
                else miop_idqm.build_PDn_idqm(spec, D, n, method))
    return (miop_rdqm.build_Xi_rdqm(spec, D, method) if n is None
            else miop_rdqm.build_PDn_rdqm(spec, D, n, method))


def _grid_job(args) -> list[CaseRecord]:
    ps, D, n = args
    spec = ps.build()
    case = f"{ps.label}/D={_d_text(D)}/n={'xi' if n is None else n}"
    methods = miop_idqm.applicable_methods(D) if spec.is_idqm else miop_rdqm.METHODS
    start = time.perf_counter()
    results = {}
    recs = []
    for m in methods:
        try:
            results[m] = _build(spec, D, n, m)
        except MissingSplit as exc:
            recs.append(CaseRecord(f"equivalence/{case}/{m}", "skip", "equivalence", residual=str(exc)))
        except AssertionError as exc:
            recs.append(CaseRecord(f"reality/{case}/{m}", "fail", "reality", residual=str(exc)))
        except Exception as exc:
            recs.append(CaseRecord(f"equivalence/{case}/{m}", "fail", "equivalence",
                                   residual=f"{type(exc).__name__}: {exc}"))
    elapsed = time.perf_counter() - start
    if not results:
        return recs
    ref_m = next(iter(results))
    ref = results[ref_m]

    def key(res):
        return res.fun if not spec.is_idqm and spec.N is not None else res.eta_poly

    for m, res in results.items():
        if m == ref_m:
            continue
        same = key(res) == key(ref)
        recs.append(CaseRecord(f"equivalence/{case}/{ref_m}={m}", "pass" if same else "fail", "equivalence",
                               fingerprint(key(ref)), fingerprint(key(res)),
                               None if same else list(first_difference(key(ref), key(res)) or ["shape"]),
                               wall_time=elapsed))
    if spec.is_idqm:
        real = all(r.eta_poly.is_real() for r in results.values())
        recs.append(CaseRecord(f"reality/{case}", "pass" if real else "fail", "reality",
                               residual=None if real else "imaginary coefficient"))
        ell = miop_idqm.ell_D_idqm(D)
    else:
        ell = miop_rdqm.ell_D(D)
    expected = ell + (0 if n is None else n)
    got = ref.degree()
    recs.append(CaseRecord(f"degree/{case}", "pass" if got == expected else "fail", "degree",
                           residual=None if got == expected else {"expected": expected, "got": got}))
    if not spec.is_idqm:
        at0 = ref.fun.at(0)
        recs.append(CaseRecord(f"normalization/{case}", "pass" if at0 == 1 else "fail", "normalization",
                               residual=None if at0 == 1 else at0.to_text()))
        if n == 0:
            shifted = miop_rdqm.build_Xi_rdqm(spec.shift(1), D).fun
            same = shifted == ref.fun
            recs.append(CaseRecord(f"specialization/{case}", "pass" if same else "fail", "specialization",
                                   fingerprint(ref.fun), fingerprint(shifted),
                                   None if same else list(first_difference(ref.fun, shifted))))
    elif n == 0:
        # observation only: idQM ground level against the shifted denominator polynomial
        xi = miop_idqm.build_Xi_idqm(spec.shift(1), D).eta_poly
        p = ref.eta_poly
        prop = (p.degree() == xi.degree() and p.degree() is not None
                and p == xi * (p.coeffs[-1] / xi.coeffs[-1]))
        recs.append(CaseRecord(f"observation/{case}", "pass" if prop else "skip", "observation",
                               detail={"equal": p == xi, "proportional": prop}))
    return recs


def equivalence_jobs(cfg: SuiteConfig, labels=None) -> list:
    jobs = []
    for ps in cfg.select(labels):
        if ps.is_idqm:
            for D in typed_index_sets(cfg.idqm_max_M, cfg.idqm_max_d):
                for n in [None] + list(range(cfg.idqm_max_n + 1)):
                    jobs.append((ps, D, n))
        else:
            for D in cfg.rdqm_D:
                for n in [None] + list(range(cfg.rdqm_max_n + 1)):
                    jobs.append((ps, D, n))
    return jobs


def run_equivalence_suite(cfg: SuiteConfig, labels=None) -> VerifyReport:
    """Cross-route equality plus degree, normalization, reality and specialization audits."""
    rep = VerifyReport("equivalence")
    for recs in _map(_grid_job, equivalence_jobs(cfg, labels), cfg.workers):
        for r in recs:
            rep.add(r)
    return rep


# orthogonality -----------------------------------------------------------------

def deformed_weights(spec: FamilySpec, D: list[int]) -> list:
    """psi_D(x)^2 on x = 0..N, from Xi(1) phi0^2(x; lambda + M dt) / (Xi(x) Xi(x+1))."""
    if spec.N is None or spec.is_idqm:
        raise ValueError("orthogonality needs a finite rdQM family (R or qR)")
    N = spec.N
    if D:
        xi = miop_rdqm.build_Xi_rdqm(spec, D).fun
        vals = [xi.at(x).re for x in range(N + 2)]
        zeros = [x for x, v in enumerate(vals) if v == 0]
        if zeros:
            raise InadmissibleParameters(f"denominator polynomial vanishes at x = {zeros}")
    else:
        vals = [mpq(1)] * (N + 2)
    lam = spec.shift_tilde(len(D))
    return [vals[1] * fam.phi0_squared(lam, x) / (vals[x] * vals[x + 1]) for x in range(N + 1)]


def gram_matrix(spec: FamilySpec, D: list[int], max_n: int) -> list[list]:
    w = deformed_weights(spec, D)
    P = [[miop_rdqm.build_PDn_rdqm(spec, D, n).fun.at(x).re for x in range(spec.N + 1)]
         for n in range(max_n + 1)]
    return [[sum(w[x] * P[m][x] * P[n][x] for x in range(spec.N + 1)) for n in range(max_n + 1)]
            for m in range(max_n + 1)]


def run_orthogonality(spec: FamilySpec, D: list[int], max_n: int = 3, label: str | None = None) -> VerifyReport:
    label = label or spec.id.value
    rep = VerifyReport("orthogonality")
    start = time.perf_counter()
    G = gram_matrix(spec, D, max_n)
    elapsed = time.perf_counter() - start
    for m in range(max_n + 1):
        for n in range(m, max_n + 1):
            g = G[m][n]
            case = f"orthogonality/{label}/D={_d_text(D)}/m={m},n={n}"
            if m == n:
                rep.add(CaseRecord(case, "pass" if g != 0 else "fail", "gram-diagonal",
                                   residual=None if g != 0 else "zero norm", detail={"value": str(g)},
                                   wall_time=elapsed))
            else:
                rep.add(CaseRecord(case, "pass" if g == 0 else "fail", "gram-off-diagonal",
                                   residual=None if g == 0 else str(g), wall_time=elapsed))
    return rep


def run_orthogonality_suite(cfg: SuiteConfig) -> VerifyReport:
    rep = VerifyReport("orthogonality")
    for ps in cfg.select(cfg.orthogonality_sets):
        spec = ps.build()
        if spec.N is None:
            continue
        for D in cfg.orthogonality_D:
            try:
                rep.extend(run_orthogonality(spec, D, cfg.orthogonality_max_n, ps.label))
            except InadmissibleParameters as exc:
                rep.add(CaseRecord(f"orthogonality/{ps.label}/D={_d_text(D)}", "fail", "admissibility",
                                   residual=str(exc)))
    return rep


# everything --------------------------------------------------------------------

SUITES = {
    "identity": run_identity_suite,
    "equivalence": run_equivalence_suite,
    "lemma": run_lemma_suite,
    "orthogonality": run_orthogonality_suite,
}


def run_all(cfg: SuiteConfig) -> dict[str, VerifyReport]:
    return {name: fn(cfg) for name, fn in SUITES.items() if cfg.suites.get(name, True)}

"""Acceptance criteria 1-8. Each test prints one PASS/FAIL line.

Run with `python3 -m pytest tests/test_acceptance.py -v -s` (the lines are
also written when output capture is on).
"""
import time

import pytest

from miop import verify

RDQM_SETS = ["M", "lqL", "lqJ", "R", "qR"]
IDQM_SETS = ["W-sym", "W", "AW-split"]


def announce(capsys, number, ok, text):
    with capsys.disabled():
        print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} {text}")


def _labels(cfg, labels):
    return [p for p in cfg.param_sets if p.label in labels]


def _timed(fn, *args):
    start = time.perf_counter()
    out = fn(*args)
    return out, time.perf_counter() - start


@pytest.fixture(scope="module")
def cfg():
    return verify.default_config()


@pytest.fixture(scope="module")
def rdqm_report(cfg):
    sub = verify.SuiteConfig(_labels(cfg, RDQM_SETS), rdqm_D=cfg.rdqm_D, rdqm_max_n=4, workers=cfg.workers)
    return _timed(verify.run_equivalence_suite, sub)


@pytest.fixture(scope="module")
def idqm_report(cfg):
    sub = verify.SuiteConfig(_labels(cfg, IDQM_SETS), idqm_max_M=3, idqm_max_d=2, idqm_max_n=3,
                             workers=cfg.workers)
    return _timed(verify.run_equivalence_suite, sub)


def test_criterion_1_rdqm_routes_agree(capsys, rdqm_report):
    rep, secs = rdqm_report
    eq = rep.by_check("equivalence")
    cases = {r.case.rsplit("/", 1)[0] for r in eq.records if "/n=xi" not in r.case}
    ok = eq.ok and len(cases) == 175 and eq.summary()["skip"] == 0 and secs < 60
    announce(capsys, 1, ok, f"{len(cases)} cases x 3 routes, {eq.summary()['fail']} mismatches, {secs:.1f}s")
    assert eq.ok, [r.case for r in eq.failures()][:5]
    assert len(cases) == 175
    assert secs < 60


def test_criterion_2_idqm_routes_agree(capsys, idqm_report):
    rep, secs = idqm_report
    eq = rep.by_check("equivalence")
    single = [r for r in eq.records if r.case.endswith(("=singleA", "=singleB"))]
    s = eq.summary()
    ok = eq.ok and s["skip"] == 0 and single and secs < 120
    announce(capsys, 2, ok, f"{s['pass']} route comparisons ({len(single)} single-type), "
                            f"{s['fail']} mismatches, {secs:.1f}s")
    assert eq.ok, [r.case for r in eq.failures()][:5]
    assert s["skip"] == 0 and single
    assert secs < 120


def test_criterion_3_normalization_degree_specialization(capsys, rdqm_report, idqm_report):
    rd = rdqm_report[0].by_check("normalization", "degree", "specialization")
    idq = idqm_report[0].by_check("degree")
    fails = rd.failures() + idq.failures()
    by_set = {}
    for r in fails:
        label = r.case.split("/")[1]
        by_set[label] = by_set.get(label, 0) + 1
    total = len(rd.records) + len(idq.records)
    announce(capsys, 3, not fails, f"{total - len(fails)}/{total} audits pass; degree shortfalls by set {by_set}")
    assert not fails, [f"{r.case}: {r.residual}" for r in fails][:10]


def test_criterion_4_identity_suite(capsys, cfg):
    rep, secs = _timed(verify.run_identity_suite, cfg)
    s = rep.summary()
    split_skips = [r for r in rep.records if r.status == "skip" and "/AW-split/" in r.case]
    ok = rep.ok and not split_skips and secs < 60
    announce(capsys, 4, ok, f"{s['pass']} identities pass, {s['fail']} fail, {s['skip']} skipped, {secs:.1f}s")
    assert rep.ok, [r.case for r in rep.failures()][:5]
    assert not split_skips
    assert secs < 60


def test_criterion_5_determinant_lemmas(capsys, cfg):
    rep, secs = _timed(verify.run_lemma_suite, cfg)
    trivial = [r for r in rep.records if r.detail["zero"]]
    per_kind = {k: len(rep.by_check(k).records) for k in ("lemma-rdqm", "lemma-idqm")}
    ok = rep.ok and not trivial and min(per_kind.values()) >= 100 and secs < 30
    announce(capsys, 5, ok, f"{per_kind} instances, {len(rep.failures())} fail, {len(trivial)} trivial, {secs:.1f}s")
    assert rep.ok and not trivial
    assert len(cfg.lemma_seeds) >= 20 and cfg.lemma_n == [1, 2, 3, 4, 5]
    assert secs < 30


def test_criterion_6_orthogonality(capsys, cfg):
    rep, secs = _timed(verify.run_orthogonality_suite, cfg)
    off = rep.by_check("gram-off-diagonal")
    Ds = {r.case.split("/")[2] for r in off.records}
    expected = len(cfg.select(cfg.orthogonality_sets)) * len(cfg.orthogonality_D) * 6
    ok = rep.ok and len(off.records) == expected and secs < 60
    announce(capsys, 6, ok, f"{len(off.records)} off-diagonal entries zero over {sorted(Ds)}, {secs:.1f}s")
    assert rep.ok, [r.case for r in rep.failures()]
    assert Ds == {"D=[]", "D=[1]", "D=[2]", "D=[1,2]"}
    assert {r.case.split("/")[1] for r in off.records} >= {"R", "qR"}
    assert len(off.records) == expected
    assert secs < 60


def test_criterion_7_reality(capsys, idqm_report):
    real = idqm_report[0].by_check("reality")
    announce(capsys, 7, real.ok and bool(real.records),
             f"{real.summary()['pass']} idQM grid points with real coefficients")
    assert real.records and real.ok


def test_criterion_8_hamiltonian_convention(capsys, cfg):
    c = verify.SuiteConfig(cfg.param_sets, identity_max=4, workers=cfg.workers)
    rep = verify.run_identity_suite(c).by_check("hamiltonian")
    families = {r.case.split("/")[1] for r in rep.records}
    ok = rep.ok and rep.summary()["pass"] == len(rep.records) and len(families) == len(cfg.param_sets)
    announce(capsys, 8, ok, f"H P_n = E_n P_n on {len(rep.records)} cases over {len(families)} sets")
    assert ok

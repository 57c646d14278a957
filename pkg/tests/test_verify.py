import json

import pytest
from gmpy2 import mpq

from miop import verify
from miop.families import InadmissibleParameters, make_family
from miop.verify import (
    CaseRecord, ParamSet, SuiteConfig, VerifyReport, check_casoratian_lemma_idqm,
    check_casoratian_lemma_rdqm, run_orthogonality,
)

from conftest import SPECS


@pytest.fixture(scope="module")
def cfg():
    c = verify.default_config()
    c.workers = 1
    return c


@pytest.mark.parametrize("check", [check_casoratian_lemma_rdqm, check_casoratian_lemma_idqm])
@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_lemmas_hold_and_are_not_trivial(check, n):
    for seed in (0, 7, 42):
        rep = check(n, seed)
        (rec,) = rep.records
        assert rec.status == "pass", rec.residual
        assert rec.detail["zero"] is False


def test_lemma_named_examples():
    assert check_casoratian_lemma_rdqm(4, 42).ok
    assert check_casoratian_lemma_idqm(5, 7).ok


def test_lemma_single_row_is_the_function():
    rec = check_casoratian_lemma_rdqm(1, 3).records[0]
    assert rec.lhs == rec.rhs


def test_lemma_size_guard():
    with pytest.raises(ValueError):
        check_casoratian_lemma_rdqm(6, 0)
    with pytest.raises(ValueError):
        check_casoratian_lemma_idqm(0, 0)


def test_lemma_deterministic():
    a = check_casoratian_lemma_idqm(3, 11).records[0]
    b = check_casoratian_lemma_idqm(3, 11).records[0]
    assert (a.lhs, a.rhs) == (b.lhs, b.rhs)


def test_identity_suite_on_meixner_and_wilson(cfg):
    rep = verify.run_identity_suite(cfg, ["M", "W"])
    assert rep.records
    assert rep.ok, [r.case for r in rep.failures()][:5]


def test_identity_suite_gates_unsplit_askey_wilson():
    c = SuiteConfig([ParamSet("AW-odd", "AW", {"a": ["1/2", "1/4", "1/4", "1/4"]}, q="1/4")],
                    identity_max=2, workers=1)
    rep = verify.run_identity_suite(c)
    assert rep.ok
    assert rep.summary()["skip"] > 0


@pytest.mark.parametrize("label", ["R", "qR"])
@pytest.mark.parametrize("D", [[], [1], [2], [1, 2]])
def test_orthogonality(cfg, label, D):
    ps = next(p for p in cfg.param_sets if p.label == label)
    rep = run_orthogonality(ps.build(), D, 3, label)
    assert rep.ok
    assert len(rep.by_check("gram-off-diagonal").records) == 6
    assert len(rep.by_check("gram-diagonal").records) == 4


@pytest.mark.parametrize("D", [[], [1], [2], [1, 2]])
def test_positive_racah_set_has_positive_norms(cfg, D):
    # the shipped R and qR sets are algebraically fine but their deformed weights change sign
    (ps,) = cfg.select(["R-pos"])
    spec = ps.build()
    assert all(w > 0 for w in verify.deformed_weights(spec, D))
    G = verify.gram_matrix(spec, D, 3)
    assert all(G[n][n] > 0 for n in range(4))


def test_gram_matrix_is_symmetric_and_exact(cfg):
    (ps,) = cfg.select(["qR"])
    G = verify.gram_matrix(ps.build(), [1, 2], 3)
    for m in range(4):
        for n in range(4):
            assert isinstance(G[m][n], type(mpq(0)))
            assert G[m][n] == G[n][m]
            assert (G[m][n] == 0) == (m != n)


def test_orthogonality_rejects_lattice_zero():
    spec = make_family("R", {"b": "3", "c": "2", "d": "1"}, N=5)
    with pytest.raises(InadmissibleParameters):
        verify.deformed_weights(spec, [1])


def test_orthogonality_needs_finite_family():
    with pytest.raises(ValueError):
        verify.deformed_weights(SPECS["M"], [1])


def test_equivalence_grid_sample(cfg):
    rep = verify.run_equivalence_suite(
        SuiteConfig([p for p in cfg.param_sets if p.label in ("M", "W")], rdqm_D=[[1, 2]], rdqm_max_n=1,
                    idqm_max_M=2, idqm_max_d=1, idqm_max_n=1, workers=1))
    assert rep.ok
    checks = {r.check for r in rep.records}
    assert {"equivalence", "degree", "normalization", "specialization", "reality"} <= checks


def test_config_round_trip(cfg, tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_json()))
    again = SuiteConfig.load(str(path))
    assert again.to_json() == cfg.to_json()
    assert [p.label for p in cfg.param_sets] == ["M", "lqL", "lqJ", "R", "R-pos", "qR", "W-sym", "W", "AW-split", "AW"]


def test_config_validation():
    with pytest.raises(ValueError):
        SuiteConfig([])
    with pytest.raises(ValueError):
        SuiteConfig([ParamSet("M", "M", {"beta": "2", "c": "1/2"})], rdqm_max_n=-1)


def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv("MIOP_THREADS", "3")
    assert verify.default_config().workers == 3


def test_parallel_and_serial_reports_match(cfg):
    sub = SuiteConfig(cfg.select(["lqJ"]), rdqm_D=[[1], [2, 3]], rdqm_max_n=2, workers=1)
    serial = verify.run_equivalence_suite(sub).dumps()
    sub.workers = 2
    assert verify.run_equivalence_suite(sub).dumps() == serial


def test_report_is_byte_identical(cfg):
    a = verify.run_orthogonality_suite(cfg).dumps()
    b = verify.run_orthogonality_suite(cfg).dumps()
    assert a == b


def test_fail_records_carry_a_witness():
    rep = VerifyReport("x")
    rep.add(CaseRecord("a", "fail", "demo"))
    rep.add(CaseRecord("b", "pass", "demo"))
    assert rep.failures()[0].residual is not None
    assert not rep.ok
    assert rep.summary() == {"pass": 1, "fail": 1, "skip": 0, "total": 2}
    assert "wall_time" in rep.to_json(timings=True)["records"][0]

import json
import subprocess
import sys

import pytest

from miop import miop_idqm, miop_rdqm
from miop.cli import main

from conftest import SPECS

MEIXNER = ["--family", "M", "--params", '{"beta":"2","c":"1/2"}']
WILSON = ["--family", "W", "--params", '{"a":["1/2","2/3","3/4","4/5"]}']


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_meixner_case_a_example(capsys):
    code, out, _ = run(capsys, *MEIXNER, "--D", "1", "--n", "1", "--method", "caseA", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["D"] == [1] and data["n"] == 1 and data["method"] == "caseA"
    assert data["eta_poly"] == miop_rdqm.build_PDn_rdqm(SPECS["M"], [1], 1, "caseA").to_json()["eta_poly"]


def test_explicit_verb_matches_default_verb(capsys):
    _, a, _ = run(capsys, *MEIXNER, "--D", "1,2", "--n", "2")
    _, b, _ = run(capsys, "miop", *MEIXNER, "--D", "1,2", "--n", "2")
    assert a == b


def test_wilson_constant_polynomial(capsys):
    code, out, _ = run(capsys, "poly", "--family", "W", "--params", '{"a":["1","1","1","1"]}', "--n", "0")
    assert code == 0
    assert json.loads(out)["eta_poly"] == {"0": "1"}


def test_typed_index_forms_agree(capsys):
    _, a, _ = run(capsys, *WILSON, "--D", "1:I,2:II", "--n", "1", "--method", "caseB")
    _, b, _ = run(capsys, *WILSON, "--D", '[{"d":1,"type":"I"},{"d":2,"type":"II"}]', "--n", "1",
                  "--method", "caseB")
    assert a == b
    ref = miop_idqm.build_PDn_idqm(SPECS["W"], [(1, "I"), (2, "II")], 1, "caseB").to_json()
    assert json.loads(a)["eta_poly"] == ref["eta_poly"]


def test_q_family_with_inline_q(capsys):
    code, out, _ = run(capsys, "xi", "--family", "lqJ", "--params", '{"a":"1/2","b":"1/3"}', "--q", "1/4",
                       "--v", "2")
    assert code == 0
    assert len(json.loads(out)["eta_poly"]) == 3


def test_params_file(capsys, tmp_path):
    path = tmp_path / "r.json"
    path.write_text('{"b":"7","c":"1","d":"1/2","N":5}')
    code, out, _ = run(capsys, "miop", "--family", "R", "--params-file", str(path), "--D", "1,2")
    assert code == 0
    assert json.loads(out)["D"] == [1, 2]


@pytest.mark.parametrize("fmt", ["json", "csv", "pretty"])
def test_formats_are_byte_identical(capsys, fmt):
    argv = [*WILSON, "--D", "1:I,1:II", "--format", fmt]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b and a


def test_csv_columns(capsys):
    _, out, _ = run(capsys, *MEIXNER, "--D", "2", "--n", "1", "--format", "csv")
    header, row = out.strip().splitlines()
    assert header == "family,D,n,method,degree,pass"
    assert row.startswith("M,[2],1,original,3")


def test_family_info(capsys):
    code, out, _ = run(capsys, "family-info", "--family", "AW", "--params", '{"a":["1/4","1/9","2/5","1/10"]}',
                       "--q", "1/4")
    assert code == 0
    info = json.loads(out)
    assert info["split"] is True and info["energies"][0] == "0"


def test_output_file(capsys, tmp_path):
    path = tmp_path / "out.json"
    code, out, _ = run(capsys, *MEIXNER, "--D", "1", "--output", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["family"] == "M"


def test_verify_orthogonality_exit_zero(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "orthogonality", "--config", "default.json")
    assert code == 0
    assert json.loads(out)["orthogonality"]["summary"]["fail"] == 0


def test_verify_sets_filter(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "identity", "--sets", "lqL", "--format", "pretty")
    assert code == 0
    assert out.startswith("identity")


def test_verify_failing_suite_exits_one(capsys, tmp_path):
    cfg = {"param_sets": [{"label": "W-sym", "family": "W", "params": {"a": ["1", "1", "1", "1"]}}],
           "idqm_max_M": 2, "idqm_max_d": 1, "idqm_max_n": 0}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = run(capsys, "verify", "--suite", "equivalence", "--config", str(path))
    assert code == 1
    fails = [r for r in json.loads(out)["equivalence"]["records"] if r["status"] == "fail"]
    assert fails and all("residual" in r for r in fails)


def test_lemma_verb(capsys):
    code, out, _ = run(capsys, "lemma", "--kind", "idqm", "--n", "3", "--seed", "7")
    assert code == 0
    assert json.loads(out)["lemma-idqm"]["summary"]["pass"] == 1


@pytest.mark.parametrize("argv", [
    [*MEIXNER[:2], "--params", '{"beta":"1/0","c":"1/2"}', "--D", "1"],
    [*MEIXNER, "--D", "1:I"],
    [*MEIXNER, "--D", "1", "--method", "singleA"],
    [*WILSON, "--D", "1"],
    ["--family", "AW", "--params", '{"a":["1/2","1/4","1/4","1/4"]}', "--q", "1/4", "--D", "1:I", "--n", "1",
     "--method", "caseA"],
    ["frobnicate"],
    ["verify", "--config", "/nonexistent.json"],
    ["lemma", "--kind", "rdqm", "--n", "9"],
    [*MEIXNER, "--D", "1", "--bogus"],
])
def test_usage_errors_exit_two(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err


def test_missing_split_has_hint(capsys):
    _, _, err = run(capsys, "--family", "AW", "--params", '{"a":["1/2","1/4","1/4","1/4"]}', "--q", "1/4",
                    "--D", "1:I", "--n", "1", "--method", "caseA")
    assert "perfect rational squares" in err


def test_degenerate_index_exits_three(capsys):
    code, _, err = run(capsys, "--family", "M", "--params", '{"beta":"-3","c":"1/2"}', "--D", "1,2", "--n", "1")
    assert code == 3
    assert "inadmissible" in err


def test_console_script_and_thread_env():
    env = {"MIOP_THREADS": "2", "PATH": "/usr/local/bin:/usr/bin:/bin"}
    cmd = [sys.executable, "-m", "miop.cli", "verify", "--suite", "equivalence", "--sets", "lqL", "--format", "csv"]
    a = subprocess.run(cmd, capture_output=True, text=True, env=env)
    b = subprocess.run(cmd, capture_output=True, text=True, env={**env, "MIOP_THREADS": "1"})
    assert a.returncode == 0, a.stderr
    assert a.stdout == b.stdout

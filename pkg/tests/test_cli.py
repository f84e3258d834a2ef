import csv
import json
from pathlib import Path

import pytest

from rudin_lab.cli import main

SPECS = Path(__file__).resolve().parents[1] / "specs"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_no_arguments_prints_usage(capsys):
    code, out, err = run(capsys)
    assert code == 2
    assert "usage" in (out + err)


def test_group_g212(capsys):
    code, out, _ = run(capsys, "group", "--spec", SPECS / "g212.json")
    assert code == 0
    assert "order        8" in out and "hyperplanes  4" in out
    code, out, _ = run(capsys, "group", "--spec", SPECS / "g212.json", "--json")
    doc = json.loads(out)
    assert doc["report"]["group"]["order"] == 8 and len(doc["report"]["group"]["hyperplanes"]) == 4


def test_header_records_provenance(capsys):
    _, out, _ = run(capsys, "group", "--spec", SPECS / "trivial.json", "--json")
    head = json.loads(out)["header"]
    assert head["seed"] == 42 and head["tool"] == "rudin-lab"
    assert len(head["spec_sha256"]) == 64


def test_suite_trivial_exits_zero(capsys):
    code, out, _ = run(capsys, "suite", "--spec", SPECS / "trivial.json")
    assert code == 0
    assert "result: PASS" in out


def test_usage_error_json(capsys):
    code, out, err = run(capsys, "bogus", "--json")
    assert code == 2
    line = err.strip().splitlines()[-1]
    assert json.loads(line)["error"] == "usage"


def test_missing_spec_file_is_runtime_error(capsys, tmp_path):
    code, _, err = run(capsys, "group", "--spec", tmp_path / "absent.json", "--json")
    assert code == 1
    assert "error" in json.loads(err.strip().splitlines()[-1])


def test_bad_spec_content(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"generators": [[[2, 0], [0, 1]]]}')
    code, _, err = run(capsys, "group", "--spec", bad, "--json")
    assert code != 0
    assert json.loads(err.strip().splitlines()[-1])["error"]


def test_kernel_point_outside_ball(capsys):
    code, _, err = run(capsys, "kernel", "--spec", SPECS / "g222.json", "--z", "1,1", "--w", "0,0", "--json")
    assert code != 0 and json.loads(err.strip().splitlines()[-1])


def test_kernel_values(capsys):
    code, out, _ = run(capsys, "kernel", "--spec", SPECS / "trivial.json", "--z", "0.1,0.2j", "--w", "0.3,0",
                       "--p", "3", "--json")
    rep = json.loads(out)["report"]
    assert code == 0 and rep["R"] == pytest.approx(1.0)


def test_factor_cyclic3(capsys):
    code, out, _ = run(capsys, "factor", "--spec", SPECS / "cyclic3.json", "--json")
    assert code == 0 and json.loads(out)["passed"]


@pytest.mark.parametrize("audit", ["nesting", "triple", "displacement"])
def test_regions_audits(capsys, audit):
    code, out, _ = run(capsys, "regions", "--spec", SPECS / "g212.json", "--audit", audit, "--eps", "0.1",
                       "--samples", "5000", "--json")
    assert code == 0 and json.loads(out)["passed"]


def test_regions_nesting_small_eps_fails(capsys):
    code, out, _ = run(capsys, "regions", "--spec", SPECS / "g212.json", "--audit", "nesting", "--eps", "0.01",
                       "--samples", "20000", "--json")
    assert code == 1 and not json.loads(out)["passed"]


def test_verify_bound_csv(capsys, tmp_path):
    path = tmp_path / "strata.csv"
    code, _, _ = run(capsys, "verify-bound", "--spec", SPECS / "g212.json", "--p", "4", "--samples", "5000",
                     "--csv", path)
    assert code == 0
    rows = list(csv.DictReader(path.open()))
    assert list(rows[0]) == ["stratum", "count", "sup_ratio", "argmax_z", "argmax_w"]
    assert [int(r["stratum"]) for r in rows] == sorted(int(r["stratum"]) for r in rows)
    assert all(r["argmax_z"] for r in rows if r["sup_ratio"])


def test_verify_weighted(capsys):
    code, out, _ = run(capsys, "verify-weighted", "--spec", SPECS / "g222.json", "--pgrid", "1.5,2,3",
                       "--nodes", "5000", "--json")
    assert code == 0 and json.loads(out)["passed"]


def test_json_output_is_byte_identical(capsys, tmp_path):
    docs = []
    for name in ("a.json", "b.json"):
        path = tmp_path / name
        code, _, _ = run(capsys, "verify-bound", "--spec", SPECS / "cyclic4.json", "--p", "1.1", "--samples", "4000",
                         "--json", "--output", path)
        assert code == 0
        docs.append(path.read_bytes())
    assert docs[0] == docs[1]


def test_csv_output_is_byte_identical(capsys, tmp_path):
    out = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        run(capsys, "verify-bound", "--spec", SPECS / "g222.json", "--p", "4", "--samples", "4000", "--csv", path)
        out.append(path.read_bytes())
    assert out[0] == out[1]


def test_seed_changes_output(capsys):
    outs = [run(capsys, "verify-bound", "--spec", SPECS / "g222.json", "--p", "4", "--samples", "3000", "--json",
                "--seed", s)[1] for s in (1, 2)]
    assert outs[0] != outs[1]

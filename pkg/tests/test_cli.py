from __future__ import annotations

import io
import json
import os
from pathlib import Path

import pytest

from randinterp import cli
from randinterp.schemas import validate_file


def _run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def prof(tmp_path):
    def make(doc):
        p = tmp_path / f"p{len(list(tmp_path.iterdir()))}.json"
        p.write_text(json.dumps(doc))
        return p
    return make


@pytest.fixture
def hardy(prof):
    return prof({"kind": "law", "max_n": 10, "law": {"form": "power", "c": 1, "a": 0.5}})


def test_classify_json_and_csv(hardy):
    code, out, _ = _run("classify", "--profile", hardy, "--alpha", 0)
    doc = json.loads(out)
    assert code == 0 and doc["type"] == "classification" and doc["interpolating"] == "as_no"  # 2a = 1 boundary
    assert doc["basis"] == doc["bases"]["interpolating"]
    code, out, _ = _run("classify", "--profile", hardy, "--alpha", 0, "--format", "csv")
    assert out.splitlines()[0] == "property,verdict,theorem"


def test_sample_is_byte_identical_across_runs(hardy, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert _run("sample", "--profile", hardy, "--seed", 42, "--format", "csv", "--out", p)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    code, out, _ = _run("sample", "--profile", hardy, "--seed", 42, "--trials", 3)
    assert code == 0 and len(json.loads(out)["configurations"]) == 3


def test_all_json_reports_validate(hardy, tmp_path):
    runs = {
        "classify": ["--alpha", 0],
        "sample": ["--seed", 1],
        "carleson": ["--seed", 1, "--alpha", 0.5],
        "tail": ["--seed", 1, "--alpha", 0, "--trials", 200, "--ns", "1,2"],
        "separation": ["--seed", 1, "--trials", 20, "--depths", "4,8"],
        "dsep-event": ["--seed", 1, "--k", 6, "--gamma", 0.6, "--trials", 100],
        "zeros": ["--seed", 1, "--alpha", 0.5, "--trials", 2, "--L", 200, "--grid", 4096],
        "report": ["--seed", 1, "--alpha", 0.25, "--trials", 20],
    }
    paths = []
    for verb, extra in runs.items():
        p = tmp_path / f"{verb}.json"
        code, _, err = _run(verb, "--profile", hardy, "--out", p, *extra)
        assert code == 0, (verb, err)
        validate_file(p)
        paths.append(p)
    p = tmp_path / "overflow.json"
    assert _run("overflow", "--gamma", 2, "--ns", "3,4", "--seed", 1, "--trials", 50, "--out", p)[0] == 0
    paths.append(p)
    code, out, _ = _run("report", "--validate", *paths)
    assert code == 0 and len(json.loads(out)["valid"]) == len(paths)


def test_validate_rejects_broken_report(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"schema": "v1", "type": "tail", "rows": []}))
    assert _run("report", "--validate", p)[0] == 1


def test_tail_csv_runs_are_identical(hardy):
    a = _run("tail", "--profile", hardy, "--alpha", 0, "--seed", 5, "--trials", 500, "--format", "csv")
    b = _run("tail", "--profile", hardy, "--alpha", 0, "--seed", 5, "--trials", 500,
             "--format", "csv", "--workers", 4)
    assert a[0] == 0 and a[1] == b[1]


@pytest.mark.parametrize("argv", [
    ["classify", "--alpha", 0],                       # missing profile
    ["sample"],                                       # missing profile and seed
    ["frobnicate"],
    ["classify", "--alpha", 0, "--bogus"],
])
def test_parameter_errors_exit_1(argv):
    code, out, err = _run(*argv)
    assert code == 1 and out == "" and err


def test_profile_and_alpha_errors_exit_1(hardy, prof):
    assert _run("classify", "--profile", hardy)[0] == 1
    assert _run("classify", "--profile", hardy, "--alpha", 1.5)[0] == 1
    assert _run("sample", "--profile", hardy)[0] == 1
    assert _run("sample", "--profile", hardy, "--seed", -1)[0] == 1
    bad = prof({"kind": "table", "max_n": 1, "table": [0, -1]})
    assert _run("classify", "--profile", bad, "--alpha", 0)[0] == 1
    junk = prof({"kind": "law", "max_n": 3, "law": {"form": "nope"}})
    assert _run("classify", "--profile", junk, "--alpha", 0)[0] == 1


def test_resource_limit_exit_2(prof):
    huge = prof({"kind": "law", "max_n": 40, "law": {"form": "power", "c": 1, "a": 1}})
    code, _, err = _run("sample", "--profile", huge, "--seed", 1)
    assert code == 2 and "resource" in err


def test_failed_run_leaves_no_output_file(hardy, tmp_path):
    target = tmp_path / "never.json"
    assert _run("carleson", "--profile", hardy, "--out", target)[0] == 1
    assert not target.exists()
    assert not [f for f in os.listdir(tmp_path) if f.startswith(".never")]


def test_write_atomic_replaces_whole_file(tmp_path):
    p = tmp_path / "x.txt"
    p.write_text("old content that is longer")
    cli.write_atomic(p, "new")
    assert p.read_text() == "new"
    assert os.listdir(tmp_path) == ["x.txt"]
    with pytest.raises(OSError):
        cli.write_atomic(tmp_path / "missing" / "y.txt", "z")

import json
import subprocess
import sys

import pytest

from conftest import MAX_WORKERS


def run(*args, cwd=None):
    proc = subprocess.run([sys.executable, "-m", "ptolemaic", *map(str, args)], capture_output=True, text=True, cwd=cwd)
    return proc


def report(proc):
    return json.loads(proc.stdout)


@pytest.fixture(scope="module")
def cat_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("catalog")
    proc = run("catalog", "--emit", d)
    assert proc.returncode == 0, proc.stderr
    return d


def test_catalog_emits_files(cat_dir):
    assert sorted(p.name for p in cat_dir.iterdir()) == ["e1.json", "e2.json", "square.json", "tetrahedron.json"]


@pytest.mark.parametrize("name", ["e1", "e2", "square", "tetrahedron"])
def test_validate_round_trip_bytes(cat_dir, tmp_path, name):
    out = tmp_path / f"{name}.json"
    proc = run("validate", cat_dir / f"{name}.json", "--out", out)
    assert proc.returncode == 0
    assert out.read_bytes() == (cat_dir / f"{name}.json").read_bytes()


def test_csv_catalog_round_trip(tmp_path):
    assert run("catalog", "--emit", tmp_path, "--format", "csv").returncode == 0
    out = tmp_path / "again.csv"
    assert run("validate", tmp_path / "e2.csv", "--out", out).returncode == 0
    assert out.read_bytes() == (tmp_path / "e2.csv").read_bytes()


def test_check_exit_codes(cat_dir):
    e1 = run("check", cat_dir / "e1.json")
    assert e1.returncode == 1
    rep = report(e1)
    assert rep["schema"] == 1 and rep["command"] == "check" and rep["pass"] is False
    assert rep["membership"] == {"pt": True, "qi": False, "cosq": False}
    assert run("check", cat_dir / "square.json").returncode == 0
    assert run("scan", cat_dir / "e1.json", "--conditions", "pt").returncode == 0


def test_e2_parameter_from_cli(tmp_path):
    proc = run("catalog", "--emit", tmp_path, "--e2-a", "1.5")
    assert proc.returncode == 0
    e2 = next(f for f in report(proc)["files"] if f["name"].startswith("E2"))
    assert e2["membership"]["cosq"] is False
    assert run("check", tmp_path / "e2.json").returncode == 1


def test_input_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"matrix": [[0, 1, 5], [1, 0, 1], [5, 1, 0]]}')
    proc = run("check", bad)
    assert proc.returncode == 2
    rep = report(proc)
    assert rep["error"]["type"] == "TriangleViolation"
    assert sorted(rep["error"]["indices"]) == [0, 1, 2]
    assert "error:" in proc.stderr

    assert run("check", tmp_path / "missing.json").returncode == 2
    small = tmp_path / "small.json"
    small.write_text('{"matrix": [[0, 1], [1, 0]]}')
    assert run("check", small).returncode == 2
    assert run("catalog", "--emit", tmp_path, "--e2-a", "2.5").returncode == 2
    assert run("strip-verify", "--family", "lp:x").returncode == 2
    assert run("search", "--budget", "10", "--signature", "pt=maybe").returncode == 2
    assert run("check", bad, "--conditions", "pt,cat0").returncode == 2


def test_embed(cat_dir):
    sq = run("embed", cat_dir / "square.json")
    assert sq.returncode == 0
    assert report(sq)["embedding"]["dimension"] == 2
    assert run("embed", cat_dir / "e1.json").returncode == 1
    assert run("embed", cat_dir / "square.json", "--basepoint", "9").returncode == 2


def test_gen_and_check(tmp_path):
    out = tmp_path / "strip.json"
    proc = run("gen", "--family", "euclidean", "--T", "2", "--nt", "9", "--ns", "3", "--out", out)
    assert proc.returncode == 0
    assert run("check", out).returncode == 0
    lp = tmp_path / "lp.json"
    assert run("gen", "--family", "lp:4", "--nt", "11", "--ns", "3", "--out", lp).returncode == 0
    assert run("check", lp, "--conditions", "pt").returncode == 1
    rnd = tmp_path / "rnd.csv"
    assert run("gen", "--generator", "graph_metric", "--n", "7", "--seed", "3", "--out", rnd).returncode == 0
    again = tmp_path / "rnd2.csv"
    run("gen", "--generator", "graph_metric", "--n", "7", "--seed", "3", "--out", again)
    assert rnd.read_bytes() == again.read_bytes()


def test_strip_verify_exit_codes():
    ok = run("strip-verify", "--family", "euclidean", "--T", "2", "--nt", "9", "--ns", "5")
    assert ok.returncode == 0, ok.stdout
    bad = run("strip-verify", "--family", "lp:4", "--T", "2", "--nt", "9", "--ns", "5")
    assert bad.returncode == 1
    failing = {c["name"] for c in report(bad)["checks"] if not c["pass"]}
    assert {"scan_pt", "flat_conclusion"} <= failing


def test_search_and_merge(tmp_path):
    out = tmp_path / "cat.json"
    proc = run("search", "--budget", "20000", "--seed", "1", "--signature", "pt=1,qi=0", "--out", out)
    assert proc.returncode == 0
    rep = report(proc)
    assert rep["found"] > 0 and rep["stored"] == rep["found"]
    assert all(w["signature"][:2] == [True, False] for w in rep["witnesses"])
    again = run("search", "--budget", "20000", "--seed", "1", "--signature", "pt=1,qi=0", "--merge", out, "--out", out)
    assert report(again)["stored"] == rep["stored"]
    out.write_text("{")
    assert run("search", "--budget", "100", "--merge", out).returncode == 2


def test_timing_is_opt_in(cat_dir):
    assert "wall_time_s" not in report(run("check", cat_dir / "e1.json"))
    assert "wall_time_s" in report(run("check", cat_dir / "e1.json", "--timing"))


@pytest.mark.parametrize("args", [
    ("scan", "STRIP"),
    ("search", "--budget", "12000", "--seed", "5"),
    ("strip-verify", "--T", "2", "--nt", "9", "--ns", "5"),
])
def test_reports_independent_of_threads(tmp_path, args):
    strip = tmp_path / "strip.json"
    run("gen", "--nt", "21", "--ns", "5", "--out", strip)
    args = [strip if a == "STRIP" else a for a in args]
    outs = {run(*args, "--threads", t).stdout for t in (1, 2, MAX_WORKERS)}
    assert len(outs) == 1

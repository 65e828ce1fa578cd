import csv
import io
import json
import subprocess
import sys

import pytest

from fbasis import cli
from fbasis.errors import ConfigError
from fbasis.weights import RapiditySet, build_six_vertex, dumps


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_weights_check_json(capsys):
    code, out, err = run(["weights-check", "--seed", "3", "--lmax", "3"], capsys)
    assert code == 0, err
    doc = json.loads(out)
    assert doc["schema"] == 1 and doc["seed"] == 3 and doc["suite"] == "weights-check"
    assert doc["summary"]["failed"] == 0
    assert err.startswith("PASS")


def test_byte_determinism(tmp_path, capsys, monkeypatch):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    monkeypatch.setenv("FBASIS_THREADS", "1")
    assert run(["twist-compare", "--seed", "7", "--lmax", "3", "--out", str(a)], capsys)[0] == 0
    monkeypatch.setenv("FBASIS_THREADS", "3")
    assert run(["twist-compare", "--seed", "7", "--lmax", "3", "--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_corruption_flagged(capsys):
    code, out, err = run(["weights-check", "--seed", "7", "--lmax", "3", "--corrupt", "xi1,xi2:b12"], capsys)
    assert code == 1
    doc = json.loads(out)
    assert "unitarity.b:{1,2}" in doc["summary"]["failing_relations"]
    assert "failing:" in err and "unitarity.b:{1,2}" in err


def test_dwpf_agree_small(capsys):
    code, out, _ = run(["dwpf-agree", "--seed", "2", "--lmax", "2", "--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    names = {r["relation"] for r in rows}
    assert "dwpf.recurrence:C2:L=2" in names
    assert "dwpf.formula:mixedB:M=1:q=2:L=2" in names
    assert "exchange.CC" in names
    assert all(r["passed"] == "True" for r in rows)


def test_perk_schultz_factorization(capsys):
    code, out, _ = run(["factorization", "--model", "perk-schultz", "--seed", "4", "--lmax", "3"], capsys)
    assert code == 0
    assert json.loads(out)["summary"]["count"] > 0


def test_custom_six_vertex(tmp_path, capsys):
    raps = RapiditySet(("xi1", "xi2", "xi3"), (), {"xi1": 0.1, "xi2": 0.5j, "xi3": -0.3})
    path = tmp_path / "six.json"
    path.write_text(dumps(build_six_vertex(0.7, raps)))
    code, out, _ = run(["all", "--model", "custom", "--custom-table", str(path), "--lmax", "3"], capsys)
    assert code == 0
    relations = {r["relation"] for r in json.loads(out)["reports"]}
    assert any(r.startswith("factorization:") for r in relations)
    assert not any(r.startswith("twist.") for r in relations)


@pytest.mark.parametrize(
    "argv",
    [
        ["weights-check", "--lmax", "9"],
        ["weights-check", "--tol", "-1"],
        ["nonsense"],
        ["weights-check", "--model", "custom"],
        ["weights-check", "--custom-table", "x.json"],
        ["weights-check", "--corrupt", "xi1:b12"],
        ["weights-check", "--corrupt", "xi1,zz:b12"],
        ["dwpf", "--kind", "mixedC", "--L", "2", "--M", "1", "--q", "3"],
        ["dwpf", "--L", "0"],
        ["dwpf", "--q", "a,b", "--kind", "mixedB"],
    ],
)
def test_config_errors_exit_2(argv, capsys):
    assert run(argv, capsys)[0] == 2


def test_malformed_custom_table(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"rank": 3, "rapidities": {}, "entries": []}')
    code, _, err = run(["weights-check", "--model", "custom", "--custom-table", str(path)], capsys)
    assert code == 2 and "configuration error" in err


def test_twist_on_rank2_is_config_error(tmp_path, capsys):
    raps = RapiditySet(("xi1", "xi2"), ("mu1",), {"xi1": 0.1, "xi2": 0.5j, "mu1": 0.2})
    path = tmp_path / "six.json"
    path.write_text(dumps(build_six_vertex(0.7, raps)))
    assert run(["twist-compare", "--model", "custom", "--custom-table", str(path)], capsys)[0] == 2


def test_threads_env(monkeypatch):
    monkeypatch.setenv("FBASIS_THREADS", "2")
    assert cli.thread_count() == 2
    monkeypatch.setenv("FBASIS_THREADS", "zero")
    with pytest.raises(ConfigError):
        cli.thread_count()
    monkeypatch.setenv("FBASIS_THREADS", "0")
    with pytest.raises(ConfigError):
        cli.thread_count()
    monkeypatch.setenv("FBASIS_THREADS", "x")
    assert cli.main(["weights-check", "--lmax", "2"]) == 2


def test_dwpf_text(capsys):
    code, out, _ = run(["dwpf", "--kind", "C2", "--L", "3", "--seed", "7"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "kind=C2 L=3 seed=7"
    routes = {l.split()[0]: complex(l.split()[1]) for l in lines[1:4]}
    assert set(routes) == {"direct", "exact", "recurrence"}
    assert abs(routes["direct"] - (-0.07791502379965085 - 0.018682203211824844j)) < 1e-12


def test_dwpf_json_and_instance_file(tmp_path, capsys):
    inst = tmp_path / "inst.json"
    inst.write_text(json.dumps({"kind": "mixedB", "L": 3, "M": 2, "q": [1, 2], "seed": 4}))
    code, out, _ = run(["dwpf", "--instance", str(inst), "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == 1 and doc["passed"] and set(doc["routes"]) == {"direct", "formula"}
    assert doc["residuals"]["formula"] < 1e-8


def test_console_script():
    proc = subprocess.run(
        [sys.executable, "-m", "fbasis.cli", "dwpf", "--kind", "B1", "--L", "2"], capture_output=True, text=True
    )
    assert proc.returncode == 0 and proc.stdout.startswith("kind=B1 L=2")


def test_render_csv_is_deterministic():
    cfg = cli.SuiteConfig("weights-check", seed=1, lmax=2, fmt="csv")
    a = cli.render(cfg, cli.run_suite(cfg, threads=1))
    b = cli.render(cfg, cli.run_suite(cfg, threads=2))
    assert a == b and a.startswith("relation,")

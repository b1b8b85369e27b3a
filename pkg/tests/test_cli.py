import csv
import io
import json

import pytest

from ucsim import cli
from ucsim.engine import QuantumWidthExceeded
from ucsim.pdl import load_listing

CONFLICT = """protocol Clash
role P1 participant Alice corruptible
role P2 participant Bob corruptible
step 1
P1: picks x ∈_R {0,1}; send input x to Z;
step 2
P2: picks x ∈_R {0,1}; send input x to Z;
"""


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_advantage_record(capsys):
    code, out, _ = run(capsys, "advantage", "--k", "3")
    assert code == cli.EXIT_OK
    (r,) = rows(out)
    assert (float(r["p_real"]), float(r["p_ideal"]), float(r["advantage"])) == (0.5625, 0.5, 0.0625)
    assert "seed" not in r


def test_csv_and_json_agree(capsys):
    _, text, _ = run(capsys, "sweep", "--k", "1..4")
    _, js, _ = run(capsys, "sweep", "--k", "1..4", "--format", "json")
    records = json.loads(js)["records"]
    for c, j in zip(rows(text), records):
        for key in ("p_real", "p_ideal", "advantage"):
            assert f"{float(c[key]):.12g}" == f"{j[key]:.12g}"


def test_sweep_one_to_eight(capsys):
    code, out, _ = run(capsys, "sweep", "--k", "1..8")
    assert code == 0
    got = rows(out)
    assert [int(r["k"]) for r in got] == list(range(1, 9))
    for r in got:
        assert float(r["advantage"]) == pytest.approx(2.0 ** -(int(r["k"]) + 1), abs=1e-12)


def test_sampled_sweep_uses_seed_plus_index(capsys):
    _, out, _ = run(capsys, "sweep", "--k", "1..2", "--mode", "mc", "--samples", "500", "--seed", "9")
    assert [int(r["seed"]) for r in rows(out)] == [9, 10]


def test_validate_conflict(tmp_path, capsys):
    f = tmp_path / "clash.pdl"
    f.write_text(CONFLICT, encoding="utf-8")
    code, out, _ = run(capsys, "validate", str(f), "--format", "json")
    assert code == cli.EXIT_INVALID
    errors = json.loads(out)["errors"]
    assert len(errors) == 1
    assert "without an order" in errors[0]["message"]
    assert errors[0]["line"] == 5


def test_validate_listing(tmp_path, capsys):
    f = tmp_path / "bc.pdl"
    f.write_text(load_listing("bc"), encoding="utf-8")
    code, out, _ = run(capsys, "validate", str(f), "--k", "2", "--callee", "listing:sot")
    assert code == 0
    assert rows(out)[0]["status"] == "ok"


def test_parse_error_exits_one(tmp_path, capsys):
    f = tmp_path / "bad.pdl"
    f.write_text("protocol X\nrole A participant Alice\nstep 1\nB: picks x ∈_R {0,1};\n", encoding="utf-8")
    code, _, err = run(capsys, "validate", str(f))
    assert code == cli.EXIT_INVALID
    assert "4:1" in err and "unknown role" in err


def test_environment_files_are_rejected(tmp_path, capsys):
    f = tmp_path / "env.pdl"
    f.write_text("protocol E\n", encoding="utf-8")
    code, _, err = run(capsys, "advantage", "--k", "2", "--env", str(f))
    assert code == cli.EXIT_INVALID
    assert "not supported" in err


def test_usage_errors_exit_one(capsys):
    assert cli.main(["advantage", "--k", "2", "--samples", "0"]) == cli.EXIT_INVALID
    assert cli.main(["advantage", "--k", "2", "--env", "nope"]) == cli.EXIT_INVALID
    capsys.readouterr()


def test_runtime_failure_exits_two(monkeypatch, capsys):
    def boom(*a, **kw):
        raise QuantumWidthExceeded("too many qubits")

    monkeypatch.setattr(cli, "run_exact", boom)
    code, out, _ = run(capsys, "run", "listing:sot", "--k", "2", "--observe", "SOT-Alice.c", "--format", "json")
    assert code == cli.EXIT_RUNTIME
    assert json.loads(out)["records"] == []


def test_run_distribution(capsys):
    code, out, _ = run(capsys, "run", "listing:bc", "--callee", "listing:sot", "--k", "2", "--env", "bias-attack", "--observe", "Z")
    assert code == 0
    assert {r["Z"]: float(r["p"]) for r in rows(out)} == {"0": 0.625, "1": 0.375}


def test_compose_ct_tree(capsys):
    code, out, _ = run(capsys, "compose", "--tree", "ct", "--env", "bias-attack/ct", "--k", "3")
    assert code == 0
    got = {r["node"]: r for r in rows(out)}
    assert [float(got[n]["epsilon"]) for n in ("RealSOT", "BC", "CT", "total")] == [0, 0.0625, 0, 0.0625]
    assert float(got["total"]["measured_advantage"]) <= 0.0625 + 1e-12


def test_compose_manifest(tmp_path, capsys):
    manifest = {
        "root": "BC",
        "children": {"BC": ["RealSOT"]},
        "nodes": {"BC": {"module": "bc-module", "certificate": "bc"}, "RealSOT": {"module": "real-sot", "certificate": "real-sot"}},
    }
    f = tmp_path / "tree.json"
    f.write_text(json.dumps(manifest), encoding="utf-8")
    code, out, _ = run(capsys, "compose", "--tree", str(f), "--k", "2")
    assert code == 0
    total = [r for r in rows(out) if r["node"] == "total"][0]
    assert float(total["epsilon"]) == pytest.approx(0.125, abs=1e-12)


def test_out_file(tmp_path, capsys):
    f = tmp_path / "adv.json"
    assert cli.main(["advantage", "--k", "1", "--format", "json", "--out", str(f)]) == 0
    assert json.loads(f.read_text())["records"][0]["advantage"] == 0.25
    assert capsys.readouterr().out == ""

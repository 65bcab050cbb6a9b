import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from normgauge.cli import main
from normgauge.search import ViolationCertificate, revalidate

L1 = '{"variant":"pnorm","p":1}'
L2 = '{"variant":"pnorm","p":2}'
L3 = '{"variant":"pnorm","p":3}'
SUP = '{"variant":"sup"}'
QUAD = '{"variant":"quadratic","G":[[2,0.5,0],[0.5,1,0.1],[0,0.1,3]]}'


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


def strip_time(text):
    # manifests carry a wall-clock timestamp; everything else must match
    def scrub(obj):
        if isinstance(obj, dict):
            return {k: scrub(v) for k, v in obj.items() if k != "timestamp"}
        if isinstance(obj, list):
            return [scrub(v) for v in obj]
        return obj

    try:
        docs = [json.loads(text)]
    except json.JSONDecodeError:  # JSON lines
        docs = [json.loads(line) for line in text.splitlines() if line.strip()]
    return [json.dumps(scrub(d), sort_keys=True) for d in docs]


def test_check_euclidean_exit_0():
    code, out = run("check", L2, "--dim", "3", "--k", "2", "--n", "2", "--samples", "500", "--seed", "7")
    assert code == 0
    lines = [json.loads(l) for l in out.splitlines()]
    assert "manifest" in lines[0]
    assert lines[-1]["summary"]["verdict"] == "no-violation-found"
    assert len(lines) == 1 + 500 + 2


def test_check_l1_exit_3(tmp_path):
    cert_path = tmp_path / "cert.json"
    code, out = run("check", L1, "--dim", "2", "--k", "2", "--n", "2", "--samples", "500", "--seed", "7",
                    "--certificate", str(cert_path))
    assert code == 3
    summary = json.loads(out.splitlines()[-1])["summary"]
    assert summary["verdict"] == "falsified"
    cert = ViolationCertificate.from_json(cert_path.read_text())
    assert revalidate(cert)


def test_check_invalid_norm_exit_2(capsys):
    code, _ = run("check", '{"variant":"pnorm","p":0.5}')
    assert code == 2
    assert "InvalidNorm" in capsys.readouterr().err
    assert run("check", "{not json")[0] == 2
    assert run("check", L2, "--k", "1")[0] == 2
    assert run("check", L2, "--samples", "0")[0] == 2


def test_search_examples():
    code, out = run("search", SUP, "--k", "2", "--n", "2")
    assert code == 3
    res = json.loads(out)["result"]
    assert res["kind"] == "rkn_akn_certificate" and res["violation"] >= 2.0
    code, out = run("search", QUAD, "--dim", "3", "--k", "3", "--n", "2", "--restarts", "4", "--budget", "4000")
    assert code == 0
    res = json.loads(out)["result"]
    assert res["kind"] == "no_violation_found" and res["best_objective"] <= 1e-9
    assert run("search", SUP, "--k", "1")[0] == 2


def test_search_budget(monkeypatch):
    assert run("search", SUP, "--restarts", "8", "--budget", "4")[0] == 2
    monkeypatch.setenv("NORMGAUGE_BUDGET", "1000")
    assert run("search", SUP, "--budget", "10000")[0] == 2


def test_operator_examples(tmp_path):
    code, out = run("operator", "--k", "3", "--dim", "5", "--seed", "42")
    assert code == 0
    rep = json.loads(out)["report"]
    assert rep["max_dev_lhs_mid"] <= 1e-10 and rep["max_dev_rhs_mid"] <= 1e-10

    f = tmp_path / "two_identities.json"
    f.write_text(json.dumps([np.eye(2).tolist(), np.eye(2).tolist()]))
    code, out = run("operator", "--file", str(f))
    assert code == 0
    rep = json.loads(out)["report"]
    for side in ("lhs", "mid", "rhs"):
        np.testing.assert_allclose(rep[side], 4 * np.eye(2), atol=1e-15)

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"matrices": [[[1, 2, 3], [4, 5, 6]], [[1, 0], [0, 1]]]}))
    assert run("operator", "--file", str(bad))[0] == 2
    assert run("operator", "--file", str(tmp_path / "missing.json"))[0] == 2


def test_sweep_l3(tmp_path):
    csv_path = tmp_path / "sweep.csv"
    code, _ = run("sweep", L3, "--k-range", "2..3", "--n-list", "1,2,4", "--restarts", "4", "--budget", "4000",
                  "--csv", str(csv_path))
    assert code == 3
    rows = list(csv.DictReader(csv_path.open()))
    assert len(rows) == 6
    assert list(rows[0]) == ["k", "n", "verdict", "best_objective", "evals", "wall_ms", "admissibility_filtered"]
    for r in rows:
        if float(r["n"]) == 2:
            assert r["verdict"] == "falsified"
        # 17 significant digits, '.' decimal point
        assert "," not in r["best_objective"]


def test_sweep_euclidean_and_empty():
    code, out = run("sweep", L2, "--k-range", "2,3", "--n-list", "1,2,3", "--restarts", "2", "--budget", "600")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert all(r["verdict"] == "no-violation-found" for r in rows)
    assert run("sweep", L2, "--n-list", "")[0] == 2
    assert run("sweep", L2, "--k-range", "x..y")[0] == 2


def test_prove_structure_examples(capsys):
    code, out = run("prove-structure", "--k", "2", "--norms", "2,1", "--n", "4")
    assert code == 0
    rep = json.loads(out)["report"]
    assert rep["passed"] and rep["leading_minors"][0] < 0
    assert rep["gamma"][0] == pytest.approx(-64.0)

    code, out = run("prove-structure", "--k", "2", "--norms", "2,1", "--n", "1", "--signs", "+,-")
    assert code == 0
    assert json.loads(out)["report"]["leading_minors"][0] > 0

    code, _ = run("prove-structure", "--k", "2", "--norms", "1,1", "--n", "1")
    assert code == 2
    assert "DegenerateExponent" in capsys.readouterr().err
    assert run("prove-structure", "--k", "3", "--norms", "1,1")[0] == 2


def test_exit_codes_exhaustive():
    cases = [
        [],
        ["bogus"],
        ["check"],
        ["check", L2, "--dim", "abc"],
        ["check", '{"variant":"custom"}'],
        ["search", '{"variant":"quadratic","G":[[1,2],[2,1]]}'],
        ["operator", "--k", "1"],
        ["prove-structure", "--n", "2"],
        ["replay", "/nonexistent/manifest.json"],
        ["--version"],
        ["check", L2, "--samples", "3"],
    ]
    for argv in cases:
        assert run(*argv)[0] in {0, 2, 3}, argv


def test_manifest_replay_identical(tmp_path):
    man = tmp_path / "m.json"
    argv = ["check", '{"variant":"pnorm","p":1.5}', "--dim", "2", "--k", "3", "--n", "3", "--samples", "40",
            "--seed", "5", "--manifest", str(man)]
    code1, out1 = run(*argv)
    manifest = json.loads(man.read_text())
    assert manifest["command"] == "check"
    assert manifest["parameters"]["seed"] == 5
    code2, out2 = run("replay", str(man))
    assert code1 == code2 == 3
    assert strip_time(out1) == strip_time(out2)


@pytest.mark.parametrize(
    "argv",
    [
        ["search", '{"variant":"pnorm","p":1.5}', "--k", "3", "--budget", "2000", "--seed", "9"],
        ["operator", "--k", "4", "--dim", "6", "--seed", "3"],
        ["prove-structure", "--k", "3", "--norms", "3,1,0.5", "--n", "6"],
    ],
)
def test_replay_other_commands(tmp_path, argv):
    man = tmp_path / "m.json"
    code1, out1 = run(*argv, "--manifest", str(man))
    code2, out2 = run("replay", str(man))
    assert code1 == code2
    assert strip_time(out1) == strip_time(out2)


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "normgauge", "check", L1, "--samples", "20"],
                          capture_output=True, text=True)
    assert proc.returncode == 3
    proc = subprocess.run([sys.executable, "-m", "normgauge", "check", "nope"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert proc.stderr.startswith("normgauge:")

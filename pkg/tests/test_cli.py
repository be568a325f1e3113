import json
import math
import subprocess
import sys

import numpy as np
import pytest

from nbgate.analysis import FidelityProfile
from nbgate.cli import EXIT_FAIL, EXIT_NO_SOLUTION, EXIT_OK, EXIT_USAGE, main
from nbgate.design import loads_solutions, reference_table
from nbgate.sequence import GateList


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_five_quarter(capsys):
    code, out, _ = run(capsys, "solve", "--n", "5", "--theta", "pi/4", "--restarts", "50")
    assert code == EXIT_OK
    docs = loads_solutions(out)
    canon = [d["canonical_phases_pi"] for d in docs]
    assert any(np.allclose(c, [0.25, 0.3125, 0.75, 0.8125, 0.25], atol=1e-9) for c in canon)


def test_solve_zero_restarts(capsys):
    code, out, _ = run(capsys, "solve", "--n", "5", "--theta", "pi/2", "--restarts", "0")
    assert code == EXIT_NO_SOLUTION
    assert json.loads(out) == []


def test_solve_is_byte_stable(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.json"
        code = main(["solve", "--n", "7", "--theta", "pi/2", "--seed", "42", "--restarts", "20",
                     "--out", str(path)])
        assert code == EXIT_OK
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert loads_solutions(outs[0].decode())


def test_solve_adaptive(capsys):
    code, out, _ = run(capsys, "solve", "--n", "5", "--theta", "pi/2", "--restarts", "20", "--adaptive")
    assert code == EXIT_OK
    assert {d["order"] for d in loads_solutions(out)} == {2}


@pytest.mark.parametrize("argv", [
    ["solve", "--n", "4", "--theta", "pi/2"],
    ["solve", "--n", "5", "--theta", "pi/3"],
    ["solve", "--n", "5"],
    ["verify", "--theta", "pi/2", "--phases", "0.25,abc"],
    ["verify", "--theta", "pi/2", "--phases", "0.25,0.5"],
    ["profile", "--n", "1", "--theta", "pi/2", "--samples", "1"],
    ["profile", "--n", "1", "--theta", "pi/2", "--eps-min", "1", "--eps-max", "0"],
    ["profile", "--theta", "pi/2"],
    ["emit", "--from-table", "3", "--theta", "pi/2"],
    ["bogus"],
])
def test_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as info:
        raise SystemExit(main(argv))
    assert info.value.code == EXIT_USAGE


def test_verify_pass(capsys):
    code, out, _ = run(capsys, "verify", "--theta", "pi/2", "--phases", "0.25,0.375,0.75,0.875,0.25")
    assert code == EXIT_OK
    assert "eps=0" in out and "eps=-1" in out and "eps=+1" in out
    norm = float(out.split("residual_norm=")[1].split()[0])
    assert norm < 1e-12 and out.rstrip().endswith("PASS")


def test_verify_fail(capsys):
    code, out, _ = run(capsys, "verify", "--theta", "pi/2", "--phases", "0,0,0,0,0")
    assert code == EXIT_FAIL
    assert out.rstrip().endswith("FAIL")


def test_verify_rounded_row_with_tolerance(capsys):
    phases = ",".join(str(p) for p in reference_table()[5].phases_pi)  # N=7, pi/2
    code, _, _ = run(capsys, "verify", "--theta", "pi/2", "--phases", phases, "--tol", "5e-3")
    assert code == EXIT_OK


def test_profile_single_gate_csv(capsys):
    code, out, err = run(capsys, "profile", "--n", "1", "--theta", "pi/2",
                         "--eps-min", "-1", "--eps-max", "1", "--samples", "5")
    assert code == EXIT_OK
    p = FidelityProfile.from_csv(out)
    assert out.splitlines()[2].split(",")[1] == "0.707106781187"
    assert np.allclose(p.f_target, [0, 0.707106781187, 1, 0.707106781187, 0], atol=1e-12)
    assert err.startswith("fwhm=")


def _fwhm(text):
    return float(text.split("fwhm=")[1].split()[0])


def test_profile_narrowing_factor(capsys, tmp_path):
    _, _, err1 = run(capsys, "profile", "--n", "1", "--theta", "pi/2")
    path = tmp_path / "p11.csv"
    code, out, _ = run(capsys, "profile", "--from-table", "11", "--theta", "pi/2", "--out", str(path))
    assert code == EXIT_OK
    assert 2.4 <= _fwhm(err1) / _fwhm(out) <= 3.6
    assert len(FidelityProfile.from_csv(path.read_text()).eps_grid) == 3001


def test_table_lists_eight_rows(capsys):
    code, out, _ = run(capsys, "table")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert len(doc) == 8
    assert [tuple(d["phases_pi"]) for d in doc] == [r.phases_pi for r in reference_table()]


def test_table_filter(capsys):
    _, out, _ = run(capsys, "table", "--theta", "pi/4")
    doc = json.loads(out)
    assert len(doc) == 4 and all(d["theta_target_pi"] == 0.25 for d in doc)


def test_table_check_reports_every_row(capsys):
    code, out, _ = run(capsys, "table", "--check")
    doc = json.loads(out)
    status = {(d["n_segments"], d["theta_target_pi"]): d["status"] for d in doc}
    assert all(d["order"] == (d["n_segments"] - 1) // 2 for d in doc)
    assert status[(5, 0.25)] == status[(5, 0.5)] == "PASS"
    # exit status is PASS only if every row passes
    assert code == (EXIT_OK if set(status.values()) == {"PASS"} else EXIT_FAIL)


@pytest.mark.parametrize("theta,slots", [
    ("pi/4", [0.25, 0.0625, 0.4375, 0.0625, -0.5625, -0.25]),
    ("pi/2", [0.25, 0.125, 0.375, 0.125, -0.625, -0.25]),
])
def test_emit_table_circuits(capsys, theta, slots):
    code, out, err = run(capsys, "emit", "--from-table", "5", "--theta", theta, "--check")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert len(lines) == 11
    got = [float(l.split()[2]) for l in lines if l.startswith("PHASE")]
    assert np.allclose(got, slots, atol=1e-12)
    assert float(err.split("=")[1]) < 1e-12


def test_emit_single_gate(capsys):
    code, out, _ = run(capsys, "emit", "--phases", "0", "--theta", "pi/2", "--n", "1")
    assert code == EXIT_OK
    assert out == "PHASE 0 0\nXX 0 1 0.5\nPHASE 0 0\n"


def test_emit_round_trip(capsys):
    _, out, _ = run(capsys, "emit", "--from-table", "9", "--theta", "pi/2")
    gl = GateList.from_text(out)
    assert len(gl) == 19


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "nbgate", "table", "--theta", "pi/2"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert len(json.loads(res.stdout)) == 4

import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from qconc.cli import SWEEP_COLUMNS, main
from qconc.states import DensityMatrix, save_state


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    return code, json.loads(out)


def _sweep_rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# config=")
    return list(csv.reader(io.StringIO("\n".join(lines[1:]))))


# -- verify --


def test_verify_default_passes(capsys, tmp_path):
    out = tmp_path / "verify.json"
    code, _, _ = run(capsys, "verify", "--out", str(out))
    assert code == 0
    report = json.loads(out.read_text())
    assert report["passed"] is True
    assert report["config"]["trials"] == 200 and report["config"]["seed"] == 42
    assert report["config"]["tolerance"] == 1e-9
    assert report["two_copy_relation"] == "linear"
    ids = [e["identity"] for e in report["identities"]]
    assert ids == [
        "two_copy_relation",
        "four_copy_identity",
        "mn_decomposition",
        "rank_claims",
        "mm_reduction",
        "groups_global",
        "groups_local6",
    ]
    for entry in report["identities"]:
        assert {"identity", "status", "max_residual", "trials", "tolerance"} <= set(entry)
    four = report["identities"][1]
    assert four["chosen_direction"] == report["swap_direction"]
    assert "scalar_corrections" in four


def test_verify_roundoff_floor_fails(capsys, caplog):
    code, out, _ = run(capsys, "verify", "--tol", "1e-30", "--trials", "50", "--format", "text")
    assert code == 1
    assert "FAIL: two_copy_relation" in out
    assert "two_copy_relation" in caplog.text


def test_verify_too_few_trials(capsys):
    code, _, err = run(capsys, "verify", "--trials", "10")
    assert code == 2
    assert ">= 50" in err


# -- concurrence --


def test_concurrence_wootters_singlet(capsys):
    code, rep = run_json(capsys, "concurrence", "--state", "bell_psiminus", "--method", "wootters")
    assert code == 0
    assert rep["value"] == pytest.approx(1.0, abs=1e-12)
    assert rep["config"]["state"] == "bell_psiminus"


def test_concurrence_moments_ghz_reduced_file(capsys, tmp_path):
    path = tmp_path / "ghz_ab.json"
    save_state(DensityMatrix(np.diag([0.5, 0, 0, 0.5]), (2, 2)), path)
    code, rep = run_json(capsys, "concurrence", "--state", str(path), "--method", "moments")
    assert code == 0
    assert rep["value"] == pytest.approx(0.0, abs=1e-12)
    assert rep["t1"] == pytest.approx(0.5) and rep["t2"] == pytest.approx(0.125)
    code, rep2 = run_json(capsys, "concurrence", "--state", "ghz_reduced", "--method", "moments")
    assert rep2["value"] == rep["value"]


def test_concurrence_sampled_singlet(capsys):
    code, rep = run_json(
        capsys, "concurrence", "--state", "bell_psiminus", "--method", "sampled", "--shots", "1000000", "--seed", "7"
    )
    assert code == 0
    lo, hi = rep["estimate"]["ci95"]
    assert lo <= 1.0 <= hi
    assert rep["estimate"]["rng"]["seed"] == 7


def test_concurrence_rank_gate(capsys, tmp_path):
    path = tmp_path / "mixed.json"
    save_state(DensityMatrix(np.eye(4) / 4, (2, 2)), path)
    code, rep = run_json(capsys, "concurrence", "--state", str(path), "--method", "moments")
    assert code == 0
    assert rep["rank"] == 4 and "warning" in rep
    assert rep["value"] == rep["wootters"] == 0.0
    code, _, _ = run(capsys, "concurrence", "--state", str(path), "--method", "moments", "--strict")
    assert code == 1


def test_concurrence_text_rounds_to_12_digits(capsys):
    code, out, _ = run(capsys, "concurrence", "--state", "random", "--method", "moments", "--format", "text")
    assert code == 0
    header, line = out.splitlines()[:2]
    assert header.startswith("# {")
    digits = line.split("= ")[1].replace("0.", "", 1)
    assert len(digits.lstrip("0")) <= 12


# -- tangle --


def test_tangle_ghz_hyperdet(capsys):
    code, rep = run_json(capsys, "tangle", "--state", "ghz", "--method", "hyperdet")
    assert code == 0
    assert rep["value"] == pytest.approx(1.0, abs=1e-12)


def test_tangle_w_moments(capsys):
    code, rep = run_json(capsys, "tangle", "--state", "w", "--method", "moments")
    assert code == 0
    assert rep["value"] == pytest.approx(0.0, abs=1e-10)
    code, rep = run_json(capsys, "tangle", "--state", "w_reduced", "--method", "moments")
    assert rep["value"] == pytest.approx(0.0, abs=1e-10)


def test_tangle_random_cross_oracle(capsys):
    for seed in ("1", "2", "3"):
        code, rep = run_json(capsys, "tangle", "--state", "random", "--method", "moments", "--seed", seed)
        assert code == 0
        assert abs(rep["value"] - rep["hyperdet_crosscheck"]) < 1e-9


def test_tangle_hyperdet_needs_pure_triple(capsys):
    code, _, err = run(capsys, "tangle", "--state", "bell_psiminus", "--method", "hyperdet")
    assert code == 2


# -- simulate --


def test_simulate_json_and_shot_csv(capsys, tmp_path):
    shots = tmp_path / "shots.csv"
    code, rep = run_json(
        capsys, "simulate", "--state", "ghz_reduced", "--shots", "20000", "--scheme", "global",
        "--shots-csv", str(shots),
    )
    assert code == 0
    assert rep["scheme"] == "global"
    assert set(rep["estimates"]) == {"t1", "t2", "tau", "concurrence", "three_tangle"}
    assert shots.read_text().startswith("group,projector_index,count\n")


def test_simulate_csv(capsys):
    code, out, _ = run(capsys, "simulate", "--state", "bell_psiminus", "--shots", "1000", "--format", "csv")
    assert code == 0
    rows = _sweep_rows(out)
    assert rows[0][0] == "quantity" and len(rows) == 6


# -- sweep --


def test_sweep_1000_seed_1(capsys):
    code, out, _ = run(capsys, "sweep", "--trials", "1000", "--seed", "1")
    assert code == 0
    rows = _sweep_rows(out)
    assert rows[0] == SWEEP_COLUMNS
    assert len(rows) == 1002
    summary = rows[-1]
    assert summary[0] == "max"
    assert float(summary[4]) < 1e-9
    assert float(summary[10]) < 1e-9


def test_sweep_single_trial(capsys):
    code, out, _ = run(capsys, "sweep", "--trials", "1")
    rows = _sweep_rows(out)
    assert code == 0
    assert len(rows) == 3 and rows[1][0] == "0" and rows[2][0] == "max"


def test_sweep_byte_identical(capsys, tmp_path, monkeypatch):
    path = tmp_path / "sweep.csv"
    main(["sweep", "--trials", "200", "--seed", "5", "--out", str(path)])
    first = path.read_bytes()
    monkeypatch.setenv("QCONC_THREADS", "1")
    main(["sweep", "--trials", "200", "--seed", "5", "--out", str(path)])
    assert path.read_bytes() == first


def test_rerun_byte_identical_json(capsys):
    argv = ["simulate", "--state", "random", "--shots", "2000", "--seed", "3", "--format", "json"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b


def test_sweep_unwritable_output(capsys, tmp_path):
    code, _, err = run(capsys, "sweep", "--trials", "2", "--out", str(tmp_path / "no" / "such" / "f.csv"))
    assert code == 2
    assert "cannot write" in err


# -- usage errors --


def test_unknown_state(capsys):
    code, _, err = run(capsys, "concurrence", "--state", "bell_xyz")
    assert code == 2


def test_invalid_state_file(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"kind": "density", "dims": [2], "data": [[0.45, 0], [0, 0], [0, 0], [0.45, 0]]}))
    code, _, err = run(capsys, "concurrence", "--state", str(path))
    assert code == 2
    assert "trace" in err


def test_missing_state_and_bad_flags(capsys):
    with pytest.raises(SystemExit) as e:
        main(["concurrence"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["simulate", "--state", "bell_psiminus", "--scheme", "local10"])
    assert e.value.code == 2
    code, _, _ = run(capsys, "concurrence", "--state", "bell_psiminus", "--method", "guess")
    assert code == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qconc", "concurrence", "--state", "bell_psiminus", "--format", "text"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert "concurrence (wootters) = 1" in proc.stdout

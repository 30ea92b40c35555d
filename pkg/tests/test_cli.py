import json
import subprocess
import sys

import numpy as np
import pytest

from eqscm.cli import main

CYCLIC_SRC = """\
MODEL loop
SPECIES A TOTAL=10 INIT=0
SPECIES B TOTAL=10 INIT=0
ACTIVATE A BY B RATE 1.0
DEACTIVATE A AUTO RATE 1.0
ACTIVATE B BY A RATE 1.0
DEACTIVATE B AUTO RATE 1.0
"""


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_validate_builtin_ok(capsys):
    code, out, err = run_cli(["validate", "builtin:mapk-exp1"], capsys)
    assert code == 0
    assert "OK" in out


def test_validate_cyclic_model_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.rxn"
    bad.write_text(CYCLIC_SRC)
    code, out, err = run_cli(["validate", str(bad)], capsys)
    assert code == 1
    assert "cycle" in err


def test_validate_parse_errors_reported(tmp_path, capsys):
    bad = tmp_path / "junk.rxn"
    bad.write_text("MODEL x\nACTIVATE Y BY X RATE -1\n")
    code, out, err = run_cli(["validate", str(bad)], capsys)
    assert code == 1
    assert "rate must be positive" in err
    assert f"{bad}:2:" in err


def test_unknown_builtin(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["equilibrium", "--model", "builtin:nope"])
    assert exc.value.code == 1


def test_equilibrium_table_igf(capsys):
    code, out, err = run_cli(["equilibrium", "--model", "builtin:igf"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# eq-scm")
    assert lines[1] == "species,theta,mean"
    rows = {line.split(",")[0]: line.split(",")[1:] for line in lines[2:]}
    theta, mean = map(float, rows["SOS"])
    assert theta == pytest.approx(0.4565, abs=1e-3)
    assert mean == pytest.approx(45.65, abs=0.01)


def test_counterfactual_csv(tmp_path, capsys):
    out_path = tmp_path / "cf.csv"
    code, out, err = run_cli(
        [
            "counterfactual", "--model", "builtin:mapk-exp1",
            "--observe", "K3=50,K2=71,K=88", "--do", "K3=25", "--query", "K",
            "--samples", "1000", "--seed", "7", "--out", str(out_path),
        ],
        capsys,
    )
    assert code == 0
    lines = out_path.read_text().splitlines()
    assert lines[1] == "draw,K"
    values = np.array([float(l.split(",")[1]) for l in lines[2:]])
    assert len(values) == 1000
    assert abs(values.mean() - 84.75) < 0.5


def test_counterfactual_runtime_error_exit_2(capsys):
    code, out, err = run_cli(
        [
            "counterfactual", "--model", "builtin:mapk-exp1",
            "--observe", "K3=50,K2=71,K=88.5", "--do", "K3=25", "--query", "K",
            "--kind", "binomial", "--samples", "10", "--seed", "1",
        ],
        capsys,
    )
    assert code == 2
    assert "error" in err


def test_counterfactual_incomplete_observation_exit_2(capsys):
    code, out, err = run_cli(
        [
            "counterfactual", "--model", "builtin:mapk-exp1",
            "--observe", "K3=50", "--do", "K3=25", "--query", "K",
            "--samples", "10", "--seed", "1",
        ],
        capsys,
    )
    assert code == 2


def test_simulate_trajectory_and_determinism(tmp_path, capsys):
    args = [
        "simulate", "--model", "builtin:mapk-exp1", "--t-end", "5",
        "--seed", "42", "--record", "grid", "--grid-dt", "1.0",
    ]
    code, out1, _ = run_cli(args, capsys)
    assert code == 0
    code, out2, _ = run_cli(args, capsys)
    assert out1 == out2
    lines = out1.splitlines()
    assert lines[1] == "time,K3,K2,K"
    assert len(lines) == 2 + 6  # grid 0..5


def test_simulate_runs_end_states(capsys):
    code, out, _ = run_cli(
        ["simulate", "--model", "builtin:toy", "--t-end", "5", "--seed", "0", "--runs", "4"],
        capsys,
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[1] == "seed,X1,X2,Y"
    assert [l.split(",")[0] for l in lines[2:]] == ["0", "1", "2", "3"]


def test_simulate_mean_mode(capsys):
    code, out, _ = run_cli(
        ["simulate", "--model", "builtin:mapk-exp1", "--mode", "mean", "--t-end", "2", "--dt", "0.01"],
        capsys,
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[1] == "time,K3,K2,K"
    assert len(lines) == 2 + 201


def test_simulate_generated_seed_recorded(capsys):
    code, out, _ = run_cli(
        ["simulate", "--model", "builtin:toy", "--t-end", "1"], capsys
    )
    assert code == 0
    header = out.splitlines()[0]
    assert "seed=" in header
    seed = int(header.split("seed=")[1].split()[0])
    assert seed >= 0


def test_eval_det_cli(tmp_path, capsys):
    out_path = tmp_path / "det.csv"
    code, _, _ = run_cli(
        [
            "eval-det", "--model", "builtin:mapk-exp1",
            "--cf-rate", "activate:K3:E1", "--cf-scale", str(1 / 3),
            "--intervene", "K3", "--query", "K", "--draws", "50",
            "--seed", "0", "--out", str(out_path),
        ],
        capsys,
    )
    assert code == 0
    lines = out_path.read_text().splitlines()
    assert lines[1] == "source,seed_or_draw,value"
    assert lines[2].startswith("deterministic-truth,0,")
    delta = float(lines[2].split(",")[2])
    assert delta == pytest.approx(-2.9735, abs=1e-3)
    assert sum(1 for l in lines if l.startswith("scm-counterfactual")) == 50


def test_eval_stoch_cli_byte_identical(tmp_path, capsys):
    args = [
        "eval-stoch", "--model", "builtin:toy",
        "--cf-rate", "activate:Y:X1", "--cf-scale", "0.5",
        "--intervene", "Y", "--query", "Y", "--n-seeds", "20",
        "--seed", "3", "--scm-seed", "4", "--t-end", "20", "--jobs", "1",
    ]
    code, out1, _ = run_cli(args, capsys)
    assert code == 0
    code, out2, _ = run_cli(args + ["--jobs", "2"], capsys)
    assert out1 == out2


def test_eval_misspec_cli_json(tmp_path, capsys):
    out_path = tmp_path / "report.json"
    code, _, _ = run_cli(
        [
            "eval-misspec", "--model", "builtin:mapk-exp1",
            "--perturb-rate", "activate:K2:K3", "--lo", "0.1", "--hi", "0.5",
            "--reps", "2", "--cf-rate", "activate:K3:E1", "--cf-scale", str(1 / 3),
            "--intervene", "K3", "--query", "K", "--seeds-per-rep", "10",
            "--seed", "5", "--t-end", "30", "--jobs", "1", "--out", str(out_path),
        ],
        capsys,
    )
    assert code == 0
    payload = json.loads(out_path.read_text())
    assert len(payload["reps"]) == 2
    assert {"median_true", "median_scm", "median_sim"} <= set(payload["reps"][0])
    assert "avg_gap_scm" in payload and "avg_gap_sim" in payload
    assert payload["meta"]["master_seed"] == 5


def test_cli_help_all_subcommands():
    for cmd in ("validate", "simulate", "equilibrium", "counterfactual",
                "eval-det", "eval-stoch", "eval-misspec"):
        proc = subprocess.run(
            [sys.executable, "-m", "eqscm.cli", cmd, "--help"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, cmd
        assert cmd in proc.stdout


def test_cli_unknown_flag_fails_fast():
    proc = subprocess.run(
        [sys.executable, "-m", "eqscm.cli", "validate", "builtin:toy", "--bogus"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
    assert "bogus" in proc.stderr


def test_entry_point_module_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "eqscm.cli", "--version"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert "eq-scm 0.1.0" in proc.stdout

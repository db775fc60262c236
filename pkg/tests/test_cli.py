import json
import math
import subprocess
import sys

import numpy as np
import pytest

from hetverify import io
from hetverify.cli import main
from hetverify.protocols import protocol3_failure
from hetverify.states import CoreState, FockDensityMatrix, TargetSpec, apply_loss, haar_unitary


@pytest.fixture
def files(tmp_path):
    io.save_target(TargetSpec.boson_sampling(haar_unitary(3, seed=1), 1), tmp_path / "t.json")
    io.save_target(TargetSpec([CoreState.fock(0)], np.eye(1), beta=[3.0]), tmp_path / "far.json")
    io.save_state(apply_loss(FockDensityMatrix.fock(1, 4), 0.8), tmp_path / "rho.json")
    io.save_state(FockDensityMatrix.fock(0, 4), tmp_path / "vac.json")
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_plan_bs(capsys):
    code, out, _ = run(capsys, "plan", "--protocol", "bs", "--modes", 4, "--photons", 2, "--epsilon", 0.1,
                       "--delta", 0.05, "--p", 2, "--eta", 0.3, "--json")
    assert code == 0
    doc = json.loads(out)
    io.validate(doc)
    n = doc["shots_required"]
    assert protocol3_failure(n, 0.1, 4, 2, 2, 0.3) <= 0.05 < protocol3_failure(n - 1, 0.1, 4, 2, 2, 0.3)
    assert doc["params"]["flags"]["modes"] == 4


def test_plan_fe_reports_exponent(capsys):
    code, out, _ = run(capsys, "plan", "--protocol", "fe", "--core", "0,1", "--epsilon", 0.1, "--delta", 0.1, "--p", 1)
    assert code == 0
    assert "exponent 2+2c/p = 6" in out
    assert "A=2" in out


def test_plan_witness(capsys, files):
    code, out, _ = run(capsys, "plan", "--protocol", "witness", "--target", files / "t.json", "--epsilon", 0.3,
                       "--delta", 0.1, "--p", 2, "--json")
    assert code == 0
    assert json.loads(out)["formula_tag"] == "protocol2:P_W_iid"


def test_plan_missing_flag(capsys):
    code = None
    with pytest.raises(SystemExit) as exc:
        main(["plan", "--protocol", "fe", "--epsilon", "0.1"])
    code = exc.value.code
    assert code == 2
    assert "usage" in capsys.readouterr().err


def test_plan_inadmissible_eta(capsys):
    code, _, err = run(capsys, "plan", "--protocol", "fe", "--core", "0,1", "--epsilon", 0.1, "--delta", 0.1,
                       "--p", 1, "--eta", 0.5)
    assert code == 2 and "cap" in err


def test_simulate_shape_and_determinism(capsys, files):
    a, b = files / "a.csv", files / "b.csv"
    for path in (a, b):
        code, _, _ = run(capsys, "simulate", "--target", files / "t.json", "--prover", "ideal", "--shots", 1000,
                         "--seed", 7, "--out", path)
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes().count(b"\n") == 1 + 3000
    meta = io.read_metadata(a)
    assert meta["shots"] == 1000 and meta["flags"]["seed"] == 7


def test_simulate_loss_dispatch(capsys, files):
    code, _, _ = run(capsys, "simulate", "--target", files / "t.json", "--prover", "loss:0.8", "--shots", 10,
                     "--out", files / "l.csv")
    assert code == 0
    assert io.read_metadata(files / "l.csv")["prover_tag"] == "lossy:0.8,0.8,0.8"


def test_simulate_unknown_prover(capsys, files):
    code, _, err = run(capsys, "simulate", "--target", files / "t.json", "--prover", "magic", "--shots", 10,
                       "--out", files / "x.csv")
    assert code == 2 and "unknown prover" in err


def test_verify_bs_accept_and_abort(capsys, files):
    run(capsys, "simulate", "--target", files / "t.json", "--shots", 200_000, "--seed", 1, "--out", files / "s.csv")
    code, out, _ = run(capsys, "verify-bs", "--target", files / "t.json", "--samples", files / "s.csv",
                       "--lambda", 0.25, "--epsilon", 0.05, "--json")
    doc = json.loads(out)
    assert code == 0 and doc["decision"] == "accept" and doc["tvd_bound"] == 0.5
    assert doc["flags"]["under_planned"] is True
    code, out, _ = run(capsys, "verify-bs", "--target", files / "t.json", "--simulate", "spoof", "--shots", 200_000,
                       "--lambda", 0.25, "--epsilon", 0.05, "--json")
    doc = json.loads(out)
    assert code == 1 and doc["decision"] == "abort" and doc["tvd_bound"] is None


def test_verify_bs_epsilon_not_below_lambda(capsys, files):
    code, _, err = run(capsys, "verify-bs", "--target", files / "t.json", "--simulate", "ideal", "--shots", 10,
                       "--lambda", 0.2, "--epsilon", 0.25)
    assert code == 2


def test_verify_bs_needs_one_source(capsys, files):
    code, _, _ = run(capsys, "verify-bs", "--target", files / "t.json", "--lambda", 0.2, "--epsilon", 0.1)
    assert code == 2


def test_verify_bs_rejects_non_bs_target(capsys, files):
    code, _, _ = run(capsys, "verify-bs", "--target", files / "far.json", "--simulate", "ideal", "--shots", 10,
                     "--lambda", 0.2, "--epsilon", 0.1)
    assert code == 2


def test_estimate_and_witness(capsys, files):
    run(capsys, "simulate", "--target", files / "t.json", "--shots", 50_000, "--seed", 2, "--out", files / "s.csv")
    code, out, _ = run(capsys, "witness", "--target", files / "t.json", "--samples", files / "s.csv",
                       "--p", 2, "--eta", 0.3, "--json")
    assert code == 0
    w = json.loads(out)["witness"]
    assert w > 0.9
    code, out, _ = run(capsys, "estimate", "--samples", files / "s.csv", "--core", "1", "--mode", 1,
                       "--p", 2, "--eta", 0.3, "--json")
    assert code == 0
    assert json.loads(out)["formula_tag"] == "protocol1"


def test_noniid_paths(capsys, files):
    run(capsys, "simulate", "--target", files / "t.json", "--shots", 30_000, "--seed", 3, "--out", files / "s.csv")
    base = ["noniid", "--target", files / "t.json", "--samples", files / "s.csv", "--n-estimate", 20_000,
            "--k-energy", 5_000, "--q-discard", 5_000, "--epsilon", 0.3, "--p", 2, "--eta", 0.3, "--json"]
    code, out, _ = run(capsys, *base, "--energy", 12, "--allowance", 10)
    doc = json.loads(out)
    assert code == 0
    assert set(doc["failure_probabilities"]) == {"support", "definetti", "choice", "hoeffding", "total"}
    # per-mode union bound: m copies of M(Q+M-1)/(N'+M)
    assert doc["failure_probabilities"]["choice"] == pytest.approx(3 * 5000 / 20_001)
    code, out, _ = run(capsys, *base, "--energy", 1.5, "--allowance", 0)
    assert code == 1 and json.loads(out)["decision"] == "abort"
    code, _, _ = run(capsys, *base[:-1], "--energy", 12, "--allowance", 10, "--n-estimate", 1)
    assert code == 2


def test_oracle_fidelity_and_truncation(capsys, files):
    code, out, _ = run(capsys, "oracle", "--state", files / "rho.json", "--quantity", "fidelity", "--core", "0,1",
                       "--json")
    doc = json.loads(out)
    assert code == 0 and doc["value"] == pytest.approx(0.8)
    code, _, err = run(capsys, "oracle", "--state", files / "vac.json", "--quantity", "fidelity",
                       "--target", files / "far.json")
    assert code == 3 and "norm deficit" in err


def test_oracle_witness(capsys, files):
    code, out, _ = run(capsys, "oracle", "--state", files / "rho.json", "--quantity", "witness", "--core", "0,1",
                       "--json")
    assert code == 0 and json.loads(out)["value"] == pytest.approx(0.8)


def test_oracle_expectation_table(capsys, files):
    table = files / "tab.csv"
    code, out, _ = run(capsys, "oracle", "--state", files / "rho.json", "--quantity", "expectation",
                       "--kl", "1,1", "--kl", "0,0", "--p", 2, "--eta", 0.3, "--table", table, "--shots", 50_000,
                       "--json")
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx([0.8, 0.0])
    lines = table.read_text().splitlines()
    assert lines[0] == "k,l,p,eta,part,exact,monte_carlo,stderr,shots"
    assert len(lines) == 5
    for row in lines[1:]:
        k, l, p, eta, part, exact, mc, se, n = row.split(",")
        assert abs(float(exact) - float(mc)) <= 5 * float(se) + 1e-15


def test_report_embeds_flags(capsys, files):
    out_path = files / "r.json"
    code, _, _ = run(capsys, "verify-bs", "--target", files / "t.json", "--simulate", "ideal", "--shots", 1000,
                     "--seed", 9, "--lambda", 0.5, "--epsilon", 0.1, "--out", out_path)
    doc = io.read_json(out_path)
    assert doc["flags"]["seed"] == 9 and doc["flags"]["simulate"] == "ideal"
    assert not math.isnan(doc["witness"])


def test_module_entry_point(files):
    res = subprocess.run([sys.executable, "-m", "hetverify", "plan", "--protocol", "bs", "--modes", "2",
                          "--photons", "1", "--epsilon", "0.1", "--delta", "0.1"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("N = ")

import csv
import io
import json

import numpy as np
import pytest

from condrdp import binary_entropy
from condrdp.cli import EXIT_INPUT, EXIT_NONCONVERGED, EXIT_OK, main

LOG2 = np.log(2.0)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_binary_curve_rows(capsys):
    code, out, _ = run(capsys, "binary-curve", "--D-start", "0.05", "--D-stop", "0.5", "--D-step", "0.05",
                       "--P-factors", "0,1")
    assert code == EXIT_OK
    r = rows(out)
    assert len(r) == 20
    assert [float(x["D"]) for x in r[:4]] == [0.05, 0.05, 0.1, 0.1]
    for x in r:
        D, P, rate = float(x["D"]), float(x["P"]), float(x["rate_nats"])
        assert float(x["rate_bits"]) == pytest.approx(rate / LOG2, abs=1e-11)
        if D == 0.5:
            assert rate == 0.0
        if P == D:
            assert rate == pytest.approx(LOG2 - binary_entropy(D), abs=1e-3)


def test_binary_curve_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["binary-curve", "--D", "0.1,0.3", "--P", "0.02", "--out", str(a)]) == 0
    assert main(["binary-curve", "--D", "0.1,0.3", "--P", "0.02", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_binary_curve_rejects_range(capsys):
    code, _, err = run(capsys, "binary-curve", "--D", "1.5")
    assert code == EXIT_INPUT and "outside" in err


def test_gaussian_json(capsys):
    code, out, _ = run(capsys, "gaussian-waterfill", "--eigenvalues", "1", "--D", "0.2", "--P", "0")
    assert code == EXIT_OK
    assert json.loads(out)["rate_nats"] == pytest.approx(1.151293, abs=1e-6)
    code, out, _ = run(capsys, "gaussian-waterfill", "--eigenvalues", "1,0.25", "--D", "0.5", "--P", "0.5")
    assert json.loads(out)["rate_nats"] == pytest.approx(0.693147, abs=1e-6)
    code, out, _ = run(capsys, "gaussian-waterfill", "--eigenvalues", "1", "--D", "3", "--P", "3")
    obj = json.loads(out)
    assert obj["rate_nats"] == 0.0 and obj["omega_l"] == [1.0]


def test_gaussian_spec_inline(capsys):
    code, out, _ = run(capsys, "gaussian-waterfill", "--spec", '{"eigenvalues": [1.0], "D": 0.2, "P": 0.05}')
    assert code == EXIT_OK
    assert set(json.loads(out)) >= {"D_star", "omega", "omega_l", "gamma", "gamma_hat", "D_l", "P_l",
                                    "rate_nats", "alpha"}


def test_gaussian_curve(capsys):
    code, out, _ = run(capsys, "gaussian-waterfill", "--eigenvalues", "1,0.5", "--P", "0.1", "--curve",
                       "--D-start", "0.1", "--D-stop", "1.0", "--D-step", "0.1")
    assert code == EXIT_OK
    r = rows(out)
    assert len(r) == 10
    assert json.loads(r[0]["omega_l"]) and r[0]["method"] == "closed-form"
    rates = [float(x["rate_nats"]) for x in r]
    assert all(a >= b for a, b in zip(rates, rates[1:]))


def test_gaussian_bad_eigenvalue(capsys):
    code, _, err = run(capsys, "gaussian-waterfill", "--eigenvalues", "1,-1", "--D", "0.2", "--P", "0")
    assert code == EXIT_INPUT and err.startswith("error:")


def test_finite_solve(tmp_path, capsys):
    prob = {"source": {"probs": [0.5, 0.5]}, "distortion": [[0, 1], [1, 0]], "cost": [[0, 1], [1, 0]],
            "D": 0.11, "P": 0.11, "u_card": 6}
    f = tmp_path / "p.json"
    f.write_text(json.dumps(prob))
    code, out, _ = run(capsys, "finite-solve", "--problem", str(f), "--restarts", "4")
    assert code == EXIT_OK
    sol = json.loads(out)["solution"]
    assert sol["rate_nats"] == pytest.approx(LOG2 - binary_entropy(0.11), abs=2e-3)


def test_finite_solve_nonconverged(capsys):
    prob = {"source": [0.5, 0.5], "distortion": [[0.2, 1], [1, 0.2]], "cost": [[0, 1], [1, 0]], "D": 0.1, "P": 0}
    code, out, _ = run(capsys, "finite-solve", "--problem", json.dumps(prob), "--restarts", "1")
    assert code == EXIT_NONCONVERGED
    assert json.loads(out)["solution"]["converged"] is False


def test_finite_solve_malformed(capsys):
    code, _, err = run(capsys, "finite-solve", "--problem", "{not json")
    assert code == EXIT_INPUT and "malformed" in err
    code, _, _ = run(capsys, "finite-solve", "--problem", '{"D": 0.1}')
    assert code == EXIT_INPUT
    code, _, _ = run(capsys, "finite-solve", "--problem", "/no/such/file.json")
    assert code == EXIT_INPUT


def test_finite_curve(capsys):
    prob = {"source": [0.5, 0.5], "distortion": [[0, 1], [1, 0]], "cost": [[0, 1], [1, 0]], "D": 0.1, "P": 0.1}
    code, out, _ = run(capsys, "finite-curve", "--problem", json.dumps(prob), "--D", "0.1,0.2",
                       "--P-factors", "1", "--restarts", "2")
    assert code == EXIT_OK
    r = rows(out)
    assert len(r) == 2 and all(x["monotone"] == "1" for x in r)


def test_simulate_deterministic(capsys):
    spec = '{"kind": "gaussian", "eigenvalues": [1.0], "D": 0.2, "P": 0.05}'
    _, a, _ = run(capsys, "simulate", "--construction", spec, "--samples", "20000", "--seed", "3")
    _, b, _ = run(capsys, "simulate", "--construction", spec, "--samples", "20000", "--seed", "3")
    assert a == b
    assert json.loads(a)["target_P"] == pytest.approx(0.05)


def test_simulate_finite_and_binary(capsys):
    spec = {"kind": "finite", "source": [0.5, 0.5], "encoder": [[1, 0], [0, 1]], "decoder": [[1, 0], [0, 1]]}
    code, out, _ = run(capsys, "simulate", "--construction", json.dumps(spec), "--samples", "1000")
    assert code == EXIT_OK and json.loads(out)["est_D"] == 0.0
    code, out, _ = run(capsys, "simulate", "--construction", '{"kind": "binary", "D": 0.2, "P": 0.2}',
                       "--samples", "20000", "--restarts", "2")
    assert code == EXIT_OK
    rep = json.loads(out)
    assert abs(rep["z_D"]) < 5


def test_simulate_errors(capsys):
    code, _, _ = run(capsys, "simulate", "--construction", '{"kind": "nope"}')
    assert code == EXIT_INPUT
    code, _, _ = run(capsys, "simulate", "--construction", '{"kind": "finite", "source": [1]}')
    assert code == EXIT_INPUT
    spec = {"kind": "finite", "source": [0.5, 0.5], "encoder": [[1, 0], [0, 1]], "decoder": [[1, 0], [0, 1]]}
    code, _, err = run(capsys, "simulate", "--construction", json.dumps(spec), "--samples", "50")
    assert code == EXIT_INPUT


def test_compare_gaussian(capsys):
    code, out, _ = run(capsys, "compare", "--kind", "gaussian", "--eigenvalues", "2,1,0.3",
                       "--D", "0.1,0.5,1.0", "--P-factors", "0,0.5,1")
    assert code == EXIT_OK
    assert json.loads(out)["max_gap"] <= 1e-12


def test_compare_binary(capsys):
    code, out, _ = run(capsys, "compare", "--D", "0.11", "--P", "0.11", "--restarts", "8", "--grid-n", "256")
    assert code == EXIT_OK
    assert json.loads(out)["max_gap"] <= 2e-3


def test_compare_gaussian_needs_eigenvalues(capsys):
    code, _, _ = run(capsys, "compare", "--kind", "gaussian", "--D", "0.1")
    assert code == EXIT_INPUT

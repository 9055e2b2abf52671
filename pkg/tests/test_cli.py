import csv
import json
import math

import pytest

from curvednbody import cli


def _config(tmp_path, name="run.json", **overrides):
    cfg = {
        "sigma": 1,
        "class": "PositiveElliptic",
        "n": 3,
        "masses": 1.0,
        "initial": {"r0": 0.6, "rdot0": 0.05, "thetadot0": 1.0},
        "integrator": {"method": "rk4", "t_end": 0.5, "sample_dt": 0.05, "h0": 0.01},
    }
    cfg.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_simulate_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["simulate", "--config", str(_config(tmp_path)), "--out-dir", str(out)]) == 0
    traj, diag = _rows(out / "trajectory.csv"), _rows(out / "diagnostics.csv")
    assert len(traj) == len(diag) == 12
    assert traj[0][:3] == ["t", "q1_1", "q1_2"] and len(traj[0]) == 1 + 3 * 8
    assert diag[0] == cli.DIAGNOSTICS_HEADER
    assert all(row[-1] == "" for row in diag[1:])
    report = json.loads((out / "report.json").read_text())
    assert report["command"] == "simulate" and report["results"]["samples"] == 11
    assert "simulate:" in capsys.readouterr().out


def test_simulate_hyperbolic_fills_rho_column(tmp_path):
    cfg = _config(tmp_path, sigma=-1, **{"class": "NegativeEllipticHyperbolic"},
                  initial={"rho0": 1.2, "rhodot0": 0.05, "phidot0": 0.3})
    assert cli.main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
    diag = _rows(tmp_path / "diagnostics.csv")
    assert all(row[-1] != "" for row in diag[1:])


def test_simulate_is_byte_identical(tmp_path):
    cfg = _config(tmp_path)
    for d in ("a", "b"):
        assert cli.main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path / d)]) == 0
    for name in ("trajectory.csv", "diagnostics.csv", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_off_manifold_config(tmp_path, capsys):
    cfg = _config(tmp_path, initial={"r0": 0.9, "z1_0": 0.5})
    assert cli.main(["simulate", "--config", str(cfg)]) == 2
    assert "OffManifold" in capsys.readouterr().err


@pytest.mark.parametrize(
    "overrides",
    [{"sigma": 2}, {"n": 1}, {"bogus": 1}, {"sigma": -1}, {"integrator": {"t_end": -1}}, {"masses": [1, 2]}],
)
def test_invalid_configs(tmp_path, overrides):
    assert cli.main(["simulate", "--config", str(_config(tmp_path, **overrides))]) == 2


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["simulate", "--config", str(bad)]) == 2
    assert cli.main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2


def test_head_on_collision_exit_3(tmp_path, capsys):
    cfg = _config(tmp_path, n=2, initial={"r0": 0.5, "rdot0": -0.5},
                  integrator={"t_end": 10.0, "sample_dt": 0.1})
    assert cli.main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 3
    assert "bodies 1 and 2" in capsys.readouterr().err


def test_step_underflow_exit_4(tmp_path):
    cfg = _config(tmp_path, integrator={"t_end": 1.0, "min_step": 10.0})
    assert cli.main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 4


def test_equilibrium_two_body(tmp_path, capsys):
    out = tmp_path / "eq.json"
    code = cli.main(["equilibrium", "--sigma", "-1", "--n", "2", "--mass", "1",
                     "--angular-speed", repr(math.sqrt(0.08838835)), "--json", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["results"]["root_count"] == 1
    assert doc["results"]["roots"][0] == pytest.approx(1.0, abs=1e-6)
    assert json.loads(capsys.readouterr().out) == doc


def test_equilibrium_sphere_range_error():
    assert cli.main(["equilibrium", "--sigma", "1", "--n", "3", "--angular-speed", "2", "--r-max", "1.5"]) == 2


def test_equilibrium_root_count_at_most_one(capsys):
    for n, a in ((3, 0.7), (5, 4.0), (7, 0.05)):
        assert cli.main(["equilibrium", "--sigma", "-1", "--n", str(n), "--angular-speed", str(a)]) == 0
        assert json.loads(capsys.readouterr().out)["results"]["root_count"] <= 1


def test_equilibrium_requires_speed():
    assert cli.main(["equilibrium", "--sigma", "-1", "--n", "3"]) == 2


def test_bad_sigma_argument():
    with pytest.raises(SystemExit) as exc:
        cli.main(["equilibrium", "--sigma", "0", "--n", "3", "--angular-speed", "1"])
    assert exc.value.code == 2


def test_verify_unknown_suite():
    with pytest.raises(SystemExit) as exc:
        cli.main(["verify", "bogus"])
    assert exc.value.code == 2


def test_verify_theorem1_and_monotonicity(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert cli.main(["verify", "theorem1", "--seed", "1", "--json", str(out)]) == 0
    assert json.loads(out.read_text())["seed"] == 1
    assert cli.main(["verify", "monotonicity"]) == 0
    text = capsys.readouterr().out
    assert "sphere_threshold_sq" in text and "FAIL" not in text


def test_verify_failure_exit_1(monkeypatch):
    monkeypatch.setitem(cli.SUITES, "theorem2", lambda seed: [cli._check("forced", 1.0, 0.0, False)])
    assert cli.main(["verify", "theorem2"]) == 1

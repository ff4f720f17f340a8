import json
import math
import subprocess
import sys

import numpy as np
import pytest

from spinstar.cli import _angle, main, selftest
from spinstar.errors import ConfigError
from spinstar.runner import RunConfig, figure_recipe, run_config, run_figure
from spinstar.trajectory import Trajectory, format_float


def _run(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    code = main(["run", *args, "--out", str(out)])
    return code, out


def _error(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


@pytest.mark.parametrize("text, value", [("pi/3", math.pi / 3), ("2*pi", 2 * math.pi), ("0.5pi", math.pi / 2),
                                         ("-pi/2", -math.pi / 2), ("0.25", 0.25), ("pi", math.pi)])
def test_angle_parser(text, value):
    assert _angle(text) == pytest.approx(value)


def test_compare_exact_oracle_passes_and_is_deterministic(tmp_path):
    args = ["--mode", "compare", "--n", "8", "--alpha", "1", "--family", "phi+", "--theta", "pi/4",
            "--beta", "0", "--methods", "exact,oracle", "--tmax", "10", "--steps", "41", "--assert"]
    code, out = _run(tmp_path, *args, name="a.csv")
    assert code == 0
    meta = json.loads(out.with_suffix(".json").read_text())
    assert meta["deviation"]["oracle_vs_exact"]["max_abs"] < 1e-9
    code, out2 = _run(tmp_path, *args, name="b.csv")
    assert out.read_bytes() == out2.read_bytes()
    assert out.with_suffix(".json").read_bytes() == out2.with_suffix(".json").read_bytes()
    text = out.read_text()
    assert "\r" not in text
    assert text.splitlines()[0] == "t_gamma,exact,oracle,absdiff_oracle_exact"


def test_compare_metrics_recomputable_from_columns(tmp_path):
    code, out = _run(tmp_path, "--mode", "compare", "--n", "6", "--alpha", "0.5", "--methods", "exact,tcl2",
                     "--tmax", "1", "--steps", "11")
    assert code == 0
    traj = Trajectory.from_csv(out.read_text())
    meta = json.loads(out.with_suffix(".json").read_text())
    diff = np.abs(traj["tcl2"] - traj["exact"])
    assert meta["deviation"]["tcl2_vs_exact"]["max_abs"] == float(diff.max())
    np.testing.assert_array_equal(traj["absdiff_tcl2_exact"], diff)


def test_compare_tcl2_short_time(tmp_path):
    code, out = _run(tmp_path, "--mode", "compare", "--n", "20", "--alpha", "0.5", "--theta", "pi/3",
                     "--beta", "pi/2", "--methods", "exact,tcl2", "--tmax", "1", "--steps", "51", "--assert")
    assert code == 0
    meta = json.loads(out.with_suffix(".json").read_text())
    assert meta["deviation"]["tcl2_vs_exact"]["max_abs"] <= 0.05


def test_assert_threshold_violation(tmp_path, capsys):
    code, _ = _run(tmp_path, "--mode", "compare", "--n", "20", "--alpha", "0.5", "--theta", "pi/3",
                   "--beta", "pi/2", "--methods", "exact,tcl2", "--tmax", "1", "--steps", "11",
                   "--threshold", "1e-6", "--assert")
    assert code == 4
    assert _error(capsys)["exit_code"] == 4


def test_limit_validity_flag(tmp_path):
    code, out = _run(tmp_path, "--mode", "limit", "--alpha", "2", "--tmax", "5", "--steps", "11")
    assert code == 0
    meta = json.loads(out.with_suffix(".json").read_text())
    assert meta["limit_validity"] == "questionable"
    assert meta["warnings"]


@pytest.mark.parametrize("args", [["--mode", "bogus"], ["--steps", "1"], ["--family", "ghz"],
                                  ["--state-json", "{not json"], ["--mode", "tcl2", "--tcl2-step", "0.5"],
                                  ["--mode", "compare", "--methods", "exact"]])
def test_config_errors_exit_2(tmp_path, capsys, args):
    code, _ = _run(tmp_path, *args)
    assert code == 2
    err = _error(capsys)
    assert err["exit_code"] == 2 and err["message"]


def test_solver_error_exit_3(tmp_path, capsys):
    code, _ = _run(tmp_path, "--mode", "compare", "--n", "12", "--methods", "exact,dense", "--steps", "3")
    assert code == 3
    assert _error(capsys)["error"] == "BathTooLarge"


def test_degenerate_alpha_in_limit_mode_exit_3(tmp_path, capsys):
    code, _ = _run(tmp_path, "--mode", "limit", "--alpha", "0", "--steps", "3")
    assert code == 3
    assert _error(capsys)["error"] == "DegenerateAlpha"


def test_config_file_with_flag_override(tmp_path):
    cfg = {"mode": "exact", "N": 5, "alpha_over_gamma": 0.3, "state": {"family": "phi-", "theta": 0.4, "beta": 0.2},
           "t_max_gamma": 2.0, "steps": 5}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code = main(["run", "--config", str(path), "--n", "7", "--out", str(tmp_path / "o.csv")])
    assert code == 0
    echo = json.loads((tmp_path / "o.json").read_text())["config"]
    assert echo["N"] == 7
    assert echo["family"] == "phi_minus"
    assert echo["alpha_over_gamma"] == 0.3
    assert "output" not in echo


def test_unknown_config_key(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"mode": "exact", "bogus": 1}))
    assert main(["run", "--config", str(path)]) == 2


def test_custom_state_json(tmp_path):
    state = json.dumps({"rho11": 0.1, "rho22": 0.4, "rho33": 0.4, "rho44": 0.1, "rho23": [0.1, -0.2]})
    code, out = _run(tmp_path, "--mode", "exact", "--n", "3", "--state-json", state, "--tmax", "1", "--steps", "3")
    assert code == 0
    traj = Trajectory.from_csv(out.read_text())
    assert traj["exact"][0] == pytest.approx(0.5)


def test_random_family_uses_seed():
    a = RunConfig(mode="exact", N=3, family="random", seed=5).state()
    b = RunConfig(mode="exact", N=3, family="random", seed=5).state()
    c = RunConfig(mode="exact", N=3, family="random", seed=6).state()
    assert a == b and a != c


def test_product_state_note():
    traj = run_config(RunConfig(mode="exact", N=4, theta=math.pi, t_max_gamma=1.0, steps=3))
    assert any("product state" in n for n in traj.metadata["notes"])


def test_csv_round_trip():
    x = 0.1 + 1e-17
    assert float(format_float(x)) == x
    traj = Trajectory(np.array([0.0, 0.5]), {"a": np.array([1 / 3, 2 / 3])})
    back = Trajectory.from_csv(traj.to_csv())
    np.testing.assert_array_equal(back["a"], traj["a"])


def test_figure_recipes():
    fig4 = figure_recipe("fig4")
    assert [(c.mode, c.N) for c in fig4.configs()] == [("exact", 10), ("exact", 50), ("limit", None)]
    assert all(c.alpha_over_gamma == 0.5 and c.theta == pytest.approx(math.pi / 3) for c in fig4.configs())
    fig8 = figure_recipe("fig8")
    assert sorted({c.alpha_over_gamma for c in fig8.configs()}) == [0.5, 2.0, 10.0]
    assert {c.N for c in fig8.configs()} == {20}
    assert {c.mode for c in fig8.configs()} == {"exact", "tcl2"}
    fig5 = figure_recipe("fig5")
    assert sorted(c.beta for c in fig5.configs()) == pytest.approx(sorted([0, math.pi / 2, math.pi / 4, math.pi / 6]))
    assert {(c.N, c.alpha_over_gamma) for c in fig5.configs()} == {(50, 1.0)}
    fig2 = figure_recipe("fig2")
    assert sorted(c.alpha_over_gamma for c in fig2.configs()) == [0.0, 0.25, 1.0, 100.0]
    with pytest.raises(ConfigError):
        figure_recipe("fig1")


def test_figure_command(tmp_path):
    assert main(["figure", "fig7", "--out-dir", str(tmp_path)]) == 0
    meta = json.loads((tmp_path / "fig7.json").read_text())
    assert set(meta["tcl2_vs_exact"]) == {"beta_pi_2", "beta_pi_3", "beta_pi"}
    first = (tmp_path / "fig7.csv").read_bytes()
    run_figure("fig7", tmp_path)
    assert (tmp_path / "fig7.csv").read_bytes() == first


def test_selftest(capsys):
    assert selftest(cases=4, seed=1)
    assert "PASS" in capsys.readouterr().out
    assert main(["selftest", "--cases", "0"]) == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "spinstar.cli", "run", "--mode", "bogus"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert json.loads(proc.stderr)["error"] == "ConfigError"

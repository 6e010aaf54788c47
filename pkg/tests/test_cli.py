import pytest
import yaml

from graspsim.cli import main


@pytest.fixture()
def short_config_file(tmp_path):
    path = tmp_path / "short.yaml"
    path.write_text(yaml.safe_dump(
        {"shake": {"amplitude_deg": 1.0, "ramp_up_s": 0.3, "ramp_down_s": 0.3}}))
    return str(path)


def test_touch_test_command(capsys, tmp_path):
    code = main(["--output-dir", str(tmp_path), "touch-test", "--kind", "biotac"])
    assert code == 0
    out = capsys.readouterr().out
    assert "5.5 mm" in out


def test_run_and_replay_round_trip(capsys, tmp_path, short_config_file):
    out_dir = tmp_path / "out"
    code = main(["--config", short_config_file, "--output-dir", str(out_dir),
                 "run", "--object", "cube box", "--kind", "wts",
                 "--mass", "100", "--seed", "3", "--no-figure"])
    assert code == 0
    out = capsys.readouterr().out
    assert "outcome: held" in out
    logs = list(out_dir.glob("*.log"))
    assert len(logs) == 1
    assert list(out_dir.glob("*.csv"))

    code = main(["--config", short_config_file, "--output-dir", str(out_dir),
                 "replay", str(logs[0])])
    assert code == 0
    assert "replay verified" in capsys.readouterr().out


def test_run_writes_figures_and_colormap(tmp_path, short_config_file):
    out_dir = tmp_path / "figs"
    code = main(["--config", short_config_file, "--output-dir", str(out_dir),
                 "run", "--object", "cube box", "--kind", "wts",
                 "--mass", "50", "--seed", "1"])
    assert code == 0
    assert list(out_dir.glob("*[!p].png"))
    assert list(out_dir.glob("*_map.txt"))
    assert list(out_dir.glob("*_map.png"))


def test_sweep_command_writes_csv(capsys, tmp_path, short_config_file):
    out_dir = tmp_path / "sweep"
    code = main(["--config", short_config_file, "--output-dir", str(out_dir),
                 "sweep", "--object", "tea cup", "--kind", "wts", "--seed", "4",
                 "--reps", "2", "--increment", "200"])
    assert code == 0
    out = capsys.readouterr().out
    assert "max held mass" in out
    assert list(out_dir.glob("sweep_tea_cup_wts_seed4.csv"))


def test_slip_test_command_outputs(capsys, tmp_path):
    out_dir = tmp_path / "slip"
    code = main(["--output-dir", str(out_dir),
                 "slip-test", "--kind", "biotac", "--object", "water bottle"])
    assert code == 0
    assert "onset" in capsys.readouterr().out
    assert (out_dir / "slip_water_bottle_biotac.csv").exists()
    assert (out_dir / "slip_water_bottle_biotac_fit.csv").exists()
    assert (out_dir / "slip_water_bottle_biotac.png").exists()


def test_report_command_summarizes_runs(capsys, tmp_path, short_config_file):
    out_dir = tmp_path / "rep"
    main(["--config", short_config_file, "--output-dir", str(out_dir),
          "run", "--object", "cube box", "--kind", "wts",
          "--mass", "0", "--seed", "2", "--no-figure"])
    capsys.readouterr()
    log = next(out_dir.glob("*.log"))
    code = main(["--config", short_config_file, "--output-dir", str(out_dir),
                 "report", str(log), "--figures"])
    assert code == 0
    out = capsys.readouterr().out
    assert "cube box" in out
    assert (out_dir / "summary.csv").exists()
    assert (out_dir / f"{log.stem}.png").exists()   # figures rebuilt from the log


def test_env_override_changes_behaviour(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("GRASPSIM_FINGERTIPS__BIOTAC__DELTA_MIN_MM", "12.0")
    code = main(["--output-dir", str(tmp_path), "touch-test", "--kind", "biotac"])
    assert code == 0
    assert "12.5 mm" in capsys.readouterr().out


def test_calibrate_command_threshold_only(capsys, tmp_path):
    code = main(["--output-dir", str(tmp_path), "calibrate", "--kind", "biotac",
                 "--grid", "0", "80", "160", "--reps", "1", "--seed", "11",
                 "--write", str(tmp_path / "overlay.yaml")])
    assert code == 0
    out = capsys.readouterr().out
    assert "calibrated contact threshold" in out
    overlay = yaml.safe_load((tmp_path / "overlay.yaml").read_text())
    assert overlay["contact"]["biotac"]["threshold"] > 0

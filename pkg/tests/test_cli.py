"""End-to-end tests of the command-line entry point and its exit codes."""

import os

import pytest

from zitterlab.cli import EXIT_OK, EXIT_USAGE, main
from zitterlab.scenarios import PRESET_NAMES


def test_list_presets(capsys):
    assert main(["list-presets"]) == EXIT_OK
    out = capsys.readouterr().out.split()
    assert out == list(PRESET_NAMES)
    assert "fig2a-ref" in out


def test_no_command_prints_usage():
    assert main([]) == EXIT_USAGE


def test_run_preset_writes_artifacts(tmp_path, capsys):
    outdir = str(tmp_path)
    code = main(
        ["run", "fig2a-ref", "--set", "grid_n=64", "--set", "t_end=6.0",
         "-o", outdir]
    )
    assert code == EXIT_OK
    assert os.path.exists(tmp_path / "fig2a-ref.timeseries.csv")
    assert os.path.exists(tmp_path / "fig2a-ref.summary.txt")
    text = (tmp_path / "fig2a-ref.summary.txt").read_text()
    assert "amplitude = " in text
    assert "omega = " in text
    assert "amplitude" in capsys.readouterr().out


def test_run_config_file(tmp_path):
    cfg = tmp_path / "case.cfg"
    cfg.write_text(
        "# undriven reference packet\n"
        "name = custom-static\n"
        "p0_x = 0.0\np0_z = 5.0\n"
        "v_d = 0.0\nomega_d = 50.0\n"
        "grid_n = 64\nt_end = 6.0\n"
    )
    outdir = tmp_path / "out"
    assert main(["run", str(cfg), "-o", str(outdir)]) == EXIT_OK
    assert (outdir / "custom-static.summary.txt").exists()


def test_run_unknown_scenario_is_usage_error(tmp_path, capsys):
    assert main(["run", "no-such-preset", "-o", str(tmp_path)]) == EXIT_USAGE
    assert "neither a preset" in capsys.readouterr().err


def test_bad_override_is_usage_error(tmp_path, capsys):
    code = main(["run", "fig2a-ref", "--set", "grid_n", "-o", str(tmp_path)])
    assert code == EXIT_USAGE
    assert "key=value" in capsys.readouterr().err


def test_bad_config_value_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("v_d = plenty\nomega_d = 50.0\n")
    assert main(["run", str(cfg), "-o", str(tmp_path / "out")]) == EXIT_USAGE
    capsys.readouterr()


def test_sweep_writes_per_point_summaries(tmp_path, capsys):
    outdir = str(tmp_path)
    code = main(
        ["sweep", "fig2a-ref", "--set", "grid_n=64", "--set", "t_end=6.0",
         "--v-d", "0,10", "-o", outdir]
    )
    assert code == EXIT_OK
    names = os.listdir(outdir)
    assert any("sweep" in n and n.endswith(".csv") for n in names)
    capsys.readouterr()


def test_verify_gauge_passes(tmp_path, capsys):
    assert main(["verify-gauge", "--points", "4", "-o", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 4


def test_verify_gauge_bad_config_is_usage_error(tmp_path, capsys):
    code = main(["verify-gauge", "--omega0", "-1.0", "-o", str(tmp_path)])
    assert code == EXIT_USAGE
    capsys.readouterr()

import numpy as np
import pytest

from msmprec import cli
from msmprec.exceptions import SolverFailure
from msmprec.sim import CSV_MAGIC


def test_no_command_prints_help_and_exits_2(capsys):
    assert cli.main([]) == 2
    assert "usage" in capsys.readouterr().out.lower()


def test_free_form_run_writes_csv_and_plot_script(tmp_path, capsys):
    rc = cli.main(["run", "--mod", "qpsk", "--precoder", "wf",
                   "--channels", "2", "--vectors", "8",
                   "--ptx-min-db", "0", "--ptx-max-db", "4",
                   "--ptx-step-db", "2", "--out-dir", str(tmp_path)])
    assert rc == 0
    csv_path = tmp_path / "run.csv"
    plot_path = tmp_path / "plot_run.py"
    assert csv_path.exists() and plot_path.exists()
    lines = csv_path.read_text(encoding="ascii").splitlines()
    assert lines[0] == CSV_MAGIC
    assert lines[1] == "# kind: ber"
    # three grid points, one precoder
    assert len([ln for ln in lines if ln and not ln.startswith("#")]) == 1 + 3
    body = plot_path.read_text()
    assert "run.csv" in body
    compile(body, str(plot_path), "exec")  # the companion script must parse
    assert "rows ->" in capsys.readouterr().out


def test_out_dir_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("MSMPREC_OUT_DIR", str(tmp_path))
    rc = cli.main(["run", "--mod", "qpsk", "--precoder", "wf",
                   "--channels", "1", "--vectors", "4",
                   "--ptx-min-db", "0", "--ptx-max-db", "0"])
    assert rc == 0
    assert (tmp_path / "run.csv").exists()


def test_preset_with_config_file_and_flag_precedence(tmp_path):
    """Preset base < config file < command-line flags, echoed into the CSV."""
    cfg = tmp_path / "desk.toml"
    cfg.write_text("seed = 5\nn_antennas = 8\nn_users = 2\n"
                   "n_channels = 1\nvectors_per_channel = 4\n")
    rc = cli.main(["run", "table4", "--config", str(cfg), "--seed", "9",
                   "--out-dir", str(tmp_path)])
    assert rc == 0
    text = (tmp_path / "table4.csv").read_text()
    config_lines = [ln for ln in text.splitlines() if ln.startswith("# config:")]
    assert len(config_lines) == 10  # five modulations at two phase counts
    assert all("seed=9" in ln for ln in config_lines)       # flag beat file
    assert all("n_antennas=8" in ln for ln in config_lines)  # file beat preset
    rows = [ln for ln in text.splitlines()
            if ln and not ln.startswith("#")][1:]
    assert len(rows) == 10


def test_config_file_errors_exit_2(tmp_path, capsys):
    missing = tmp_path / "nope.toml"
    assert cli.main(["run", "--config", str(missing)]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text("not = [toml")
    assert cli.main(["run", "--config", str(bad)]) == 2
    unknown = tmp_path / "unknown.toml"
    unknown.write_text("frobnicate = 3\n")
    assert cli.main(["run", "--config", str(unknown)]) == 2
    err = capsys.readouterr().err
    assert "configuration error" in err


def test_flag_validation_exits_2(tmp_path):
    assert cli.main(["run", "--precoder", "bogus", "--out-dir",
                     str(tmp_path)]) == 2
    assert cli.main(["run", "--ptx-min-db", "5", "--ptx-max-db", "1",
                     "--out-dir", str(tmp_path)]) == 2
    assert cli.main(["run", "--ptx-min-db", "5", "--out-dir",
                     str(tmp_path)]) == 2


def test_solver_failure_exits_3(tmp_path, monkeypatch):
    def boom(cfg):
        raise SolverFailure("margin LP ended with status iteration_limit")

    monkeypatch.setattr(cli, "run_ber", boom)
    rc = cli.main(["run", "--mod", "qpsk", "--precoder", "msm",
                   "--channels", "1", "--vectors", "1",
                   "--out-dir", str(tmp_path)])
    assert rc == 3


def test_selftest_subset_passes(capsys):
    rc = cli.main(["selftest", "--only", "quantizer-fixed-points",
                   "--only", "polygon-vertex-property"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 2


def test_selftest_unknown_check_exits_2():
    assert cli.main(["selftest", "--only", "no-such-check"]) == 2


def test_selftest_mutation_is_caught(capsys):
    rc = cli.main(["selftest", "--only", "margin-consistency-psk",
                   "--mutate", "sr-sign"])
    assert rc == 1
    out = capsys.readouterr().out
    assert "FAIL" in out
    assert "mutation 'sr-sign' active" in out


def test_grid_expansion():
    assert cli._grid(0.0, 1.0, 0.5) == (0.0, 0.5, 1.0)
    assert cli._grid(2.0, 2.0, 1.0) == (2.0,)

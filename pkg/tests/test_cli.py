import os

import pytest

from benesim import cli
from benesim.simulator import InvariantViolation


def write(path, text):
    path.write_text(text)
    return str(path)


def test_small_sweep_end_to_end(tmp_path):
    cfg = write(tmp_path / "c.cfg", "n = 2\nV = 5\nslots = 300\nseed = 2\n")
    out = tmp_path / "out"
    code = cli.main(["--config", cfg, "--out", str(out), "--no-figures"])
    assert code == 0
    assert (out / "summary.csv").exists()


def test_figures_rendered_by_default(tmp_path):
    cfg = write(tmp_path / "c.cfg", "n = 2\nV = 5\nslots = 200\n")
    out = tmp_path / "out"
    assert cli.main(["--config", cfg, "--out", str(out)]) == 0
    assert (out / "utility_sweep.png").exists()


def test_experiment_override_and_seed(tmp_path):
    cfg = write(tmp_path / "c.cfg",
                "n = 2\nV = 5\nslots = 200\nn_values = 2\nscaling_slots = 200\n")
    out = tmp_path / "out"
    code = cli.main(["--config", cfg, "--experiment", "scaling", "--seed", "9",
                     "--out", str(out), "--no-figures"])
    assert code == 0
    assert (out / "scaling_table.csv").exists()
    text = (out / "summary.csv").read_text()
    assert ",9," in text  # overridden seed echoed in the summary


def test_adaptation_emits_timeseries_and_rates(tmp_path):
    cfg = write(tmp_path / "c.cfg", "experiment = adaptation\nn = 2\nV = 5\nslots = 400\n")
    out = tmp_path / "out"
    assert cli.main(["--config", cfg, "--out", str(out), "--no-figures"]) == 0
    names = set(os.listdir(out))
    assert "adaptation_rates.csv" in names
    assert any(name.startswith("timeseries_") for name in names)


def test_config_error_exit_code(tmp_path):
    cfg = write(tmp_path / "c.cfg", "eta = 1.5\n")
    assert cli.main(["--config", cfg, "--out", str(tmp_path / "o")]) == 1


def test_unknown_key_exit_code(tmp_path):
    cfg = write(tmp_path / "c.cfg", "mystery = 1\n")
    assert cli.main(["--config", cfg, "--out", str(tmp_path / "o")]) == 1


def test_missing_config_exit_code(tmp_path):
    assert cli.main(["--config", str(tmp_path / "nope.cfg")]) == 1


def test_bad_flag_exit_code(capsys):
    with pytest.raises(SystemExit) as err:
        cli.main(["--bogus"])
    assert err.value.code == 1


def test_invariant_violation_exit_code(tmp_path, monkeypatch):
    def boom(spec, check_invariants=False):
        raise InvariantViolation("slot 7: synthetic")
    monkeypatch.setattr(cli, "run_experiment", boom)
    cfg = write(tmp_path / "c.cfg", "experiment = invariants\nn = 2\nslots = 100\n")
    assert cli.main(["--config", cfg, "--out", str(tmp_path / "o"),
                     "--check-invariants"]) == 2


def test_invariants_experiment_clean_run(tmp_path):
    cfg = write(tmp_path / "c.cfg", "experiment = invariants\nn = 2\nV = 5\nslots = 400\n")
    out = tmp_path / "out"
    assert cli.main(["--config", cfg, "--out", str(out), "--no-figures"]) == 0
    assert (out / "summary.csv").exists()

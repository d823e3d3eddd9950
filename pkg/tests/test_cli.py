import json

import pytest

from slipquad.cli import main


@pytest.fixture
def short_cfg(tmp_path):
    path = tmp_path / "short.cfg"
    path.write_text(
        "[scenario]\nname = short\nduration = 0.1\nseed = 4\n"
        "[terrain]\nmu_static = 0.4, 0.4, 0.4, 0.4\n"
        "[trajectory]\nkind = ellipse\na_x = 0.08\n"
        "[initial]\non_reference = true\n"
    )
    return path


def test_run_writes_csv_json_and_plots(short_cfg, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", str(short_cfg), "--out", str(out), "--seed", "5", "--plots"]) == 0
    assert (out / "short_seed5.csv").exists()
    summary = json.loads((out / "short_seed5.json").read_text())
    assert summary["seed"] == 5
    assert len(list(out.glob("*.svg"))) == 4
    assert "completed" in capsys.readouterr().out


def test_run_layer_flags(short_cfg, tmp_path):
    out = tmp_path / "out"
    assert main(["run", str(short_cfg), "--out", str(out), "--no-layer1", "--no-layer2"]) == 0
    summary = json.loads((out / "short_seed4_nol1_nol2.json").read_text())
    assert summary["layer1"] is False and summary["layer2"] is False


def test_run_uses_env_output_dir(short_cfg, tmp_path, monkeypatch):
    monkeypatch.setenv("SLIPQUAD_OUT", str(tmp_path / "env"))
    assert main(["run", str(short_cfg)]) == 0
    assert (tmp_path / "env" / "short_seed4.csv").exists()


def test_compare_identical(short_cfg, tmp_path, capsys):
    out = tmp_path / "out"
    main(["run", str(short_cfg), "--out", str(out)])
    csv = str(out / "short_seed4.csv")
    capsys.readouterr()
    assert main(["compare", csv, csv]) == 0
    assert "diverge at: none" in capsys.readouterr().out


def test_plot_command(short_cfg, tmp_path, capsys):
    out = tmp_path / "out"
    main(["run", str(short_cfg), "--out", str(out)])
    capsys.readouterr()
    assert main(["plot", str(out / "short_seed4.csv"), "--out", str(tmp_path / "figs")]) == 0
    assert len(list((tmp_path / "figs").glob("*.svg"))) == 4


def test_accept_subset(capsys):
    assert main(["accept", "--only", "8"]) == 0
    out = capsys.readouterr().out
    assert "[PASS] 8." in out


def test_list(capsys):
    assert main(["list"]) == 0
    assert "scenario3_noadapt" in capsys.readouterr().out


def test_bad_config_reports_error(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.cfg")]) == 2
    assert "error" in capsys.readouterr().err

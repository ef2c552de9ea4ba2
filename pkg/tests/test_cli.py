import json
from pathlib import Path

import numpy as np
import pytest

from siegelzak.main import main
from siegelzak.models.experiment import load_config, parse_config
from siegelzak.models.geometry import Box
from siegelzak.models.schema import PsiMode
from siegelzak.services.cps import enumerate_gamma
from siegelzak.services.experiments import EXPERIMENTS
from siegelzak.services.numerics import RngStream

DENSITY = """
experiment = "cps_density"

[scheme]
name = "zsqrt2"

[window]
lo = [-1.0]
hi = [1.0]

[region]
lo = [-1000.0]
hi = [1000.0]

[tolerances]
relative = 0.01

[meyer]
r_test = 0.25
diff_radius = 5.0
"""

POINTS = """
experiment = "cps_density"

[window]
{window}

[region]
lo = [-30.0]
hi = [30.0]
"""


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == 0
    assert "run" in capsys.readouterr().out


def test_missing_command_is_a_usage_error():
    assert main([]) == 2


def test_list_experiments(capsys):
    assert main(["list-experiments"]) == 0
    out = capsys.readouterr().out
    assert len(EXPERIMENTS) == 15
    for name in EXPERIMENTS:
        assert name in out


def test_unknown_experiment_is_a_config_error(write_config, capsys):
    path = write_config('experiment = "nonsense"\n')
    assert main(["run", path]) == 2
    err = capsys.readouterr().err
    assert "error: " in err and "experiment" in err


def test_unknown_key_is_a_config_error(write_config):
    path = write_config('experiment = "cps_density"\nbogus = 1\n')
    assert main(["run", path]) == 2


def test_missing_config_file(tmp_path):
    assert main(["run", str(tmp_path / "absent.toml")]) == 2


def test_emit_pointset_matches_enumeration(write_config, zsqrt2, unit_window, tmp_path, capsys):
    path = write_config(POINTS.format(window="lo = [-1.0]\nhi = [1.0]"))
    out = tmp_path / "points.csv"
    assert main(["emit-pointset", path, "--output", str(out), "--internal"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "x1,y1"
    expected = enumerate_gamma(zsqrt2, Box(lo=[-30.0], hi=[30.0]), unit_window)
    assert len(lines) - 1 == expected.phys.shape[0]
    assert f"{expected.phys.shape[0]} points -> {out}" in capsys.readouterr().out


def test_emit_pointset_of_empty_window(write_config, tmp_path):
    path = write_config(POINTS.format(window="empty = true"))
    out = tmp_path / "points.csv"
    assert main(["emit-pointset", path, "--output", str(out)]) == 0
    assert out.read_text().splitlines() == ["x1"]


def test_run_is_reproducible(write_config, tmp_path, capsys):
    path = write_config(DENSITY)
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["run", path, "--output", str(first)]) == 0
    assert main(["run", path, "--output", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    report = json.loads(first.read_text())
    assert report["pass"] is True
    assert report["experiment"] == "cps_density"
    assert report["density"] == pytest.approx(2.0**-0.5, rel=0.01)
    assert report["meyer"]["meyer"] is True
    assert report["config"]["region"] == {"lo": [-1000.0], "hi": [1000.0]}
    assert capsys.readouterr().out.startswith("PASS cps_density -> ")


def test_run_siegel_formula(write_config, tmp_path):
    path = write_config(
        """
experiment = "siegel_formula"
seed = 20240607
n_samples = 200

[window]
lo = [-1.0]
hi = [1.0]

[region]
lo = [-20.0]
hi = [20.0]

[tolerances]
z_multiplier = 4.0
"""
    )
    out = tmp_path / "siegel.json"
    assert main(["--workers", "2", "run", path, "--output", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["pass"] is True
    assert report["siegel_constant"] == pytest.approx(2.0**-0.5)
    assert report["n_samples"] == 200 and np.isfinite(report["mean_re"])


def test_shipped_configs_load():
    configs = sorted((Path(__file__).parent.parent / "siegelzak" / "configs").glob("*.toml"))
    loaded = {path.stem: load_config(str(path)) for path in configs}
    assert {cfg.experiment.value for cfg in loaded.values()} <= set(EXPERIMENTS)
    folner = loaded["zak_isometry_folner"]
    assert folner.azak.psi_mode == PsiMode.FOLNER
    assert folner.n_samples >= 1000
    assert loaded["zak_isometry"].azak.m is None


def test_hitting_bound_dispatches_on_the_group():
    heis = parse_config(
        {
            "experiment": "hitting_bound",
            "n_samples": 50,
            "hitting": {"box": {"lo": [-1.0, -1.0, -2.0], "hi": [1.0, 1.0, 2.0]}},
            "azak": {},
        }
    )
    metrics = EXPERIMENTS["hitting_bound"](heis, RngStream(67), None)
    assert metrics["group"] == "heisenberg"
    assert metrics["pass"] is True and metrics["max_count"] <= metrics["bound"]
    abelian = parse_config(
        {
            "experiment": "hitting_bound",
            "n_samples": 50,
            "region": {"lo": [-20.0], "hi": [20.0]},
            "hitting": {"box": {"lo": [-2.0], "hi": [2.0]}},
        }
    )
    assert EXPERIMENTS["hitting_bound"](abelian, RngStream(61), None)["group"] == "abelian"

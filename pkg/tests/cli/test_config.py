import json

import pytest

from isobem.adaptivity import RefinementMode
from isobem.cli import RunConfig
from isobem.utils.errors import ConfigError


def test_defaults():
    cfg = RunConfig()
    assert (cfg.geometry, cfg.p, cfg.mode, cfg.theta, cfg.budget) == ("cube", 0, RefinementMode.ADAPTIVE, 0.5, 2500)
    assert (cfg.quad.n_reg, cfg.quad.n_sing, cfg.quad.rho_near) == (4, 8, 1.0)
    assert cfg.rate_window == 4


@pytest.mark.parametrize(
    "values",
    [
        {"theta": 0.0},
        {"theta": 1.5},
        {"p": 3},
        {"budget": 0},
        {"mode": "random"},
        {"p": 1, "knot_multiplicity": 3},
        {"rho_near": 0.0},
        {"colour": "red"},
    ],
)
def test_invalid(values):
    with pytest.raises(ConfigError):
        RunConfig.build(**values)


def test_json_with_overrides(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"geometry": "quarter_pipe", "p": 1, "theta": 0.3, "mode": "uniform"}))
    cfg = RunConfig.from_json(path, theta=0.7, budget=None)
    assert cfg.geometry == "quarter_pipe"
    assert cfg.p == 1
    assert cfg.theta == 0.7
    assert cfg.budget == 2500
    assert cfg.mode == RefinementMode.UNIFORM


def test_json_unknown_key(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"geometry": "cube", "element_budget": 10}))
    with pytest.raises(ConfigError):
        RunConfig.from_json(path)


def test_json_missing(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.from_json(tmp_path / "missing.json")


def test_conversion():
    cfg = RunConfig.build(theta=0.25, mode="uniform", budget=100, interp_degree=4, initial_refinements=1)
    settings = cfg.loop_settings()
    assert (settings.theta, settings.mode, settings.budget) == (0.25, RefinementMode.UNIFORM, 100)
    assert settings.quad.residual_degree(0) == 4
    problem = cfg.problem()
    assert problem.geom.name == "cube"
    assert problem.initial_mesh().n_elements == 24


def test_unknown_geometry():
    with pytest.raises(ConfigError):
        RunConfig.build(geometry="torus").load_geometry()

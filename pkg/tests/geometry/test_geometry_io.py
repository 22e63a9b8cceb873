import json

import numpy as np
import pytest

from isobem.geometry import geometry_from_dict, load_geometry
from isobem.utils.errors import ConfigError

UNIT_SQUARE = {
    "name": "square",
    "patches": [
        {
            "degrees": [1, 1],
            "knots": [[0, 0, 1, 1], [0, 0, 1, 1]],
            "control_points": [[[0, 0, 0], [0, 1, 0]], [[1, 0, 0], [1, 1, 0]]],
        }
    ],
    "interfaces": [],
    "closed": False,
}


def describe(geom):
    return {
        "name": geom.name,
        "patches": [
            {
                "degrees": list(p.degrees),
                "knots": [[str(k) for k in kv.knots] for kv in p.kvs],
                "control_points": p.control_points.tolist(),
                "weights": p.weights.tolist(),
            }
            for p in geom.patches
        ],
        "interfaces": [
            {
                "patch_a": i.patch_a,
                "edge_a": i.edge_a,
                "patch_b": i.patch_b,
                "edge_b": i.edge_b,
                "reversed": i.reversed,
            }
            for i in geom.interfaces
        ],
        "closed": geom.closed,
    }


def test_load_square(tmp_path):
    path = tmp_path / "square.json"
    path.write_text(json.dumps(UNIT_SQUARE))
    geom = load_geometry(path)
    assert geom.name == "square"
    assert geom.n_patches == 1
    assert geom.area == pytest.approx(1.0)
    assert np.allclose(geom.evaluate(0, [[0.25, 0.5]]), [[0.25, 0.5, 0.0]])


def test_interfaces_detected(cube):
    data = describe(cube)
    del data["interfaces"]
    data["reference_point"] = [0.05, 0.05, 0.05]
    geom = geometry_from_dict(data)
    assert len(geom.interfaces) == 12
    assert geom.topology.vertex_classes == cube.topology.vertex_classes


def test_rational_patches_survive(quarter_pipe):
    geom = geometry_from_dict(describe(quarter_pipe))
    t = np.array([[0.3, 0.6]])
    for m in range(geom.n_patches):
        assert np.allclose(geom.evaluate(m, t), quarter_pipe.evaluate(m, t))


@pytest.mark.parametrize(
    "change",
    [
        {"patches": []},
        {"colour": "red"},
        {"patches": [{**UNIT_SQUARE["patches"][0], "knots": [[0, 1], [0, 0, 1, 1]]}]},
        {"patches": [{**UNIT_SQUARE["patches"][0], "weights": [[1, 1], [1, -1]]}]},
    ],
)
def test_invalid_description(change):
    with pytest.raises(ConfigError):
        geometry_from_dict({**UNIT_SQUARE, **change})


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_geometry(tmp_path / "nope.json")

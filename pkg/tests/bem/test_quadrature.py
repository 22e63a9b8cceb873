import numpy as np
import pytest

from isobem.bem import ContactKind, Panel, PanelTopology, QuadConfig
from isobem.bem import common_edge_rule, common_vertex_rule, identical_rule
from isobem.bem.quadrature import regular_rule
from isobem.mesh import Element, initial_mesh_for, refine, uniform_refine
from isobem.utils.errors import ConfigError

RULES = [identical_rule, common_edge_rule, common_vertex_rule, regular_rule]


@pytest.mark.parametrize("rule", RULES)
def test_rule_covers_square_pair(rule):
    r = rule(6)
    assert r.weights.sum() == pytest.approx(1.0, abs=1e-13)
    for pts in (r.x, r.y):
        assert pts.min() >= 0.0 and pts.max() <= 1.0


@pytest.mark.parametrize("rule", RULES)
def test_rule_integrates_polynomials(rule):
    r = rule(8)
    value = np.sum(r.weights * r.x[:, 0] * r.y[:, 1] ** 2)
    assert value == pytest.approx(1 / 6, abs=1e-12)


def test_identical_rule_is_symmetric():
    r = identical_rule(4)
    f = lambda x, y: x[:, 0] ** 2 * y[:, 1]
    assert np.sum(r.weights * f(r.x, r.y)) == pytest.approx(np.sum(r.weights * f(r.y, r.x)), abs=1e-13)


def test_quad_config():
    q = QuadConfig()
    assert (q.n_reg, q.n_sing, q.rho_near) == (4, 8, 1.0)
    assert q.residual_degree(1) == 3
    assert QuadConfig(interp_degree=5).residual_degree(0) == 5


@pytest.mark.parametrize(
    "kwargs", [{"n_sing": 0}, {"n_reg": 0}, {"rho_near": 0.0}, {"interp_degree": 0}]
)
def test_quad_config_invalid(kwargs):
    with pytest.raises(ConfigError):
        QuadConfig(**kwargs)


# region Panel contacts
def _kind(mesh, a, b):
    return PanelTopology.of(mesh).classify(Panel.of(mesh, a), Panel.of(mesh, b)).kind


def test_cube_face_contacts(cube_mesh0):
    faces = cube_mesh0.elements
    assert _kind(cube_mesh0, faces[0], faces[0]) == ContactKind.IDENTICAL
    # faces 0 and 1 are x = 0 and x = 0.1
    assert _kind(cube_mesh0, faces[0], faces[1]) == ContactKind.DISJOINT
    assert _kind(cube_mesh0, faces[0], faces[2]) == ContactKind.EDGE


def test_refined_cube_contacts(cube_mesh0):
    mesh = uniform_refine(cube_mesh0)
    # faces: 0 is x = 0 with (u, v) -> (y, z), 2 is y = 0 with (x, z), 4 is z = 0 with (x, y)
    a = mesh.locate(0, [0.0, 0.0])
    assert _kind(mesh, a, mesh.locate(4, [0.0, 0.0])) == ContactKind.EDGE
    assert _kind(mesh, a, mesh.locate(4, [0.0, 0.9])) == ContactKind.VERTEX
    assert _kind(mesh, a, mesh.locate(4, [0.9, 0.9])) == ContactKind.DISJOINT
    assert _kind(mesh, mesh.locate(2, [0.9, 0.0]), mesh.locate(4, [0.9, 0.0])) == ContactKind.EDGE
    same = (mesh.locate(4, [0.0, 0.0]), mesh.locate(4, [0.9, 0.9]))
    assert _kind(mesh, *same) == ContactKind.VERTEX


def test_partial_contact(plate):
    mesh = refine(initial_mesh_for(plate, 0, n_spans=2), [Element(0, 0, (0, 0))])
    fine = Element(0, 1, (1, 0))
    coarse = Element(0, 0, (1, 0))
    assert _kind(mesh, fine, coarse) == ContactKind.PARTIAL


# endregion Panel contacts

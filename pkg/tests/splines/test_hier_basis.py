import numpy as np
import pytest

from isobem.mesh import Element, MultiPatchMesh, PatchHierMesh, initial_mesh_for, refine, uniform_refine
from isobem.splines.hier_basis import (
    HierFn,
    build_basis,
    coarse_to_fine,
    eval_finest,
    eval_fn,
    quasi_interpolate,
    truncate,
)
from isobem.splines.spline_kernel import eval_bspline
from isobem.utils.errors import MeshError


def _points_in(mesh, elem, n, rng):
    (u0, u1), (v0, v1) = mesh.param_box(elem)
    r = rng.random((n, 2))
    return np.column_stack([u0 + (u1 - u0) * r[:, 0], v0 + (v1 - v0) * r[:, 1]])


@pytest.fixture
def local_mesh(plate):
    """p=2 plate, 2x2 initial spans, corner refined twice"""
    mesh = initial_mesh_for(plate, 2, n_spans=2)
    mesh = refine(mesh, [Element(0, 0, (0, 0))])
    return refine(mesh, [Element(0, 1, (1, 1))])


@pytest.fixture
def gapped_mesh(plate):
    """level-0 and level-2 elements under one level-0 B-spline: not admissible"""
    base = initial_mesh_for(plate, 1, n_spans=2)
    pm = base.patches[0]
    omega = (
        pm.omega[0],
        frozenset({(0, 0), (0, 1), (1, 0), (1, 1)}),
        frozenset({(2, 2), (2, 3), (3, 2), (3, 3)}),
    )
    return MultiPatchMesh((PatchHierMesh(pm.space, omega),), base.topology)


# region Selection
def test_uniform_cube_level1(cube_mesh1):
    space = build_basis(uniform_refine(cube_mesh1))
    assert space.dimension == 6 * 9
    for m in range(6):
        assert sum(fn.patch == m for fn in space.functions) == 9


def test_single_element_quadratic(plate):
    space = build_basis(initial_mesh_for(plate, 2))
    assert space.dimension == 9
    assert all(fn.level == 0 for fn in space.functions)


def test_tensor_mesh_gives_tensor_basis(plate):
    mesh = initial_mesh_for(plate, 1, n_spans=3)
    space = build_basis(mesh)
    assert sorted(fn.index for fn in space.functions) == [(a, b) for a in range(4) for b in range(4)]


def test_functions_per_element_bounded(local_mesh):
    space = build_basis(local_mesh)
    bound = 2 * (2 + 1) ** 2
    assert max(len(space.functions_on(e)) for e in local_mesh.elements) <= bound


def test_support_bound(local_mesh):
    space = build_basis(local_mesh)
    assert max(len(space.support(fn)) for fn in space.functions) <= 4 * (2 + 1) ** 2


def test_strict_rejects_non_admissible(gapped_mesh):
    with pytest.raises(MeshError):
        build_basis(gapped_mesh, strict=True)
    assert build_basis(gapped_mesh).dimension > 0


# endregion Selection


# region Truncation
def test_truncation_on_tensor_mesh(plate):
    mesh = initial_mesh_for(plate, 2, n_spans=2)
    space = build_basis(mesh)
    for fn in space.functions:
        rep = truncate(fn, mesh)
        assert rep.levels == ({fn.index: 1.0},)


def test_truncation_bounds(local_mesh, rng):
    space = build_basis(local_mesh)
    t = rng.random((1000, 2))
    for fn, rep in zip(space.functions, space.truncations):
        trunc = eval_fn(space, rep, t)
        full = eval_fn(space, fn, t)
        assert trunc.min() >= -1e-14
        assert np.all(trunc <= full + 1e-14)


def test_thb_partition_of_unity(local_mesh, rng):
    space = build_basis(local_mesh)
    values = space.basis_values(0, rng.random((1000, 2)))
    assert np.abs(values.sum(axis=1) - 1.0).max() <= 1e-10
    assert values.min() >= -1e-14


def test_thb_partition_on_cube(cube_mesh1, rng):
    mesh = refine(cube_mesh1, [Element(0, 0, (0, 0)), Element(3, 0, (0, 0))])
    mesh = refine(mesh, [e for e in mesh.elements if e.level == 1][:3])
    space = build_basis(mesh)
    for m in range(6):
        values = space.basis_values(m, rng.random((300, 2)))
        assert np.abs(values.sum(axis=1) - 1.0).max() <= 1e-10


def test_finest_level_evaluation_matches(local_mesh, rng):
    space = build_basis(local_mesh)
    t = rng.random((200, 2))
    for rep in space.truncations:
        assert np.abs(eval_fn(space, rep, t) - eval_finest(space, rep, t)).max() <= 1e-12


def test_linear_independence(local_mesh, rng):
    space = build_basis(local_mesh)
    values = space.basis_values(0, rng.random((4 * space.dimension, 2)))
    assert np.linalg.matrix_rank(values) == space.dimension


# endregion Truncation


# region Evaluation
def test_eval_fn_tensor_product(plate, rng):
    mesh = initial_mesh_for(plate, 2, n_spans=2)
    space = build_basis(mesh)
    kv = mesh.patches[0].space.kvs[0]
    t = rng.random((50, 2))
    fn = HierFn(0, 0, (1, 2))
    expected = eval_bspline(kv, 1, t[:, 0]) * eval_bspline(kv, 2, t[:, 1])
    assert np.allclose(eval_fn(space, fn, t), expected)


def test_eval_fn_outside_support(plate):
    space = build_basis(initial_mesh_for(plate, 1, n_spans=4))
    assert eval_fn(space, HierFn(0, 0, (0, 0)), [[0.9, 0.9]])[0] == 0.0


def test_element_basis_matches_global(local_mesh, rng):
    space = build_basis(local_mesh)
    coeffs = rng.standard_normal(space.dimension)
    for elem in local_mesh.elements[:5]:
        t = _points_in(local_mesh, elem, 10, rng)
        eb = space.element_basis(elem)
        assert np.allclose(eb.values(t) @ coeffs[eb.dofs], space.evaluate(coeffs, 0, t))


# endregion Evaluation


# region Nestedness and quasi-interpolation
def test_coarse_to_fine_identity(local_mesh, rng):
    space = build_basis(local_mesh)
    coeffs = rng.standard_normal(space.dimension)
    assert np.array_equal(coarse_to_fine(space, space, coeffs), coeffs)


def test_coarse_to_fine_constant(local_mesh):
    coarse = build_basis(local_mesh)
    fine = build_basis(uniform_refine(local_mesh))
    assert np.allclose(coarse_to_fine(coarse, fine, np.ones(coarse.dimension)), 1.0)


def test_coarse_to_fine_random(local_mesh, rng):
    coarse = build_basis(local_mesh)
    fine_mesh = refine(local_mesh, [local_mesh.elements[-1]])
    fine = build_basis(fine_mesh)
    coeffs = rng.standard_normal(coarse.dimension)
    fine_coeffs = coarse_to_fine(coarse, fine, coeffs)
    t = rng.random((1000, 2))
    assert np.abs(fine.evaluate(fine_coeffs, 0, t) - coarse.evaluate(coeffs, 0, t)).max() <= 1e-10


def test_coarse_to_fine_not_nested(local_mesh, plate):
    coarse = build_basis(local_mesh)
    other = build_basis(refine(initial_mesh_for(plate, 2, n_spans=2), [Element(0, 0, (1, 1))]))
    with pytest.raises(MeshError):
        coarse_to_fine(coarse, other, np.ones(coarse.dimension))


def test_quasi_interpolate_zero(local_mesh):
    space = build_basis(local_mesh)
    coeffs = quasi_interpolate(space, local_mesh.elements, lambda m, t: np.zeros(len(t)))
    assert np.all(coeffs == 0.0)


def test_quasi_interpolate_projection(local_mesh, rng):
    space = build_basis(local_mesh)
    coeffs = rng.standard_normal(space.dimension)
    result = quasi_interpolate(space, local_mesh.elements, lambda m, t: space.evaluate(coeffs, m, t))
    t = rng.random((500, 2))
    assert np.abs(space.evaluate(result, 0, t) - space.evaluate(coeffs, 0, t)).max() <= 1e-10


def test_quasi_interpolate_locality(plate, rng):
    mesh = initial_mesh_for(plate, 1, n_spans=4)
    space = build_basis(mesh)
    coeffs = rng.standard_normal(space.dimension)
    subset = [e for e in mesh.elements if e.cell[0] < 2]
    result = quasi_interpolate(space, subset, lambda m, t: space.evaluate(coeffs, m, t))
    # vanishes outside the subset
    for elem in mesh.elements:
        if elem.cell[0] >= 2:
            assert np.allclose(space.evaluate(result, 0, _points_in(mesh, elem, 5, rng)), 0.0)
    # reproduces on elements whose neighbourhood lies in the subset
    inner = Element(0, 0, (0, 1))
    t = _points_in(mesh, inner, 20, rng)
    assert np.allclose(space.evaluate(result, 0, t), space.evaluate(coeffs, 0, t))


# endregion Nestedness and quasi-interpolation

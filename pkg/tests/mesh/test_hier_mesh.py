import pytest

from isobem.mesh import (
    Element,
    MultiPatchMesh,
    PatchHierMesh,
    admissibility_violations,
    bad_neighbors,
    format_mesh,
    initial_mesh,
    initial_mesh_for,
    is_admissible,
    is_finer,
    neighbors,
    overlay,
    parse_mesh,
    refine,
    uniform_refine,
)
from isobem.mesh.hier_mesh import closure, contact_dimension, patch_sizes
from isobem.splines.spline_kernel import KnotVector, TensorSplineSpace
from isobem.utils.errors import InterfaceMismatchError, MeshError, StaleElementError


def _random_refine(mesh, rng, count=2):
    chosen = rng.choice(mesh.n_elements, size=min(count, mesh.n_elements), replace=False)
    return refine(mesh, [mesh.elements[i] for i in chosen])


@pytest.fixture
def strip(plate):
    """p=0 plate split into two elements along u"""
    space = TensorSplineSpace((KnotVector.open_uniform(0, 2), KnotVector.open_uniform(0, 1)))
    return initial_mesh([space], plate.topology)


# region Construction
def test_cube_initial_mesh(cube_mesh0):
    assert cube_mesh0.n_elements == 6
    assert all(e.level == 0 for e in cube_mesh0.elements)
    assert cube_mesh0.touching_neighbors


def test_two_span_patch(plate):
    mesh = initial_mesh_for(plate, 1, n_spans=2)
    assert mesh.n_elements == 4
    assert not mesh.touching_neighbors


def test_interface_mismatch(cube):
    spaces = [TensorSplineSpace.uniform(1, 2)] + [TensorSplineSpace.uniform(1, 1)] * 5
    with pytest.raises(InterfaceMismatchError):
        initial_mesh(spaces, cube.topology)


def test_omega_must_be_nested(plate):
    space = TensorSplineSpace.uniform(1, 1)
    with pytest.raises(MeshError):
        PatchHierMesh(space, (frozenset({(0, 0)}), frozenset(), frozenset({(0, 0), (0, 1), (1, 0), (1, 1)})))


def test_element_ordering(cube_mesh1):
    mesh = refine(cube_mesh1, [Element(2, 0, (0, 0))])
    assert list(mesh.elements) == sorted(mesh.elements)


def test_contact_dimension():
    box = Element(0, 0, (0, 0)).index_box
    assert contact_dimension(box, Element(0, 0, (1, 0)).index_box) == 1
    assert contact_dimension(box, Element(0, 0, (1, 1)).index_box) == 0
    assert contact_dimension(box, Element(0, 0, (2, 0)).index_box) is None
    assert contact_dimension(box, box) == 2


# endregion Construction


# region Neighbours
def test_interior_neighbors_window(plate):
    mesh = initial_mesh_for(plate, 1, n_spans=4)
    elem = Element(0, 0, (1, 1))
    expected = {Element(0, 0, (i, j)) for i in range(3) for j in range(3)}
    assert neighbors(mesh, elem) == expected


def test_single_element_neighbors(plate):
    mesh = initial_mesh_for(plate, 2)
    elem = mesh.elements[0]
    assert neighbors(mesh, elem) == {elem}


def test_cube_corner_neighbors(cube_mesh1):
    mesh = uniform_refine(cube_mesh1)
    elem = mesh.locate(0, [0.0, 0.0])
    other_patches = {e.patch for e in neighbors(mesh, elem)} - {0}
    assert len(other_patches) == 2


def test_bad_neighbors_uniform(cube_mesh1):
    mesh = uniform_refine(cube_mesh1)
    elem = mesh.locate(0, [0.0, 0.0])
    contacts = mesh.cross_patch_contacts(elem)
    edge_contacts = {e for e, (dim, _) in contacts.items() if dim == 1}
    vertex_contacts = {e for e, (dim, _) in contacts.items() if dim == 0}
    assert vertex_contacts
    bad = bad_neighbors(mesh, elem)
    assert {e for e in bad if e.patch == 0} == set()
    assert bad == edge_contacts


def test_bad_neighbor_one_level_coarser(plate):
    mesh = initial_mesh_for(plate, 1, n_spans=4)
    mesh = refine(mesh, [Element(0, 0, (1, 1))])
    fine = Element(0, 1, (3, 3))
    assert Element(0, 0, (2, 2)) in bad_neighbors(mesh, fine)


def test_stale_element(plate):
    mesh = uniform_refine(initial_mesh_for(plate, 0))
    with pytest.raises(StaleElementError):
        neighbors(mesh, Element(0, 0, (0, 0)))
    with pytest.raises(StaleElementError):
        refine(mesh, [Element(0, 0, (0, 0))])


# endregion Neighbours


# region Refinement
def test_refine_single_element(plate):
    mesh = refine(initial_mesh_for(plate, 0), [Element(0, 0, (0, 0))])
    assert mesh.n_elements == 4
    assert {e.level for e in mesh.elements} == {1}


def test_refine_nothing(cube_mesh1):
    assert refine(cube_mesh1, []) is cube_mesh1


def test_repeated_corner_refinement(plate):
    mesh = initial_mesh_for(plate, 2, n_spans=2)
    for _ in range(5):
        mesh = refine(mesh, [mesh.locate(0, [0.0, 0.0])])
        assert is_admissible(mesh)
        for elem in mesh.elements:
            assert all(abs(e.level - elem.level) <= 1 for e in mesh.support_neighbors(elem))
    assert mesh.max_level == 5


def test_uniform_refine_counts(cube_mesh0):
    once = uniform_refine(cube_mesh0)
    twice = uniform_refine(once)
    assert (once.n_elements, twice.n_elements) == (24, 96)
    assert {e.level for e in twice.elements} == {2}


def test_refine_properties(cube_mesh1, rng):
    mesh = cube_mesh1
    for _ in range(6):
        fine = _random_refine(mesh, rng)
        assert fine.n_elements <= 4 * mesh.n_elements
        assert is_finer(fine, mesh)
        assert is_admissible(fine)
        mesh = fine


def test_closure_contains_marked(plate):
    mesh = refine(initial_mesh_for(plate, 1, n_spans=2), [Element(0, 0, (0, 0))])
    marked = {Element(0, 1, (1, 1))}
    closed = closure(mesh, marked)
    assert marked <= closed
    assert all(mesh.is_active(e) for e in closed)


def test_patch_sizes_bounded(plate, rng):
    mesh = initial_mesh_for(plate, 1, n_spans=2)
    sizes = []
    for _ in range(5):
        mesh = _random_refine(mesh, rng, count=3)
        sizes.append(patch_sizes(mesh).max())
    # 3x3 window of coarse cells, each at most two levels finer
    assert max(sizes) <= 16 * 9


# endregion Refinement


# region Admissibility
def test_uniform_meshes_admissible(cube_mesh1):
    assert is_admissible(cube_mesh1)
    assert is_admissible(uniform_refine(cube_mesh1))


def test_level_gap_not_admissible(plate):
    base = initial_mesh_for(plate, 1, n_spans=2)
    pm = base.patches[0]
    omega = (
        pm.omega[0],
        frozenset({(0, 0), (0, 1), (1, 0), (1, 1)}),
        frozenset({(2, 2), (2, 3), (3, 2), (3, 3)}),
    )
    mesh = MultiPatchMesh((PatchHierMesh(pm.space, omega),), base.topology)
    assert not is_admissible(mesh)
    assert any(reason == "level gap" for _, _, reason in admissibility_violations(mesh))


def test_hanging_node_not_admissible(cube_mesh1):
    pm = cube_mesh1.patches[0]
    omega = (pm.omega[0], frozenset({(0, 0), (0, 1), (1, 0), (1, 1)}))
    patches = (PatchHierMesh(pm.space, omega),) + cube_mesh1.patches[1:]
    mesh = MultiPatchMesh(patches, cube_mesh1.topology)
    reasons = {reason for _, _, reason in admissibility_violations(mesh)}
    assert reasons == {"hanging node"}


# endregion Admissibility


# region Overlay
def test_overlay_same(cube_mesh1):
    mesh = refine(cube_mesh1, [Element(1, 0, (0, 0))])
    assert overlay(mesh, mesh) == mesh


def test_overlay_halves(strip):
    a = refine(strip, [Element(0, 0, (0, 0))])
    b = refine(strip, [Element(0, 0, (1, 0))])
    o = overlay(a, b)
    assert o.n_elements == a.n_elements + b.n_elements - strip.n_elements == 8
    assert is_finer(o, a) and is_finer(o, b)


def test_overlay_estimate(plate, rng):
    initial = initial_mesh_for(plate, 1, n_spans=2)
    for _ in range(20):
        a = _random_refine(_random_refine(initial, rng), rng)
        b = _random_refine(_random_refine(initial, rng), rng)
        o = overlay(a, b)
        assert o.n_elements <= a.n_elements + b.n_elements - initial.n_elements
        assert is_admissible(o)


def test_overlay_different_initial(plate):
    with pytest.raises(MeshError):
        overlay(initial_mesh_for(plate, 1), initial_mesh_for(plate, 1, n_spans=2))


# endregion Overlay


# region Snapshot
def test_snapshot_format(plate):
    mesh = refine(initial_mesh_for(plate, 0), [Element(0, 0, (0, 0))])
    assert format_mesh(mesh) == "0 1 0 0\n0 1 0 1\n0 1 1 0\n0 1 1 1\n"


def test_snapshot_parse(cube_mesh1, rng):
    mesh = _random_refine(_random_refine(cube_mesh1, rng), rng)
    assert parse_mesh(format_mesh(mesh), cube_mesh1) == mesh


def test_snapshot_parse_rejects_garbage(cube_mesh1):
    with pytest.raises(MeshError):
        parse_mesh("0 0 x 0\n", cube_mesh1)
    with pytest.raises(MeshError):
        # one record cannot cover the whole cube
        parse_mesh("0 1 0 0\n", cube_mesh1)


# endregion Snapshot

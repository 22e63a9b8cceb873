import numpy as np
import pytest

from isobem.bem import Density, GalerkinSystem, build_system, constant_rhs, solve
from isobem.splines.hier_basis import build_basis
from isobem.utils.errors import NotSPDError


def test_identity_system():
    b = np.array([1.0, -2.0, 3.0])
    assert np.allclose(solve(GalerkinSystem(np.eye(3), b)).coeffs, b)


def test_small_spd_system():
    system = GalerkinSystem(np.array([[2.0, 1.0], [1.0, 2.0]]), np.array([3.0, 3.0]))
    solution = solve(system)
    assert np.allclose(solution.coeffs, [1.0, 1.0])
    assert system.energy_sq(solution.coeffs) == pytest.approx(6.0)


def test_indefinite_system():
    with pytest.raises(NotSPDError):
        solve(GalerkinSystem(np.array([[1.0, 2.0], [2.0, 1.0]]), np.ones(2)))


def test_empty_system():
    assert solve(GalerkinSystem(np.zeros((0, 0)), np.zeros(0))).coeffs.shape == (0,)


def test_shape_mismatch():
    with pytest.raises(ValueError):
        GalerkinSystem(np.eye(3), np.ones(2))


def test_cube_system(cube, cube_mesh1):
    space = build_basis(cube_mesh1)
    system = build_system(cube, space, constant_rhs(1.0))
    assert system.asymmetry() <= 1e-12
    solution = solve(system)
    assert isinstance(solution, Density)
    assert np.abs(system.matrix @ solution.coeffs - system.rhs).max() <= 1e-9 * np.abs(system.rhs).max()
    assert system.energy_sq(solution.coeffs) > 0
    # V phi = 1 on a convex body: the density is positive
    x = np.array([[0.5, 0.5], [0.1, 0.9]])
    assert np.all(solution.evaluate(0, x) > 0)


def test_density_size_checked(cube_mesh0):
    with pytest.raises(ValueError):
        Density(build_basis(cube_mesh0), np.ones(5))


def test_dump_matrix(tmp_path, cube, cube_mesh0):
    system = build_system(cube, build_basis(cube_mesh0), constant_rhs(1.0))
    system.dump(tmp_path / "V.bin")
    raw = (tmp_path / "V.bin").read_bytes()
    n = int.from_bytes(raw[:8], "little")
    assert n == system.matrix.shape[0]
    assert np.array_equal(np.frombuffer(raw[8:], dtype="<f8").reshape(n, n), system.matrix)

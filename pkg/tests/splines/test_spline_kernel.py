from fractions import Fraction

import numpy as np
import pytest

from isobem.splines.spline_kernel import (
    KnotVector,
    TensorSplineSpace,
    basis_funs,
    dual_function,
    dyadic_refine,
    element_dual_pairing,
    eval_bspline,
    eval_bspline_derivative,
    gauss_rule,
    refine_levels,
    two_scale_matrix,
)

FIGURE_KNOTS = (0, 0, 0, "1/6", "2/6", "3/6", "4/6", "4/6", "5/6", 1, 1, 1)


# region Knot vectors
def test_hat_function():
    assert eval_bspline(KnotVector(1, (0, 0, 1, 1)), 0, 0.25) == pytest.approx(0.75)


def test_basis_count():
    assert KnotVector(2, FIGURE_KNOTS).n_basis == 9


@pytest.mark.parametrize(
    "kv",
    [
        KnotVector(0, (0, 1)),
        KnotVector(1, (0, 0, 0.5, 1, 1)),
        KnotVector(2, FIGURE_KNOTS),
        KnotVector.open_uniform(3, 5),
    ],
)
def test_partition_of_unity(kv, rng):
    t = np.concatenate([rng.random(1000), [0.0, 1.0], kv.breakpoint_values])
    total = sum(eval_bspline(kv, j, t) for j in range(kv.n_basis))
    assert np.abs(total - 1.0).max() <= 1e-12


def test_non_negative_and_local(rng):
    kv = KnotVector(2, FIGURE_KNOTS)
    t = rng.random(500)
    for j in range(kv.n_basis):
        values = eval_bspline(kv, j, t)
        assert values.min() >= 0.0
        outside = (t < float(kv.knots[j])) | (t > float(kv.knots[j + kv.degree + 1]))
        assert np.all(values[outside] == 0.0)


def test_right_end_and_right_continuity():
    kv = KnotVector(0, (0, 0.5, 1), refine_multiplicity=1)
    assert eval_bspline(kv, 1, 0.5) == 1.0
    assert eval_bspline(kv, 0, 0.5) == 0.0
    assert eval_bspline(kv, 1, 1.0) == 1.0


@pytest.mark.parametrize(
    "degree, knots",
    [
        (1, (0, 0.5, 1, 1)),  # not open
        (1, (0, 0, 0.5, 0.5, 1, 1)),  # multiplicity p+1 outside full-multiplicity mode
        (1, (0, 0, 0.7, 0.3, 1, 1)),  # decreasing
        (-1, (0, 1)),
    ],
)
def test_invalid_knot_vectors(degree, knots):
    with pytest.raises(ValueError):
        KnotVector(degree, knots)


def test_full_multiplicity_mode_allows_p_plus_one():
    kv = KnotVector(1, (0, 0, 0.5, 0.5, 1, 1), refine_multiplicity=2)
    assert kv.full_multiplicity
    assert kv.n_basis == 4


def test_out_of_range():
    kv = KnotVector(1, (0, 0, 1, 1))
    with pytest.raises(ValueError):
        eval_bspline(kv, 2, 0.5)
    with pytest.raises(ValueError):
        eval_bspline(kv, 0, 1.5)


# endregion Knot vectors


# region Derivatives
def test_derivative_of_linear():
    assert eval_bspline_derivative(KnotVector(1, (0, 0, 1, 1)), 1, 0.5) == pytest.approx(1.0)


def test_derivative_piecewise_constant():
    assert eval_bspline_derivative(KnotVector(0, (0, 1)), 0, 0.3) == 0.0


def test_derivative_sum_vanishes(rng):
    kv = KnotVector.open_uniform(2, 4)
    t = rng.random(100)
    total = sum(eval_bspline_derivative(kv, j, t) for j in range(kv.n_basis))
    assert np.abs(total).max() <= 1e-12


def test_basis_funs_matches_single_evaluation(rng):
    kv = KnotVector(2, FIGURE_KNOTS)
    t = rng.random(50)
    first, values = basis_funs(kv, t)
    for n in range(len(t)):
        for a in range(kv.degree + 1):
            assert values[n, a] == pytest.approx(eval_bspline(kv, first[n] + a, t[n]), abs=1e-14)


# endregion Derivatives


# region Refinement
def test_dyadic_refine_linear():
    assert dyadic_refine(KnotVector(1, (0, 0, 1, 1))).knots == tuple(
        Fraction(k) for k in ("0", "0", "1/2", "1", "1")
    )


def test_dyadic_refine_quadratic():
    fine = dyadic_refine(KnotVector(2, (0, 0, 0, 0.5, 1, 1, 1)))
    assert [float(k) for k in fine.knots] == [0, 0, 0, 0.25, 0.5, 0.75, 1, 1, 1]


def test_dyadic_refine_twice_p0():
    kv = refine_levels(KnotVector(0, (0, 1)), 2)
    widths = np.diff(kv.breakpoint_values)
    assert np.allclose(widths, 0.25)


def test_refine_multiplicity_inserts_repeated_midpoints():
    kv = dyadic_refine(KnotVector.open_uniform(2, 1, refine_multiplicity=2))
    assert kv.knots.count(Fraction(1, 2)) == 2


def test_two_scale_linear():
    matrix = two_scale_matrix(KnotVector(1, (0, 0, 1, 1))).toarray()
    assert np.allclose(matrix[0], [1.0, 0.5, 0.0])


def test_two_scale_p0():
    matrix = two_scale_matrix(KnotVector(0, (0, 1))).toarray()
    assert np.allclose(matrix, [[1.0, 1.0]])


@pytest.mark.parametrize("kv", [KnotVector(2, FIGURE_KNOTS), KnotVector.open_uniform(3, 3)])
def test_two_scale_reproduces_coarse_functions(kv, rng):
    fine = dyadic_refine(kv)
    matrix = two_scale_matrix(kv)
    t = rng.random(200)
    fine_values = np.column_stack([eval_bspline(fine, k, t) for k in range(fine.n_basis)])
    for j in range(kv.n_basis):
        assert np.abs(fine_values @ matrix[j].toarray().ravel() - eval_bspline(kv, j, t)).max() <= 1e-12
    assert matrix.min() >= 0.0
    assert max(np.diff(matrix.indptr)) <= kv.degree + 2


def test_two_scale_mismatched_degrees():
    with pytest.raises(ValueError):
        two_scale_matrix(KnotVector(1, (0, 0, 1, 1)), KnotVector(2, (0, 0, 0, 1, 1, 1)))


# endregion Refinement


# region Dual functionals and quadrature
def test_dual_pairing_is_biorthogonal():
    space = TensorSplineSpace.uniform(2, 2)
    cell = (1, 0)
    funcs = space.functions_on_cell(cell)
    for target in funcs:
        for other in funcs:
            value = element_dual_pairing(space, cell, target, lambda t, o=other: space.eval_function(o, t))
            assert value == pytest.approx(1.0 if other == target else 0.0, abs=1e-12)


def test_dual_pairing_rejects_foreign_function():
    space = TensorSplineSpace.uniform(1, 4)
    with pytest.raises(ValueError):
        element_dual_pairing(space, (0, 0), (4, 4), lambda t: np.ones(len(t)))


@pytest.mark.parametrize("degree", [0, 1, 2])
def test_dual_bound_uniform_over_levels(degree):
    # sup |dual| times cell area on the first cell, levels 0..4
    base = TensorSplineSpace.uniform(degree, 4)
    grid = np.linspace(0.0, 1.0, 21)
    ref = np.array([(a, b) for a in grid for b in grid])
    bounds = []
    for k in range(5):
        space = TensorSplineSpace(tuple(refine_levels(kv, k) for kv in base.kvs))
        cell = (0, 0)
        (u0, u1), (v0, v1) = space.cell_bounds(cell)
        t = np.column_stack([u0 + (u1 - u0) * ref[:, 0], v0 + (v1 - v0) * ref[:, 1]])
        area = (u1 - u0) * (v1 - v0)
        bounds.append(
            max(np.abs(dual_function(space, cell, fn, t)).max() for fn in space.functions_on_cell(cell)) * area
        )
    assert np.allclose(bounds, bounds[0], rtol=1e-8)
    assert 1.0 <= bounds[0] < 1000.0
    if degree == 0:
        assert bounds[0] == pytest.approx(1.0)


def test_gauss_rule():
    rule = gauss_rule(1)
    assert rule.nodes[0] == pytest.approx(0.5) and rule.weights[0] == pytest.approx(1.0)
    rule = gauss_rule(2)
    assert np.sum(rule.weights * rule.nodes**3) == pytest.approx(0.25, abs=1e-15)
    rule = gauss_rule(16)
    assert abs(np.sum(rule.weights * np.cos(rule.nodes)) - np.sin(1.0)) <= 1e-14
    with pytest.raises(ValueError):
        gauss_rule(0)


# endregion Dual functionals and quadrature

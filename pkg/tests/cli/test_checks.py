import numpy as np
import pytest

from isobem.cli import SUITES, run_check
from isobem.cli.checks import (
    PAIR_CONFIGS,
    UNIT_SQUARE_SELF,
    brute_force_doerfler,
    brute_force_overlay,
    check_admissibility,
    duffy_value,
    subdivision_reference,
)
from isobem.mesh import Element, initial_mesh_for, overlay, refine

FAST_SUITES = [
    "thb-partition",
    "truncation-bounds",
    "children",
    "overlay",
    "doerfler",
    "galerkin",
    "quasi-interpolant",
    "quadrature-oracle",
]


def test_suite_names():
    assert set(FAST_SUITES) | {"admissibility", "double-layer", "representation"} == set(SUITES)


@pytest.mark.parametrize("suite", FAST_SUITES)
def test_suite_passes(suite):
    report = run_check(suite, seed=7)
    assert report.passed, "\n".join(report.lines)
    assert report.name == suite


@pytest.mark.slow
@pytest.mark.parametrize("suite", ["admissibility", "double-layer", "representation"])
def test_slow_suite_passes(suite):
    report = run_check(suite, seed=7)
    assert report.passed, "\n".join(report.lines)


def test_short_admissibility_run():
    report = check_admissibility(np.random.default_rng(3), steps=20)
    assert report.passed, "\n".join(report.lines)
    assert any("#Pi(T)" in line for line in report.lines)


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_check("nothing")


def test_brute_force_overlay(plate):
    initial = initial_mesh_for(plate, 0, n_spans=2)
    a = refine(initial, [Element(0, 0, (0, 0))])
    b = refine(a, [Element(0, 1, (0, 0))])
    assert brute_force_overlay(a, b) == set(overlay(a, b).elements) == set(b.elements)


def test_brute_force_doerfler():
    assert brute_force_doerfler(np.array([16.0, 1, 1, 1, 1]), 0.5) == 1
    assert brute_force_doerfler(np.ones(6), 0.5) == 3


def rectangle_self(a, b):
    """Integral of 1/|x - y| over an a x b rectangle times itself"""
    d = np.hypot(a, b)
    return (
        2.0 / 3.0 * (a**3 + b**3 - d**3)
        + 2.0 * a * a * b * np.log((b + d) / a)
        + 2.0 * a * b * b * np.log((a + d) / b)
    )


def test_rectangle_formula_matches_square():
    assert rectangle_self(1.0, 1.0) == pytest.approx(UNIT_SQUARE_SELF, rel=1e-15)


def test_subdivision_reference_closed_forms():
    identical = rectangle_self(1.0, 1.0)
    # a 2x1 rectangle is 2 identical and 2 edge pairs; a 2x2 square adds 4 vertex pairs
    edge = (rectangle_self(2.0, 1.0) - 2.0 * identical) / 2.0
    vertex = identical - 2.0 * edge
    assert subdivision_reference("identical") == pytest.approx(identical, rel=1e-8)
    assert subdivision_reference("edge") == pytest.approx(edge, rel=1e-8)
    assert subdivision_reference("vertex") == pytest.approx(vertex, rel=1e-8)


@pytest.mark.parametrize("config", sorted(PAIR_CONFIGS))
def test_duffy_rules_match_subdivision(config):
    reference = subdivision_reference(config)
    assert duffy_value(config, 12) == pytest.approx(reference, rel=1e-6)

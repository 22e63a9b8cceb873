import numpy as np

from isobem.adaptivity.estimator import EstimatorReport
from isobem.mesh.hier_mesh import Element
from isobem.utils.logging_utils import get_logger

logger = get_logger(__name__)

# round-off allowance on theta * eta^2, relative to eta^2; marking is scale invariant
_SLACK = 1e-12


def doerfler_count(squared: np.ndarray, theta: float) -> int:
    """Length of the shortest descending prefix with sum >= theta * total * (1 - _SLACK)"""
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"Doerfler parameter must be in (0, 1], got {theta}")
    squared = np.asarray(squared, dtype=float)
    if not len(squared):
        raise ValueError("Cannot mark on an empty estimator")
    total = float(squared.sum())
    if total <= 0.0:
        return 0 if theta < 1.0 else len(squared)
    ranked = np.sort(squared)[::-1]
    cumulative = np.cumsum(ranked)
    count = int(np.searchsorted(cumulative, theta * total * (1.0 - _SLACK))) + 1
    return min(count, len(squared))


def doerfler_mark(report: EstimatorReport, theta: float) -> set[Element]:
    """
    Minimal set M with theta * eta^2 <= sum over M of eta(T)^2.
    Elements are taken in descending order of their indicator, ties by element order.
    """
    if not len(report):
        raise ValueError("Cannot mark on an empty estimator")
    squared = report.squared
    count = doerfler_count(squared, theta)
    # stable sort on -eta^2 keeps the element order among ties
    order = np.argsort(-squared, kind="stable")
    marked = {report.elements[i] for i in order[:count]}
    logger.debug(f"Doerfler(theta={theta}): marked {len(marked)} of {len(report)} elements")
    return marked

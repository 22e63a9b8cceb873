"""
Univariate and tensor-product B-splines on open knot vectors.

Knots are exact rationals (`fractions.Fraction`); dyadic refinement only ever
halves spans, so span identity and mesh equality compare exactly. Float values
are derived on demand for evaluation.

Basis indices are 0-based: function j of a degree-p knot vector is supported
on [knots[j], knots[j+p+1]].
"""

import bisect
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
import scipy.sparse

from isobem.utils.errors import DualityError
from isobem.utils.logging_utils import get_logger

logger = get_logger(__name__)

Knot = Fraction
Cell = tuple[int, int]
TensorIndex = tuple[int, int]


def as_knot(value) -> Knot:
    """
    >>> as_knot("1/6")
    Fraction(1, 6)
    >>> as_knot(0.5)
    Fraction(1, 2)
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value).limit_denominator(2**40)
    return Fraction(value)


# region Quadrature
@dataclass(frozen=True)
class QuadRule1D:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def order(self) -> int:
        return len(self.nodes)


@lru_cache(maxsize=None)
def gauss_rule(n: int) -> QuadRule1D:
    """Gauss-Legendre rule with n nodes on [0,1]; exact up to degree 2n-1"""
    if n < 1:
        raise ValueError(f"Gauss rule needs at least one node, got {n}")
    x, w = np.polynomial.legendre.leggauss(n)
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return QuadRule1D(nodes, weights)


@lru_cache(maxsize=None)
def tensor_rule(n1: int, n2: int = None) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss rule on [0,1]^2: points (n1*n2, 2) with direction 1 major"""
    n2 = n2 or n1
    r1, r2 = gauss_rule(n1), gauss_rule(n2)
    u, v = np.meshgrid(r1.nodes, r2.nodes, indexing="ij")
    points = np.column_stack([u.ravel(), v.ravel()])
    weights = np.outer(r1.weights, r2.weights).ravel()
    points.flags.writeable = False
    weights.flags.writeable = False
    return points, weights


# endregion Quadrature


# region Knot vectors
@dataclass(frozen=True)
class KnotVector:
    degree: int
    knots: tuple[Knot, ...]
    # multiplicity of midpoints inserted by dyadic refinement
    refine_multiplicity: int = 1

    def __post_init__(self):
        object.__setattr__(self, "knots", tuple(as_knot(k) for k in self.knots))
        p, knots = self.degree, self.knots
        if p < 0:
            raise ValueError(f"Degree must be non-negative, got {p}")
        if not 1 <= self.refine_multiplicity <= p + 1:
            raise ValueError(
                f"Refinement multiplicity must lie in [1, {p + 1}], got {self.refine_multiplicity}"
            )
        if len(knots) < 2 * p + 2:
            raise ValueError(f"Need at least {2 * p + 2} knots for degree {p}, got {len(knots)}")
        if any(b < a for a, b in zip(knots, knots[1:])):
            raise ValueError(f"Knots must be nondecreasing: {knots}")
        if knots[: p + 1] != (0,) * (p + 1) or knots[-p - 1 :] != (1,) * (p + 1):
            raise ValueError(f"Knot vector is not {p}-open on [0,1]: {knots}")
        if any(k <= 0 or k >= 1 for k in knots[p + 1 : len(knots) - p - 1]):
            raise ValueError(f"Interior knots must lie in (0,1): {knots}")
        limit = p + 1 if self.full_multiplicity else p
        for k in set(knots[p + 1 : len(knots) - p - 1]):
            if knots.count(k) > limit:
                raise ValueError(
                    f"Interior knot {k} has multiplicity {knots.count(k)} > {limit}"
                    + ("" if self.full_multiplicity else " (full-multiplicity mode is off)")
                )

    @classmethod
    def open_uniform(cls, degree: int, n_spans: int = 1, refine_multiplicity: int = 1):
        """
        >>> KnotVector.open_uniform(1, 2).knots
        (Fraction(0, 1), Fraction(0, 1), Fraction(1, 2), Fraction(1, 1), Fraction(1, 1))
        """
        interior = [Fraction(i, n_spans) for i in range(1, n_spans)]
        knots = [Fraction(0)] * (degree + 1) + interior + [Fraction(1)] * (degree + 1)
        return cls(degree, tuple(knots), refine_multiplicity)

    @property
    def full_multiplicity(self) -> bool:
        """Lowest-order / full-multiplicity mode: interior knots may repeat p+1 times"""
        return self.degree == 0 or self.refine_multiplicity == self.degree + 1

    @property
    def n_basis(self) -> int:
        return len(self.knots) - self.degree - 1

    @cached_property
    def values(self) -> np.ndarray:
        return np.array([float(k) for k in self.knots])

    @cached_property
    def breakpoints(self) -> tuple[Knot, ...]:
        return tuple(sorted(set(self.knots)))

    @cached_property
    def breakpoint_values(self) -> np.ndarray:
        return np.array([float(b) for b in self.breakpoints])

    @property
    def n_spans(self) -> int:
        return len(self.breakpoints) - 1

    @cached_property
    def span_knot_index(self) -> np.ndarray:
        """For each nonempty span e, the knot index s with knots[s] < knots[s+1]"""
        idx = [s for s in range(len(self.knots) - 1) if self.knots[s] < self.knots[s + 1]]
        return np.array(idx, dtype=int)

    def span_bounds(self, e: int) -> tuple[float, float]:
        return float(self.breakpoints[e]), float(self.breakpoints[e + 1])

    def functions_on_span(self, e: int) -> range:
        s = int(self.span_knot_index[e])
        return range(s - self.degree, s + 1)

    def support_spans(self, j: int) -> range:
        if not 0 <= j < self.n_basis:
            raise ValueError(f"Basis index {j} out of range [0, {self.n_basis})")
        lo = bisect.bisect_left(self.breakpoints, self.knots[j])
        hi = bisect.bisect_left(self.breakpoints, self.knots[j + self.degree + 1])
        return range(lo, hi)

    def find_span(self, t) -> np.ndarray:
        """Span index per point; right-continuous, t=1 belongs to the last span"""
        t = np.asarray(t, dtype=float)
        e = np.searchsorted(self.breakpoint_values, t, side="right") - 1
        return np.clip(e, 0, self.n_spans - 1)


def _check_parameter(t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise ValueError("Parameter t outside [0,1]")
    return t


def _nonzero_at_span(U: np.ndarray, s: np.ndarray, t: np.ndarray, p: int) -> np.ndarray:
    """Values (n, p+1) of the degree-p functions s-p..s at t (Cox-de Boor triangle)"""
    n = len(t)
    N = np.zeros((n, p + 1))
    N[:, 0] = 1.0
    left = np.zeros((n, p + 1))
    right = np.zeros((n, p + 1))
    for j in range(1, p + 1):
        left[:, j] = t - U[s + 1 - j]
        right[:, j] = U[s + j] - t
        saved = np.zeros(n)
        for r in range(j):
            temp = N[:, r] / (right[:, r + 1] + left[:, j - r])
            N[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        N[:, j] = saved
    return N


def _derivs_at_span(U: np.ndarray, s: np.ndarray, t: np.ndarray, p: int) -> np.ndarray:
    """First derivatives (n, p+1) of the degree-p functions s-p..s"""
    n = len(t)
    if p == 0:
        return np.zeros((n, 1))
    lower = _nonzero_at_span(U, s, t, p - 1)  # functions s-p+1..s
    dN = np.zeros((n, p + 1))
    for a in range(p + 1):
        i = s - p + a
        if a >= 1:
            denom = U[i + p] - U[i]
            dN[:, a] += p * np.divide(lower[:, a - 1], denom, out=np.zeros(n), where=denom > 0)
        if a <= p - 1:
            denom = U[i + p + 1] - U[i + 1]
            dN[:, a] -= p * np.divide(lower[:, a], denom, out=np.zeros(n), where=denom > 0)
    return dN


def basis_funs(kv: KnotVector, t, derivative: bool = False):
    """
    Nonzero basis functions at many points.
    :return: (first, values) with values[:, a] = B_{first+a}(t); with derivative=True
        the first derivatives are returned instead of the values
    """
    t = _check_parameter(t)
    s = kv.span_knot_index[kv.find_span(t)]
    fn = _derivs_at_span if derivative else _nonzero_at_span
    return s - kv.degree, fn(kv.values, s, t, kv.degree)


def span_basis(kv: KnotVector, e: int, t, derivative: bool = False) -> np.ndarray:
    """Values (or derivatives) of the p+1 functions nonzero on span e, evaluated by the span's polynomials"""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    s = np.full(len(t), kv.span_knot_index[e])
    fn = _derivs_at_span if derivative else _nonzero_at_span
    return fn(kv.values, s, t, kv.degree)


def _eval_single(kv: KnotVector, j: int, t, derivative: bool):
    if not 0 <= j < kv.n_basis:
        raise ValueError(f"Basis index {j} out of range [0, {kv.n_basis})")
    scalar = np.ndim(t) == 0
    first, vals = basis_funs(kv, t, derivative)
    a = j - first
    inside = (a >= 0) & (a <= kv.degree)
    out = np.where(inside, vals[np.arange(len(a)), np.clip(a, 0, kv.degree)], 0.0)
    return float(out[0]) if scalar else out


def eval_bspline(kv: KnotVector, j: int, t):
    """
    B_j(t), right-continuous at interior knots, B_{N-1}(1) = 1.

    >>> eval_bspline(KnotVector(1, (0, 0, 1, 1)), 0, 0.25)
    0.75
    """
    return _eval_single(kv, j, t, derivative=False)


def eval_bspline_derivative(kv: KnotVector, j: int, t):
    return _eval_single(kv, j, t, derivative=True)


def dyadic_refine(kv: KnotVector) -> KnotVector:
    """Insert the midpoint of every nonempty span, refine_multiplicity times"""
    bp = kv.breakpoints
    mids = [(a + b) / 2 for a, b in zip(bp, bp[1:])] * kv.refine_multiplicity
    return KnotVector(kv.degree, tuple(sorted(kv.knots + tuple(mids))), kv.refine_multiplicity)


@lru_cache(maxsize=None)
def refine_levels(kv: KnotVector, level: int) -> KnotVector:
    """Knot vector after `level` dyadic refinements"""
    if level == 0:
        return kv
    return dyadic_refine(refine_levels(kv, level - 1))


# endregion Knot vectors


# region Two-scale relation
def _inserted_knots(coarse: KnotVector, fine: KnotVector) -> list[Knot]:
    if coarse.degree != fine.degree:
        raise ValueError(f"Mismatched degrees {coarse.degree} and {fine.degree}")
    remaining = list(fine.knots)
    for k in coarse.knots:
        try:
            remaining.remove(k)
        except ValueError:
            raise ValueError(f"Fine knot vector does not contain coarse knot {k}")
    return remaining


def two_scale_matrix(coarse: KnotVector, fine: KnotVector = None) -> scipy.sparse.csr_matrix:
    """
    Row j holds c_{j,k} >= 0 with B_j^coarse = sum_k c_{j,k} B_k^fine.
    Built by Boehm knot insertion in exact arithmetic.
    """
    fine = fine or dyadic_refine(coarse)
    p = coarse.degree
    U = list(coarse.knots)
    # rows: fine coefficients as combinations of coarse coefficients
    rows: list[dict[int, Fraction]] = [{j: Fraction(1)} for j in range(coarse.n_basis)]
    for x in _inserted_knots(coarse, fine):
        s = bisect.bisect_right(U, x) - 1
        new_rows = []
        for i in range(len(rows) + 1):
            if i <= s - p:
                new_rows.append(rows[i])
            elif i <= s:
                alpha = (x - U[i]) / (U[i + p] - U[i])
                combo = {c: alpha * v for c, v in rows[i].items()}
                for c, v in rows[i - 1].items():
                    combo[c] = combo.get(c, 0) + (1 - alpha) * v
                new_rows.append({c: v for c, v in combo.items() if v != 0})
            else:
                new_rows.append(rows[i - 1])
        rows = new_rows
        U.insert(s + 1, x)

    data, row_idx, col_idx = [], [], []
    for k, row in enumerate(rows):
        for j, v in row.items():
            row_idx.append(j)
            col_idx.append(k)
            data.append(float(v))
    return scipy.sparse.csr_matrix(
        (data, (row_idx, col_idx)), shape=(coarse.n_basis, fine.n_basis)
    )


@lru_cache(maxsize=None)
def two_scale_rows(coarse: KnotVector) -> tuple[tuple[tuple[int, float], ...], ...]:
    """Cached rows of two_scale_matrix(coarse, dyadic_refine(coarse)) as (fine index, coefficient)"""
    mat = two_scale_matrix(coarse)
    return tuple(
        tuple(zip(mat.indices[mat.indptr[j] : mat.indptr[j + 1]].tolist(),
                  mat.data[mat.indptr[j] : mat.indptr[j + 1]].tolist()))
        for j in range(coarse.n_basis)
    )


# endregion Two-scale relation


# region Tensor spaces
@dataclass(frozen=True)
class TensorSplineSpace:
    kvs: tuple[KnotVector, KnotVector]

    @classmethod
    def uniform(cls, degree: int, n_spans: int = 1, refine_multiplicity: int = 1):
        kv = KnotVector.open_uniform(degree, n_spans, refine_multiplicity)
        return cls((kv, kv))

    @property
    def degrees(self) -> tuple[int, int]:
        return self.kvs[0].degree, self.kvs[1].degree

    @property
    def n_basis(self) -> tuple[int, int]:
        return self.kvs[0].n_basis, self.kvs[1].n_basis

    @property
    def n_spans(self) -> tuple[int, int]:
        return self.kvs[0].n_spans, self.kvs[1].n_spans

    @property
    def full_multiplicity(self) -> bool:
        return any(kv.full_multiplicity for kv in self.kvs)

    def refine(self) -> "TensorSplineSpace":
        return TensorSplineSpace(tuple(dyadic_refine(kv) for kv in self.kvs))

    def level(self, k: int) -> "TensorSplineSpace":
        return _level_space(self, k)

    def cell_bounds(self, cell: Cell) -> tuple[tuple[float, float], tuple[float, float]]:
        return self.kvs[0].span_bounds(cell[0]), self.kvs[1].span_bounds(cell[1])

    def functions_on_cell(self, cell: Cell) -> list[TensorIndex]:
        r1 = self.kvs[0].functions_on_span(cell[0])
        r2 = self.kvs[1].functions_on_span(cell[1])
        return [(a, b) for a in r1 for b in r2]

    def support_cells(self, fn: TensorIndex) -> list[Cell]:
        r1 = self.kvs[0].support_spans(fn[0])
        r2 = self.kvs[1].support_spans(fn[1])
        return [(a, b) for a in r1 for b in r2]

    def local_values(self, cell: Cell, t: np.ndarray, derivative: int = None) -> np.ndarray:
        """
        Tensor functions nonzero on `cell` at points t (n,2), ordered as functions_on_cell.
        derivative=0/1 differentiates in that parametric direction.
        """
        t = np.atleast_2d(t)
        b1 = span_basis(self.kvs[0], cell[0], t[:, 0], derivative == 0)
        b2 = span_basis(self.kvs[1], cell[1], t[:, 1], derivative == 1)
        return (b1[:, :, None] * b2[:, None, :]).reshape(len(t), -1)

    def eval_function(self, fn: TensorIndex, t: np.ndarray) -> np.ndarray:
        t = np.atleast_2d(t)
        return eval_bspline(self.kvs[0], fn[0], t[:, 0]) * eval_bspline(self.kvs[1], fn[1], t[:, 1])


@lru_cache(maxsize=None)
def _level_space(space: TensorSplineSpace, k: int) -> TensorSplineSpace:
    return TensorSplineSpace(tuple(refine_levels(kv, k) for kv in space.kvs))


# endregion Tensor spaces


# region Dual functionals
def _local_gram(kv: KnotVector, e: int) -> np.ndarray:
    rule = gauss_rule(kv.degree + 1)
    a, b = kv.span_bounds(e)
    vals = span_basis(kv, e, a + (b - a) * rule.nodes)
    return (vals * (rule.weights * (b - a))[:, None]).T @ vals


def dual_function(space: TensorSplineSpace, cell: Cell, target: TensorIndex, t: np.ndarray) -> np.ndarray:
    """
    Values at t (n,2) in `cell` of the dual function of `target`: the combination of
    the tensor functions nonzero on the cell given by the inverse of their local Gram matrix.
    """
    funcs = [list(kv.functions_on_span(e)) for kv, e in zip(space.kvs, cell)]
    if target[0] not in funcs[0] or target[1] not in funcs[1]:
        raise ValueError(f"Function {target} does not live on cell {cell}")
    try:
        inv = [np.linalg.inv(_local_gram(kv, e)) for kv, e in zip(space.kvs, cell)]
    except np.linalg.LinAlgError as e:
        raise DualityError(f"Singular local Gram matrix on cell {cell}") from e
    dual = np.outer(
        inv[0][funcs[0].index(target[0])], inv[1][funcs[1].index(target[1])]
    ).ravel()
    return space.local_values(cell, t) @ dual


def element_dual_pairing(
    space: TensorSplineSpace,
    cell: Cell,
    target: TensorIndex,
    g: Callable[[np.ndarray], np.ndarray],
    order: int = None,
) -> float:
    """Integral over `cell` of the dual function of `target` times g"""
    order = order or max(space.degrees) + 2
    ref, w = tensor_rule(order)
    (u0, u1), (v0, v1) = space.cell_bounds(cell)
    t = np.column_stack([u0 + (u1 - u0) * ref[:, 0], v0 + (v1 - v0) * ref[:, 1]])
    weights = w * (u1 - u0) * (v1 - v0)
    dual = dual_function(space, cell, target, t)
    return float(np.sum(weights * dual * np.asarray(g(t), dtype=float)))


# endregion Dual functionals

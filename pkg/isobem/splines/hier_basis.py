"""
Hierarchical and truncated hierarchical B-splines on a multi-patch mesh.

A basis function is identified structurally by (patch, level, tensor index).
Its truncation is stored as one coefficient dict per level: on an active element
of level l the truncated function equals sum_i c^(l)_i B^l_i.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from isobem.mesh.hier_mesh import Element, MultiPatchMesh, admissibility_violations, is_finer
from isobem.splines.spline_kernel import (
    TensorIndex,
    TensorSplineSpace,
    element_dual_pairing,
    two_scale_rows,
)
from isobem.utils.errors import MeshError
from isobem.utils.logging_utils import get_logger

logger = get_logger(__name__)

# g(patch, t) -> values at parametric points t (n, 2)
PatchFunction = Callable[[int, np.ndarray], np.ndarray]


@dataclass(frozen=True, order=True)
class HierFn:
    patch: int
    level: int
    index: TensorIndex


@dataclass(frozen=True, eq=False)
class THBRep:
    fn: HierFn
    # levels[j] holds coefficients on level fn.level + j
    levels: tuple[dict[TensorIndex, float], ...]

    def coefficients(self, level: int) -> dict[TensorIndex, float]:
        j = level - self.fn.level
        return self.levels[j] if 0 <= j < len(self.levels) else {}

    @property
    def finest_level(self) -> int:
        return self.fn.level + len(self.levels) - 1


def _refine_coefficients(coeffs: dict[TensorIndex, float], space: TensorSplineSpace) -> dict:
    """Express a level-space spline in the next dyadic level"""
    rows = [two_scale_rows(kv) for kv in space.kvs]
    out: dict[TensorIndex, float] = {}
    for (a, b), c in coeffs.items():
        for fa, va in rows[0][a]:
            for fb, vb in rows[1][b]:
                key = (fa, fb)
                out[key] = out.get(key, 0.0) + c * va * vb
    return out


def truncate(fn: HierFn, mesh: MultiPatchMesh) -> THBRep:
    """
    Trunc(beta): refine level by level and drop the next-level functions whose
    support lies in Omega^{k+1}.
    """
    pm = mesh.patches[fn.patch]
    current = {fn.index: 1.0}
    levels = [current]
    for k in range(fn.level, pm.n_levels - 1):
        fine = pm.level_space(k + 1)
        refined = _refine_coefficients(current, pm.level_space(k))
        current = {
            idx: c
            for idx, c in refined.items()
            if c != 0.0 and not all(cell in pm.omega[k + 1] for cell in fine.support_cells(idx))
        }
        levels.append(current)
    return THBRep(fn, tuple(levels))


@dataclass(frozen=True)
class ElementBasis:
    """Functions nonzero on one element: values = local_values @ coeffs"""

    element: Element
    space: TensorSplineSpace  # level space of the element
    dofs: np.ndarray
    coeffs: np.ndarray  # ((p1+1)(p2+1), len(dofs))

    def values(self, t: np.ndarray) -> np.ndarray:
        return self.space.local_values(self.element.cell, t) @ self.coeffs


class SplineSpace:
    """THB basis of a multi-patch mesh, patches concatenated, extended by zero"""

    def __init__(self, mesh: MultiPatchMesh):
        self.mesh = mesh
        self.functions: tuple[HierFn, ...] = tuple(
            HierFn(m, k, idx) for m, pm in enumerate(mesh.patches) for k, idx in pm.functions
        )
        self.index = {fn: i for i, fn in enumerate(self.functions)}
        self._element_cache: dict[Element, ElementBasis] = {}

    def __len__(self):
        return len(self.functions)

    @property
    def dimension(self) -> int:
        return len(self.functions)

    @cached_property
    def truncations(self) -> tuple[THBRep, ...]:
        return tuple(truncate(fn, self.mesh) for fn in self.functions)

    def support(self, fn: HierFn) -> tuple[Element, ...]:
        pm = self.mesh.patches[fn.patch]
        return tuple(Element(fn.patch, k, c) for k, c in pm.function_elements[(fn.level, fn.index)])

    def functions_on(self, elem: Element) -> list[int]:
        pm = self.mesh.patches[elem.patch]
        return [
            self.index[HierFn(elem.patch, k, idx)]
            for k, idx in pm.element_functions[(elem.level, elem.cell)]
        ]

    def element_basis(self, elem: Element) -> ElementBasis:
        if elem in self._element_cache:
            return self._element_cache[elem]
        self.mesh.require_active(elem)
        level_space = self.mesh.patches[elem.patch].level_space(elem.level)
        local = level_space.functions_on_cell(elem.cell)
        dofs, columns = [], []
        for i in self.functions_on(elem):
            coeffs = self.truncations[i].coefficients(elem.level)
            col = np.array([coeffs.get(g, 0.0) for g in local])
            if np.any(col != 0.0):
                dofs.append(i)
                columns.append(col)
        coeffs = np.column_stack(columns) if columns else np.zeros((len(local), 0))
        basis = ElementBasis(elem, level_space, np.array(dofs, dtype=int), coeffs)
        self._element_cache[elem] = basis
        return basis

    def _group_points(self, patch: int, t: np.ndarray) -> dict[Element, np.ndarray]:
        groups: dict[Element, list[int]] = {}
        for n, point in enumerate(t):
            groups.setdefault(self.mesh.locate(patch, point), []).append(n)
        return {e: np.array(idx) for e, idx in groups.items()}

    def evaluate(self, coeffs: np.ndarray, patch: int, t) -> np.ndarray:
        """sum_i coeffs_i Trunc(beta_i) at parametric points of one patch"""
        t = np.atleast_2d(np.asarray(t, dtype=float))
        coeffs = np.asarray(coeffs, dtype=float)
        out = np.zeros(len(t))
        for elem, idx in self._group_points(patch, t).items():
            eb = self.element_basis(elem)
            out[idx] = eb.values(t[idx]) @ coeffs[eb.dofs]
        return out

    def basis_values(self, patch: int, t) -> np.ndarray:
        """Dense (n_points, dimension) matrix of truncated basis values"""
        t = np.atleast_2d(np.asarray(t, dtype=float))
        out = np.zeros((len(t), self.dimension))
        for elem, idx in self._group_points(patch, t).items():
            eb = self.element_basis(elem)
            out[np.ix_(idx, eb.dofs)] = eb.values(t[idx])
        return out

    def dual_element(self, fn: HierFn) -> Element:
        """Smallest active element of the function's own level inside its support"""
        candidates = [e for e in self.support(fn) if e.level == fn.level]
        if not candidates:
            raise MeshError(f"No active element of level {fn.level} in the support of {fn}")
        return min(candidates)


def build_basis(mesh: MultiPatchMesh, strict: bool = False) -> SplineSpace:
    if strict:
        issues = admissibility_violations(mesh)
        if issues:
            elem, other, reason = issues[0]
            raise MeshError(f"Mesh is not admissible ({reason} between {elem} and {other})")
    space = SplineSpace(mesh)
    logger.debug(f"Built THB space: {space.dimension} functions on {mesh.n_elements} elements")
    return space


def eval_fn(space: SplineSpace, fn: Union[HierFn, THBRep], t) -> np.ndarray:
    """Untruncated beta for a HierFn, Trunc(beta) for a THBRep; zero outside the support"""
    t = np.atleast_2d(np.asarray(t, dtype=float))
    if isinstance(fn, HierFn):
        level_space = space.mesh.patches[fn.patch].level_space(fn.level)
        return level_space.eval_function(fn.index, t)
    rep = fn
    pm = space.mesh.patches[rep.fn.patch]
    out = np.zeros(len(t))
    for elem, idx in space._group_points(rep.fn.patch, t).items():
        coeffs = rep.coefficients(elem.level)
        if elem.level < rep.fn.level or not coeffs:
            continue
        level_space = pm.level_space(elem.level)
        local = level_space.functions_on_cell(elem.cell)
        col = np.array([coeffs.get(g, 0.0) for g in local])
        out[idx] = level_space.local_values(elem.cell, t[idx]) @ col
    return out


def eval_finest(space: SplineSpace, rep: THBRep, t) -> np.ndarray:
    """Trunc(beta) from its finest-level coefficients alone"""
    t = np.atleast_2d(np.asarray(t, dtype=float))
    pm = space.mesh.patches[rep.fn.patch]
    level_space = pm.level_space(rep.finest_level)
    out = np.zeros(len(t))
    for idx, c in rep.coefficients(rep.finest_level).items():
        out += c * level_space.eval_function(idx, t)
    return out


def quasi_interpolate(space: SplineSpace, elements: Iterable[Element], g: PatchFunction) -> np.ndarray:
    """
    Coefficients of sum over beta with support inside the union of `elements` of
    (integral of the dual of beta against g on its dual element) * Trunc(beta).
    The support condition is applied per patch.
    """
    chosen = set(elements)
    for elem in chosen:
        space.mesh.require_active(elem)
    coeffs = np.zeros(space.dimension)
    for i, fn in enumerate(space.functions):
        if not all(e in chosen for e in space.support(fn)):
            continue
        dual = space.dual_element(fn)
        level_space = space.mesh.patches[fn.patch].level_space(fn.level)
        coeffs[i] = element_dual_pairing(
            level_space, dual.cell, fn.index, lambda t, m=fn.patch: g(m, t)
        )
    return coeffs


def coarse_to_fine(coarse: SplineSpace, fine: SplineSpace, coeffs: Sequence[float]) -> np.ndarray:
    """Coefficients in the fine space of the same function"""
    if not is_finer(fine.mesh, coarse.mesh):
        raise MeshError("Fine mesh is not a refinement of the coarse mesh")
    if coarse.mesh == fine.mesh:
        return np.array(coeffs, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    return quasi_interpolate(
        fine, fine.mesh.elements, lambda m, t: coarse.evaluate(coeffs, m, t)
    )

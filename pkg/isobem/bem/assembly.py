"""
Galerkin matrix and load vector for the single-layer operator.

Well-separated element pairs are summed in vectorised blocks over all Gauss points;
touching and near pairs go through panel_pair_integral (Duffy rules for touching
pairs, raised Gauss order otherwise) and are scattered into the dense matrix.
"""

from typing import Callable, Optional

import numpy as np
import scipy.sparse
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from isobem.bem.kernels import FOUR_PI, kernel_unchecked
from isobem.bem.panels import ContactKind, Panel, PanelTopology, panel_centres_and_radii
from isobem.bem.quadrature import (
    QuadConfig,
    common_edge_rule,
    common_vertex_rule,
    identical_rule,
    regular_rule,
)
from isobem.bem.sampling import SurfaceSamples, sample_elements, sample_panel
from isobem.geometry.geometry import BoundaryGeometry
from isobem.mesh.hier_mesh import Element, MultiPatchMesh
from isobem.splines.hier_basis import SplineSpace
from isobem.utils.errors import QuadratureError
from isobem.utils.logging_utils import get_logger
from isobem.utils.run_utils import chunked, parallel_map
from isobem.utils.settings import get_settings

logger = get_logger(__name__)

# f(t) on patch parameters (n, 2) -> (n,) or (n, k)
LocalFunction = Callable[[np.ndarray], np.ndarray]
# f(patch, t, x) -> (n,) values of a function on the boundary
SurfaceFunction = Callable[[int, np.ndarray, np.ndarray], np.ndarray]

MAX_SPLIT_DEPTH = 8

SINGULAR_RULES = {
    ContactKind.IDENTICAL: identical_rule,
    ContactKind.EDGE: common_edge_rule,
    ContactKind.VERTEX: common_vertex_rule,
}


# region Panel pairs
def _as_matrix(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return values[:, None] if values.ndim == 1 else values


def _panel_extent(geom, panel: Panel) -> tuple[np.ndarray, float]:
    grid = np.linspace(0.0, 1.0, 3)
    u, v = np.meshgrid(grid, grid, indexing="ij")
    x = geom.evaluate(panel.patch, panel.to_param(np.column_stack([u.ravel(), v.ravel()])))
    return x[4], float(np.linalg.norm(x - x[4], axis=1).max())


def is_near(centre_a, radius_a, centre_b, radius_b, rho_near: float) -> bool:
    gap = np.linalg.norm(centre_a - centre_b) - radius_a - radius_b
    return bool(gap < rho_near * 2.0 * max(radius_a, radius_b))


def _pair_integral(
    geom: BoundaryGeometry,
    topo: PanelTopology,
    a: Panel,
    b: Panel,
    f_a: LocalFunction,
    f_b: LocalFunction,
    q: QuadConfig,
    disjoint_order: int,
    depth: int = 0,
) -> np.ndarray:
    contact = topo.classify(a, b)
    if contact.kind is ContactKind.PARTIAL:
        if depth >= MAX_SPLIT_DEPTH:
            raise QuadratureError(f"Partial contact not resolved after {depth} splits")
        parts = a.children() if contact.split == 0 else b.children()
        total = 0.0
        for part in parts:
            pa, pb = (part, b) if contact.split == 0 else (a, part)
            # sub-panels of a touching pair are always near
            total = total + _pair_integral(geom, topo, pa, pb, f_a, f_b, q, q.n_sing, depth + 1)
        return total

    if contact.kind is ContactKind.DISJOINT:
        rule = regular_rule(disjoint_order)
    else:
        rule = SINGULAR_RULES[contact.kind](q.n_sing)
    sa = sample_panel(geom, a, rule.x, contact.symmetry_a)
    sb = sample_panel(geom, b, rule.y, contact.symmetry_b)
    k = kernel_unchecked(sa.x - sb.x) * rule.weights * sa.ds * sb.ds
    return _as_matrix(f_a(sa.t)).T @ (k[:, None] * _as_matrix(f_b(sb.t)))


def panel_pair_integral(
    geom: BoundaryGeometry,
    mesh: MultiPatchMesh,
    elem_a: Element,
    elem_b: Element,
    f_a: LocalFunction,
    f_b: LocalFunction,
    q: QuadConfig,
    topo: PanelTopology = None,
    near: Optional[bool] = None,
):
    """
    Integral of G(x - y) f_a(x) f_b(y) over elem_a x elem_b with surface measures.
    f_a, f_b take patch parameters; vector-valued f give the (k_a, k_b) block.
    """
    topo = topo or PanelTopology.of(mesh)
    a, b = Panel.of(mesh, elem_a), Panel.of(mesh, elem_b)
    if near is None:
        near = is_near(*_panel_extent(geom, a), *_panel_extent(geom, b), q.rho_near)
    order = q.n_sing if near else q.n_reg
    result = _pair_integral(geom, topo, a, b, f_a, f_b, q, order)
    scalar = np.ndim(f_a(np.full((1, 2), 0.5))) == 1 and np.ndim(f_b(np.full((1, 2), 0.5))) == 1
    return float(result[0, 0]) if scalar else result


# endregion Panel pairs


# region Near field
def near_pairs(geom: BoundaryGeometry, mesh: MultiPatchMesh, q: QuadConfig) -> list[tuple[int, int]]:
    """Element index pairs (i <= j) that need Duffy or raised-order quadrature"""
    centres, radii = panel_centres_and_radii(geom, mesh)
    n = mesh.n_elements
    pairs = {(i, i) for i in range(n)}
    if n > 1:
        reach = 2.0 * radii.max() * (1.0 + q.rho_near)
        for i, j in cKDTree(centres).query_pairs(reach):
            if is_near(centres[i], radii[i], centres[j], radii[j], q.rho_near):
                pairs.add((min(i, j), max(i, j)))
    index = mesh.element_index
    for i, elem in enumerate(mesh.elements):
        for other in mesh.contacts(elem):
            j = index[other]
            pairs.add((min(i, j), max(i, j)))
    return sorted(pairs)


def near_mask(n: int, pairs: list[tuple[int, int]]) -> np.ndarray:
    mask = np.zeros((n, n), dtype=bool)
    if pairs:
        idx = np.array(pairs)
        mask[idx[:, 0], idx[:, 1]] = True
        mask[idx[:, 1], idx[:, 0]] = True
    return mask


# endregion Near field


def _point_basis_matrix(space: SplineSpace, samples: SurfaceSamples, weighted: bool = True):
    """Sparse (N_points, dim) matrix of (weighted) basis values at the element samples"""
    rows, cols, vals = [], [], []
    for i, elem in enumerate(samples.elements):
        sl = samples.of_element(i)
        eb = space.element_basis(elem)
        values = eb.values(samples.params[sl])
        if weighted:
            values = values * samples.weights[sl, None]
        idx = np.arange(sl.start, sl.stop)
        rows.append(np.repeat(idx, len(eb.dofs)))
        cols.append(np.tile(eb.dofs, len(idx)))
        vals.append(values.ravel())
    if not rows:
        return scipy.sparse.csr_matrix((len(samples), space.dimension))
    return scipy.sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(len(samples), space.dimension),
    )


def assemble(
    geom: BoundaryGeometry,
    mesh: MultiPatchMesh,
    space: SplineSpace,
    q: QuadConfig = QuadConfig(),
    workers: int = None,
) -> np.ndarray:
    """Dense symmetric single-layer Galerkin matrix in the THB basis"""
    settings = get_settings()
    topo = PanelTopology.of(mesh)
    samples = sample_elements(geom, mesh, q.n_reg)
    pairs = near_pairs(geom, mesh, q)
    mask = near_mask(mesh.n_elements, pairs)
    P = _point_basis_matrix(space, samples)
    PT = P.T.tocsr()
    V = np.zeros((space.dimension, space.dimension))

    # far field: points of a row chunk against all points, near blocks masked out
    chunk = settings.chunk_size
    for sl in chunked(len(samples), chunk):
        r = cdist(samples.points[sl], samples.points)
        K = np.zeros_like(r)
        np.divide(1.0, FOUR_PI * r, out=K, where=r > 0.0)
        K[mask[samples.owner[sl]][:, samples.owner]] = 0.0
        V += P[sl].T @ (PT @ K.T).T

    # near field
    def block(pair):
        i, j = pair
        ea, eb = mesh.elements[i], mesh.elements[j]
        ba, bb = space.element_basis(ea), space.element_basis(eb)
        return panel_pair_integral(geom, mesh, ea, eb, ba.values, bb.values, q, topo, near=True)

    blocks = parallel_map(block, pairs, workers)
    counts = {}
    for (i, j), values in zip(pairs, blocks):
        da = space.element_basis(mesh.elements[i]).dofs
        db = space.element_basis(mesh.elements[j]).dofs
        V[np.ix_(da, db)] += values
        if i != j:
            V[np.ix_(db, da)] += values.T
        kind = topo.classify(Panel.of(mesh, mesh.elements[i]), Panel.of(mesh, mesh.elements[j])).kind
        counts[kind.value] = counts.get(kind.value, 0) + 1
    logger.debug(f"Assembled {V.shape[0]} dofs; near-field pair cases {counts}")
    return 0.5 * (V + V.T)


def assemble_rhs(
    geom: BoundaryGeometry,
    mesh: MultiPatchMesh,
    space: SplineSpace,
    f: SurfaceFunction,
    q: QuadConfig = QuadConfig(),
) -> np.ndarray:
    """Load vector <f, Psi_i> by tensor Gauss of order n_reg on every element"""
    samples = sample_elements(geom, mesh, q.n_reg)
    values = surface_values(f, samples)
    P = _point_basis_matrix(space, samples)
    return np.asarray(P.T @ values).ravel()


def surface_values(f: SurfaceFunction, samples: SurfaceSamples) -> np.ndarray:
    """f at every sample, evaluated patch by patch"""
    values = np.zeros(len(samples))
    patches = np.array([e.patch for e in samples.elements], dtype=int)[samples.owner]
    for m in np.unique(patches):
        sel = patches == m
        values[sel] = f(int(m), samples.params[sel], samples.points[sel])
    return values

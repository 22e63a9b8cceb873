"""
Weighted-residual estimator

    eta(T)^2 = diam(Gamma) |T^|^(1/2) * integral over T of |grad_Gamma I(f - V Phi)|^2

where I interpolates the residual by a tensor polynomial of degree D on
Chebyshev nodes of the parameter element T^, and the integral uses tensor Gauss
of order D + 1.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev

from isobem.bem.assembly import SurfaceFunction
from isobem.bem.panels import Panel
from isobem.bem.potentials import Targets, single_layer_potential
from isobem.bem.quadrature import QuadConfig
from isobem.bem.sampling import sample_panel
from isobem.bem.system import Density
from isobem.geometry.geometry import BoundaryGeometry, surface_gradient_sq_from_jacobian
from isobem.mesh.hier_mesh import Element, MultiPatchMesh
from isobem.splines.hier_basis import SplineSpace
from isobem.splines.spline_kernel import gauss_rule, tensor_rule
from isobem.utils.errors import MeshError
from isobem.utils.logging_utils import get_logger
from isobem.utils.run_utils import parallel_map

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class EstimatorReport:
    elements: tuple[Element, ...]
    indicators: np.ndarray  # eta(T) >= 0, element order

    @property
    def squared(self) -> np.ndarray:
        return self.indicators**2

    @property
    def total(self) -> float:
        return float(np.sqrt(np.sum(self.squared)))

    def __len__(self):
        return len(self.elements)

    def of(self, elem: Element) -> float:
        return float(self.indicators[self.elements.index(elem)])


# region Chebyshev interpolation
@lru_cache(maxsize=None)
def chebyshev_nodes(degree: int) -> np.ndarray:
    """First-kind nodes on [-1, 1], ascending"""
    k = np.arange(degree + 1)
    return np.sort(np.cos((2 * k + 1) * np.pi / (2 * (degree + 1))))


@lru_cache(maxsize=None)
def interpolation_operators(degree: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Matrices mapping nodal values (degree+1) to values and d/dxi at Gauss points
    (order), both on [-1, 1].
    """
    nodes = chebyshev_nodes(degree)
    vander = chebyshev.chebvander(nodes, degree)
    to_coeffs = np.linalg.inv(vander)
    xi = 2.0 * gauss_rule(order).nodes - 1.0
    values = chebyshev.chebvander(xi, degree)
    derivs = np.column_stack(
        [chebyshev.chebval(xi, chebyshev.chebder(np.eye(degree + 1)[j])) for j in range(degree + 1)]
    )
    return values @ to_coeffs, derivs @ to_coeffs


def node_params(mesh: MultiPatchMesh, elem: Element, degree: int) -> np.ndarray:
    """Tensor Chebyshev nodes of the element's parameter box, direction 1 fastest"""
    (u0, u1), (v0, v1) = mesh.param_box(elem)
    s = 0.5 * (chebyshev_nodes(degree) + 1.0)
    u, v = np.meshgrid(u0 + (u1 - u0) * s, v0 + (v1 - v0) * s, indexing="ij")
    return np.column_stack([u.ravel(), v.ravel()])


# endregion Chebyshev interpolation


def _element_indicator(geom, mesh, elem, nodal: np.ndarray, degree: int, diameter: float) -> float:
    order = degree + 1
    ev, ed = interpolation_operators(degree, order)
    (u0, u1), (v0, v1) = mesh.param_box(elem)
    r = nodal.reshape(degree + 1, degree + 1)
    du = (ed @ r @ ev.T) * (2.0 / (u1 - u0))
    dv = (ev @ r @ ed.T) * (2.0 / (v1 - v0))
    grad = np.column_stack([du.ravel(), dv.ravel()])
    ref, w = tensor_rule(order)
    s = sample_panel(geom, Panel.of(mesh, elem), ref)
    integral = float(np.sum(w * s.ds * surface_gradient_sq_from_jacobian(s.jac, grad)))
    area = (u1 - u0) * (v1 - v0)
    return np.sqrt(max(diameter * np.sqrt(area) * integral, 0.0))


def residual_at_nodes(
    geom: BoundaryGeometry,
    space: SplineSpace,
    solution: Density,
    f: SurfaceFunction,
    degree: int,
    q: QuadConfig,
) -> np.ndarray:
    """(n_elements, (degree+1)^2) values of f - V Phi at the Chebyshev nodes"""
    mesh = space.mesh
    m = (degree + 1) ** 2
    parts = []
    for elem in mesh.elements:
        parts.append(Targets.on_surface(geom, elem.patch, node_params(mesh, elem, degree)))
    if not parts:
        return np.zeros((0, m))
    targets = Targets.concat(parts)
    v_phi = single_layer_potential(geom, space, solution.coeffs, targets, q)
    f_vals = np.zeros(len(targets))
    for patch in np.unique(targets.patches):
        sel = targets.patches == patch
        f_vals[sel] = f(int(patch), targets.params[sel], targets.points[sel])
    return (f_vals - v_phi).reshape(mesh.n_elements, m)


def estimate(
    geom: BoundaryGeometry,
    mesh: MultiPatchMesh,
    space: SplineSpace,
    solution: Density,
    f: SurfaceFunction,
    q: QuadConfig = QuadConfig(),
    workers: int = None,
) -> EstimatorReport:
    if space.mesh != mesh:
        raise MeshError("Estimator mesh differs from the mesh of the discrete space")
    p = max(max(pm.space.degrees) for pm in mesh.patches)
    degree = q.residual_degree(p)
    residual = residual_at_nodes(geom, space, solution, f, degree, q)
    diameter = geom.diameter

    def indicator(i):
        return _element_indicator(geom, mesh, mesh.elements[i], residual[i], degree, diameter)

    indicators = np.array(parallel_map(indicator, range(mesh.n_elements), workers))
    report = EstimatorReport(mesh.elements, indicators)
    logger.debug(f"Estimator on {mesh.n_elements} elements: eta = {report.total:.6e}")
    return report

"""Quadrature samples of panels and whole meshes on the boundary"""

from dataclasses import dataclass

import numpy as np

from isobem.bem.panels import IDENTITY, Panel
from isobem.geometry.geometry import BoundaryGeometry, gram_from_jacobian, normals_from_jacobian
from isobem.mesh.hier_mesh import Element, MultiPatchMesh
from isobem.splines.spline_kernel import tensor_rule


@dataclass(frozen=True)
class PanelSample:
    t: np.ndarray  # (n, 2) patch parameters
    x: np.ndarray  # (n, 3)
    jac: np.ndarray  # (n, 3, 2)
    ds: np.ndarray  # (n,) surface measure per unit reference weight

    def normals(self, geom: BoundaryGeometry, patch: int) -> np.ndarray:
        return normals_from_jacobian(self.jac, geom.patches[patch].orientation)


def sample_panel(geom: BoundaryGeometry, panel: Panel, ref: np.ndarray, symmetry=IDENTITY) -> PanelSample:
    t = panel.to_param(ref, symmetry)
    x, jac = geom.derivatives(panel.patch, t)
    ds = np.sqrt(gram_from_jacobian(jac)) * panel.param_area
    return PanelSample(t, x, jac, ds)


@dataclass(frozen=True)
class SurfaceSamples:
    """Tensor Gauss samples of every element, concatenated in element order"""

    elements: tuple[Element, ...]
    params: np.ndarray  # (N, 2)
    points: np.ndarray  # (N, 3)
    weights: np.ndarray  # (N,) Gauss weight times surface measure
    normals: np.ndarray  # (N, 3)
    owner: np.ndarray  # (N,) element index
    offsets: np.ndarray  # (n_elements + 1,)

    def of_element(self, i: int) -> slice:
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    def __len__(self):
        return len(self.weights)


def sample_elements(geom: BoundaryGeometry, mesh: MultiPatchMesh, order: int) -> SurfaceSamples:
    ref, w = tensor_rule(order)
    params, points, weights, normals = [], [], [], []
    for elem in mesh.elements:
        s = sample_panel(geom, Panel.of(mesh, elem), ref)
        params.append(s.t)
        points.append(s.x)
        weights.append(w * s.ds)
        normals.append(s.normals(geom, elem.patch))
    m = len(w)
    n = mesh.n_elements
    return SurfaceSamples(
        elements=mesh.elements,
        params=np.vstack(params) if n else np.zeros((0, 2)),
        points=np.vstack(points) if n else np.zeros((0, 3)),
        weights=np.concatenate(weights) if n else np.zeros(0),
        normals=np.vstack(normals) if n else np.zeros((0, 3)),
        owner=np.repeat(np.arange(n), m),
        offsets=np.arange(n + 1) * m,
    )

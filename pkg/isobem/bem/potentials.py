"""
Single- and double-layer potentials at batches of points.

For each target the boundary splits into
- the far field: Gauss samples of all elements, vectorised in chunks,
- near elements: quadtree subdivision of the element until every sub-square is
  well separated from the target (bounded depth), Gauss order n_sing,
- elements containing the target (on-surface targets): four Duffy triangles
  around the target's parameter point.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from isobem.bem.kernels import layer_kernel
from isobem.bem.panels import Panel, panel_centres_and_radii
from isobem.bem.quadrature import QuadConfig, point_duffy_points
from isobem.bem.sampling import PanelSample, sample_elements, sample_panel
from isobem.geometry.geometry import BoundaryGeometry
from isobem.mesh.hier_mesh import Element, MultiPatchMesh
from isobem.splines.spline_kernel import tensor_rule
from isobem.utils.errors import QuadratureError
from isobem.utils.logging_utils import get_logger
from isobem.utils.run_utils import chunked, parallel_map
from isobem.utils.settings import get_settings

logger = get_logger(__name__)

MAX_NEAR_LEVEL = 5
EDGE_TOL = 1e-12

# density on an element: (element, t (n,2), x (n,3)) -> (n,)
ElementDensity = Callable[[Element, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Targets:
    points: np.ndarray  # (n, 3)
    patches: np.ndarray  # (n,) patch of an on-surface target, -1 otherwise
    params: np.ndarray  # (n, 2), meaningless off the surface

    @classmethod
    def on_surface(cls, geom: BoundaryGeometry, patch: int, t) -> "Targets":
        t = np.atleast_2d(np.asarray(t, dtype=float))
        return cls(geom.evaluate(patch, t), np.full(len(t), patch), t)

    @classmethod
    def off_surface(cls, x) -> "Targets":
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return cls(x, np.full(len(x), -1), np.zeros((len(x), 2)))

    @classmethod
    def concat(cls, parts: list["Targets"]) -> "Targets":
        return cls(
            np.vstack([p.points for p in parts]),
            np.concatenate([p.patches for p in parts]),
            np.vstack([p.params for p in parts]),
        )

    def __len__(self):
        return len(self.points)


def _containing_elements(mesh: MultiPatchMesh, patch: int, t: np.ndarray) -> list[Element]:
    """Active elements of the patch whose closed parameter box holds t"""
    elem = mesh.locate(patch, t)
    found = [elem]
    for other in mesh.in_patch_contacts(elem):
        (u0, u1), (v0, v1) = mesh.param_box(other)
        if u0 - EDGE_TOL <= t[0] <= u1 + EDGE_TOL and v0 - EDGE_TOL <= t[1] <= v1 + EDGE_TOL:
            found.append(other)
    return found


def on_patch_boundary(t: np.ndarray) -> bool:
    return bool(np.any(t <= EDGE_TOL) or np.any(t >= 1.0 - EDGE_TOL))


class LayerPotential:
    """Single- or double-layer potential of a fixed density, reusable for many target batches"""

    def __init__(
        self,
        geom: BoundaryGeometry,
        mesh: MultiPatchMesh,
        density: ElementDensity,
        double: bool,
        q: QuadConfig,
    ):
        self.geom = geom
        self.mesh = mesh
        self.density = density
        self.double = double
        self.q = q
        self.samples = sample_elements(geom, mesh, q.n_reg)
        self.source = np.zeros(len(self.samples))
        for i, elem in enumerate(mesh.elements):
            sl = self.samples.of_element(i)
            self.source[sl] = density(elem, self.samples.params[sl], self.samples.points[sl])
        self.source *= self.samples.weights
        self.centres, self.radii = panel_centres_and_radii(geom, mesh)

    # region Pieces
    def _normals(self, sample: PanelSample, patch: int):
        return sample.normals(self.geom, patch) if self.double else None

    def _panel_values(self, elem: Element, panel: Panel, ref, weights):
        s = sample_panel(self.geom, panel, ref)
        return s, weights * s.ds * self.density(elem, s.t, s.x)

    def near_element(self, elem: Element, x: np.ndarray) -> np.ndarray:
        """Quadtree integration over one element for targets x (m, 3)"""
        ref, w = tensor_rule(self.q.n_sing)
        out = np.zeros(len(x))
        stack = [(Panel.of(self.mesh, elem), np.arange(len(x)), 0)]
        while stack:
            panel, idx, level = stack.pop()
            s, dens = self._panel_values(elem, panel, ref, w)
            centre = s.x.mean(axis=0)
            radius = float(np.linalg.norm(s.x - centre, axis=1).max()) * 1.5
            gap = np.linalg.norm(x[idx] - centre, axis=1) - radius
            done = (gap >= self.q.rho_near * 2.0 * radius) | (level >= MAX_NEAR_LEVEL)
            if np.any(done):
                k = layer_kernel(x[idx[done]], s.x, self._normals(s, elem.patch))
                out[idx[done]] += k @ dens
            rest = idx[~done]
            if len(rest):
                stack.extend((child, rest, level + 1) for child in panel.children())
        return out

    def containing_element(self, elem: Element, x: np.ndarray, t: np.ndarray) -> float:
        panel = Panel.of(self.mesh, elem)
        (u0, u1), (v0, v1) = panel.param
        apex = np.clip([(t[0] - u0) / (u1 - u0), (t[1] - v0) / (v1 - v0)], 0.0, 1.0)
        ref, w = point_duffy_points(apex, self.q.n_sing)
        s, dens = self._panel_values(elem, panel, ref, w)
        k = layer_kernel(x[None, :], s.x, self._normals(s, elem.patch))
        return float(k[0] @ dens)

    # endregion Pieces

    def __call__(self, targets: Targets, workers: int = None) -> np.ndarray:
        n_t, n_e = len(targets), self.mesh.n_elements
        index = self.mesh.element_index
        # element indices handled outside the far field, per target
        special: list[dict[int, bool]] = [dict() for _ in range(n_t)]  # elem -> contains target
        for n in range(n_t):
            m = int(targets.patches[n])
            if m < 0:
                continue
            if self.double and on_patch_boundary(targets.params[n]):
                raise QuadratureError(
                    f"Double-layer evaluation on an edge of the boundary (patch {m}, t={targets.params[n]})"
                )
            for elem in _containing_elements(self.mesh, m, targets.params[n]):
                special[n][index[elem]] = True
        if n_e:
            reach = self.radii.max() * (1.0 + 2.0 * self.q.rho_near)
            tree = cKDTree(self.centres)
            for n, cand in enumerate(tree.query_ball_point(targets.points, reach)):
                gap = np.linalg.norm(self.centres[cand] - targets.points[n], axis=1) - self.radii[cand]
                for e, g in zip(cand, gap):
                    if g < self.q.rho_near * 2.0 * self.radii[e]:
                        special[n].setdefault(e, False)

        values = np.zeros(n_t)
        normals = self.samples.normals if self.double else None
        for sl in chunked(n_t, get_settings().chunk_size):
            k = layer_kernel(targets.points[sl], self.samples.points, normals)
            mask = np.zeros((sl.stop - sl.start, n_e), dtype=bool)
            for row, n in enumerate(range(sl.start, sl.stop)):
                mask[row, list(special[n])] = True
            k[mask[:, self.samples.owner]] = 0.0
            values[sl] = k @ self.source

        by_element: dict[int, list[int]] = {}
        duffy: list[tuple[int, int]] = []
        for n, elems in enumerate(special):
            for e, contains in elems.items():
                if contains:
                    duffy.append((n, e))
                else:
                    by_element.setdefault(e, []).append(n)

        def near(item):
            e, idx = item
            return self.near_element(self.mesh.elements[e], targets.points[idx])

        near_items = sorted(by_element.items())
        for (e, idx), vals in zip(near_items, parallel_map(near, near_items, workers)):
            values[idx] += vals

        def singular(item):
            n, e = item
            return self.containing_element(self.mesh.elements[e], targets.points[n], targets.params[n])

        for (n, e), val in zip(duffy, parallel_map(singular, duffy, workers)):
            values[n] += val
        logger.debug(
            f"Potential at {n_t} targets: {sum(len(v) for v in by_element.values())} near pairs, "
            f"{len(duffy)} singular pairs"
        )
        return values


def density_from_coefficients(space, coeffs: np.ndarray) -> ElementDensity:
    coeffs = np.asarray(coeffs, dtype=float)

    def density(elem: Element, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        eb = space.element_basis(elem)
        return eb.values(t) @ coeffs[eb.dofs]

    return density


def density_from_surface_function(f) -> ElementDensity:
    return lambda elem, t, x: np.asarray(f(elem.patch, t, x), dtype=float)


def single_layer_potential(
    geom: BoundaryGeometry, space, coeffs: np.ndarray, targets: Targets, q: QuadConfig = QuadConfig()
) -> np.ndarray:
    """(V Phi)(x) for Phi = sum_i coeffs_i Psi_i"""
    evaluator = LayerPotential(geom, space.mesh, density_from_coefficients(space, coeffs), False, q)
    return evaluator(targets)


def double_layer_potential(
    geom: BoundaryGeometry, mesh: MultiPatchMesh, g, targets: Targets, q: QuadConfig = QuadConfig()
) -> np.ndarray:
    """(K g)(x) = integral of g(y) d/dnu(y) G(x - y); g(patch, t, x) on the boundary"""
    evaluator = LayerPotential(geom, mesh, density_from_surface_function(g), True, q)
    return evaluator(targets)


def eval_single_layer(geom: BoundaryGeometry, density, patch: int, t, q: QuadConfig = QuadConfig()) -> float:
    """(V Phi)(x) at the boundary point x = gamma_patch(t); density is a Density"""
    targets = Targets.on_surface(geom, patch, t)
    return float(single_layer_potential(geom, density.space, density.coeffs, targets, q)[0])


def eval_double_layer(
    geom: BoundaryGeometry, mesh: MultiPatchMesh, g, patch: int, t, q: QuadConfig = QuadConfig()
) -> float:
    """(K g)(x) at a smooth boundary point x = gamma_patch(t), t inside the patch"""
    targets = Targets.on_surface(geom, patch, t)
    return float(double_layer_potential(geom, mesh, g, targets, q)[0])

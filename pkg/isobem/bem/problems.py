"""Right-hand sides of the model problems"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from isobem.bem.kernels import kernel, kernel_gradient_x
from isobem.bem.potentials import LayerPotential, Targets, density_from_surface_function
from isobem.bem.quadrature import QuadConfig
from isobem.geometry.geometry import BoundaryGeometry
from isobem.mesh.hier_mesh import MultiPatchMesh

# source of the shifted fundamental solution, inside the hole of the quarter pipe
PIPE_SOURCE = 0.1 * np.array([0.95 * 2 ** (-1.5), 0.95 * 2 ** (-1.5), 0.5])


def constant_rhs(value: float = 1.0):
    def f(patch: int, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        return np.full(len(t), value)

    return f


@dataclass(frozen=True)
class ShiftedFundamentalSolution:
    """u(x) = G(x - y0), harmonic away from y0"""

    source: np.ndarray = field(default_factory=lambda: PIPE_SOURCE.copy())

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return kernel(np.atleast_2d(x) - self.source)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return kernel_gradient_x(np.atleast_2d(x) - self.source)

    def trace(self, patch: int, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self(x)

    def conormal(self, geom: BoundaryGeometry):
        """phi = du/dnu on the boundary, as a function (patch, t, x)"""

        def phi(patch: int, t: np.ndarray, x: np.ndarray) -> np.ndarray:
            normals = geom.normals(patch, t)
            return np.einsum("ij,ij->i", self.gradient(x), normals)

        return phi


@dataclass(frozen=True, eq=False)
class TraceRhs:
    """f = (K + 1/2) g for Dirichlet data g, with K integrated on the given mesh"""

    geom: BoundaryGeometry
    mesh: MultiPatchMesh
    g: object  # (patch, t, x) -> values
    q: QuadConfig = QuadConfig()

    @cached_property
    def double_layer(self) -> LayerPotential:
        return LayerPotential(self.geom, self.mesh, density_from_surface_function(self.g), True, self.q)

    def __call__(self, patch: int, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        targets = Targets(np.atleast_2d(x), np.full(len(t), patch), np.atleast_2d(t))
        kg = self.double_layer(targets)
        return kg + 0.5 * self.g(patch, t, x)


def rhs_factory(geom: BoundaryGeometry, q: QuadConfig = QuadConfig()):
    """mesh -> right-hand side f for the built-in fixtures: 1 on the cube, (K + 1/2)u on the pipe"""
    if geom.name == "quarter_pipe":
        u = ShiftedFundamentalSolution()
        return lambda mesh: TraceRhs(geom, mesh, u.trace, q)
    return lambda mesh: constant_rhs(1.0)

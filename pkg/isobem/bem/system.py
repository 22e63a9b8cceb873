from dataclasses import dataclass

import numpy as np
import scipy.linalg

from isobem.bem.assembly import SurfaceFunction, assemble, assemble_rhs
from isobem.bem.quadrature import QuadConfig
from isobem.geometry.geometry import BoundaryGeometry
from isobem.splines.hier_basis import SplineSpace
from isobem.utils.errors import NotSPDError
from isobem.utils.logging_utils import get_logger
from isobem.utils.read_write import dump_matrix

logger = get_logger(__name__)

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GalerkinSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    space: SplineSpace = None

    def __post_init__(self):
        n = len(self.rhs)
        if self.matrix.shape != (n, n):
            raise ValueError(f"Matrix shape {self.matrix.shape} does not match load vector of length {n}")

    @property
    def size(self) -> int:
        return len(self.rhs)

    def energy_sq(self, coeffs: np.ndarray) -> float:
        """Vc.c"""
        return float(coeffs @ (self.matrix @ coeffs))

    def asymmetry(self) -> float:
        if not self.size:
            return 0.0
        return float(np.abs(self.matrix - self.matrix.T).max() / max(np.abs(self.matrix).max(), 1e-300))

    def dump(self, path):
        dump_matrix(self.matrix, path)


@dataclass(frozen=True, eq=False)
class Density:
    space: SplineSpace
    coeffs: np.ndarray

    def __post_init__(self):
        if self.space is not None and len(self.coeffs) != self.space.dimension:
            raise ValueError(
                f"Density has {len(self.coeffs)} coefficients, space dimension is {self.space.dimension}"
            )

    def evaluate(self, patch: int, t) -> np.ndarray:
        return self.space.evaluate(self.coeffs, patch, t)


def build_system(
    geom: BoundaryGeometry, space: SplineSpace, f: SurfaceFunction, q: QuadConfig = QuadConfig()
) -> GalerkinSystem:
    matrix = assemble(geom, space.mesh, space, q)
    rhs = assemble_rhs(geom, space.mesh, space, f, q)
    return GalerkinSystem(matrix, rhs, space)


def solve(system: GalerkinSystem) -> Density:
    """Cholesky solve of the SPD Galerkin system"""
    if system.size == 0:
        return Density(system.space, np.zeros(0))
    try:
        factor = scipy.linalg.cho_factor(system.matrix, lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NotSPDError(f"Galerkin matrix is not positive definite: {e}") from e
    coeffs = scipy.linalg.cho_solve(factor, system.rhs)
    norm_b = np.linalg.norm(system.rhs)
    residual = np.linalg.norm(system.matrix @ coeffs - system.rhs)
    if norm_b > 0 and residual > RESIDUAL_TOL * norm_b:
        # one step of iterative refinement
        coeffs = coeffs + scipy.linalg.cho_solve(factor, system.rhs - system.matrix @ coeffs)
        residual = np.linalg.norm(system.matrix @ coeffs - system.rhs)
        if residual > RESIDUAL_TOL * norm_b:
            logger.warning(f"Cholesky residual {residual / norm_b:.3e} above {RESIDUAL_TOL}")
    logger.debug(f"Solved {system.size} dofs, relative residual {residual / max(norm_b, 1e-300):.2e}")
    return Density(system.space, coeffs)

"""
Adaptive loop: solve -> estimate -> mark -> refine

Each iteration records the mesh size, the estimator and the discrete energy Vc.c.
After the loop the energies are Aitken-extrapolated to an energy limit, which
gives the energy-error column.
"""

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from isobem.adaptivity.estimator import EstimatorReport, estimate
from isobem.adaptivity.extrapolation import aitken_limit, energy_error_from_energy
from isobem.adaptivity.marking import doerfler_mark
from isobem.bem.assembly import SurfaceFunction
from isobem.bem.problems import rhs_factory
from isobem.bem.quadrature import QuadConfig
from isobem.bem.system import Density, build_system, solve
from isobem.geometry.geometry import BoundaryGeometry
from isobem.mesh.hier_mesh import MultiPatchMesh, initial_mesh_for, refine, uniform_refine
from isobem.splines.hier_basis import build_basis
from isobem.utils.errors import ConfigError, ExtrapolationError
from isobem.utils.logging_utils import get_logger
from isobem.utils.main import cast_enum

logger = get_logger(__name__)

CSV_HEADER = ["ell", "num_elements", "dofs", "estimator", "energy_error", "num_marked", "seconds"]


class RefinementMode(Enum):
    UNIFORM = "uniform"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class LoopSettings:
    theta: float = 0.5
    mode: RefinementMode = RefinementMode.ADAPTIVE
    budget: int = 2500
    tolerance: float = 1e-10
    quad: QuadConfig = QuadConfig()
    timings: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", cast_enum(self.mode, RefinementMode))
        if not 0.0 < self.theta <= 1.0:
            raise ConfigError(f"theta must be in (0, 1], got {self.theta}")
        if self.budget < 1:
            raise ConfigError(f"Element budget must be positive, got {self.budget}")
        if self.tolerance < 0.0:
            raise ConfigError(f"Estimator tolerance must be non-negative, got {self.tolerance}")


@dataclass(frozen=True, eq=False)
class AdaptiveProblem:
    geom: BoundaryGeometry
    p: int
    knot_multiplicity: int = 1
    initial_refinements: int = 0
    # mesh -> right-hand side on that mesh; the fixture default when None
    rhs: Optional[Callable[[MultiPatchMesh], SurfaceFunction]] = None

    def __post_init__(self):
        if self.p < 0:
            raise ConfigError(f"Degree must be non-negative, got {self.p}")
        if self.knot_multiplicity < 1 or self.knot_multiplicity > self.p + 1:
            raise ConfigError(f"Knot multiplicity must be in 1..p+1, got {self.knot_multiplicity}")
        if self.initial_refinements < 0:
            raise ConfigError(f"Initial refinements must be non-negative, got {self.initial_refinements}")

    def initial_mesh(self) -> MultiPatchMesh:
        mesh = initial_mesh_for(self.geom, self.p, refine_multiplicity=self.knot_multiplicity)
        for _ in range(self.initial_refinements):
            mesh = uniform_refine(mesh)
        return mesh

    def rhs_for(self, mesh: MultiPatchMesh, q: QuadConfig) -> SurfaceFunction:
        factory = self.rhs or rhs_factory(self.geom, q)
        return factory(mesh)


@dataclass
class TraceRow:
    ell: int
    num_elements: int
    dofs: int
    estimator: float
    energy_sq: float
    num_marked: int
    seconds: Optional[float] = None
    energy_error: Optional[float] = None

    def as_csv(self) -> dict:
        return {
            "ell": self.ell,
            "num_elements": self.num_elements,
            "dofs": self.dofs,
            "estimator": repr(self.estimator),
            "energy_error": None if self.energy_error is None else repr(self.energy_error),
            "num_marked": self.num_marked,
            "seconds": None if self.seconds is None else f"{self.seconds:.3f}",
        }


@dataclass
class AdaptiveTrace:
    rows_: list[TraceRow] = field(default_factory=list)
    final_mesh: Optional[MultiPatchMesh] = None
    final_solution: Optional[Density] = None
    final_report: Optional[EstimatorReport] = None
    energy_limit: Optional[float] = None

    def __len__(self):
        return len(self.rows_)

    def append(self, row: TraceRow):
        self.rows_.append(row)

    @property
    def num_elements(self) -> list[int]:
        return [r.num_elements for r in self.rows_]

    @property
    def estimators(self) -> list[float]:
        return [r.estimator for r in self.rows_]

    @property
    def energies(self) -> list[float]:
        return [r.energy_sq for r in self.rows_]

    @property
    def energy_errors(self) -> list[Optional[float]]:
        return [r.energy_error for r in self.rows_]

    def finalize(self) -> "AdaptiveTrace":
        """Aitken limit of the energies and the energy error of every row; left empty on failure"""
        try:
            limit = aitken_limit(self.energies)
            errors = [energy_error_from_energy(e, limit) for e in self.energies]
        except ExtrapolationError as e:
            logger.warning(f"Energy error not available: {e}")
            return self
        self.energy_limit = limit
        for row, err in zip(self.rows_, errors):
            row.energy_error = err
        return self

    def rows(self) -> list[dict]:
        return [r.as_csv() for r in self.rows_]


def _mark(mesh: MultiPatchMesh, report: EstimatorReport, settings: LoopSettings):
    if settings.mode == RefinementMode.UNIFORM:
        return set(mesh.elements)
    return doerfler_mark(report, settings.theta)


def adaptive_loop(problem: AdaptiveProblem, settings: LoopSettings = LoopSettings()) -> AdaptiveTrace:
    q = settings.quad
    mesh = problem.initial_mesh()
    trace = AdaptiveTrace()
    ell = 0
    logger.info(
        f"Adaptive loop on {problem.geom.name}: p={problem.p}, mode={settings.mode.value}, "
        f"theta={settings.theta}, budget={settings.budget}"
    )
    while True:
        start = time.perf_counter()
        space = build_basis(mesh)
        f = problem.rhs_for(mesh, q)
        system = build_system(problem.geom, space, f, q)
        solution = solve(system)
        report = estimate(problem.geom, mesh, space, solution, f, q)
        eta = report.total
        converged = eta < settings.tolerance
        marked = set() if converged else _mark(mesh, report, settings)
        refined = refine(mesh, marked) if marked else mesh
        seconds = time.perf_counter() - start if settings.timings else None
        trace.append(
            TraceRow(
                ell=ell,
                num_elements=mesh.n_elements,
                dofs=space.dimension,
                estimator=eta,
                energy_sq=system.energy_sq(solution.coeffs),
                num_marked=len(marked),
                seconds=seconds,
            )
        )
        logger.info(
            f"ell={ell}: {mesh.n_elements} elements up to level {mesh.max_level}, {space.dimension} dofs, "
            f"eta={eta:.6e}, marked {len(marked)}"
        )
        trace.final_mesh, trace.final_solution, trace.final_report = mesh, solution, report
        if converged:
            logger.info(f"Estimator below tolerance {settings.tolerance:g}, stopping")
            break
        if refined.n_elements > settings.budget:
            logger.info(f"Next mesh has {refined.n_elements} > {settings.budget} elements, stopping")
            break
        if refined.n_elements <= mesh.n_elements:
            # nothing marked with positive indicator
            logger.warning("Refinement did not add elements, stopping")
            break
        mesh = refined
        ell += 1
    return trace.finalize()

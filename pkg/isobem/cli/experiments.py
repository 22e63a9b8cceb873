"""Experiment drivers: an adaptive or uniform run from a RunConfig, CSV and rate summary"""

from dataclasses import dataclass
from typing import Optional

from isobem.adaptivity.loop import CSV_HEADER, AdaptiveTrace, adaptive_loop
from isobem.adaptivity.rates import fit_error_rate, fit_rate
from isobem.cli.config import RunConfig
from isobem.mesh.hier_mesh import dump_mesh, uniform_refine
from isobem.utils.logging_utils import get_logger
from isobem.utils.main import Pathlike
from isobem.utils.read_write import dump_csv

logger = get_logger(__name__)


@dataclass
class RunSummary:
    trace: AdaptiveTrace
    estimator_rate: Optional[float] = None
    error_rate: Optional[float] = None

    def lines(self) -> list[str]:
        last = self.trace.rows_[-1]
        out = [
            f"iterations: {len(self.trace)}, final #T = {last.num_elements}, dofs = {last.dofs}",
            f"final estimator: {last.estimator:.6e}",
        ]
        if self.estimator_rate is not None:
            out.append(f"estimator rate: {self.estimator_rate:+.3f}")
        if self.error_rate is not None:
            out.append(f"energy error rate: {self.error_rate:+.3f}")
        elif last.energy_error is None:
            out.append("energy error: not available")
        return out


def _rate_or_none(fn, *args) -> Optional[float]:
    try:
        return fn(*args)
    except ValueError as e:
        logger.debug(f"No rate: {e}")
        return None


def run_experiment(config: RunConfig) -> RunSummary:
    problem = config.problem()
    trace = adaptive_loop(problem, config.loop_settings())
    if config.output is not None:
        dump_csv(trace.rows(), config.output, CSV_HEADER)
        logger.info(f"Wrote {len(trace)} rows to {config.output}")
    window = min(config.rate_window, len(trace))
    summary = RunSummary(trace)
    if window >= 2:
        summary.estimator_rate = _rate_or_none(fit_rate, trace, window)
        summary.error_rate = _rate_or_none(fit_error_rate, trace, window)
    return summary


def mesh_dump(config: RunConfig, steps: int, output: Pathlike):
    """Mesh snapshot after `steps` uniform refinements of the initial mesh"""
    mesh = config.problem().initial_mesh()
    for _ in range(steps):
        mesh = uniform_refine(mesh)
    dump_mesh(mesh, output)
    logger.info(f"Wrote mesh with {mesh.n_elements} elements to {output}")
    return mesh

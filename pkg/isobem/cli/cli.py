"""
isobem command line

    isobem run GEOMETRY [--p 0 --mode adaptive --theta 0.5 --budget 2500 --output run.csv ...]
    isobem check SUITE [--seed 0]
    isobem mesh-dump GEOMETRY [--p 0 --steps 2 --output mesh.txt]

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from functools import wraps
from pathlib import Path
from typing import Optional

import typer

from isobem.adaptivity.loop import RefinementMode
from isobem.cli.checks import SUITES, run_check
from isobem.cli.config import RunConfig
from isobem.cli.experiments import mesh_dump, run_experiment
from isobem.utils.errors import ConfigError, MeshError, NumericalError
from isobem.utils.logging_utils import configure_logger, get_logger
from isobem.utils.settings import get_settings
from isobem.utils.unsorted import load_global_env

logger = get_logger(__name__)

EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

app = typer.Typer(add_completion=False, help="Adaptive isogeometric BEM for the 3D Laplace single-layer equation")


@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging")):
    load_global_env()
    settings = get_settings()
    configure_logger("DEBUG" if verbose else settings.log_level, settings.log_file)


def exit_codes(func):
    """Map library errors to the documented exit codes"""

    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ConfigError, MeshError) as e:
            logger.error(str(e))
            raise typer.Exit(EXIT_CONFIG)
        except NumericalError as e:
            logger.error(f"Numerical failure: {e}")
            raise typer.Exit(EXIT_NUMERICAL)

    return wrapper


@app.command()
@exit_codes
def run(
    geometry: Optional[str] = typer.Argument(None, help="cube | quarter_pipe | plate"),
    config: Optional[Path] = typer.Option(None, help="Flat JSON file with RunConfig fields"),
    geometry_file: Optional[Path] = typer.Option(None, help="JSON geometry instead of a fixture"),
    p: Optional[int] = typer.Option(None, help="Spline degree 0, 1 or 2"),
    mode: Optional[RefinementMode] = typer.Option(None, help="adaptive or uniform"),
    theta: Optional[float] = typer.Option(None, help="Doerfler parameter in (0, 1]"),
    budget: Optional[int] = typer.Option(None, help="Stop before the mesh exceeds this many elements"),
    tolerance: Optional[float] = typer.Option(None, help="Stop when the estimator drops below"),
    n_reg: Optional[int] = typer.Option(None, help="Gauss order for well-separated pairs"),
    n_sing: Optional[int] = typer.Option(None, help="Gauss order for singular and near pairs"),
    rho_near: Optional[float] = typer.Option(None, help="Near-field distance ratio"),
    interp_degree: Optional[int] = typer.Option(None, help="Residual interpolation degree (p + 2)"),
    knot_multiplicity: Optional[int] = typer.Option(None, help="Multiplicity of inserted knots"),
    initial_refinements: Optional[int] = typer.Option(None, help="Uniform steps before the loop"),
    output: Optional[Path] = typer.Option(None, help="CSV output path"),
    seed: Optional[int] = typer.Option(None),
    timings: Optional[bool] = typer.Option(None, help="Record wall time per iteration"),
    rate_window: Optional[int] = typer.Option(None, help="Points used for the fitted rates"),
):
    """Adaptive or uniform refinement loop; writes the convergence table as CSV"""
    cfg = RunConfig.from_json(
        config,
        geometry=geometry,
        geometry_file=None if geometry_file is None else str(geometry_file),
        p=p,
        mode=mode,
        theta=theta,
        budget=budget,
        tolerance=tolerance,
        n_reg=n_reg,
        n_sing=n_sing,
        rho_near=rho_near,
        interp_degree=interp_degree,
        knot_multiplicity=knot_multiplicity,
        initial_refinements=initial_refinements,
        output=None if output is None else str(output),
        seed=seed,
        timings=timings,
        rate_window=rate_window,
    )
    summary = run_experiment(cfg)
    for line in summary.lines():
        typer.echo(line)


@app.command()
@exit_codes
def check(
    suite: str = typer.Argument(..., help=f"One of: {', '.join(SUITES)}"),
    seed: int = typer.Option(0, help="Seed of the random meshes and vectors"),
):
    """Run a property suite; exit code 2 when a property fails"""
    if suite not in SUITES:
        raise ConfigError(f"Unknown check suite {suite!r}, expected one of {list(SUITES)}")
    report = run_check(suite, seed)
    for line in report.lines:
        typer.echo(line)
    typer.echo(f"{report.name}: {'PASS' if report.passed else 'FAIL'}")
    if not report.passed:
        raise typer.Exit(EXIT_NUMERICAL)


@app.command("mesh-dump")
@exit_codes
def mesh_dump_command(
    geometry: str = typer.Argument("cube"),
    p: int = typer.Option(0),
    steps: int = typer.Option(0, help="Uniform refinements of the initial mesh"),
    output: Path = typer.Option(Path("mesh.txt")),
):
    """Write the active elements as `patch level i1 i2` lines"""
    if steps < 0:
        raise ConfigError(f"steps must be non-negative, got {steps}")
    cfg = RunConfig.build(geometry=geometry, p=p)
    mesh = mesh_dump(cfg, steps, output)
    typer.echo(f"{mesh.n_elements} elements written to {output}")


if __name__ == "__main__":
    app()

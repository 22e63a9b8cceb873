from .config import RunConfig
from .checks import SUITES, CheckReport, run_check
from .experiments import RunSummary, mesh_dump, run_experiment
from .cli import app

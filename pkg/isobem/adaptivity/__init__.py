from .estimator import EstimatorReport, estimate
from .marking import doerfler_count, doerfler_mark
from .extrapolation import aitken_limit, energy_error
from .loop import (
    CSV_HEADER,
    AdaptiveProblem,
    AdaptiveTrace,
    LoopSettings,
    RefinementMode,
    TraceRow,
    adaptive_loop,
)
from .rates import compare_curves, fit_error_rate, fit_rate

"""Aitken extrapolation of the energy sequence and the resulting energy error"""

from typing import Sequence

import numpy as np

from isobem.bem.system import Density, GalerkinSystem
from isobem.utils.errors import ExtrapolationError

# denominators up to this fraction of |a_{n+2}| count as zero
DEGENERATE_TOL = 1e-14
# allowed negative energy difference, relative to the limit
CONSISTENCY_TOL = 1e-10


def aitken_limit(seq: Sequence[float]) -> float:
    """
    Delta^2 transform of the last three terms

    >>> aitken_limit([1 - 2.0**-n for n in range(5)])
    1.0
    """
    a = np.asarray(seq, dtype=float)
    if len(a) < 3:
        raise ExtrapolationError(f"Aitken extrapolation needs at least 3 terms, got {len(a)}")
    a0, a1, a2 = a[-3:]
    den = a2 - 2.0 * a1 + a0
    if abs(den) <= DEGENERATE_TOL * abs(a2):
        return float(a2)
    return float(a2 - (a2 - a1) ** 2 / den)


def energy_error_from_energy(energy_sq: float, limit: float) -> float:
    diff = limit - energy_sq
    if diff < -CONSISTENCY_TOL * abs(limit):
        raise ExtrapolationError(
            f"Extrapolated energy {limit:.12e} is below the discrete energy {energy_sq:.12e}"
        )
    return float(np.sqrt(max(diff, 0.0)))


def energy_error(system: GalerkinSystem, solution: Density, limit: float) -> float:
    """sqrt(||phi||^2 - Vc.c), the Galerkin error in the energy norm"""
    return energy_error_from_energy(system.energy_sq(solution.coeffs), limit)

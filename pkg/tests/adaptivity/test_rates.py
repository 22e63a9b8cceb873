import numpy as np
import pytest

from isobem.adaptivity import compare_curves, fit_rate

N = 6 * 4.0 ** np.arange(6)


def test_exact_power():
    assert fit_rate((N, N**-0.5)) == pytest.approx(-0.5)


def test_constant():
    assert fit_rate((N, np.full_like(N, 0.3))) == pytest.approx(0.0, abs=1e-12)


def test_noisy_power(rng):
    eta = N**-0.75 * (1.0 + 0.01 * rng.standard_normal(len(N)))
    assert fit_rate((N, eta), window=6) == pytest.approx(-0.75, abs=0.02)


def test_window_uses_last_points():
    eta = np.concatenate([N[:3] ** -2.0, N[3:] ** -0.5 * N[2] ** -1.5])
    assert fit_rate((N, eta), window=3) == pytest.approx(-0.5)


@pytest.mark.parametrize(
    "curve, window",
    [((N, N**-0.5), 1), ((N[:1], N[:1]), 4), ((N, np.zeros_like(N)), 4), ((N, N[:-1]), 4)],
)
def test_invalid(curve, window):
    with pytest.raises(ValueError):
        fit_rate(curve, window)


def test_compare_curves():
    uniform = (N, N**-0.5)
    adaptive_n = 10.0 * 2.0 ** np.arange(10)
    ratios = compare_curves((adaptive_n, adaptive_n**-1.0), uniform, start=0)
    inside = adaptive_n[(adaptive_n >= N.min()) & (adaptive_n <= N.max())]
    assert np.allclose(ratios, inside**-0.5)
    assert len(compare_curves((adaptive_n, adaptive_n**-1.0), uniform, start=10)) == 0

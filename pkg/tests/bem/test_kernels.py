import numpy as np
import pytest

from isobem.bem import kernel, layer_kernel
from isobem.bem.kernels import kernel_gradient_x, kernel_unchecked


def test_kernel_values():
    assert kernel([1.0, 0.0, 0.0]) == pytest.approx(1 / (4 * np.pi))
    assert kernel([0.0, 3.0, 4.0]) == pytest.approx(1 / (20 * np.pi))
    z = np.array([[2.0, 0.0, 0.0], [0.0, 0.0, -0.5]])
    assert np.allclose(kernel(z), [1 / (8 * np.pi), 1 / (2 * np.pi)])


def test_kernel_singular():
    with pytest.raises(ValueError):
        kernel([0.0, 0.0, 0.0])
    assert kernel_unchecked(np.zeros((2, 3))).tolist() == [0.0, 0.0]


def test_double_layer_kernel():
    x = np.array([[0.0, 0.0, 2.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    y = np.zeros((1, 3))
    n = np.array([[0.0, 0.0, 1.0]])
    assert np.allclose(layer_kernel(x, y, n)[:, 0], [1 / (16 * np.pi), 0.0, 0.0])


def test_layer_kernel_matrix():
    x = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    y = np.array([[0.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
    k = layer_kernel(x, y)
    assert k.shape == (2, 2)
    assert k[0, 0] == pytest.approx(1 / (4 * np.pi))
    assert k[1, 1] == pytest.approx(1 / (8 * np.pi))
    assert k[1, 0] == 0.0
    assert np.allclose(k[0], kernel(x[0] - y))


def test_gradient_matches_difference():
    z = np.array([[0.3, -0.2, 0.5]])
    h = 1e-6
    fd = [(kernel(z + h * e) - kernel(z - h * e))[0] / (2 * h) for e in np.eye(3)]
    assert np.allclose(kernel_gradient_x(z)[0], fd, rtol=1e-6)

"""Laplace fundamental solution and its derivatives"""

from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

FOUR_PI = 4.0 * np.pi


def kernel(z) -> np.ndarray:
    """
    G(z) = 1 / (4 pi |z|) for z != 0; vectorised over the last axis.

    >>> round(float(kernel([1.0, 0.0, 0.0])), 6)
    0.079577
    """
    z = np.asarray(z, dtype=float)
    r = np.linalg.norm(z, axis=-1)
    if np.any(r == 0.0):
        raise ValueError("Laplace kernel is singular at z = 0")
    return 1.0 / (FOUR_PI * r)


def kernel_unchecked(z: np.ndarray) -> np.ndarray:
    """G(z) with G(0) := 0, for quadrature points that may land on the singularity"""
    r = np.sqrt(np.einsum("...i,...i->...", z, z))
    out = np.zeros_like(r)
    np.divide(1.0, FOUR_PI * r, out=out, where=r > 0.0)
    return out


def layer_kernel(x: np.ndarray, y: np.ndarray, normals: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Pairwise (n_x, n_y) kernel matrix, 0 at r = 0.

    Without normals G(x - y). With normals nu(y) the double-layer kernel
    d/d nu(y) G(x - y) = nu(y).(x - y) / (4 pi |x - y|^3).
    """
    r = cdist(x, y)
    out = np.zeros_like(r)
    if normals is None:
        np.divide(1.0, FOUR_PI * r, out=out, where=r > 0.0)
    else:
        num = x @ normals.T - np.einsum("ij,ij->i", y, normals)[None, :]
        np.divide(num, FOUR_PI * r**3, out=out, where=r > 0.0)
    return out


def kernel_gradient_x(z: np.ndarray) -> np.ndarray:
    """grad_x G(x - y) = -(x - y) / (4 pi |x - y|^3), z = x - y"""
    r = np.linalg.norm(z, axis=-1)[..., None]
    return -z / (FOUR_PI * r**3)

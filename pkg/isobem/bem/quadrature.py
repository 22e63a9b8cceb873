"""
Reference quadrature on pairs of unit squares [0,1]^2 x [0,1]^2.

Singular pairs are integrated in relative coordinates, split into simplices
meeting at the singular point and blown up there (Duffy transformations):

    identical panels    8 regions, 4d Gauss, weight rho (1-|z1|)(1-|z2|)
    common edge         6 regions (sign of z1, 3 pyramids), weight rho^2 (1-|z1|)
    common vertex       4 pyramids, weight rho^3

Common edge: the shared edge is x2 = y2 = 0 in both squares, parametrised alike.
Common vertex: the shared vertex is the origin of both squares.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from isobem.splines.spline_kernel import gauss_rule, tensor_rule
from isobem.utils.errors import ConfigError


@dataclass(frozen=True)
class QuadConfig:
    n_reg: int = 4  # tensor Gauss order per direction, well-separated pairs
    n_sing: int = 8  # per Duffy coordinate, also near-field and touching pairs
    rho_near: float = 1.0  # dist / diam below which a pair counts as near
    interp_degree: int = None  # residual interpolation degree, None -> p + 2

    def __post_init__(self):
        if self.n_reg < 1 or self.n_sing < 1:
            raise ConfigError(f"Quadrature orders must be >= 1, got {self.n_reg}, {self.n_sing}")
        if not self.rho_near > 0:
            raise ConfigError(f"rho_near must be positive, got {self.rho_near}")
        if self.interp_degree is not None and self.interp_degree < 1:
            raise ConfigError(f"Interpolation degree must be >= 1, got {self.interp_degree}")

    def residual_degree(self, p: int) -> int:
        return self.interp_degree if self.interp_degree is not None else p + 2


@dataclass(frozen=True)
class PairRule:
    """x, y: (n, 2) points in the two reference squares; weights sum to 1"""

    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.weights)


def _grid(n: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    rule = gauss_rule(n)
    mesh = np.meshgrid(*([rule.nodes] * dim), indexing="ij")
    wmesh = np.meshgrid(*([rule.weights] * dim), indexing="ij")
    points = np.column_stack([m.ravel() for m in mesh])
    weights = np.prod(np.column_stack([w.ravel() for w in wmesh]), axis=1)
    return points, weights


def _split_offset(offset: np.ndarray, s: np.ndarray, sign: int) -> tuple[np.ndarray, np.ndarray]:
    """(x, y) in [0,1] with y - x = sign * offset; s runs over the admissible range"""
    low = (1.0 - offset) * s
    if sign > 0:
        return low, low + offset
    return low + offset, low


@lru_cache(maxsize=None)
def identical_rule(n: int) -> PairRule:
    g, w = _grid(n, 4)
    rho, ratio, s1, s2 = g.T
    xs, ys, ws = [], [], []
    for swap in (False, True):
        a, b = rho, rho * ratio
        z1, z2 = (b, a) if swap else (a, b)
        for sign1 in (1, -1):
            for sign2 in (1, -1):
                x1, y1 = _split_offset(z1, s1, sign1)
                x2, y2 = _split_offset(z2, s2, sign2)
                xs.append(np.column_stack([x1, x2]))
                ys.append(np.column_stack([y1, y2]))
                ws.append(w * rho * (1.0 - z1) * (1.0 - z2))
    return _frozen(xs, ys, ws)


@lru_cache(maxsize=None)
def common_edge_rule(n: int) -> PairRule:
    g, w = _grid(n, 4)
    rho, a, b, s = g.T
    xs, ys, ws = [], [], []
    for k in range(3):
        u = [rho * a, rho * b]
        u.insert(k, rho)
        z1, x2, y2 = u
        for sign in (1, -1):
            x1, y1 = _split_offset(z1, s, sign)
            xs.append(np.column_stack([x1, x2]))
            ys.append(np.column_stack([y1, y2]))
            ws.append(w * rho**2 * (1.0 - z1))
    return _frozen(xs, ys, ws)


@lru_cache(maxsize=None)
def common_vertex_rule(n: int) -> PairRule:
    g, w = _grid(n, 4)
    rho = g[:, 0]
    xs, ys, ws = [], [], []
    for k in range(4):
        u = [rho * g[:, 1], rho * g[:, 2], rho * g[:, 3]]
        u.insert(k, rho)
        xs.append(np.column_stack([u[0], u[1]]))
        ys.append(np.column_stack([u[2], u[3]]))
        ws.append(w * rho**3)
    return _frozen(xs, ys, ws)


@lru_cache(maxsize=None)
def regular_rule(n: int) -> PairRule:
    pts, w = tensor_rule(n)
    m = len(w)
    x = np.repeat(pts, m, axis=0)
    y = np.tile(pts, (m, 1))
    return _frozen([x], [y], [np.outer(w, w).ravel()])


def _frozen(xs, ys, ws) -> PairRule:
    x, y, w = np.concatenate(xs), np.concatenate(ys), np.concatenate(ws)
    for arr in (x, y, w):
        arr.flags.writeable = False
    return PairRule(x, y, w)


@lru_cache(maxsize=None)
def point_duffy_rule(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Unit-square Gauss points blown up into a triangle with apex 0:
    returns (u, v, w) so that a triangle (A, B, C) gets points A + u((B - A) + v(C - B))
    with weights w * |det(B - A, C - B)|.
    """
    pts, w = tensor_rule(n)
    u, v = pts[:, 0], pts[:, 1]
    return u, v, w * u


def point_duffy_points(apex: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Points (m, 2) and weights covering [0,1]^2 as four triangles around `apex`.
    Triangles degenerate when the apex lies on the boundary; their weights vanish.
    """
    u, v, w = point_duffy_rule(n)
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    points, weights = [], []
    for k in range(4):
        b, c = corners[k], corners[(k + 1) % 4]
        e1, e2 = b - apex, c - b
        det = abs(e1[0] * e2[1] - e1[1] * e2[0])
        if det == 0.0:
            continue
        points.append(apex + u[:, None] * (e1 + v[:, None] * e2))
        weights.append(w * det)
    return np.concatenate(points), np.concatenate(weights)


SQUARE_SYMMETRIES = tuple(
    (swap, flip_u, flip_v) for swap in (False, True) for flip_u in (False, True) for flip_v in (False, True)
)


def apply_symmetry(symmetry: tuple[bool, bool, bool], t: np.ndarray) -> np.ndarray:
    """Image of reference points under a symmetry of the unit square"""
    swap, flip_u, flip_v = symmetry
    u, v = t[:, 0], t[:, 1]
    if swap:
        u, v = v, u
    if flip_u:
        u = 1.0 - u
    if flip_v:
        v = 1.0 - v
    return np.column_stack([u, v])

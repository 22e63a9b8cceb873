"""Built-in boundaries: cube (0,0.1)^3, quarter pipe, flat plates"""

import numpy as np

from isobem.geometry.geometry import BoundaryGeometry, NurbsPatch, build_geometry
from isobem.splines.spline_kernel import KnotVector
from isobem.utils.errors import ConfigError

CUBE_SIDE = 0.1
PIPE_INNER = 0.05
PIPE_OUTER = 0.1
PIPE_HEIGHT = 0.1

LINEAR = KnotVector(1, (0, 0, 1, 1))
ARC = KnotVector(2, (0, 0, 0, 1, 1, 1))
# 90 degree arc: control point at the tangent intersection
ARC_WEIGHTS = np.array([1.0, np.sqrt(2.0) / 2.0, 1.0])


def _bilinear(corner_fn) -> NurbsPatch:
    cp = np.array([[corner_fn(i, j) for j in (0, 1)] for i in (0, 1)], dtype=float)
    return NurbsPatch((LINEAR, LINEAR), cp)


def arc_points(radius: float, z: float = 0.0) -> np.ndarray:
    return np.array([[radius, 0.0, z], [radius, radius, z], [0.0, radius, z]])


# region Cube
def make_cube(side: float = CUBE_SIDE) -> BoundaryGeometry:
    a = side
    faces = [
        lambda i, j: (0.0, a * i, a * j),
        lambda i, j: (a, a * i, a * j),
        lambda i, j: (a * i, 0.0, a * j),
        lambda i, j: (a * i, a, a * j),
        lambda i, j: (a * i, a * j, 0.0),
        lambda i, j: (a * i, a * j, a),
    ]
    patches = [_bilinear(f) for f in faces]

    def inside(x):
        x = np.atleast_2d(x)
        return np.all((x > 0) & (x < side), axis=1)

    return build_geometry(patches, "cube", reference_point=(a / 2, a / 2, a / 2), inside=inside)


# endregion Cube


# region Quarter pipe
def quarter_pipe_inside(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    r = np.hypot(x[:, 0], x[:, 1])
    return (
        (r > PIPE_INNER)
        & (r < PIPE_OUTER)
        & (x[:, 0] > 0)
        & (x[:, 1] > 0)
        & (x[:, 2] > 0)
        & (x[:, 2] < PIPE_HEIGHT)
    )


def _wall(radius: float) -> NurbsPatch:
    cp = np.stack([arc_points(radius, 0.0), arc_points(radius, PIPE_HEIGHT)], axis=1)
    weights = np.stack([ARC_WEIGHTS, ARC_WEIGHTS], axis=1)
    return NurbsPatch((ARC, LINEAR), cp, weights)


def _annulus(z: float) -> NurbsPatch:
    cp = np.stack([arc_points(PIPE_INNER, z), arc_points(PIPE_OUTER, z)], axis=1)
    weights = np.stack([ARC_WEIGHTS, ARC_WEIGHTS], axis=1)
    return NurbsPatch((ARC, LINEAR), cp, weights)


def make_quarter_pipe() -> BoundaryGeometry:
    """
    0.1 (r cos b, r sin b, z) with r in (1/2, 1), b in (0, pi/2), z in (0, 1).
    Patches in order: inner wall, y=0 face, outer wall, x=0 face, bottom, top.
    """
    dr = PIPE_OUTER - PIPE_INNER
    patches = [
        _wall(PIPE_INNER),
        _bilinear(lambda i, j: (PIPE_INNER + dr * i, 0.0, PIPE_HEIGHT * j)),
        _wall(PIPE_OUTER),
        _bilinear(lambda i, j: (0.0, PIPE_INNER + dr * i, PIPE_HEIGHT * j)),
        _annulus(0.0),
        _annulus(PIPE_HEIGHT),
    ]
    r_mid, z_mid = 0.5 * (PIPE_INNER + PIPE_OUTER), 0.5 * PIPE_HEIGHT
    reference = (r_mid * np.cos(np.pi / 4), r_mid * np.sin(np.pi / 4), z_mid)
    return build_geometry(patches, "quarter_pipe", reference, inside=quarter_pipe_inside)


# endregion Quarter pipe


def make_plate(side: float = 1.0, origins=((0.0, 0.0, 0.0),)) -> BoundaryGeometry:
    """Flat squares in planes z = origin_z with upward normals; an open surface"""
    patches = [
        _bilinear(lambda i, j, o=o: (o[0] + side * i, o[1] + side * j, o[2])) for o in origins
    ]
    return build_geometry(patches, "plate", interfaces=(), closed=False)


FIXTURES = {"cube": make_cube, "quarter_pipe": make_quarter_pipe, "plate": make_plate}


def make_geometry(name: str) -> BoundaryGeometry:
    try:
        factory = FIXTURES[name]
    except KeyError:
        raise ConfigError(f"Unknown geometry {name!r}, expected one of {sorted(FIXTURES)}") from None
    return factory()

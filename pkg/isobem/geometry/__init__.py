from .topology import CORNERS, EDGE_AXIS, EDGE_CORNERS, EDGE_FIXED, Interface, Topology
from .geometry import (
    BoundaryGeometry,
    NurbsPatch,
    build_geometry,
    check_interfaces,
    detect_interfaces,
    eval_patch,
    gram_det,
    jacobian,
    surface_gradient_sq,
    unit_normal,
)
from .fixtures import make_cube, make_geometry, make_plate, make_quarter_pipe
from .geometry_io import geometry_from_dict, load_geometry

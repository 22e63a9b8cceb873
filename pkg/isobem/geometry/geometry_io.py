"""User-supplied boundaries as JSON: degrees, knots, weighted control points, interfaces"""

from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from isobem.geometry.geometry import BoundaryGeometry, NurbsPatch, build_geometry
from isobem.geometry.topology import Interface
from isobem.splines.spline_kernel import KnotVector
from isobem.utils.errors import ConfigError
from isobem.utils.main import Pathlike
from isobem.utils.read_write import load_json

KnotValue = Union[float, int, str]


class PatchModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    degrees: tuple[int, int]
    knots: tuple[list[KnotValue], list[KnotValue]]
    control_points: list[list[tuple[float, float, float]]]
    weights: Optional[list[list[float]]] = None

    def build(self) -> NurbsPatch:
        kvs = tuple(KnotVector(p, tuple(k)) for p, k in zip(self.degrees, self.knots))
        weights = None if self.weights is None else np.array(self.weights)
        return NurbsPatch(kvs, np.array(self.control_points), weights)


class InterfaceModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    patch_a: int
    edge_a: int = Field(ge=0, le=3)
    patch_b: int
    edge_b: int = Field(ge=0, le=3)
    reversed: bool = False


class GeometryModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "custom"
    patches: list[PatchModel] = Field(min_length=1)
    # detected from sampled edges when omitted
    interfaces: Optional[list[InterfaceModel]] = None
    reference_point: Optional[tuple[float, float, float]] = None
    closed: bool = True


def geometry_from_dict(data: dict) -> BoundaryGeometry:
    try:
        model = GeometryModel.model_validate(data)
        patches = [p.build() for p in model.patches]
    except (ValidationError, ValueError) as e:
        raise ConfigError(f"Invalid geometry description: {e}") from e
    interfaces = None
    if model.interfaces is not None:
        interfaces = [Interface(**itf.model_dump()) for itf in model.interfaces]
    return build_geometry(
        patches, model.name, model.reference_point, interfaces, closed=model.closed
    )


def load_geometry(path: Pathlike) -> BoundaryGeometry:
    try:
        data = load_json(path)
    except (OSError, ValueError) as e:
        raise ConfigError(f"Cannot read geometry file {path}: {e}") from e
    return geometry_from_dict(data)


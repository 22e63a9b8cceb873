from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from isobem.adaptivity.loop import AdaptiveProblem, LoopSettings, RefinementMode
from isobem.bem.quadrature import QuadConfig
from isobem.geometry.fixtures import make_geometry
from isobem.geometry.geometry import BoundaryGeometry
from isobem.geometry.geometry_io import load_geometry
from isobem.utils.errors import ConfigError
from isobem.utils.main import Pathlike
from isobem.utils.read_write import load_json


class RunConfig(BaseModel):
    """Flat experiment configuration; the JSON file and the CLI flags share these names"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    geometry: str = "cube"
    geometry_file: Optional[str] = None
    p: int = 0
    mode: RefinementMode = RefinementMode.ADAPTIVE
    theta: float = 0.5
    budget: int = Field(default=2500, ge=1)
    tolerance: float = Field(default=1e-10, ge=0.0)
    n_reg: int = Field(default=4, ge=1)
    n_sing: int = Field(default=8, ge=1)
    rho_near: float = 1.0
    interp_degree: Optional[int] = Field(default=None, ge=1)
    knot_multiplicity: int = Field(default=1, ge=1)
    initial_refinements: int = Field(default=0, ge=0)
    output: Optional[str] = None
    seed: int = 0
    timings: bool = False
    rate_window: int = Field(default=4, ge=2)

    @field_validator("p")
    @classmethod
    def _check_degree(cls, v: int) -> int:
        if v not in (0, 1, 2):
            raise ValueError(f"p must be 0, 1 or 2, got {v}")
        return v

    @field_validator("theta")
    @classmethod
    def _check_theta(cls, v: float) -> float:
        if not 0.0 < v <= 1.0:
            raise ValueError(f"theta must be in (0, 1], got {v}")
        return v

    @field_validator("rho_near")
    @classmethod
    def _check_rho(cls, v: float) -> float:
        if not v > 0.0:
            raise ValueError(f"rho_near must be positive, got {v}")
        return v

    @model_validator(mode="after")
    def _check_multiplicity(self) -> "RunConfig":
        if self.knot_multiplicity > self.p + 1:
            raise ValueError(f"knot_multiplicity must be at most p + 1 = {self.p + 1}")
        return self

    # region Loading
    @classmethod
    def build(cls, **values) -> "RunConfig":
        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigError(f"Invalid run configuration: {e}") from e

    @classmethod
    def from_json(cls, path: Optional[Pathlike] = None, **overrides: Any) -> "RunConfig":
        """Values from a flat JSON file, overridden by explicitly given (not None) keyword values"""
        values = {}
        if path is not None:
            try:
                values = load_json(path)
            except (OSError, ValueError) as e:
                raise ConfigError(f"Cannot read config file {path}: {e}") from e
            if not isinstance(values, dict):
                raise ConfigError(f"Config file {path} must hold a JSON object")
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.build(**values)

    # endregion Loading

    # region Conversion
    @property
    def quad(self) -> QuadConfig:
        return QuadConfig(self.n_reg, self.n_sing, self.rho_near, self.interp_degree)

    def loop_settings(self) -> LoopSettings:
        return LoopSettings(
            theta=self.theta,
            mode=self.mode,
            budget=self.budget,
            tolerance=self.tolerance,
            quad=self.quad,
            timings=self.timings,
        )

    def load_geometry(self) -> BoundaryGeometry:
        if self.geometry_file is not None:
            return load_geometry(self.geometry_file)
        return make_geometry(self.geometry)

    def problem(self, geom: BoundaryGeometry = None) -> AdaptiveProblem:
        return AdaptiveProblem(
            geom or self.load_geometry(),
            self.p,
            knot_multiplicity=self.knot_multiplicity,
            initial_refinements=self.initial_refinements,
        )

    # endregion Conversion

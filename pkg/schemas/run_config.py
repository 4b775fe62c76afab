from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from schemas.superoscillation import GridDescription


class Construction(str, Enum):
    STANDARD = "standard"
    LAGRANGE = "lagrange"
    MOMENT = "moment"
    SINC_DELTA = "sinc_delta"
    BERRY = "berry"
    INTERPOLATION = "interpolation"
    PLANE_WAVE = "plane_wave"


class Command(str, Enum):
    FAMILY = "family"
    EVAL = "eval"
    VERIFY = "verify"
    EVOLVE = "evolve"
    IDENTITY_CHECK = "identity-check"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class EvolveMode(str, Enum):
    PROPAGATE = "propagate"
    ONE = "one"
    TWO = "two"


class SymbolSpec(BaseModel):
    """{"poly": [[re, im], ...]} or {"builtin": name}, optional image bound h0."""

    poly: Optional[List[Any]] = None
    builtin: Optional[str] = None
    a: Optional[Any] = None
    h0: Optional[Any] = None

    def as_document(self) -> Dict[str, Any]:
        return self.model_dump(exclude_none=True)


class FamilySpec(BaseModel):
    """One spec file describes one family; indices live on the verify command.

    params by construction:
      standard: n
      lagrange: n (equispaced) or freqs
      moment: n, density {"builtin": name, "params": {...}}
      sinc_delta: delta
      berry: k, g (symbol specs), b, growth, delta
      interpolation: points, values
      plane_wave: none
    """

    construction: Construction
    a: Any = None
    k0: Any = 1
    params: Dict[str, Any] = {}

    @field_validator("params", mode="before")
    @classmethod
    def _default_params(cls, value: Any) -> Any:
        return value or {}


class RealGrid(BaseModel):
    x_min: float
    x_max: float
    n_points: int = Field(ge=2)

    @model_validator(mode="after")
    def _check_order(self) -> "RealGrid":
        if not self.x_max > self.x_min:
            raise ValueError(f"x_max must exceed x_min, got {self.x_min}:{self.x_max}")
        return self

    @classmethod
    def parse(cls, text: str) -> "RealGrid":
        x_min, x_max, n_points = text.split(":")
        return cls(x_min=float(x_min), x_max=float(x_max), n_points=int(n_points))

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    def points(self) -> List[float]:
        return [self.x_min + i * self.spacing for i in range(self.n_points)]


class ComplexGrid(GridDescription):
    @classmethod
    def parse(cls, text: str) -> "ComplexGrid":
        r_max, n_radii, n_angles = text.split(":")
        return cls(r_max=float(r_max), n_radii=int(n_radii), n_angles=int(n_angles))


class RunConfig(BaseModel):
    command: Command
    spec_path: Optional[Path] = None
    precision_bits: int = Field(128, ge=53)
    output: Optional[Path] = None
    format: OutputFormat = OutputFormat.CSV
    grid: Optional[RealGrid] = None
    cgrid: Optional[ComplexGrid] = None
    rel_tol: Optional[float] = Field(None, gt=0)
    max_panels: Optional[int] = Field(None, ge=1)

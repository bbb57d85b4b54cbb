"""
Mission configuration and log records.

MissionConfig is the validated form of a dotenv-style config file (see configs/*.env). Flat keys
map onto the nested GP, primitive and planner models below.
"""
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union
import math

from dotenv import dotenv_values
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from app.core.exceptions import MissionConfigError


class ObjectiveKind(str, Enum):
    VARIANCE_REDUCTION = "variance_reduction"
    VALUE_SUM = "value_sum"
    UCB_REPLANNING = "ucb_replanning"


class SelectionRule(str, Enum):
    PARETO = "pareto"
    SCALAR_UCB = "scalar_ucb"


class GPHyperparameters(BaseModel):
    """Fixed squared-exponential kernel hyperparameters (standardized target units, km)."""
    signal_variance: float = Field(1.0, gt=0, description="Kernel signal variance σ_f²")
    length_scale: float = Field(1.0, gt=0, description="Kernel length-scale ℓ in km")
    noise_variance: float = Field(1e-2, ge=0, description="Observation noise variance σ_n²")
    max_points: int = Field(1000, ge=1, description="Sliding cap on training points (oldest dropped)")


class PrimitiveParameters(BaseModel):
    """Dubins fan of motion primitives."""
    count: int = Field(15, ge=1, description="Number of primitives in the fan")
    length: float = Field(1.0, gt=0, description="Chord length L from pose to each terminal pose (km)")
    turning_radius: float = Field(0.25, gt=0, description="Minimum turning radius r_min (km)")
    sample_spacing: float = Field(0.1, gt=0, description="Spacing of sample points along a path (km)")
    fan_half_angle: float = Field(3 * math.pi / 4, gt=0, le=math.pi, description="Half-width of the heading fan (rad)")


class PlannerSettings(BaseModel):
    """Search parameters for one replan."""
    budget: int = Field(3000, ge=1, description="MCTS iterations per replan")
    rollout_depth: int = Field(4, ge=0, description="Random primitives per rollout")
    selection_rule: SelectionRule = SelectionRule.PARETO
    beta0: float = Field(1.0, ge=0, description="Exploration weight of the UCB-replanning reward")


class MissionConfig(BaseModel):
    """
    One replanning mission: environment, models, planner and sample budget.
    """
    environment: str = Field("synth", description="'synth', 'synth:<seed>' or 'file:<path>'")
    grid_width: int = Field(30, ge=2, description="Synthetic grid columns")
    grid_height: int = Field(30, ge=2, description="Synthetic grid rows")
    extent_km: float = Field(10.0, gt=0, description="Synthetic workspace side length")
    n_sources: int = Field(3, ge=1, description="Gaussian sources in a synthetic field")
    downsample_factor: int = Field(1, ge=1, description="Block-mean factor applied to ingested grids")
    crop: Optional[List[float]] = Field(
        None, description="Window x_min,x_max,y_min,y_max (km) cut from ingested grids before downsampling"
    )
    noise_std: Optional[float] = Field(None, ge=0, description="Observation noise (standardized units); default 1% of field range")

    gp: GPHyperparameters = Field(default_factory=GPHyperparameters)
    primitives: PrimitiveParameters = Field(default_factory=PrimitiveParameters)
    planner: PlannerSettings = Field(default_factory=PlannerSettings)
    objectives: List[ObjectiveKind] = Field(
        default_factory=lambda: [ObjectiveKind.VARIANCE_REDUCTION, ObjectiveKind.VALUE_SUM]
    )

    sample_budget: int = Field(600, gt=0, description="Mission sample budget B")
    preference_objective: Optional[ObjectiveKind] = None
    preference_until: Optional[int] = Field(None, ge=0, description="Samples collected before preference is dropped")

    start_x: Optional[float] = None
    start_y: Optional[float] = None
    start_heading: float = 0.0
    seed: int = Field(0, ge=0)
    output_dir: Optional[Path] = None
    log_wall_time: bool = False

    @field_validator("objectives", mode="before")
    @classmethod
    def split_objectives(cls, v: Any) -> Any:
        if isinstance(v, str):
            return [item.strip() for item in v.split(",") if item.strip()]
        return v

    @field_validator("objectives")
    @classmethod
    def validate_objectives(cls, v: List[ObjectiveKind]) -> List[ObjectiveKind]:
        if not v:
            raise ValueError("at least one objective is required")
        if len(set(v)) != len(v):
            raise ValueError("objectives must be distinct")
        return v

    @field_validator("crop", mode="before")
    @classmethod
    def split_crop(cls, v: Any) -> Any:
        if isinstance(v, str):
            return [item.strip() for item in v.split(",")]
        return v

    @field_validator("crop")
    @classmethod
    def validate_crop(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is None:
            return v
        if len(v) != 4:
            raise ValueError(f"crop needs x_min,x_max,y_min,y_max, got {len(v)} values")
        x_min, x_max, y_min, y_max = v
        if not (x_max > x_min and y_max > y_min):
            raise ValueError(f"crop window {v} is empty")
        return v

    @field_validator("environment")
    @classmethod
    def validate_environment(cls, v: str) -> str:
        kind, _, arg = v.partition(":")
        if kind == "synth":
            if arg and not arg.isdigit():
                raise ValueError(f"synthetic environment seed must be a non-negative integer, got {arg!r}")
        elif kind == "file":
            if not arg:
                raise ValueError("file environment needs a path: file:<path>")
            if not Path(arg).is_file():
                raise ValueError(f"grid file {arg} does not exist")
        else:
            raise ValueError(f"unknown environment selector {v!r}")
        return v

    @model_validator(mode="after")
    def validate_schedule(self) -> "MissionConfig":
        if self.preference_until is not None and self.preference_until > self.sample_budget:
            raise ValueError(
                f"preference_until ({self.preference_until}) exceeds sample_budget ({self.sample_budget})"
            )
        if self.preference_objective is not None and self.preference_objective not in self.objectives:
            raise ValueError(f"preference objective {self.preference_objective.value} is not an active objective")
        if self.crop is not None and not self.environment.startswith("file:"):
            raise ValueError("crop applies to file environments only")
        return self

    @property
    def preference_index(self) -> Optional[int]:
        if self.preference_objective is None:
            return None
        return self.objectives.index(self.preference_objective)

    def preference_at(self, samples_collected: int) -> Optional[int]:
        """Objective index to prefer at this point of the mission, or None for a uniform front choice."""
        if self.preference_index is None:
            return None
        if self.preference_until is not None and samples_collected >= self.preference_until:
            return None
        return self.preference_index


# flat config-file key -> (nested model, field)
NESTED_KEYS = {
    "gp_signal_variance": ("gp", "signal_variance"),
    "gp_length_scale": ("gp", "length_scale"),
    "gp_noise_variance": ("gp", "noise_variance"),
    "gp_max_points": ("gp", "max_points"),
    "primitive_count": ("primitives", "count"),
    "primitive_length": ("primitives", "length"),
    "turning_radius": ("primitives", "turning_radius"),
    "sample_spacing": ("primitives", "sample_spacing"),
    "fan_half_angle": ("primitives", "fan_half_angle"),
    "planner_budget": ("planner", "budget"),
    "rollout_depth": ("planner", "rollout_depth"),
    "selection_rule": ("planner", "selection_rule"),
    "beta0": ("planner", "beta0"),
}


def config_from_mapping(values: Dict[str, Any]) -> MissionConfig:
    """Build a MissionConfig from flat (case-insensitive) keys."""
    data: Dict[str, Any] = {}
    for raw_key, value in values.items():
        key = raw_key.strip().lower()
        if value is None or value == "":
            continue
        if key in NESTED_KEYS:
            section, name = NESTED_KEYS[key]
            data.setdefault(section, {})[name] = value
        else:
            data[key] = value
    unknown = set(data) - set(MissionConfig.model_fields)
    if unknown:
        raise MissionConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    try:
        return MissionConfig(**data)
    except ValidationError as e:
        raise MissionConfigError(str(e)) from e


def load_mission_config(path: Union[str, Path], **overrides: Any) -> MissionConfig:
    """
    Read a dotenv-style mission config file.

    Args:
        path: config file (`KEY=value` lines, `#` comments).
        overrides: flat keys applied on top of the file (e.g. seed from the command line).
    Raises:
        MissionConfigError: missing file, unknown keys or failed validation.
    """
    path = Path(path)
    if not path.is_file():
        raise MissionConfigError(f"config file {path} does not exist")
    values: Dict[str, Any] = dict(dotenv_values(path))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_mapping(values)


class MetricRecord(BaseModel):
    """Estimation quality of one prediction grid."""
    rmse: float
    mae: float
    hotspot_rmse: float
    hotspot_mae: float
    hotspot_sample_pct: float = Field(..., ge=0, le=100)


class MissionRecord(MetricRecord):
    """One replan of the mission log."""
    replan: int
    samples: int
    x: float
    y: float
    heading: float
    action_id: int
    wall_time: Optional[float] = None


class MissionLog(BaseModel):
    records: List[MissionRecord] = Field(default_factory=list)
    aborted: bool = False
    raw_range: Optional[List[float]] = None

    @property
    def total_samples(self) -> int:
        return self.records[-1].samples if self.records else 0

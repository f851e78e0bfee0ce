"""Request/response models for the HTTP service.

Request config models mirror the JSON config schema the CLI reads from
--config files; fields left unset are dropped before semantic validation so
the pipeline's defaults stay the single source of truth. All paths are
interpreted on the server — clients ship configs, not point clouds.
"""

from __future__ import annotations

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")

    def config_dict(self) -> dict:
        return self.model_dump(exclude_none=True)


class ShapeModel(_Strict):
    kind: str
    dimensions: List[float]
    coloring: Optional[str] = None


class CikpModel(_Strict):
    radius_factor: Optional[float] = None
    m1: Optional[int] = None
    m2: Optional[int] = None
    epsilon: Optional[float] = None
    tau: Optional[float] = None
    max_iterations: Optional[int] = None
    k_candidates: Optional[int] = None


class CompletionModel(_Strict):
    kind: str
    path: Optional[str] = None
    plane_normal: Optional[List[float]] = None


class SynthConfigModel(_Strict):
    shape: ShapeModel
    count: int
    n_points: Optional[int] = None
    visibility: Optional[float] = None
    noise_sigma: Optional[float] = None
    max_angle_deg: Optional[float] = None
    max_translation: Optional[float] = None
    n_keypoints: Optional[int] = None
    flip_axis: Optional[str] = None
    flip_angle_deg: Optional[float] = None


class RefineConfigModel(_Strict):
    dataset: Optional[str] = None
    model: Optional[str] = None
    object: Optional[str] = None
    symmetric: Optional[bool] = None
    k: Optional[int] = None
    completion: Optional[CompletionModel] = None
    registration: Optional[str] = None
    use_color: Optional[bool] = None
    cikp: Optional[CikpModel] = None
    synth: Optional[SynthConfigModel] = None


class MatrixModel(_Strict):
    color: Optional[List[bool]] = None
    registration: Optional[List[str]] = None
    # a None entry means "no completion" and is a meaningful variant
    completion: Optional[List[Optional[CompletionModel]]] = None


class AblateConfigModel(_Strict):
    dataset: str
    matrix: MatrixModel
    model: Optional[str] = None
    object: Optional[str] = None
    symmetric: Optional[bool] = None
    k: Optional[int] = None
    cikp: Optional[CikpModel] = None


class SynthRequest(_Strict):
    config: SynthConfigModel
    seed: int = 0
    output: str


class RefineRequest(_Strict):
    config: RefineConfigModel
    seed: int = 0
    jobs: int = Field(default=1, ge=1)
    output: str


class EvaluateRequest(_Strict):
    reports: List[str] = Field(min_length=1)
    output: str


class AblateRequest(_Strict):
    config: AblateConfigModel
    seed: int = 0
    jobs: int = Field(default=1, ge=1)
    output: str


class FrameRow(BaseModel):
    frame: int
    object: str
    add_init: float
    add_refined: float
    adds_init: float
    adds_refined: float
    iterations: int
    converged: bool


class Aggregate(BaseModel):
    frames: int
    auc_init: float
    auc_refined: float
    add01_init: float
    add01_refined: float
    mean_iterations: float
    converged: int


class RefineReportModel(BaseModel):
    kind: str
    object: str
    symmetric: bool
    diameter: float
    seed: int
    config: Dict[str, Any]
    frames: List[FrameRow]
    aggregate: Aggregate
    timing_s: float


class EvaluateReportModel(BaseModel):
    kind: str
    object: str
    symmetric: bool
    diameter: float
    fragments: List[str]
    frames: List[FrameRow]
    aggregate: Aggregate
    timing_s: float


class SynthReportModel(BaseModel):
    kind: str
    dataset: str
    count: int
    model_points: int
    diameter: float
    seed: int
    scenes: List[str]
    timing_s: float


class AblateVariant(BaseModel):
    color: bool
    registration: str
    completion: str
    add01_init: float
    add01_refined: float
    auc_refined: float
    mean_iterations: float


class AblateReportModel(BaseModel):
    kind: str
    object: str
    symmetric: bool
    seed: int
    variants: List[AblateVariant]
    timing_s: float


class HealthResponse(BaseModel):
    status: str
    version: str

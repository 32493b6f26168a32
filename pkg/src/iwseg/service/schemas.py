"""Pydantic request/response models for the HTTP service.

Volumes are referenced by filesystem path (the service reads and writes on its
own filesystem); responses carry JSON-sized results only.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class WeightsRequest(BaseModel):
    mask: str
    out: Optional[str] = None
    connectivity: int = 26
    whole_image: bool = False
    origin: Optional[Tuple[int, int, int]] = None
    size: Optional[Tuple[int, int, int]] = None


class WeightsResponse(BaseModel):
    component_weights: Dict[str, float]
    n_lesions: int
    n_voxels: int
    sum_weights: float
    out: Optional[str] = None


class LossRequest(BaseModel):
    pred: str
    target: str
    loss: str
    gamma: Optional[float] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    reduction: Optional[str] = None
    wce_weight_source: Optional[str] = None
    prob_clamp_eps: float = 1e-7
    dice_eps: float = 1e-6
    connectivity: int = 26
    grad_out: Optional[str] = None


class LossResponse(BaseModel):
    kind: str
    hyperparams: dict
    value: float
    grad_path: Optional[str] = None
    component_contributions: Optional[List[float]] = None


class BootstrapParams(BaseModel):
    n_iter: int = 100
    frac: float = 0.8
    seed: int = 0
    with_replacement: bool = False


class EvalRequest(BaseModel):
    manifest: str
    out: Optional[str] = None
    froc_csv: Optional[str] = None
    thresholds: Optional[List[float]] = None
    criterion: str = "overlap"
    iou_threshold: float = 0.5
    connectivity: int = 26
    dice_threshold: float = 0.5
    bootstrap: BootstrapParams = Field(default_factory=BootstrapParams)
    size_mode: str = "tertiles"
    clinical_threshold_mm: Optional[float] = None


class MeanStd(BaseModel):
    mean: Optional[float]
    std: Optional[float]


class DiceStats(BaseModel):
    mean: Optional[float]
    std: Optional[float]
    n: int


class SizeGroupReport(BaseModel):
    n_lesions: int
    avg_recall: MeanStd
    recall_at_fp: Optional[Dict[str, float]]
    object_dice: DiceStats


class EvalResponse(BaseModel):
    n_patients: int
    n_lesions: int
    avg_recall: MeanStd
    recall_at_fp: Dict[str, float]
    object_dice: DiceStats
    size_groups: Dict[str, SizeGroupReport]
    config: dict


class ConvertRequest(BaseModel):
    nifti: str
    out: str
    clip: Optional[Tuple[float, float]] = None
    mask: Optional[str] = None
    fill: Optional[float] = None
    scale: bool = False


class ConvertResponse(BaseModel):
    out: str
    shape: Tuple[int, int, int]
    dtype: str
    spacing_mm: Tuple[float, float, float]
    min: float
    max: float


class SizesRequest(BaseModel):
    masks: List[str]
    mode: str = "tertiles"
    threshold_mm: Optional[float] = None
    connectivity: int = 26


class SizeRow(BaseModel):
    mask: str
    component: int
    voxels: int
    diameter_mm: float
    group: str


class SizesResponse(BaseModel):
    rows: List[SizeRow]


class SampleRequest(BaseModel):
    image: str
    mask: str
    prefix: str
    n: int = 1
    seed: int = 0
    size: Tuple[int, int, int] = (128, 128, 128)
    lesion_prob: float = 0.5
    pad_value: float = 0.0


class SampleEntry(BaseModel):
    index: int
    origin: Tuple[int, int, int]
    image: str
    mask: str
    lesion_voxels: int


class SampleResponse(BaseModel):
    entries: List[SampleEntry]
    index_path: str
    seed: int

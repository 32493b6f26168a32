"""Lesion-size-balanced loss reweighting and detection evaluation for 3D volumes."""

from .components import (
    CONNECTIVITIES,
    ComponentSet,
    equivalent_diameter,
    label_components,
)
from .detection import (
    DEFAULT_FP_TARGETS,
    DEFAULT_THRESHOLDS,
    AverageRecall,
    BootstrapSummary,
    DetectionOutcome,
    EvalConfig,
    EvalOutput,
    FrocCase,
    FrocCurve,
    FrocPoint,
    MatchCriterion,
    RawFrocPoint,
    average_recall,
    bootstrap_summary,
    evaluate_cases,
    froc_curve,
    match_lesions,
    object_dice,
    split_size_groups,
    write_froc_csv,
)
from .errors import InternalInvariantError, IwsegError, ValidationError
from .losses import (
    LOSS_KINDS,
    LossResult,
    LossSpec,
    component_contributions,
    evaluate_loss,
)
from .manifest import Manifest, ManifestEntry, load_cases, load_manifest
from .nifti import load_nifti
from .sampler import PatchSampler, PatchSpec, sample_patch
from .volume import (
    DTYPES,
    PreprocessConfig,
    Volume,
    crop,
    load_vol,
    preprocess,
    save_vol,
)
from .weighting import WeightMap, inverse_weight_map

__version__ = "0.1.0"

__all__ = [
    "CONNECTIVITIES",
    "ComponentSet",
    "equivalent_diameter",
    "label_components",
    "DEFAULT_FP_TARGETS",
    "DEFAULT_THRESHOLDS",
    "AverageRecall",
    "BootstrapSummary",
    "DetectionOutcome",
    "EvalConfig",
    "EvalOutput",
    "FrocCase",
    "FrocCurve",
    "FrocPoint",
    "MatchCriterion",
    "RawFrocPoint",
    "average_recall",
    "bootstrap_summary",
    "evaluate_cases",
    "froc_curve",
    "match_lesions",
    "object_dice",
    "split_size_groups",
    "write_froc_csv",
    "InternalInvariantError",
    "IwsegError",
    "ValidationError",
    "LOSS_KINDS",
    "LossResult",
    "LossSpec",
    "component_contributions",
    "evaluate_loss",
    "Manifest",
    "ManifestEntry",
    "load_cases",
    "load_manifest",
    "load_nifti",
    "PatchSampler",
    "PatchSpec",
    "sample_patch",
    "DTYPES",
    "PreprocessConfig",
    "Volume",
    "crop",
    "load_vol",
    "preprocess",
    "save_vol",
    "WeightMap",
    "inverse_weight_map",
    "__version__",
]

"""Evaluation manifest: a list of (patient, prediction path, target path) entries."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

from .detection import FrocCase
from .errors import ValidationError
from .volume import PathLike, Volume, load_vol


@dataclass(frozen=True)
class ManifestEntry:
    patient_id: str
    pred: Path
    target: Path


@dataclass(frozen=True)
class Manifest:
    entries: Tuple[ManifestEntry, ...]
    spacing_override: Optional[Tuple[float, float, float]] = None


def load_manifest(path: PathLike) -> Manifest:
    """Parse a manifest JSON file; relative volume paths resolve against its directory."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"missing manifest file: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"garbled manifest {path}: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("entries"), list):
        raise ValidationError(f"manifest {path} must be a JSON object with an 'entries' list")
    if not doc["entries"]:
        raise ValidationError(f"manifest {path} has no entries")

    base = path.parent
    entries: List[ManifestEntry] = []
    seen = set()
    for i, raw in enumerate(doc["entries"]):
        if not isinstance(raw, dict) or {"patient_id", "pred", "target"} - raw.keys():
            raise ValidationError(
                f"manifest {path} entry {i} needs patient_id, pred, and target fields"
            )
        pid = str(raw["patient_id"])
        if pid in seen:
            raise ValidationError(f"duplicate patient_id {pid!r} in manifest {path}")
        seen.add(pid)
        entries.append(
            ManifestEntry(
                patient_id=pid,
                pred=base / str(raw["pred"]),
                target=base / str(raw["target"]),
            )
        )

    spacing = doc.get("spacing_mm")
    if spacing is not None:
        if not isinstance(spacing, list) or len(spacing) != 3:
            raise ValidationError(f"manifest {path}: spacing_mm must be a 3-element list")
        spacing = tuple(float(s) for s in spacing)
    return Manifest(entries=tuple(entries), spacing_override=spacing)


def load_cases(manifest: Manifest) -> List[FrocCase]:
    """Load every entry's volumes; the manifest spacing override wins when set."""
    cases = []
    for entry in manifest.entries:
        pred = load_vol(entry.pred)
        target = load_vol(entry.target)
        if manifest.spacing_override is not None:
            pred = Volume(pred.data, manifest.spacing_override)
            target = Volume(target.data, manifest.spacing_override)
        cases.append(FrocCase(patient_id=entry.patient_id, gt=target, prob=pred))
    return cases

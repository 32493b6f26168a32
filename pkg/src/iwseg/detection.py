"""Lesion detection and delineation metrics: matching, object Dice, FROC,
average recall over fixed FP-per-image targets, bootstrap summaries, and
lesion-size grouping.

Matching is component-against-component: a ground-truth lesion counts as found
when a predicted component satisfies the criterion (default: at least one
shared voxel), and a predicted component is a false positive when it overlaps
no lesion at all. FROC sweeps a threshold grid over the probability maps and
records (average FP per image, fraction of lesions found) per threshold; the
stored curve is the monotone envelope of those raw points.
"""

from __future__ import annotations

import csv
import math
import os
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .components import ComponentSet, label_components
from .errors import InternalInvariantError, ValidationError
from .volume import PathLike, Volume

#: FP-per-image targets the average recall is interpolated at.
DEFAULT_FP_TARGETS = (0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)

#: Uniform threshold grid strictly inside (0, 1).
DEFAULT_THRESHOLDS = tuple(0.02 * i for i in range(1, 50))

SIZE_MODES = ("tertiles", "clinical")


@dataclass(frozen=True)
class MatchCriterion:
    """How a predicted component validates a ground-truth lesion.

    ``overlap``: any shared voxel. ``iou``: intersection over union of the
    component pair must reach ``iou_threshold``.
    """

    kind: str = "overlap"
    iou_threshold: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in ("overlap", "iou"):
            raise ValidationError(f"criterion must be 'overlap' or 'iou', got {self.kind!r}")
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ValidationError(f"iou_threshold must lie in (0, 1], got {self.iou_threshold}")


@dataclass(frozen=True)
class DetectionOutcome:
    """Per-lesion found flags and matches, per-component FP flags, and counts.

    Arrays are indexed by component label, so index 0 (background) is unused.
    ``intersections[g, p]`` is the voxel overlap between lesion g and predicted
    component p.
    """

    found: np.ndarray
    matched: Tuple[frozenset, ...]
    is_fp: np.ndarray
    intersections: np.ndarray

    @property
    def n_gt_lesions(self) -> int:
        return len(self.found) - 1

    @property
    def tp(self) -> int:
        return int(self.found[1:].sum())

    @property
    def fn(self) -> int:
        return self.n_gt_lesions - self.tp

    @property
    def fp(self) -> int:
        return int(self.is_fp[1:].sum())


def match_lesions(
    gt: ComponentSet, pred: ComponentSet, criterion: MatchCriterion = MatchCriterion()
) -> DetectionOutcome:
    """Match predicted components against ground-truth lesions.

    One predicted component may validate several lesions and several components
    may jointly validate one lesion (counted once). A predicted component is a
    false positive only when it overlaps no lesion whatsoever, regardless of
    the criterion used for "found".
    """
    if gt.labels.shape != pred.labels.shape:
        raise ValidationError(f"shape mismatch: gt {gt.labels.shape} vs pred {pred.labels.shape}")
    kg = gt.n_lesions
    kp = pred.n_lesions
    joint = gt.labels.ravel().astype(np.int64) * (kp + 1) + pred.labels.ravel()
    inter = np.bincount(joint, minlength=(kg + 1) * (kp + 1)).reshape(kg + 1, kp + 1)

    if criterion.kind == "overlap":
        hit = inter[:, 1:] > 0
    else:
        gt_sizes = gt.sizes[:, None].astype(np.float64)
        pred_sizes = pred.sizes[None, 1:].astype(np.float64)
        union = gt_sizes + pred_sizes - inter[:, 1:]
        iou = np.divide(inter[:, 1:], union, out=np.zeros_like(union), where=union > 0)
        hit = iou >= criterion.iou_threshold
    hit[0, :] = False

    found = np.zeros(kg + 1, dtype=bool)
    found[1:] = hit[1:, :].any(axis=1)
    matched = tuple(
        frozenset() if g == 0 else frozenset((np.flatnonzero(hit[g, :]) + 1).tolist())
        for g in range(kg + 1)
    )
    is_fp = np.zeros(kp + 1, dtype=bool)
    is_fp[1:] = inter[1:, 1:].sum(axis=0) == 0
    return DetectionOutcome(found=found, matched=matched, is_fp=is_fp, intersections=inter)


def object_dice(
    gt: ComponentSet, pred: ComponentSet, outcome: DetectionOutcome
) -> Dict[int, float]:
    """Dice per *found* lesion against the union of its matched components.

    Missed lesions are excluded, so delineation quality stays independent of
    detection quality. Returns ``{lesion_label: dice}``.
    """
    if outcome.intersections.shape != (gt.n_lesions + 1, pred.n_lesions + 1):
        raise ValidationError("detection outcome does not correspond to these component sets")
    dice: Dict[int, float] = {}
    for g in range(1, gt.n_lesions + 1):
        if not outcome.found[g]:
            continue
        comps = sorted(outcome.matched[g])
        inter = int(sum(outcome.intersections[g, p] for p in comps))
        total = int(gt.sizes[g]) + int(sum(pred.sizes[p] for p in comps))
        dice[g] = 2.0 * inter / total
    return dice


class FrocPoint(NamedTuple):
    fp_per_image: float
    recall: float


class RawFrocPoint(NamedTuple):
    threshold: float
    fp_per_image: float
    recall: float
    on_envelope: bool


@dataclass(frozen=True)
class FrocCurve:
    """Monotone FROC envelope plus the raw per-threshold points it came from."""

    points: Tuple[FrocPoint, ...]
    raw: Tuple[RawFrocPoint, ...] = ()

    def __post_init__(self) -> None:
        if not self.points:
            raise ValidationError("a FROC curve needs at least one point")
        fps = [p.fp_per_image for p in self.points]
        recalls = [p.recall for p in self.points]
        if any(f < 0 for f in fps) or any(not 0.0 <= r <= 1.0 for r in recalls):
            raise ValidationError("FROC points need fp >= 0 and recall in [0, 1]")
        if any(prev >= nxt for prev, nxt in zip(fps, fps[1:])):
            raise InternalInvariantError("FROC fp values must be strictly increasing")
        if any(prev > nxt for prev, nxt in zip(recalls, recalls[1:])):
            raise InternalInvariantError("FROC recall must be non-decreasing along the envelope")


def _envelope(points: Sequence[Tuple[float, float]]) -> List[FrocPoint]:
    best_at_fp: Dict[float, float] = {}
    for fp, recall in points:
        if fp not in best_at_fp or recall > best_at_fp[fp]:
            best_at_fp[fp] = recall
    out: List[FrocPoint] = []
    running = -1.0
    for fp in sorted(best_at_fp):
        running = max(running, best_at_fp[fp])
        out.append(FrocPoint(fp, running))
    return out


@dataclass(frozen=True)
class FrocCase:
    """One evaluation case: binary ground truth and a probability map."""

    patient_id: str
    gt: Volume
    prob: Volume

    def __post_init__(self) -> None:
        if self.gt.shape != self.prob.shape:
            raise ValidationError(
                f"case {self.patient_id!r}: gt shape {self.gt.shape} != prob shape {self.prob.shape}"
            )
        if self.gt.data.dtype != np.uint8 or self.gt.data.max(initial=0) > 1:
            raise ValidationError(f"case {self.patient_id!r}: ground truth must be a binary u8 mask")
        if self.prob.data.dtype.kind != "f":
            raise ValidationError(f"case {self.patient_id!r}: probability map must be float")
        pmin = float(self.prob.data.min())
        pmax = float(self.prob.data.max())
        if pmin < 0.0 or pmax > 1.0:
            raise ValidationError(
                f"case {self.patient_id!r}: probabilities must lie in [0, 1], got [{pmin}, {pmax}]"
            )


@dataclass
class CaseStats:
    """Per-case detection counts reused across thresholds and bootstrap draws."""

    patient_id: str
    lesion_sizes: np.ndarray
    lesion_diameters: np.ndarray
    found: np.ndarray  # (n_lesions, n_thresholds) bool
    fp: np.ndarray  # (n_thresholds,) int64
    dice_by_lesion: Dict[int, float] = field(default_factory=dict)

    @property
    def n_lesions(self) -> int:
        return len(self.lesion_sizes)


def _validate_thresholds(thresholds: Sequence[float]) -> Tuple[float, ...]:
    out = tuple(float(t) for t in thresholds)
    if not out:
        raise ValidationError("threshold grid must not be empty")
    if any(not 0.0 < t < 1.0 for t in out):
        raise ValidationError("thresholds must lie strictly inside (0, 1)")
    return out


def _case_stats(
    case: FrocCase,
    thresholds: Sequence[float],
    connectivity: int,
    criterion: MatchCriterion,
    dice_threshold: Optional[float],
) -> CaseStats:
    gt_cs = label_components(case.gt, connectivity)
    k = gt_cs.n_lesions
    n_t = len(thresholds)
    found = np.zeros((k, n_t), dtype=bool)
    fp = np.zeros(n_t, dtype=np.int64)
    prob = case.prob.data
    for ti, t in enumerate(thresholds):
        pred_mask = Volume((prob >= t).astype(np.uint8), case.prob.spacing_mm)
        outcome = match_lesions(gt_cs, label_components(pred_mask, connectivity), criterion)
        found[:, ti] = outcome.found[1:]
        fp[ti] = outcome.fp
    dice: Dict[int, float] = {}
    if dice_threshold is not None:
        pred_mask = Volume((prob >= dice_threshold).astype(np.uint8), case.prob.spacing_mm)
        pred_cs = label_components(pred_mask, connectivity)
        outcome = match_lesions(gt_cs, pred_cs, criterion)
        dice = object_dice(gt_cs, pred_cs, outcome)
    return CaseStats(
        patient_id=case.patient_id,
        lesion_sizes=gt_cs.lesion_sizes.copy(),
        lesion_diameters=gt_cs.lesion_diameters_mm(),
        found=found,
        fp=fp,
        dice_by_lesion=dice,
    )


def _resolve_workers(n_tasks: int, max_workers: Optional[int]) -> int:
    if max_workers is None:
        raw = os.environ.get("IWSEG_THREADS", "0")
        try:
            max_workers = int(raw)
        except ValueError as exc:
            raise ValidationError(f"IWSEG_THREADS must be an integer, got {raw!r}") from exc
    if max_workers < 0:
        raise ValidationError(f"worker count must be >= 0, got {max_workers}")
    if max_workers == 0:
        max_workers = os.cpu_count() or 1
    return max(1, min(max_workers, n_tasks))


def compute_case_stats(
    cases: Sequence[FrocCase],
    thresholds: Sequence[float],
    connectivity: int = 26,
    criterion: MatchCriterion = MatchCriterion(),
    dice_threshold: Optional[float] = None,
    max_workers: Optional[int] = None,
) -> List[CaseStats]:
    """Per-case stats, fanned out over threads; output order follows input order."""
    worker = lambda case: _case_stats(case, thresholds, connectivity, criterion, dice_threshold)
    n_workers = _resolve_workers(len(cases), max_workers)
    if n_workers == 1 or len(cases) == 1:
        return [worker(c) for c in cases]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(worker, cases))


def _sweep_counts(
    stats: Sequence[CaseStats],
    lesion_filter: Optional[Dict[str, np.ndarray]] = None,
) -> Tuple[np.ndarray, np.ndarray, int]:
    """Total FPs and found-lesion counts per threshold, plus the lesion total."""
    n_t = len(stats[0].fp)
    fp_tot = np.zeros(n_t, dtype=np.int64)
    found_tot = np.zeros(n_t, dtype=np.int64)
    n_lesions = 0
    for s in stats:
        fp_tot += s.fp
        if lesion_filter is None:
            keep = np.ones(s.n_lesions, dtype=bool)
        else:
            keep = lesion_filter[s.patient_id]
        n_lesions += int(keep.sum())
        if s.n_lesions:
            found_tot += s.found[keep, :].sum(axis=0).astype(np.int64)
    return fp_tot, found_tot, n_lesions


def _curve_from_stats(
    stats: Sequence[CaseStats],
    thresholds: Sequence[float],
    lesion_filter: Optional[Dict[str, np.ndarray]] = None,
) -> FrocCurve:
    fp_tot, found_tot, n_lesions = _sweep_counts(stats, lesion_filter)
    if n_lesions == 0:
        raise ValidationError("ground truth contains no lesions across all cases; recall undefined")
    n_cases = len(stats)
    raw_pairs = [
        (int(fp_tot[ti]) / n_cases, int(found_tot[ti]) / n_lesions)
        for ti in range(len(thresholds))
    ]
    env = _envelope(raw_pairs)
    env_set = set(env)
    raw = tuple(
        RawFrocPoint(thresholds[ti], raw_pairs[ti][0], raw_pairs[ti][1], raw_pairs[ti] in env_set)
        for ti in range(len(thresholds))
    )
    return FrocCurve(points=tuple(env), raw=raw)


def froc_curve(
    cases: Sequence[FrocCase],
    thresholds: Optional[Sequence[float]] = None,
    connectivity: int = 26,
    criterion: MatchCriterion = MatchCriterion(),
    max_workers: Optional[int] = None,
) -> FrocCurve:
    """Sweep the threshold grid over all cases and build the FROC curve."""
    if not cases:
        raise ValidationError("FROC needs at least one case")
    grid = _validate_thresholds(thresholds if thresholds is not None else DEFAULT_THRESHOLDS)
    stats = compute_case_stats(cases, grid, connectivity, criterion, None, max_workers)
    return _curve_from_stats(stats, grid)


class AverageRecall(NamedTuple):
    value: float
    recall_at_fp: Dict[float, float]


def _interpolate_recall(xs: Sequence[float], ys: Sequence[float], t: float) -> float:
    if t >= xs[-1]:
        return ys[-1]
    if t <= xs[0]:
        return ys[0]
    j = bisect_right(xs, t) - 1
    x0, y0 = xs[j], ys[j]
    x1, y1 = xs[j + 1], ys[j + 1]
    return y0 + (y1 - y0) * ((t - x0) / (x1 - x0))


def average_recall(
    curve: FrocCurve, fp_targets: Sequence[float] = DEFAULT_FP_TARGETS
) -> AverageRecall:
    """Mean recall over the FP-per-image targets, linearly interpolated.

    Below the smallest stored fp the curve is anchored at (0, 0); beyond the
    largest, the last recall is held.
    """
    if not fp_targets:
        raise ValidationError("fp_targets must not be empty")
    xs = [p.fp_per_image for p in curve.points]
    ys = [p.recall for p in curve.points]
    if xs[0] > 0.0:
        xs = [0.0] + xs
        ys = [0.0] + ys
    recalls = {float(t): _interpolate_recall(xs, ys, float(t)) for t in fp_targets}
    value = sum(recalls.values()) / len(fp_targets)
    return AverageRecall(value=value, recall_at_fp=recalls)


@dataclass(frozen=True)
class BootstrapSummary:
    mean: float
    std: float
    n_iter: int


def bootstrap_values(
    items: Sequence,
    metric: Callable[[Sequence], float],
    n_iter: int = 100,
    frac: float = 0.8,
    seed: int = 0,
    with_replacement: bool = False,
) -> np.ndarray:
    """Metric values over resampled subsets; iteration i draws with seed + i."""
    n = len(items)
    if n < 2:
        raise ValidationError("bootstrap needs at least 2 items")
    if not 0.0 < frac <= 1.0:
        raise ValidationError(f"bootstrap fraction must lie in (0, 1], got {frac}")
    if n_iter < 1:
        raise ValidationError(f"bootstrap iterations must be >= 1, got {n_iter}")
    m = math.ceil(frac * n)
    values = np.empty(n_iter, dtype=np.float64)
    for i in range(n_iter):
        rng = np.random.default_rng(seed + i)
        idx = np.sort(rng.choice(n, size=m, replace=with_replacement))
        values[i] = metric([items[j] for j in idx])
    return values


def bootstrap_summary(
    items: Sequence,
    metric: Callable[[Sequence], float],
    n_iter: int = 100,
    frac: float = 0.8,
    seed: int = 0,
    with_replacement: bool = False,
) -> BootstrapSummary:
    """Mean and population std of a metric over resampled patient subsets."""
    values = bootstrap_values(items, metric, n_iter, frac, seed, with_replacement)
    return BootstrapSummary(mean=float(values.mean()), std=float(values.std()), n_iter=n_iter)


def split_size_groups(
    diameters: Sequence[float],
    mode: str = "tertiles",
    threshold_mm: Optional[float] = None,
) -> List[str]:
    """Assign each diameter a size-group label, aligned with the input order.

    ``tertiles`` sorts stably and cuts at ranks ceil(n/3) and ceil(2n/3), so
    groups differ in size by at most one. ``clinical`` is a binary split:
    strictly under the threshold is small.
    """
    if len(diameters) == 0:
        raise ValidationError("cannot split an empty diameter list")
    if mode not in SIZE_MODES:
        raise ValidationError(f"size mode must be one of {SIZE_MODES}, got {mode!r}")
    if mode == "clinical":
        if threshold_mm is None or threshold_mm <= 0:
            raise ValidationError("clinical size mode needs a positive threshold_mm")
        return ["small" if d < threshold_mm else "large" for d in diameters]
    n = len(diameters)
    order = np.argsort(np.asarray(diameters, dtype=np.float64), kind="stable")
    c1 = math.ceil(n / 3)
    c2 = math.ceil(2 * n / 3)
    labels = [""] * n
    for rank, idx in enumerate(order):
        if rank < c1:
            labels[idx] = "small"
        elif rank < c2:
            labels[idx] = "medium"
        else:
            labels[idx] = "large"
    return labels


@dataclass(frozen=True)
class EvalConfig:
    """Everything cmd-level evaluation needs; defaults match the CLI."""

    thresholds: Optional[Tuple[float, ...]] = None
    connectivity: int = 26
    criterion: MatchCriterion = MatchCriterion()
    dice_threshold: float = 0.5
    fp_targets: Tuple[float, ...] = DEFAULT_FP_TARGETS
    bootstrap_iters: int = 100
    bootstrap_frac: float = 0.8
    bootstrap_seed: int = 0
    bootstrap_with_replacement: bool = False
    size_mode: str = "tertiles"
    clinical_threshold_mm: Optional[float] = None
    max_workers: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.dice_threshold < 1.0:
            raise ValidationError(f"dice_threshold must lie in (0, 1), got {self.dice_threshold}")
        if self.size_mode not in SIZE_MODES:
            raise ValidationError(f"size mode must be one of {SIZE_MODES}, got {self.size_mode!r}")
        if self.size_mode == "clinical" and (
            self.clinical_threshold_mm is None or self.clinical_threshold_mm <= 0
        ):
            raise ValidationError("clinical size mode needs a positive clinical_threshold_mm")
        if self.thresholds is not None:
            _validate_thresholds(self.thresholds)

    @property
    def effective_thresholds(self) -> Tuple[float, ...]:
        return self.thresholds if self.thresholds is not None else DEFAULT_THRESHOLDS

    def group_names(self) -> Tuple[str, ...]:
        return ("small", "medium", "large") if self.size_mode == "tertiles" else ("small", "large")

    def to_dict(self) -> dict:
        return {
            "thresholds": list(self.effective_thresholds),
            "connectivity": self.connectivity,
            "criterion": {"kind": self.criterion.kind, "iou_threshold": self.criterion.iou_threshold},
            "dice_threshold": self.dice_threshold,
            "fp_targets": list(self.fp_targets),
            "bootstrap": {
                "n_iter": self.bootstrap_iters,
                "frac": self.bootstrap_frac,
                "seed": self.bootstrap_seed,
                "with_replacement": self.bootstrap_with_replacement,
            },
            "size_mode": self.size_mode,
            "clinical_threshold_mm": self.clinical_threshold_mm,
        }


def _fp_key(target: float) -> str:
    return f"{target:g}"


def _dice_stats(values: Sequence[float]) -> dict:
    if not values:
        return {"mean": None, "std": None, "n": 0}
    arr = np.asarray(values, dtype=np.float64)
    return {"mean": float(arr.mean()), "std": float(arr.std()), "n": int(arr.size)}


def _nan_mean_std(values: np.ndarray) -> Tuple[Optional[float], Optional[float]]:
    finite = values[~np.isnan(values)]
    if finite.size == 0:
        return None, None
    return float(finite.mean()), float(finite.std())


@dataclass(frozen=True)
class EvalOutput:
    """Evaluation report plus the full-dataset FROC curve it was built from."""

    report: dict
    curve: FrocCurve


def evaluate_cases(cases: Sequence[FrocCase], config: EvalConfig = EvalConfig()) -> EvalOutput:
    """Full evaluation report over a case set.

    Cases are processed in patient-id order so the report is identical no
    matter how the per-case work is scheduled. The average recall is reported
    as the bootstrap mean/std; recall-at-FP comes from the full-dataset curve;
    object Dice is pooled over all found lesions at the Dice threshold.
    Size-group entries repeat the same metrics per group. Bootstrap iterations
    whose subset holds no lesion of a group are skipped for that group.
    """
    if not cases:
        raise ValidationError("evaluation needs at least one case")
    ids = [c.patient_id for c in cases]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ValidationError(f"duplicate patient ids in manifest: {dupes}")
    cases = sorted(cases, key=lambda c: c.patient_id)
    grid = config.effective_thresholds
    stats = compute_case_stats(
        cases, grid, config.connectivity, config.criterion, config.dice_threshold,
        config.max_workers,
    )
    n_lesions = int(sum(s.n_lesions for s in stats))
    if n_lesions == 0:
        raise ValidationError("ground truth contains no lesions across all cases; recall undefined")

    # Pool lesions across cases (patient order, then label order) and group by size.
    pooled: List[Tuple[str, int, float, Optional[float]]] = []
    for s in stats:
        for li in range(s.n_lesions):
            pooled.append(
                (s.patient_id, li, float(s.lesion_diameters[li]), s.dice_by_lesion.get(li + 1))
            )
    group_labels = split_size_groups(
        [d for (_, _, d, _) in pooled], config.size_mode, config.clinical_threshold_mm
    )
    group_filters: Dict[str, Dict[str, np.ndarray]] = {
        g: {s.patient_id: np.zeros(s.n_lesions, dtype=bool) for s in stats}
        for g in config.group_names()
    }
    for (pid, li, _, _), g in zip(pooled, group_labels):
        group_filters[g][pid][li] = True

    def avg_recall_metric(lesion_filter: Optional[Dict[str, np.ndarray]]):
        def metric(subset: Sequence[CaseStats]) -> float:
            fp_tot, found_tot, n_les = _sweep_counts(subset, lesion_filter)
            if n_les == 0:
                return float("nan")
            pairs = [
                (int(fp_tot[t]) / len(subset), int(found_tot[t]) / n_les)
                for t in range(len(grid))
            ]
            env = _envelope(pairs)
            curve = FrocCurve(points=tuple(env))
            return average_recall(curve, config.fp_targets).value

        return metric

    full_curve = _curve_from_stats(stats, grid)
    full_ar = average_recall(full_curve, config.fp_targets)

    if len(stats) >= 2:
        boot = bootstrap_values(
            stats,
            avg_recall_metric(None),
            config.bootstrap_iters,
            config.bootstrap_frac,
            config.bootstrap_seed,
            config.bootstrap_with_replacement,
        )
        ar_mean, ar_std = _nan_mean_std(boot)
    else:
        # A single patient cannot be resampled; fall back to the full-set value.
        ar_mean, ar_std = full_ar.value, 0.0

    report: dict = {
        "n_patients": len(stats),
        "n_lesions": n_lesions,
        "avg_recall": {"mean": ar_mean, "std": ar_std},
        "recall_at_fp": {_fp_key(t): full_ar.recall_at_fp[float(t)] for t in config.fp_targets},
        "object_dice": _dice_stats([d for (_, _, _, d) in pooled if d is not None]),
        "size_groups": {},
        "config": config.to_dict(),
    }

    for g in config.group_names():
        lesion_filter = group_filters[g]
        n_g = int(sum(int(f.sum()) for f in lesion_filter.values()))
        entry: dict = {"n_lesions": n_g}
        if n_g == 0:
            entry.update(
                {"avg_recall": {"mean": None, "std": None}, "recall_at_fp": None,
                 "object_dice": _dice_stats([])}
            )
            report["size_groups"][g] = entry
            continue
        g_curve = _curve_from_stats(stats, grid, lesion_filter)
        g_ar = average_recall(g_curve, config.fp_targets)
        if len(stats) >= 2:
            g_boot = bootstrap_values(
                stats,
                avg_recall_metric(lesion_filter),
                config.bootstrap_iters,
                config.bootstrap_frac,
                config.bootstrap_seed,
                config.bootstrap_with_replacement,
            )
            g_mean, g_std = _nan_mean_std(g_boot)
        else:
            g_mean, g_std = g_ar.value, 0.0
        entry["avg_recall"] = {"mean": g_mean, "std": g_std}
        entry["recall_at_fp"] = {
            _fp_key(t): g_ar.recall_at_fp[float(t)] for t in config.fp_targets
        }
        entry["object_dice"] = _dice_stats(
            [d for (_, _, _, d), lbl in zip(pooled, group_labels) if lbl == g and d is not None]
        )
        report["size_groups"][g] = entry

    return EvalOutput(report=report, curve=full_curve)


def write_froc_csv(curve: FrocCurve, path: PathLike) -> None:
    """Raw per-threshold FROC rows with an on-envelope flag, one per threshold."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["threshold", "avg_fp_per_image", "recall", "on_envelope"])
            for row in curve.raw:
                writer.writerow(
                    [repr(row.threshold), repr(row.fp_per_image), repr(row.recall),
                     int(row.on_envelope)]
                )
    except OSError as exc:
        raise ValidationError(f"cannot write FROC CSV to {path}: {exc}") from exc

"""Segmentation losses over probability maps, each with its analytic gradient.

Pointwise family (reduced by mean or sum):

    bce       -(y log p + (1-y) log(1-p))
    iw_bce    w * bce term, w from the inverse weight map
    focal     -(a (1-p)^g y log p + (1-a) p^g (1-y) log(1-p))
    iw_focal  w * focal term
    wce       -(W y log p + (1-y) log(1-p)),  W = (n - sum p) / sum p
              (or W from the target counts with weight_source="gt")

Global ratio family:

    dice      1 - (2 sum py + e) / (sum(p^2 + y^2) + e)
    iw_dice   same with every sum weighted by w
    asl       1 - ((1+b^2) sum py + e) / (sum(b^2 y + p) + e)
    iw_asl    same with every sum weighted by w
    gdl       two-class dice with class weights 1/(sum y_c + e), squared

Probabilities are clamped to [eps, 1-eps] before any logarithm; ratio losses
use the raw probabilities (they take no logs). Gradients are with respect to
each probability and, for the predicted-source WCE, include the dependence of
W itself on the probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ValidationError
from .volume import Volume
from .weighting import WeightMap

POINTWISE_KINDS = ("bce", "iw_bce", "focal", "iw_focal", "wce")
RATIO_KINDS = ("dice", "iw_dice", "asl", "iw_asl", "gdl")
IW_KINDS = ("iw_bce", "iw_focal", "iw_dice", "iw_asl")
LOSS_KINDS = POINTWISE_KINDS + RATIO_KINDS

REDUCTIONS = ("mean", "sum")
WCE_WEIGHT_SOURCES = ("pred", "gt")

DEFAULT_PROB_CLAMP_EPS = 1e-7
DEFAULT_DICE_EPS = 1e-6


@dataclass(frozen=True)
class LossSpec:
    """Which loss to evaluate plus its hyperparameters.

    A hyperparameter may be set only if the kind uses it: gamma/alpha belong
    to the focal losses, beta to the asymmetric similarity losses, reduction
    and weight_source to the pointwise family.
    """

    kind: str
    gamma: Optional[float] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    reduction: Optional[str] = None
    wce_weight_source: Optional[str] = None
    prob_clamp_eps: float = DEFAULT_PROB_CLAMP_EPS
    dice_eps: float = DEFAULT_DICE_EPS

    def __post_init__(self) -> None:
        if self.kind not in LOSS_KINDS:
            raise ValidationError(f"unknown loss kind {self.kind!r}; expected one of {LOSS_KINDS}")
        focal = self.kind in ("focal", "iw_focal")
        asl = self.kind in ("asl", "iw_asl")
        if focal:
            if self.gamma is None or self.alpha is None:
                raise ValidationError(f"missing hyperparameter: {self.kind} needs gamma and alpha")
            if self.gamma < 0:
                raise ValidationError(f"gamma must be >= 0, got {self.gamma}")
            if not 0.0 < self.alpha < 1.0:
                raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        else:
            if self.gamma is not None or self.alpha is not None:
                raise ValidationError(f"gamma/alpha are not used by {self.kind}")
        if asl:
            if self.beta is None:
                raise ValidationError(f"missing hyperparameter: {self.kind} needs beta")
            if self.beta <= 0:
                raise ValidationError(f"beta must be > 0, got {self.beta}")
        elif self.beta is not None:
            raise ValidationError(f"beta is not used by {self.kind}")
        if self.reduction is not None:
            if self.kind not in POINTWISE_KINDS:
                raise ValidationError(f"reduction does not apply to the global loss {self.kind}")
            if self.reduction not in REDUCTIONS:
                raise ValidationError(f"reduction must be one of {REDUCTIONS}, got {self.reduction!r}")
        if self.wce_weight_source is not None:
            if self.kind != "wce":
                raise ValidationError(f"wce_weight_source is not used by {self.kind}")
            if self.wce_weight_source not in WCE_WEIGHT_SOURCES:
                raise ValidationError(
                    f"wce_weight_source must be one of {WCE_WEIGHT_SOURCES}, got {self.wce_weight_source!r}"
                )
        if not 0.0 < self.prob_clamp_eps < 0.5:
            raise ValidationError(f"prob_clamp_eps must lie in (0, 0.5), got {self.prob_clamp_eps}")
        if self.dice_eps < 0.0:
            raise ValidationError(f"dice_eps must be >= 0, got {self.dice_eps}")

    @property
    def effective_reduction(self) -> str:
        return self.reduction or "mean"

    @property
    def effective_wce_source(self) -> str:
        return self.wce_weight_source or "pred"

    @property
    def uses_weight_map(self) -> bool:
        return self.kind in IW_KINDS

    def hyperparams(self) -> dict:
        out: dict = {"prob_clamp_eps": self.prob_clamp_eps, "dice_eps": self.dice_eps}
        if self.kind in ("focal", "iw_focal"):
            out["gamma"] = self.gamma
            out["alpha"] = self.alpha
        if self.kind in ("asl", "iw_asl"):
            out["beta"] = self.beta
        if self.kind in POINTWISE_KINDS:
            out["reduction"] = self.effective_reduction
        if self.kind == "wce":
            out["wce_weight_source"] = self.effective_wce_source
        return out


@dataclass(frozen=True)
class LossResult:
    """Scalar loss value and its gradient with respect to every probability."""

    value: float
    grad: Volume


def _validate_inputs(
    spec: LossSpec, p: Volume, y: Volume, w: Optional[WeightMap]
) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    if p.shape != y.shape:
        raise ValidationError(f"shape mismatch: pred {p.shape} vs target {y.shape}")
    if p.data.dtype.kind != "f":
        raise ValidationError(f"probability map must be floating point, got {p.dtype_name}")
    if y.data.dtype != np.uint8 or y.data.max(initial=0) > 1:
        raise ValidationError("target must be a binary u8 mask")
    pf = p.data.astype(np.float64)
    if pf.min() < 0.0 or pf.max() > 1.0:
        raise ValidationError("probabilities must lie in [0, 1]")
    if spec.uses_weight_map:
        if w is None:
            raise ValidationError(f"missing weight map: {spec.kind} requires one")
        if w.weights.shape != p.shape:
            raise ValidationError(
                f"shape mismatch: weight map {w.weights.shape} vs pred {p.shape}"
            )
        return pf, y.data.astype(np.float64), w.weights.data
    if w is not None:
        raise ValidationError(f"weight map is not used by {spec.kind}")
    return pf, y.data.astype(np.float64), None


def _pointwise_terms(
    spec: LossSpec, pf: np.ndarray, yf: np.ndarray, wf: Optional[np.ndarray]
) -> Tuple[np.ndarray, np.ndarray]:
    """Elementwise loss terms and their derivatives, before reduction."""
    eps = spec.prob_clamp_eps
    pc = np.clip(pf, eps, 1.0 - eps)
    log_p = np.log(pc)
    log_1p = np.log1p(-pc)

    if spec.kind in ("bce", "iw_bce"):
        elem = -(yf * log_p + (1.0 - yf) * log_1p)
        delem = -yf / pc + (1.0 - yf) / (1.0 - pc)
    elif spec.kind in ("focal", "iw_focal"):
        a = float(spec.alpha)
        g = float(spec.gamma)
        one_m = 1.0 - pc
        t1 = one_m**g * log_p
        t0 = pc**g * log_1p
        elem = -(a * yf * t1 + (1.0 - a) * (1.0 - yf) * t0)
        # g * x**(g-1) is 0 at g == 0 because pc stays strictly inside (0, 1).
        dt1 = -g * one_m ** (g - 1.0) * log_p + one_m**g / pc
        dt0 = g * pc ** (g - 1.0) * log_1p - pc**g / one_m
        delem = -(a * yf * dt1 + (1.0 - a) * (1.0 - yf) * dt0)
    elif spec.kind == "wce":
        n = float(pf.size)
        if spec.effective_wce_source == "pred":
            s = float(np.sum(pf))
            if s == 0.0:
                raise ValidationError("degenerate WCE weight: predicted probabilities sum to zero")
            wsc = (n - s) / s
        else:
            s = float(np.sum(yf))
            if s == 0.0:
                raise ValidationError("degenerate WCE weight: target has no foreground")
            wsc = (n - s) / s
        elem = -(wsc * yf * log_p + (1.0 - yf) * log_1p)
        delem = -wsc * yf / pc + (1.0 - yf) / (1.0 - pc)
        if spec.effective_wce_source == "pred":
            # W depends on the probabilities: dW/dp_j = -n / s^2 for every j.
            delem = delem + (n / s**2) * float(np.sum(yf * log_p))
    else:  # pragma: no cover - guarded by LossSpec validation
        raise ValidationError(f"{spec.kind} is not a pointwise loss")

    if wf is not None:
        elem = wf * elem
        delem = wf * delem
    return elem, delem


def _evaluate_pointwise(
    spec: LossSpec, pf: np.ndarray, yf: np.ndarray, wf: Optional[np.ndarray]
) -> Tuple[float, np.ndarray]:
    elem, delem = _pointwise_terms(spec, pf, yf, wf)
    if spec.effective_reduction == "mean":
        return float(elem.mean()), delem / elem.size
    return float(elem.sum()), delem


def _evaluate_ratio(
    spec: LossSpec, pf: np.ndarray, yf: np.ndarray, wf: Optional[np.ndarray]
) -> Tuple[float, np.ndarray]:
    eps = spec.dice_eps
    kind = spec.kind
    if kind in ("dice", "iw_dice"):
        wv = wf if wf is not None else 1.0
        num = 2.0 * float(np.sum(wv * pf * yf)) + eps
        den = float(np.sum(wv * (pf * pf + yf * yf))) + eps
        scale = wf if wf is not None else np.ones_like(pf)
        grad = 2.0 * scale * (num * pf - den * yf) / (den * den)
    elif kind in ("asl", "iw_asl"):
        b2 = float(spec.beta) ** 2
        wv = wf if wf is not None else 1.0
        num = (1.0 + b2) * float(np.sum(wv * pf * yf)) + eps
        den = float(np.sum(wv * (b2 * yf + pf))) + eps
        scale = wf if wf is not None else np.ones_like(pf)
        grad = scale * (num - (1.0 + b2) * yf * den) / (den * den)
    elif kind == "gdl":
        p0 = 1.0 - pf
        y0 = 1.0 - yf
        w1 = 1.0 / (float(np.sum(yf)) + eps)
        w0 = 1.0 / (float(np.sum(y0)) + eps)
        num = 2.0 * (w1 * w1 * float(np.sum(pf * yf)) + w0 * w0 * float(np.sum(p0 * y0))) + eps
        den = (
            w1 * w1 * float(np.sum(pf * pf + yf * yf))
            + w0 * w0 * float(np.sum(p0 * p0 + y0 * y0))
            + eps
        )
        dnum = 2.0 * (w1 * w1 * yf - w0 * w0 * y0)
        dden = 2.0 * (w1 * w1 * pf - w0 * w0 * p0)
        grad = (num * dden - dnum * den) / (den * den)
    else:  # pragma: no cover - guarded by LossSpec validation
        raise ValidationError(f"{kind} is not a ratio loss")
    value = 1.0 - num / den
    return value, grad


def evaluate_loss(
    spec: LossSpec, p: Volume, y: Volume, w: Optional[WeightMap] = None
) -> LossResult:
    """Evaluate a loss and its gradient with respect to the probability map.

    ``w`` is required for the iw_* kinds and rejected for all others.
    """
    pf, yf, wf = _validate_inputs(spec, p, y, w)
    if spec.kind in POINTWISE_KINDS:
        value, grad = _evaluate_pointwise(spec, pf, yf, wf)
    else:
        value, grad = _evaluate_ratio(spec, pf, yf, wf)
    return LossResult(value=float(value), grad=Volume(grad, p.spacing_mm))


def component_contributions(
    spec: LossSpec, p: Volume, y: Volume, w: WeightMap
) -> np.ndarray:
    """Per-component sums of a weighted pointwise loss (iw_bce or iw_focal).

    Entry k is the summed contribution of component k's voxels to the loss
    value, scaled by the active reduction, so the entries add up to the value.
    With equal-mass weights and a constant correct-class probability the
    entries of nonempty components are identical.
    """
    if spec.kind not in ("iw_bce", "iw_focal"):
        raise ValidationError(f"component breakdown applies to iw_bce/iw_focal, not {spec.kind}")
    pf, yf, wf = _validate_inputs(spec, p, y, w)
    elem, _ = _pointwise_terms(spec, pf, yf, wf)
    if spec.effective_reduction == "mean":
        elem = elem / elem.size
    labels = w.components.labels
    if labels.shape != p.shape:
        raise ValidationError("weight map components do not match the probability map shape")
    return np.bincount(
        labels.ravel(), weights=elem.ravel(), minlength=w.components.n_lesions + 1
    )

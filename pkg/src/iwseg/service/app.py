"""FastAPI service wrapping the core package.

Every endpoint takes paths on the service's filesystem plus parameters, runs
the corresponding core operation, optionally writes output files, and returns
a JSON summary. Input/contract violations surface as HTTP 400 with a one-line
detail; anything else is a 500.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..detection import EvalConfig, MatchCriterion, evaluate_cases, write_froc_csv
from ..errors import ValidationError
from ..losses import LossSpec, component_contributions, evaluate_loss
from ..manifest import load_cases, load_manifest
from ..nifti import load_nifti
from ..sampler import PatchSampler, PatchSpec
from ..volume import PreprocessConfig, Volume, crop, load_vol, preprocess, save_vol
from ..weighting import inverse_weight_map
from . import schemas


def _load_any(path: str) -> Volume:
    """Dispatch on extension: .nii loads as NIfTI, everything else as VOL."""
    if path.endswith(".nii"):
        return load_nifti(path)
    return load_vol(path)


def create_app() -> FastAPI:
    app = FastAPI(title="iwseg", version=__version__)

    @app.exception_handler(ValidationError)
    async def _validation_handler(request: Request, exc: ValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/v1/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/v1/weights", response_model=schemas.WeightsResponse)
    def weights(req: schemas.WeightsRequest) -> schemas.WeightsResponse:
        mask = load_vol(req.mask)
        if (req.origin is None) != (req.size is None):
            raise ValidationError("origin and size must be given together")
        if req.origin is not None:
            if req.whole_image:
                wm = inverse_weight_map(mask, req.connectivity)
                weights_vol = crop(wm.weights, req.origin, req.size)
            else:
                wm = inverse_weight_map(crop(mask, req.origin, req.size), req.connectivity)
                weights_vol = wm.weights
        else:
            wm = inverse_weight_map(mask, req.connectivity)
            weights_vol = wm.weights
        if req.out:
            save_vol(weights_vol.astype("f32"), req.out)
        return schemas.WeightsResponse(
            component_weights={str(k): float(w) for k, w in enumerate(wm.component_weights)},
            n_lesions=wm.components.n_lesions,
            n_voxels=weights_vol.n_voxels,
            sum_weights=float(weights_vol.data.sum()),
            out=req.out,
        )

    @app.post("/v1/loss", response_model=schemas.LossResponse)
    def loss(req: schemas.LossRequest) -> schemas.LossResponse:
        spec = LossSpec(
            kind=req.loss,
            gamma=req.gamma,
            alpha=req.alpha,
            beta=req.beta,
            reduction=req.reduction,
            wce_weight_source=req.wce_weight_source,
            prob_clamp_eps=req.prob_clamp_eps,
            dice_eps=req.dice_eps,
        )
        pred = load_vol(req.pred)
        target = load_vol(req.target)
        wm = inverse_weight_map(target, req.connectivity) if spec.uses_weight_map else None
        result = evaluate_loss(spec, pred, target, wm)
        contributions = None
        if spec.kind in ("iw_bce", "iw_focal"):
            contributions = component_contributions(spec, pred, target, wm).tolist()
        grad_path = None
        if req.grad_out:
            save_vol(result.grad.astype("f32"), req.grad_out)
            grad_path = req.grad_out
        return schemas.LossResponse(
            kind=spec.kind,
            hyperparams=spec.hyperparams(),
            value=result.value,
            grad_path=grad_path,
            component_contributions=contributions,
        )

    @app.post("/v1/eval", response_model=schemas.EvalResponse)
    def eval_cases(req: schemas.EvalRequest) -> schemas.EvalResponse:
        manifest = load_manifest(req.manifest)
        cases = load_cases(manifest)
        config = EvalConfig(
            thresholds=tuple(req.thresholds) if req.thresholds is not None else None,
            connectivity=req.connectivity,
            criterion=MatchCriterion(kind=req.criterion, iou_threshold=req.iou_threshold),
            dice_threshold=req.dice_threshold,
            bootstrap_iters=req.bootstrap.n_iter,
            bootstrap_frac=req.bootstrap.frac,
            bootstrap_seed=req.bootstrap.seed,
            bootstrap_with_replacement=req.bootstrap.with_replacement,
            size_mode=req.size_mode,
            clinical_threshold_mm=req.clinical_threshold_mm,
        )
        output = evaluate_cases(cases, config)
        if req.out:
            try:
                Path(req.out).write_text(
                    json.dumps(output.report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
                )
            except OSError as exc:
                raise ValidationError(f"cannot write report to {req.out}: {exc}") from exc
        if req.froc_csv:
            write_froc_csv(output.curve, req.froc_csv)
        return schemas.EvalResponse(**output.report)

    @app.post("/v1/convert", response_model=schemas.ConvertResponse)
    def convert(req: schemas.ConvertRequest) -> schemas.ConvertResponse:
        vol = load_nifti(req.nifti)
        organ_mask = None
        if req.mask:
            organ_mask = _load_any(req.mask)
        elif req.fill is not None:
            raise ValidationError("fill requires an organ mask")
        if req.clip is not None or organ_mask is not None or req.scale:
            config = PreprocessConfig(
                clip_lo=req.clip[0] if req.clip else None,
                clip_hi=req.clip[1] if req.clip else None,
                outside_fill=req.fill,
                rescale=req.scale,
            )
            vol = preprocess(vol, config, organ_mask)
        save_vol(vol, req.out)
        return schemas.ConvertResponse(
            out=req.out,
            shape=vol.shape,
            dtype=vol.dtype_name,
            spacing_mm=vol.spacing_mm,
            min=float(vol.data.min()),
            max=float(vol.data.max()),
        )

    @app.post("/v1/sizes", response_model=schemas.SizesResponse)
    def sizes(req: schemas.SizesRequest) -> schemas.SizesResponse:
        from ..components import equivalent_diameter, label_components
        from ..detection import split_size_groups

        if not req.masks:
            raise ValidationError("no mask files given")
        rows = []
        for mask_path in req.masks:
            comps = label_components(_load_any(mask_path), req.connectivity)
            for k in range(1, comps.n_lesions + 1):
                voxels = int(comps.sizes[k])
                rows.append(
                    {
                        "mask": mask_path,
                        "component": k,
                        "voxels": voxels,
                        "diameter_mm": equivalent_diameter(voxels, comps.spacing_mm),
                    }
                )
        groups = (
            split_size_groups([r["diameter_mm"] for r in rows], req.mode, req.threshold_mm)
            if rows
            else []
        )
        return schemas.SizesResponse(
            rows=[schemas.SizeRow(**row, group=g) for row, g in zip(rows, groups)]
        )

    @app.post("/v1/sample", response_model=schemas.SampleResponse)
    def sample(req: schemas.SampleRequest) -> schemas.SampleResponse:
        if req.n < 1:
            raise ValidationError(f"number of patches must be >= 1, got {req.n}")
        image = load_vol(req.image)
        mask = load_vol(req.mask)
        spec = PatchSpec(
            size=req.size, lesion_prob=req.lesion_prob, pad_value=req.pad_value, seed=req.seed
        )
        sampler = PatchSampler(spec)
        entries = []
        for k in range(req.n):
            img_patch, msk_patch, origin = sampler.sample(image, mask)
            img_path = f"{req.prefix}_img_{k}"
            msk_path = f"{req.prefix}_msk_{k}"
            save_vol(img_patch, img_path)
            save_vol(msk_patch, msk_path)
            entries.append(
                schemas.SampleEntry(
                    index=k,
                    origin=origin,
                    image=img_path + ".volhdr",
                    mask=msk_path + ".volhdr",
                    lesion_voxels=int(msk_patch.data.sum()),
                )
            )
        index_path = f"{req.prefix}_index.json"
        index = {
            "seed": req.seed,
            "size": list(spec.size),
            "lesion_prob": req.lesion_prob,
            "pad_value": req.pad_value,
            "entries": [e.model_dump() for e in entries],
        }
        try:
            Path(index_path).write_text(
                json.dumps(index, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
        except OSError as exc:
            raise ValidationError(f"cannot write sample index to {index_path}: {exc}") from exc
        return schemas.SampleResponse(entries=entries, index_path=index_path, seed=req.seed)

    return app

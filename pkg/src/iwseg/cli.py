"""Command-line interface.

Each subcommand builds a request, sends it to the service (in-process by
default, or a remote server via ``--server``), and prints the JSON response to
stdout (``sizes`` prints CSV). Exit codes: 0 success, 2 usage or validation
failure, 3 internal error.
"""

from __future__ import annotations

import csv
import glob as globlib
import json
import sys
from typing import Optional, Sequence

import click
import httpx

from . import __version__
from .service.client import ServiceClient


def _parse_thresholds(ctx, param, value: Optional[str]):
    if value is None:
        return None
    try:
        return [float(tok) for tok in value.split(",") if tok.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"thresholds must be comma-separated floats: {exc}")


def _call(ctx: click.Context, path: str, payload: dict) -> dict:
    client = ServiceClient(server=ctx.obj.get("server"))
    try:
        status, body = client.post(path, payload)
    except httpx.HTTPError as exc:
        click.echo(f"error: cannot reach service: {exc}", err=True)
        sys.exit(2)
    if status == 200:
        return body
    detail = body.get("detail", body)
    if isinstance(detail, list):
        detail = "; ".join(
            f"{'.'.join(str(loc) for loc in item.get('loc', []))}: {item.get('msg')}"
            for item in detail
        )
    click.echo(f"error: {detail}", err=True)
    sys.exit(2 if status < 500 else 3)


def _emit(body: dict) -> None:
    click.echo(json.dumps(body, indent=2, sort_keys=True))


@click.group()
@click.version_option(version=__version__, prog_name="iwseg")
@click.option(
    "--server",
    envvar="IWSEG_SERVER",
    default=None,
    help="Base URL of a running iwseg service; defaults to running in-process.",
)
@click.pass_context
def main(ctx: click.Context, server: Optional[str]) -> None:
    """Inverse-weight maps, segmentation losses, and detection evaluation for 3D volumes."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@click.option("--mask", required=True, help="Binary mask VOL (header path or stem).")
@click.option("--out", default=None, help="Write the weight map here as an f32 VOL.")
@click.option("--connectivity", type=click.Choice(["6", "18", "26"]), default="26")
@click.option(
    "--whole-image",
    is_flag=True,
    help="With --origin/--size: weight the full mask first, then crop the map.",
)
@click.option("--origin", nargs=3, type=int, default=None, help="Patch origin (z y x).")
@click.option("--size", nargs=3, type=int, default=None, help="Patch size (z y x).")
@click.pass_context
def weights(ctx, mask, out, connectivity, whole_image, origin, size) -> None:
    """Compute the inverse weight map of a binary mask."""
    payload = {
        "mask": mask,
        "out": out,
        "connectivity": int(connectivity),
        "whole_image": whole_image,
        "origin": list(origin) if origin else None,
        "size": list(size) if size else None,
    }
    _emit(_call(ctx, "/v1/weights", payload))


@main.command()
@click.option("--pred", required=True, help="Probability map VOL (f32/f64).")
@click.option("--target", required=True, help="Binary target mask VOL (u8).")
@click.option("--loss", "loss_kind", required=True, help="Loss kind, e.g. dice or iw_bce.")
@click.option("--gamma", type=float, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--beta", type=float, default=None)
@click.option("--reduction", type=click.Choice(["mean", "sum"]), default=None)
@click.option("--wce-weight-source", type=click.Choice(["pred", "gt"]), default=None)
@click.option("--prob-clamp-eps", type=float, default=1e-7)
@click.option("--dice-eps", type=float, default=1e-6)
@click.option("--connectivity", type=click.Choice(["6", "18", "26"]), default="26")
@click.option("--grad-out", default=None, help="Write the gradient here as an f32 VOL.")
@click.pass_context
def loss(ctx, pred, target, loss_kind, gamma, alpha, beta, reduction, wce_weight_source,
         prob_clamp_eps, dice_eps, connectivity, grad_out) -> None:
    """Evaluate a loss (value and gradient) on a prediction/target pair."""
    payload = {
        "pred": pred,
        "target": target,
        "loss": loss_kind,
        "gamma": gamma,
        "alpha": alpha,
        "beta": beta,
        "reduction": reduction,
        "wce_weight_source": wce_weight_source,
        "prob_clamp_eps": prob_clamp_eps,
        "dice_eps": dice_eps,
        "connectivity": int(connectivity),
        "grad_out": grad_out,
    }
    _emit(_call(ctx, "/v1/loss", payload))


@main.command(name="eval")
@click.option("--manifest", required=True, help="Manifest JSON with patient/pred/target entries.")
@click.option("--out", default=None, help="Also write the report JSON here.")
@click.option("--froc-csv", default=None, help="Write raw FROC points (CSV) here.")
@click.option("--thresholds", callback=_parse_thresholds, default=None,
              help="Comma-separated threshold grid inside (0, 1).")
@click.option("--criterion", type=click.Choice(["overlap", "iou"]), default="overlap")
@click.option("--iou-threshold", type=float, default=0.5)
@click.option("--connectivity", type=click.Choice(["6", "18", "26"]), default="26")
@click.option("--dice-threshold", type=float, default=0.5,
              help="Binarization threshold for object Dice.")
@click.option("--bootstrap-seed", type=int, default=0)
@click.option("--bootstrap-iters", type=int, default=100)
@click.option("--bootstrap-frac", type=float, default=0.8)
@click.option("--with-replacement", is_flag=True, help="Bootstrap draws with replacement.")
@click.option("--size-mode", type=click.Choice(["tertiles", "clinical"]), default="tertiles")
@click.option("--threshold-mm", type=float, default=None,
              help="Small/large cut for --size-mode clinical.")
@click.pass_context
def eval_cmd(ctx, manifest, out, froc_csv, thresholds, criterion, iou_threshold, connectivity,
             dice_threshold, bootstrap_seed, bootstrap_iters, bootstrap_frac, with_replacement,
             size_mode, threshold_mm) -> None:
    """Detection/delineation evaluation over a manifest of cases."""
    payload = {
        "manifest": manifest,
        "out": out,
        "froc_csv": froc_csv,
        "thresholds": thresholds,
        "criterion": criterion,
        "iou_threshold": iou_threshold,
        "connectivity": int(connectivity),
        "dice_threshold": dice_threshold,
        "bootstrap": {
            "n_iter": bootstrap_iters,
            "frac": bootstrap_frac,
            "seed": bootstrap_seed,
            "with_replacement": with_replacement,
        },
        "size_mode": size_mode,
        "clinical_threshold_mm": threshold_mm,
    }
    _emit(_call(ctx, "/v1/eval", payload))


@main.command()
@click.option("--nifti", required=True, help="Uncompressed single-file NIfTI-1 (.nii).")
@click.option("--out", required=True, help="Output VOL path (header path or stem).")
@click.option("--clip", nargs=2, type=float, default=None, help="Clip range (lo hi).")
@click.option("--mask", default=None, help="Organ mask (.nii or VOL); zeros are filled.")
@click.option("--fill", type=float, default=None, help="Fill value outside the organ mask.")
@click.option("--scale", is_flag=True, help="Min-max rescale to [0, 1] after clip/fill.")
@click.pass_context
def convert(ctx, nifti, out, clip, mask, fill, scale) -> None:
    """Convert a NIfTI volume to the VOL format, optionally preprocessing it."""
    payload = {
        "nifti": nifti,
        "out": out,
        "clip": list(clip) if clip else None,
        "mask": mask,
        "fill": fill,
        "scale": scale,
    }
    _emit(_call(ctx, "/v1/convert", payload))


@main.command()
@click.option("--masks", required=True, help="Glob of mask volumes (VOL headers or .nii).")
@click.option("--mode", type=click.Choice(["tertiles", "clinical"]), default="tertiles")
@click.option("--threshold-mm", type=float, default=None)
@click.option("--connectivity", type=click.Choice(["6", "18", "26"]), default="26")
@click.pass_context
def sizes(ctx, masks, mode, threshold_mm, connectivity) -> None:
    """Per-lesion equivalent diameters and size groups, as CSV on stdout."""
    files = sorted(globlib.glob(masks))
    if not files:
        click.echo(f"error: no files match {masks!r}", err=True)
        sys.exit(2)
    payload = {
        "masks": files,
        "mode": mode,
        "threshold_mm": threshold_mm,
        "connectivity": int(connectivity),
    }
    body = _call(ctx, "/v1/sizes", payload)
    writer = csv.writer(sys.stdout)
    writer.writerow(["mask", "component", "voxels", "diameter_mm", "group"])
    for row in body["rows"]:
        writer.writerow(
            [row["mask"], row["component"], row["voxels"], repr(row["diameter_mm"]), row["group"]]
        )


@main.command()
@click.option("--image", required=True, help="Image VOL.")
@click.option("--mask", required=True, help="Binary mask VOL.")
@click.option("--prefix", required=True, help="Output prefix for patch files and the index JSON.")
@click.option("--n", type=int, default=1, help="Number of patches to draw.")
@click.option("--seed", type=int, default=0)
@click.option("--size", nargs=3, type=int, default=(128, 128, 128), help="Patch size (z y x).")
@click.option("--lesion-prob", type=float, default=0.5)
@click.option("--pad-value", type=float, default=0.0)
@click.pass_context
def sample(ctx, image, mask, prefix, n, seed, size, lesion_prob, pad_value) -> None:
    """Draw lesion-biased patches and write them as VOL pairs plus an index."""
    payload = {
        "image": image,
        "mask": mask,
        "prefix": prefix,
        "n": n,
        "seed": seed,
        "size": list(size),
        "lesion_prob": lesion_prob,
        "pad_value": pad_value,
    }
    _emit(_call(ctx, "/v1/sample", payload))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()

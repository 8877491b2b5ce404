"""Batch entry points for every pipeline stage.

Each subcommand is a thin wrapper over one module operation; artifacts are
heightfield PNG+sidecar files, latent files, or JSON reports. Exit codes:
0 success, 2 usage error, 1 operation error with a JSON diagnostic on
stderr. `--seed` makes every command deterministic.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np


def _fail(exc: Exception) -> None:
    diagnostic = {"error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(diagnostic), err=True)
    sys.exit(1)


def operation(fn):
    """Convert operation failures into exit 1 + JSON diagnostic."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except Exception as exc:  # noqa: BLE001 - CLI boundary
            _fail(exc)

    return wrapper


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    return json.loads(Path(path).read_text())


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="JSON config file with defaults.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed controlling all randomness in the command.")
@click.option("--verbose", is_flag=True, help="Chatty progress output.")
@click.pass_context
def main(ctx, config_path, seed, verbose):
    """Terrain synthesis and authoring pipeline."""
    ctx.ensure_object(dict)
    ctx.obj["config"] = _load_config(config_path)
    ctx.obj["seed"] = seed
    ctx.obj["verbose"] = verbose


def _say(ctx, message):
    if ctx.obj.get("verbose"):
        click.echo(message)


def _resolve_bundle_dir(ctx, given: str | None) -> str:
    """--bundle on the command line, falling back to bundle_dir from the
    global --config file."""
    if given is not None:
        return given
    from_config = ctx.obj["config"].get("bundle_dir")
    if from_config is None:
        raise click.UsageError(
            "--bundle is required (or set bundle_dir in the --config file)")
    return from_config


# -- dataset -------------------------------------------------------------------

@main.group()
def dataset():
    """Training-corpus construction."""


@dataset.command("build")
@click.option("--input", "input_dir", type=click.Path(exists=True), default=None,
              help="Directory of heightfield PNGs; omitted = synthetic fBm corpus.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--target-per-class", type=int, default=20, show_default=True)
@click.option("--resolution", type=int, default=64, show_default=True)
@click.option("--synthetic-count", type=int, default=256, show_default=True)
@click.pass_context
@operation
def dataset_build(ctx, input_dir, out_dir, target_per_class, resolution,
                  synthetic_count):
    """Build a balanced manifest from real or synthetic tiles."""
    from .dataset import build_dataset

    manifest = build_dataset(out_dir, resolution=resolution,
                             seed=ctx.obj["seed"],
                             target_per_class=target_per_class,
                             input_dir=input_dir,
                             synthetic_count=synthetic_count)
    _say(ctx, f"classes: {manifest.class_counts}")
    click.echo(f"{len(manifest.tiles)} tiles -> {out_dir}/manifest.json")


# -- training ------------------------------------------------------------------

@main.group()
def train():
    """Network training."""


@train.command("gan")
@click.option("--data", "manifest_path", type=click.Path(exists=True),
              required=True, help="manifest.json from `dataset build`.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--steps", type=int, default=2000, show_default=True)
@click.option("--batch-size", type=int, default=8, show_default=True)
@click.option("--resolution", type=int, default=64, show_default=True)
@click.option("--latent-dim", type=int, default=128, show_default=True)
@click.option("--scale-tag", type=str, default="30m", show_default=True)
@click.pass_context
@operation
def train_gan(ctx, manifest_path, out_dir, steps, batch_size, resolution,
              latent_dim, scale_tag):
    """Adversarial training of the terrain generator."""
    from .dataset import DatasetManifest
    from .networks import GanTrainConfig, ModelConfig, save_bundle, train_generator

    manifest = DatasetManifest.load(manifest_path)
    model_cfg = ModelConfig(resolution=resolution, latent_dim=latent_dim,
                            scale_tag=scale_tag)
    bundle, log = train_generator(
        manifest, model_cfg,
        GanTrainConfig(steps=steps, batch_size=batch_size,
                       seed=ctx.obj["seed"], checkpoint_dir=out_dir))
    version = save_bundle(bundle, out_dir)
    if log.diverged:
        click.echo("training diverged; last good checkpoint kept", err=True)
    click.echo(f"{log.steps_completed} steps in {log.seconds:.0f}s -> "
               f"{out_dir} ({version})")


@train.command("encoder")
@click.option("--bundle", "bundle_dir", type=click.Path(), default=None,
              help="Bundle directory; falls back to bundle_dir from --config.")
@click.option("--pairs", type=int, default=2000, show_default=True)
@click.option("--epochs", type=int, default=10, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Defaults to updating the bundle in place.")
@click.pass_context
@operation
def train_encoder_cmd(ctx, bundle_dir, pairs, epochs, out_dir):
    """Train the inversion encoder on generator-sampled pairs."""
    from .networks import (EncoderTrainConfig, load_bundle, save_bundle,
                           train_encoder)

    bundle = load_bundle(_resolve_bundle_dir(ctx, bundle_dir))
    bundle, log = train_encoder(
        bundle, n_pairs=pairs,
        config=EncoderTrainConfig(epochs=epochs, seed=ctx.obj["seed"]))
    version = save_bundle(bundle, out_dir or bundle_dir)
    click.echo(f"held-out reconstruction RMSE {log.rmse_final:.4f} "
               f"(init {log.rmse_init:.4f}) -> {out_dir or bundle_dir} "
               f"({version})")


# -- generation and latent ops ---------------------------------------------------

@main.command()
@click.option("--bundle", "bundle_dir", type=click.Path(), default=None,
              help="Bundle directory; falls back to bundle_dir from --config.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--latent", "latent_path", type=click.Path(exists=True),
              default=None, help="Synthesize this latent instead of sampling.")
@click.option("--save-latent", type=click.Path(), default=None)
@click.option("--min-m", type=float, default=0.0, show_default=True)
@click.option("--max-m", type=float, default=1000.0, show_default=True)
@click.option("--cell-size", type=float, default=30.0, show_default=True)
@click.pass_context
@operation
def generate(ctx, bundle_dir, out_path, latent_path, save_latent, min_m,
             max_m, cell_size):
    """Sample (or re-synthesize) a terrain from a bundle."""
    from .heightfield import NormalizedField, denormalize, save_heightfield
    from .latent import load_latent, save_latent as write_latent
    from .networks import load_bundle, sample_wplus, synthesize

    bundle = load_bundle(_resolve_bundle_dir(ctx, bundle_dir))
    seed = ctx.obj["seed"]
    if latent_path is not None:
        w, _ = load_latent(latent_path)
    else:
        w = sample_wplus(bundle, 1, seed=seed)[0]
    field = synthesize(w, bundle, noise_seed=seed)
    scaled = NormalizedField(values=field.values, min_m=min_m, max_m=max_m)
    save_heightfield(denormalize(scaled, cell_size=cell_size), out_path)
    if save_latent is not None:
        write_latent(w, save_latent, bundle_version=bundle.version)
    click.echo(out_path)


@main.command("encode")
@click.option("--bundle", "bundle_dir", type=click.Path(), default=None,
              help="Bundle directory; falls back to bundle_dir from --config.")
@click.option("--input", "input_path", type=click.Path(exists=True),
              required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.pass_context
@operation
def encode_cmd(ctx, bundle_dir, input_path, out_path):
    """Invert a heightfield into a latent file."""
    from .heightfield import load_heightfield, normalize, resample
    from .latent import save_latent
    from .networks import encode, load_bundle

    bundle = load_bundle(_resolve_bundle_dir(ctx, bundle_dir))
    terrain = load_heightfield(input_path)
    res = bundle.config.resolution
    if terrain.width != res or terrain.height != res:
        terrain = resample(terrain, res, res)
    w = encode(normalize(terrain), bundle)
    save_latent(w, out_path, bundle_version=bundle.version)
    click.echo(out_path)


@main.command()
@click.option("--u", "u_path", type=click.Path(exists=True), required=True,
              help="Structure source latent.")
@click.option("--v", "v_path", type=click.Path(exists=True), required=True,
              help="Detail source latent.")
@click.option("--index", type=int, required=True,
              help="Crossover layer index in [0, L].")
@click.option("--out", "out_path", type=click.Path(), required=True)
@operation
def mix(u_path, v_path, index, out_path):
    """Style-mix two latents at a crossover index."""
    from .latent import StyleMixSpec, load_latent, save_latent, style_mix

    u, u_version = load_latent(u_path)
    v, _ = load_latent(v_path)
    out = style_mix(StyleMixSpec(index, u, v))
    save_latent(out, out_path, bundle_version=u_version)
    click.echo(out_path)


@main.command("interpolate")
@click.option("--u", "u_path", type=click.Path(exists=True), required=True)
@click.option("--v", "v_path", type=click.Path(exists=True), required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@operation
def interpolate_cmd(u_path, v_path, alpha, out_path):
    """Affine blend of two latents."""
    from .latent import interpolate, load_latent, save_latent

    u, u_version = load_latent(u_path)
    v, _ = load_latent(v_path)
    out = interpolate(u, v, alpha)
    save_latent(out, out_path, bundle_version=u_version)
    click.echo(out_path)


@main.command()
@click.option("--a", "a_path", type=click.Path(exists=True), required=True)
@click.option("--b", "b_path", type=click.Path(exists=True), required=True)
@click.option("--mask", "mask_path", type=click.Path(exists=True),
              required=True, help="Grayscale PNG; white takes terrain B.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@operation
def blend(a_path, b_path, mask_path, out_path):
    """Altitude-domain regional blend of two terrains through a mask."""
    from .heightfield import (RegionMask, decode_png16, load_heightfield,
                              save_heightfield)
    from .latent import region_blend

    a = load_heightfield(a_path)
    b = load_heightfield(b_path)
    mask = RegionMask(alpha=decode_png16(Path(mask_path).read_bytes()))
    save_heightfield(region_blend(a, b, mask), out_path)
    click.echo(out_path)


# -- super-resolution ------------------------------------------------------------

@main.command("amplify")
@click.option("--input", "input_path", type=click.Path(exists=True),
              required=True)
@click.option("--bundle", "bundle_dir", type=click.Path(), default=None,
              help="Bundle directory; falls back to bundle_dir from --config.")
@click.option("--upscale", type=int, required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--debug-dir", type=click.Path(), default=None,
              help="Dump per-patch intermediates for inspection.")
@click.pass_context
@operation
def amplify_cmd(ctx, input_path, bundle_dir, upscale, out_path, debug_dir):
    """Patch-based super-resolution of a heightfield."""
    from .heightfield import load_heightfield, save_heightfield
    from .networks import load_bundle
    from .superres import amplify

    bundle = load_bundle(_resolve_bundle_dir(ctx, bundle_dir))
    terrain = load_heightfield(input_path)
    out = amplify(terrain, bundle, upscale, noise_seed=ctx.obj["seed"],
                  debug_dir=debug_dir)
    save_heightfield(out, out_path)
    click.echo(out_path)


@main.command("cascade")
@click.option("--input", "input_path", type=click.Path(exists=True),
              required=True)
@click.option("--coarse", "coarse_dir", type=click.Path(exists=True),
              required=True)
@click.option("--fine", "fine_dir", type=click.Path(exists=True),
              required=True)
@click.option("--upscale-coarse", type=int, default=2, show_default=True)
@click.option("--upscale-fine", type=int, default=2, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.pass_context
@operation
def cascade_cmd(ctx, input_path, coarse_dir, fine_dir, upscale_coarse,
                upscale_fine, out_path):
    """Two-model amplification, coarse scale then fine scale."""
    from .heightfield import load_heightfield, save_heightfield
    from .networks import load_bundle
    from .superres import cascade

    out = cascade(load_heightfield(input_path), load_bundle(coarse_dir),
                  load_bundle(fine_dir), upscale_coarse, upscale_fine,
                  noise_seed=ctx.obj["seed"])
    save_heightfield(out, out_path)
    click.echo(out_path)


# -- inversion by optimization ----------------------------------------------------

@main.command("invert-opt")
@click.option("--bundle", "bundle_dir", type=click.Path(), default=None,
              help="Bundle directory; falls back to bundle_dir from --config.")
@click.option("--input", "input_path", type=click.Path(exists=True),
              required=True)
@click.option("--steps", type=int, default=200, show_default=True)
@click.option("--no-l2", is_flag=True, help="Drop the elevation L2 term.")
@click.option("--perceptual", is_flag=True, help="Add the feature-space term.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--trace", "trace_path", type=click.Path(), default=None,
              help="Write the loss trace as JSON.")
@click.pass_context
@operation
def invert_opt(ctx, bundle_dir, input_path, steps, no_l2, perceptual,
               out_path, trace_path):
    """Optimizer-based inversion of a heightfield into a latent."""
    from .heightfield import load_heightfield, normalize, resample
    from .latent import optimize_invert, save_latent
    from .networks import load_bundle

    bundle = load_bundle(_resolve_bundle_dir(ctx, bundle_dir))
    terrain = load_heightfield(input_path)
    res = bundle.config.resolution
    if terrain.width != res or terrain.height != res:
        terrain = resample(terrain, res, res)
    result = optimize_invert(normalize(terrain), bundle, steps=steps,
                             use_l2=not no_l2, use_perceptual=perceptual,
                             noise_seed=ctx.obj["seed"])
    save_latent(result.latent, out_path, bundle_version=bundle.version)
    if trace_path is not None:
        Path(trace_path).write_text(json.dumps({
            "loss_trace": result.loss_trace,
            "best_loss": result.best_loss,
        }))
    click.echo(f"{out_path} (best loss {result.best_loss:.6f})")


# -- validation and evaluation -----------------------------------------------------

@main.group()
def validate():
    """Consistency validation."""


@validate.command("hydrology")
@click.option("--input", "input_path", type=click.Path(exists=True),
              required=True, help="Heightfield PNG, or a directory for batch mode.")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the JSON report here instead of stdout.")
@operation
def validate_hydrology(input_path, out_path):
    """Drainage-consistency report: breaching volume and pit census."""
    from .heightfield import load_heightfield
    from .hydrology import batch_report, breach

    path = Path(input_path)
    if path.is_dir():
        terrains = [load_heightfield(p) for p in sorted(path.glob("*.png"))]
        if not terrains:
            raise ValueError(f"no .png heightfields in {path}")
        report = batch_report(terrains)
    else:
        _, rep = breach(load_heightfield(path))
        report = rep.to_dict()
    text = json.dumps(report, indent=2)
    if out_path is not None:
        Path(out_path).write_text(text)
        click.echo(out_path)
    else:
        click.echo(text)


@main.group("eval")
def eval_group():
    """Measurement protocols."""


@eval_group.command("feature-size")
@click.option("--bundle", "bundle_dir", type=click.Path(), default=None,
              help="Bundle directory; falls back to bundle_dir from --config.")
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.pass_context
@operation
def eval_feature_size(ctx, bundle_dir, out_path):
    """Smallest sketch feature surviving the inversion loop, as a fraction
    of the image size."""
    from .evaluation import feature_size_report
    from .networks import load_bundle

    report = feature_size_report(load_bundle(_resolve_bundle_dir(ctx, bundle_dir)),
                                 noise_seed=ctx.obj["seed"])
    text = json.dumps(report, indent=2)
    if out_path is not None:
        Path(out_path).write_text(text)
        click.echo(out_path)
    else:
        click.echo(text)


if __name__ == "__main__":
    main()

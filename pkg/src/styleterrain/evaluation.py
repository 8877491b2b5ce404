"""Measurement protocols run over a trained bundle: the smallest sketch
feature the inversion loop preserves, and the encoder-vs-optimizer
inversion comparison."""

from __future__ import annotations

import numpy as np

from .heightfield import Heightfield, NormalizedField
from .latent import optimize_invert, refine
from .networks.bundle import ModelBundle
from .networks.inference import encode, sample_wplus, synthesize

# Reported alongside measurements for context: the fraction of the image
# size below which drawn features tend to vanish on full-scale models.
FULL_SCALE_FEATURE_FRACTION = 0.05


def _gaussian_bump_sketch(resolution: int, width_cells: float,
                          base_m: float = 100.0,
                          amplitude_m: float = 100.0) -> Heightfield:
    """Flat sketch with one centered Gaussian bump; width is ~4 sigma."""
    sigma = max(width_cells / 4.0, 0.5)
    yy, xx = np.mgrid[0:resolution, 0:resolution].astype(float)
    c = (resolution - 1) / 2.0
    bump = amplitude_m * np.exp(-((xx - c) ** 2 + (yy - c) ** 2) / (2 * sigma ** 2))
    return Heightfield(elevations=base_m + bump, cell_size=30.0)


def feature_size_report(bundle: ModelBundle, fractions=None,
                        retain_threshold: float = 0.5,
                        noise_seed: int = 0) -> dict:
    """Sweep Gaussian-bump sketches through refine and find the smallest
    bump width (as a fraction of the image size) whose output keeps at
    least `retain_threshold` of the input prominence.

    Prominence out is measured as the peak of the refined terrain over its
    median (the flat-baseline estimate).
    """
    res = bundle.config.resolution
    if fractions is None:
        fractions = (0.05, 0.08, 0.12, 0.19, 0.28, 0.41, 0.60)
    rows = []
    threshold_fraction = None
    for frac in sorted(fractions):
        width = frac * res
        sketch = _gaussian_bump_sketch(res, width)
        refined = refine(sketch, bundle, noise_seed=noise_seed)
        prominence_in = sketch.elevations.max() - np.median(sketch.elevations)
        prominence_out = refined.elevations.max() - np.median(refined.elevations)
        retained = float(prominence_out / prominence_in)
        rows.append({"width_fraction": frac, "width_cells": width,
                     "retained_prominence": retained})
        if threshold_fraction is None and retained >= retain_threshold:
            threshold_fraction = frac
    return {
        "resolution": res,
        "retain_threshold": retain_threshold,
        "sweep": rows,
        "threshold_fraction": threshold_fraction,
        "full_scale_reference_fraction": FULL_SCALE_FEATURE_FRACTION,
    }


def _rmse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sqrt(np.mean((a - b) ** 2)))


def _mean_abs_gradient(values: np.ndarray) -> float:
    return float(np.mean(np.abs(np.diff(values, axis=0)))
                 + np.mean(np.abs(np.diff(values, axis=1))))


def _sketch_field(resolution: int, seed: int) -> NormalizedField:
    """Coarse synthetic sketch: a couple of smooth blobs on a flat base."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:resolution, 0:resolution].astype(float)
    values = np.full((resolution, resolution), 0.3)
    for _ in range(int(rng.integers(1, 4))):
        cy, cx = rng.uniform(0.2, 0.8, 2) * resolution
        sigma = rng.uniform(0.08, 0.2) * resolution
        amp = rng.uniform(0.3, 0.6)
        values += amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * sigma ** 2))
    return NormalizedField(values=np.clip(values, 0.0, 1.0), min_m=0.0,
                           max_m=1000.0)


def inversion_comparison_report(bundle: ModelBundle, n_samples: int = 20,
                                n_sketches: int = 20, opt_steps: int = 60,
                                seed: int = 0, noise_seed: int = 0) -> dict:
    """Paired encoder vs optimizer inversion study.

    On generator samples the optimizer starts from the encoder estimate and
    keeps its best iterate, so its reconstruction RMSE never exceeds the
    encoder's. On sketches both routes are run and characterized only:
    encoder output must satisfy the latent validity contracts, and the
    detail-gain column records how much small-scale relief each route adds
    on top of the flat sketch (the encoder synthesizes landforms, the
    optimizer tends to reproduce the sketch as-is).
    """
    samples = []
    for i, w in enumerate(sample_wplus(bundle, n_samples, seed)):
        target = synthesize(w, bundle, noise_seed=noise_seed + i)
        w_enc = encode(target, bundle)
        enc_recon = synthesize(w_enc, bundle, noise_seed=noise_seed + i)
        enc_rmse = _rmse(enc_recon.values, target.values)
        result = optimize_invert(target, bundle, steps=opt_steps,
                                 init=w_enc, noise_seed=noise_seed + i)
        opt_recon = synthesize(result.latent, bundle,
                               noise_seed=noise_seed + i)
        opt_rmse = _rmse(opt_recon.values, target.values)
        samples.append({"encoder_rmse": enc_rmse, "optimizer_rmse": opt_rmse})

    sketches = []
    for i in range(n_sketches):
        sketch = _sketch_field(bundle.config.resolution, seed=seed + 1000 + i)
        w_enc = encode(sketch, bundle)
        enc_out = synthesize(w_enc, bundle, noise_seed=noise_seed + i)
        result = optimize_invert(sketch, bundle, steps=opt_steps,
                                 noise_seed=noise_seed + i)
        opt_out = synthesize(result.latent, bundle, noise_seed=noise_seed + i)
        base_grad = _mean_abs_gradient(sketch.values)
        sketches.append({
            "encoder_latent_valid": bool(np.isfinite(w_enc.layers).all()),
            "encoder_detail_gain": _mean_abs_gradient(enc_out.values) / max(base_grad, 1e-9),
            "optimizer_detail_gain": _mean_abs_gradient(opt_out.values) / max(base_grad, 1e-9),
            "optimizer_sketch_rmse": _rmse(opt_out.values, sketch.values),
            "encoder_sketch_rmse": _rmse(enc_out.values, sketch.values),
        })

    enc_rmses = [s["encoder_rmse"] for s in samples]
    opt_rmses = [s["optimizer_rmse"] for s in samples]
    return {
        "generator_samples": {
            "count": n_samples,
            "mean_encoder_rmse": float(np.mean(enc_rmses)),
            "mean_optimizer_rmse": float(np.mean(opt_rmses)),
            "optimizer_never_worse": bool(
                all(o <= e + 1e-9 for o, e in zip(opt_rmses, enc_rmses))),
            "per_sample": samples,
        },
        "sketches": {
            "count": n_sketches,
            "encoder_all_valid": bool(all(s["encoder_latent_valid"]
                                          for s in sketches)),
            "mean_encoder_detail_gain": float(np.mean(
                [s["encoder_detail_gain"] for s in sketches])),
            "mean_optimizer_detail_gain": float(np.mean(
                [s["optimizer_detail_gain"] for s in sketches])),
            "per_sketch": sketches,
        },
    }

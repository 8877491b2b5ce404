"""Pure inference over a loaded bundle: latent mapping, terrain synthesis,
and encoder inversion. All functions are deterministic given fixed weights
and seeds, and safe under concurrent callers (read-only over the weights)."""

from __future__ import annotations

import numpy as np
import torch

from ..heightfield import NormalizedField
from .bundle import ModelBundle
from .generator import make_noise
from .latents import LatentW, LatentWPlus, LatentZ


def _check_dim(dim: int, bundle: ModelBundle, what: str) -> None:
    if dim != bundle.config.latent_dim:
        raise ValueError(f"{what} dimension {dim} does not match bundle "
                         f"latent_dim {bundle.config.latent_dim}")


def map_latent(z: LatentZ, bundle: ModelBundle) -> LatentW:
    """Feed-forward projection of a raw latent into style space."""
    _check_dim(z.dim, bundle, "z")
    with torch.no_grad():
        t = torch.from_numpy(np.array(z.values)).unsqueeze(0)
        w = bundle.generator.mapping(t)
    return LatentW(values=w.squeeze(0).numpy())


def broadcast(w: LatentW, bundle: ModelBundle) -> LatentWPlus:
    """Tile one style vector across every injection layer."""
    _check_dim(w.dim, bundle, "w")
    layers = np.tile(w.values[None, :], (bundle.config.num_ws, 1))
    return LatentWPlus(layers=layers)


def _wplus_tensor(w: LatentWPlus, bundle: ModelBundle) -> torch.Tensor:
    cfg = bundle.config
    if w.num_layers != cfg.num_ws or w.dim != cfg.latent_dim:
        raise ValueError(f"latent shape {w.num_layers}x{w.dim} does not match "
                         f"bundle {cfg.num_ws}x{cfg.latent_dim}")
    return torch.from_numpy(np.array(w.layers)).unsqueeze(0)


def synthesize(w: LatentWPlus, bundle: ModelBundle,
               noise_seed: int = 0) -> NormalizedField:
    """Generate a terrain at the bundle resolution from an extended latent.

    Under the default frozen policy the per-stage noise buffers are drawn
    once from the seed, so the call is deterministic given (w, weights,
    noise_seed); a bundle declaring the "random" policy draws fresh noise
    every call instead.
    """
    cfg = bundle.config
    with torch.no_grad():
        if cfg.noise_policy == "frozen":
            noise = make_noise(cfg.resolution, noise_seed)
        else:
            from .generator import make_random_noise
            noise = make_random_noise(cfg.resolution, batch=1)
        out = bundle.generator.synthesis(_wplus_tensor(w, bundle), noise)
    values = out.squeeze(0).squeeze(0).double().clamp(0.0, 1.0).numpy()
    return NormalizedField(values=values, min_m=0.0, max_m=1.0)


def encode(field: NormalizedField, bundle: ModelBundle) -> LatentWPlus:
    """Invert a terrain into an extended latent (one forward pass).

    The field must already be at the bundle resolution; callers resample
    first when needed.
    """
    cfg = bundle.config
    if bundle.encoder is None:
        raise ValueError("bundle has no encoder")
    if field.width != cfg.resolution or field.height != cfg.resolution:
        raise ValueError(f"field is {field.height}x{field.width}; encoder "
                         f"expects {cfg.resolution}x{cfg.resolution} "
                         f"(resample first)")
    with torch.no_grad():
        t = torch.from_numpy(np.array(field.values, dtype=np.float32))
        w = bundle.encoder(t.unsqueeze(0).unsqueeze(0))
    return LatentWPlus(layers=w.squeeze(0).numpy())


def sample_z(bundle: ModelBundle, n: int, seed: int) -> list[LatentZ]:
    gen = torch.Generator().manual_seed(seed)
    zs = torch.randn(n, bundle.config.latent_dim, generator=gen)
    return [LatentZ(values=z.numpy()) for z in zs]


def sample_wplus(bundle: ModelBundle, n: int, seed: int) -> list[LatentWPlus]:
    """n extended latents mapped from seeded raw samples."""
    gen = torch.Generator().manual_seed(seed)
    zs = torch.randn(n, bundle.config.latent_dim, generator=gen)
    with torch.no_grad():
        ws = bundle.generator.mapping(zs)
    num_ws = bundle.config.num_ws
    return [LatentWPlus(layers=np.tile(w.numpy()[None, :], (num_ws, 1)))
            for w in ws]


def mean_w(bundle: ModelBundle, n: int = 10_000, seed: int = 0) -> LatentWPlus:
    """Average mapped style over n raw samples, broadcast to all layers."""
    gen = torch.Generator().manual_seed(seed)
    zs = torch.randn(n, bundle.config.latent_dim, generator=gen)
    with torch.no_grad():
        w = bundle.generator.mapping(zs).mean(dim=0)
    return broadcast(LatentW(values=w.numpy()), bundle)

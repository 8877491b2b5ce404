"""Adversarial training for the generator and reconstruction training for
the encoder, sized for desk-scale runs.

GAN loss is non-saturating logistic with a lazy R1 gradient penalty on the
critic. Encoder training minimizes L2 between terrains and their
re-synthesis through the frozen generator, plus an optional feature-space
term; pairs are (synthesized terrain, source latent) with an 80/20
train/test split.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from ..dataset import DatasetManifest, load_manifest_tiles
from ..heightfield import normalize, resample
from .bundle import ModelBundle, ModelConfig, new_bundle, save_bundle
from .features import feature_distance
from .generator import make_noise, make_random_noise


@dataclass
class GanTrainConfig:
    steps: int = 2000
    batch_size: int = 8
    lr: float = 2e-3
    r1_gamma: float = 1.0
    r1_interval: int = 16
    seed: int = 0
    checkpoint_every: int = 500
    checkpoint_dir: str | None = None
    log_every: int = 100


@dataclass
class GanTrainLog:
    g_losses: list[float] = field(default_factory=list)
    d_losses: list[float] = field(default_factory=list)
    steps_completed: int = 0
    diverged: bool = False
    seconds: float = 0.0


@dataclass
class EncoderTrainConfig:
    epochs: int = 10
    batch_size: int = 8
    lr: float = 1e-3
    perceptual_weight: float = 0.0  # desk-scale default: pure L2
    noise_seed: int = 0             # canonical noise for pair synthesis
    seed: int = 0
    sample_batch: int = 16


@dataclass
class EncoderTrainLog:
    train_losses: list[float] = field(default_factory=list)
    rmse_init: float = 0.0
    rmse_final: float = 0.0
    steps_completed: int = 0
    seconds: float = 0.0


def _manifest_tensor(manifest: DatasetManifest, resolution: int) -> torch.Tensor:
    tiles = load_manifest_tiles(manifest)
    fields = []
    for tile in tiles:
        if tile.width != resolution or tile.height != resolution:
            tile = resample(tile, resolution, resolution)
        fields.append(normalize(tile).values.astype(np.float32))
    return torch.from_numpy(np.stack(fields)).unsqueeze(1)


def _snapshot(bundle: ModelBundle) -> dict:
    return {
        "generator": {k: v.detach().clone()
                      for k, v in bundle.generator.state_dict().items()},
        "discriminator": {k: v.detach().clone()
                          for k, v in bundle.discriminator.state_dict().items()},
    }


def _restore(bundle: ModelBundle, snap: dict) -> None:
    bundle.generator.load_state_dict(snap["generator"])
    bundle.discriminator.load_state_dict(snap["discriminator"])


def train_generator(manifest: DatasetManifest, model_config: ModelConfig,
                    train_config: GanTrainConfig | None = None,
                    on_step=None) -> tuple[ModelBundle, GanTrainLog]:
    """Adversarial training from a balanced manifest.

    Deterministic for a given seed. Checkpoints are taken every
    `checkpoint_every` steps (and written atomically when a checkpoint
    directory is set); a non-finite loss aborts the run and restores the
    last good checkpoint, flagging the log as diverged.
    """
    cfg = train_config or GanTrainConfig()
    if len(manifest.tiles) == 0:
        raise ValueError("manifest has no tiles")
    data = _manifest_tensor(manifest, model_config.resolution)
    n_tiles = data.shape[0]

    torch.manual_seed(cfg.seed)
    bundle = new_bundle(model_config, seed=cfg.seed)
    g, d = bundle.generator, bundle.discriminator
    g.train(), d.train()
    opt_g = torch.optim.Adam(g.parameters(), lr=cfg.lr, betas=(0.0, 0.99))
    opt_d = torch.optim.Adam(d.parameters(), lr=cfg.lr, betas=(0.0, 0.99))

    log = GanTrainLog()
    last_good = _snapshot(bundle)
    last_good_step = 0
    started = time.monotonic()
    res, dim = model_config.resolution, model_config.latent_dim

    for step in range(cfg.steps):
        idx = torch.randint(0, n_tiles, (cfg.batch_size,))
        real = data[idx]

        # critic
        z = torch.randn(cfg.batch_size, dim)
        with torch.no_grad():
            fake = g(z, make_random_noise(res, cfg.batch_size))
        d_loss = F.softplus(d(fake)).mean() + F.softplus(-d(real)).mean()
        if cfg.r1_gamma > 0 and step % cfg.r1_interval == 0:
            real_req = real.detach().requires_grad_(True)
            real_logit = d(real_req)
            grad, = torch.autograd.grad(real_logit.sum(), real_req,
                                        create_graph=True)
            r1 = grad.pow(2).sum(dim=(1, 2, 3)).mean()
            d_loss = d_loss + 0.5 * cfg.r1_gamma * r1 * cfg.r1_interval
        opt_d.zero_grad(set_to_none=True)
        d_loss.backward()
        opt_d.step()

        # generator
        z = torch.randn(cfg.batch_size, dim)
        fake = g(z, make_random_noise(res, cfg.batch_size))
        g_loss = F.softplus(-d(fake)).mean()
        opt_g.zero_grad(set_to_none=True)
        g_loss.backward()
        opt_g.step()

        g_val, d_val = g_loss.detach().item(), d_loss.detach().item()
        if not (math.isfinite(g_val) and math.isfinite(d_val)):
            _restore(bundle, last_good)
            log.diverged = True
            log.steps_completed = last_good_step
            break
        log.g_losses.append(g_val)
        log.d_losses.append(d_val)
        log.steps_completed = step + 1
        if on_step is not None:
            on_step(step, g_val, d_val)
        if (step + 1) % cfg.checkpoint_every == 0 or step + 1 == cfg.steps:
            last_good = _snapshot(bundle)
            last_good_step = step + 1
            if cfg.checkpoint_dir is not None:
                bundle.metrics = dict(bundle.metrics,
                                      gan_steps=last_good_step)
                save_bundle(bundle, Path(cfg.checkpoint_dir))

    log.seconds = time.monotonic() - started
    g.eval(), d.eval()
    bundle.metrics = dict(
        bundle.metrics,
        gan_steps=log.steps_completed,
        gan_seconds=round(log.seconds, 3),
        gan_final_g_loss=log.g_losses[-1] if log.g_losses else None,
        gan_final_d_loss=log.d_losses[-1] if log.d_losses else None,
        gan_diverged=log.diverged,
        gan_seed=cfg.seed,
    )
    return bundle, log


def synthesize_pairs(bundle: ModelBundle, n_pairs: int, seed: int,
                     noise_seed: int, batch: int = 16
                     ) -> tuple[torch.Tensor, torch.Tensor]:
    """(terrain, source latent) pairs from seeded raw samples, synthesized
    with one canonical frozen-noise realization."""
    cfg = bundle.config
    gen = torch.Generator().manual_seed(seed)
    zs = torch.randn(n_pairs, cfg.latent_dim, generator=gen)
    terrains, latents = [], []
    g = bundle.generator
    with torch.no_grad():
        for start in range(0, n_pairs, batch):
            z = zs[start:start + batch]
            w = g.mapping(z)
            w_plus = w.unsqueeze(1).repeat(1, cfg.num_ws, 1)
            noise = make_noise(cfg.resolution, noise_seed, batch=z.shape[0])
            terrains.append(g.synthesis(w_plus, noise))
            latents.append(w_plus)
    return torch.cat(terrains), torch.cat(latents)


def reconstruction_rmse(bundle: ModelBundle, terrains: torch.Tensor,
                        noise_seed: int = 0, batch: int = 16) -> float:
    """RMSE between terrains and their encode -> synthesize round trip."""
    cfg = bundle.config
    errs = []
    with torch.no_grad():
        for start in range(0, terrains.shape[0], batch):
            t = terrains[start:start + batch]
            w = bundle.encoder(t)
            noise = make_noise(cfg.resolution, noise_seed, batch=t.shape[0])
            recon = bundle.generator.synthesis(w, noise)
            errs.append((recon - t).pow(2).mean(dim=(1, 2, 3)))
    return float(torch.cat(errs).mean().sqrt())


def train_encoder(bundle: ModelBundle, n_pairs: int = 2000,
                  config: EncoderTrainConfig | None = None
                  ) -> tuple[ModelBundle, EncoderTrainLog]:
    """Train the encoder on generator-sampled pairs with an 80/20 split.

    Requires an adversarially trained generator; the generator stays frozen
    and gradients flow through it into the encoder only.
    """
    cfg = config or EncoderTrainConfig()
    if not bundle.gan_trained:
        raise ValueError("generator is untrained; run GAN training first")
    if bundle.encoder is None:
        raise ValueError("bundle has no encoder to train")

    terrains, _latents = synthesize_pairs(bundle, n_pairs, cfg.seed,
                                          cfg.noise_seed, cfg.sample_batch)
    n_train = int(n_pairs * 0.8)
    train_t, test_t = terrains[:n_train], terrains[n_train:]

    g, enc = bundle.generator, bundle.encoder
    for p in g.parameters():
        p.requires_grad_(False)
    enc.train()
    opt = torch.optim.Adam(enc.parameters(), lr=cfg.lr)
    perceptual = feature_distance() if cfg.perceptual_weight > 0 else None

    log = EncoderTrainLog()
    log.rmse_init = reconstruction_rmse(bundle, test_t, cfg.noise_seed)
    started = time.monotonic()
    torch.manual_seed(cfg.seed + 1)
    res = bundle.config.resolution

    for _epoch in range(cfg.epochs):
        perm = torch.randperm(n_train)
        for start in range(0, n_train, cfg.batch_size):
            t = train_t[perm[start:start + cfg.batch_size]]
            w = enc(t)
            noise = make_noise(res, cfg.noise_seed, batch=t.shape[0])
            recon = g.synthesis(w, noise)
            loss = F.mse_loss(recon, t)
            if perceptual is not None:
                loss = loss + cfg.perceptual_weight * perceptual(recon, t)
            opt.zero_grad(set_to_none=True)
            loss.backward()
            opt.step()
            log.train_losses.append(loss.detach().item())
            log.steps_completed += 1

    enc.eval()
    for p in g.parameters():
        p.requires_grad_(True)
    log.rmse_final = reconstruction_rmse(bundle, test_t, cfg.noise_seed)
    log.seconds = time.monotonic() - started
    bundle.metrics = dict(
        bundle.metrics,
        encoder_steps=log.steps_completed,
        encoder_pairs=n_pairs,
        encoder_seconds=round(log.seconds, 3),
        encoder_rmse_init=round(log.rmse_init, 6),
        encoder_rmse=round(log.rmse_final, 6),
        encoder_seed=cfg.seed,
    )
    return bundle, log


def elevation_histogram(values: np.ndarray, bins: int = 64) -> np.ndarray:
    hist, _ = np.histogram(values, bins=bins, range=(0.0, 1.0))
    total = hist.sum()
    return hist / total if total else hist.astype(float)


def histogram_l1_to_dataset(bundle: ModelBundle, data: torch.Tensor,
                            n_samples: int = 64, seed: int = 123,
                            bins: int = 64) -> float:
    """Mean L1 distance between sample elevation histograms and the dataset
    mean histogram; the realism proxy used to compare trained vs untrained
    models."""
    dataset_hist = np.mean(
        [elevation_histogram(t.squeeze(0).numpy(), bins) for t in data], axis=0)
    from .inference import sample_wplus, synthesize
    dists = []
    for i, w in enumerate(sample_wplus(bundle, n_samples, seed)):
        field = synthesize(w, bundle, noise_seed=seed + i)
        hist = elevation_histogram(field.values, bins)
        dists.append(np.abs(hist - dataset_hist).sum())
    return float(np.mean(dists))

"""Versioned model bundles: architecture config plus generator,
discriminator, and encoder weights, persisted as a directory of
manifest.json + one NPZ file per network (named float32 little-endian
arrays with shape headers)."""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from .discriminator import Discriminator
from .encoder import Encoder
from .generator import Generator, num_style_layers

# Terrain-scale classes a bundle may declare, by cell size in meters.
SCALE_TAG_METERS = {"90m": 90.0, "30m": 30.0, "5m": 5.0, "1m": 1.0}

MANIFEST_NAME = "manifest.json"


def scale_tag_meters(tag: str) -> float:
    if tag not in SCALE_TAG_METERS:
        raise ValueError(f"unknown scale_tag {tag!r}; "
                         f"registry: {sorted(SCALE_TAG_METERS)}")
    return SCALE_TAG_METERS[tag]


@dataclass(frozen=True)
class ModelConfig:
    resolution: int = 64
    latent_dim: int = 128
    mapping_layers: int = 4
    channel_base: int = 1024
    channel_max: int = 64
    scale_tag: str = "30m"
    noise_policy: str = "frozen"
    perceptual_weight: float = 0.8

    def __post_init__(self):
        r = self.resolution
        if r < 8 or r & (r - 1):
            raise ValueError(f"resolution must be a power of two >= 8, got {r}")
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        scale_tag_meters(self.scale_tag)
        if self.noise_policy not in ("frozen", "random"):
            raise ValueError(f"unknown noise_policy {self.noise_policy!r}")

    @property
    def num_ws(self) -> int:
        """Style rows per latent: 2 * (log2(resolution) - 1)."""
        return num_style_layers(self.resolution)


@dataclass
class ModelBundle:
    generator: Generator
    discriminator: Discriminator
    encoder: Encoder | None
    config: ModelConfig
    metrics: dict = field(default_factory=dict)

    @property
    def gan_trained(self) -> bool:
        return self.metrics.get("gan_steps", 0) > 0

    @property
    def encoder_trained(self) -> bool:
        return self.encoder is not None and self.metrics.get("encoder_steps", 0) > 0

    @property
    def version(self) -> str:
        return compute_version(self)


def new_bundle(config: ModelConfig, seed: int = 0,
               with_encoder: bool = True) -> ModelBundle:
    """Freshly initialized networks, deterministic for a given seed."""
    torch.manual_seed(seed)
    gen = Generator(config.resolution, config.latent_dim,
                    mapping_layers=config.mapping_layers,
                    channel_base=config.channel_base,
                    channel_max=config.channel_max)
    disc = Discriminator(config.resolution, channel_base=config.channel_base,
                         channel_max=config.channel_max)
    enc = Encoder(config.resolution, config.latent_dim) if with_encoder else None
    for net in (gen, disc, enc):
        if net is not None:
            net.eval()
    return ModelBundle(generator=gen, discriminator=disc, encoder=enc,
                       config=config)


def _state_to_arrays(net: torch.nn.Module) -> dict[str, np.ndarray]:
    return {name: tensor.detach().cpu().numpy().astype("<f4")
            for name, tensor in net.state_dict().items()}


def _arrays_to_state(net: torch.nn.Module, arrays) -> None:
    state = {name: torch.from_numpy(np.array(arrays[name]))
             for name in arrays.files}
    net.load_state_dict(state)


def compute_version(bundle: ModelBundle) -> str:
    """Content-derived version: hash of config plus all network weights."""
    digest = hashlib.sha256()
    digest.update(json.dumps(asdict(bundle.config), sort_keys=True).encode())
    for net in (bundle.generator, bundle.discriminator, bundle.encoder):
        if net is None:
            continue
        for name, arr in sorted(_state_to_arrays(net).items()):
            digest.update(name.encode())
            digest.update(arr.tobytes())
    return "v-" + digest.hexdigest()[:10]


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def save_bundle(bundle: ModelBundle, directory: str | Path) -> str:
    """Persist a bundle atomically (write to a temp dir, then rename files
    into place) so a serving process never sees a half-written bundle.
    Returns the content version."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    version = compute_version(bundle)
    nets = {"generator": bundle.generator, "discriminator": bundle.discriminator}
    if bundle.encoder is not None:
        nets["encoder"] = bundle.encoder
    files = {}
    with tempfile.TemporaryDirectory(dir=directory) as tmp:
        tmp = Path(tmp)
        for name, net in nets.items():
            path = tmp / f"{name}.npz"
            np.savez(path, **_state_to_arrays(net))
            files[name] = {"path": f"{name}.npz", "sha256": _sha256_file(path)}
        manifest = {
            "format": 1,
            "version": version,
            "config": asdict(bundle.config),
            "metrics": bundle.metrics,
            "files": files,
        }
        (tmp / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2))
        for name in list(nets) + []:
            os.replace(tmp / f"{name}.npz", directory / f"{name}.npz")
        os.replace(tmp / MANIFEST_NAME, directory / MANIFEST_NAME)
    return version


def load_bundle(directory: str | Path, verify: bool = True) -> ModelBundle:
    directory = Path(directory)
    manifest = json.loads((directory / MANIFEST_NAME).read_text())
    config = ModelConfig(**manifest["config"])
    bundle = new_bundle(config, with_encoder="encoder" in manifest["files"])
    for name, entry in manifest["files"].items():
        path = directory / entry["path"]
        if verify and _sha256_file(path) != entry["sha256"]:
            raise ValueError(f"weight file {path} fails its content hash")
        with np.load(path) as arrays:
            net = {"generator": bundle.generator,
                   "discriminator": bundle.discriminator,
                   "encoder": bundle.encoder}[name]
            _arrays_to_state(net, arrays)
    bundle.metrics = manifest.get("metrics", {})
    return bundle


def list_bundles(root: str | Path) -> list[dict]:
    """Registry scan: every subdirectory holding a manifest."""
    root = Path(root)
    out = []
    if not root.exists():
        return out
    for sub in sorted(root.iterdir()):
        manifest_path = sub / MANIFEST_NAME
        if sub.is_dir() and manifest_path.exists():
            manifest = json.loads(manifest_path.read_text())
            out.append({
                "name": sub.name,
                "version": manifest["version"],
                "resolution": manifest["config"]["resolution"],
                "scale_tag": manifest["config"]["scale_tag"],
            })
    return out

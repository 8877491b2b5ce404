"""Latent-space authoring: style mixing, interpolation, regional blending,
optimizer-based inversion, and the encode-then-resynthesize refine loop.

Style rows are ordered coarse to fine, so a crossover index near zero
transplants everything from the detail source while an index near L keeps
the structure source untouched.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .heightfield import (Heightfield, NormalizedField, RegionMask,
                          denormalize, normalize, resample)
from .networks.bundle import ModelBundle
from .networks.features import feature_distance
from .networks.generator import make_noise
from .networks.inference import encode, mean_w, synthesize
from .networks.latents import LatentWPlus


@dataclass(frozen=True)
class StyleMixSpec:
    """Merge spec: rows [0, crossover) from the structure source, rows
    [crossover, L) from the detail source."""

    crossover_index: int
    structure_source: LatentWPlus
    detail_source: LatentWPlus

    def __post_init__(self):
        u, v = self.structure_source, self.detail_source
        if u.layers.shape != v.layers.shape:
            raise ValueError(f"latent shapes differ: {u.layers.shape} vs "
                             f"{v.layers.shape}")
        if not 0 <= self.crossover_index <= u.num_layers:
            raise ValueError(f"crossover_index {self.crossover_index} outside "
                             f"[0, {u.num_layers}]")


def style_mix(spec: StyleMixSpec) -> LatentWPlus:
    """Row-wise transplant at the crossover index; no other modification.

    crossover 0 returns the detail source exactly; crossover L returns the
    structure source exactly.
    """
    i = spec.crossover_index
    out = np.concatenate([spec.structure_source.layers[:i],
                          spec.detail_source.layers[i:]], axis=0)
    return LatentWPlus(layers=out)


def interpolate(u: LatentWPlus, v: LatentWPlus, alpha: float,
                allow_extrapolation: bool = False) -> LatentWPlus:
    """Element-wise affine combination (1 - alpha) * u + alpha * v.

    alpha outside [0, 1] is rejected unless extrapolation is explicitly
    enabled.
    """
    if u.layers.shape != v.layers.shape:
        raise ValueError(f"latent shapes differ: {u.layers.shape} vs "
                         f"{v.layers.shape}")
    if not allow_extrapolation and not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha {alpha} outside [0, 1] "
                         f"(pass allow_extrapolation=True to override)")
    out = (1.0 - alpha) * u.layers + alpha * v.layers
    return LatentWPlus(layers=out)


def region_blend(terrain_a: Heightfield, terrain_b: Heightfield,
                 mask: RegionMask) -> Heightfield:
    """Per-cell altitude-domain blend: (1 - alpha) * A + alpha * B.

    The workaround for mixing same-level styles at different locations,
    which the latent space itself cannot express.
    """
    if terrain_a.elevations.shape != terrain_b.elevations.shape \
            or mask.alpha.shape != terrain_a.elevations.shape:
        raise ValueError(
            f"shape mismatch: A {terrain_a.elevations.shape}, "
            f"B {terrain_b.elevations.shape}, mask {mask.alpha.shape}")
    blended = (1.0 - mask.alpha) * terrain_a.elevations \
        + mask.alpha * terrain_b.elevations
    return Heightfield(elevations=blended, cell_size=terrain_a.cell_size,
                       origin=terrain_a.origin)


# -- optimizer-based inversion --------------------------------------------------


@dataclass
class InversionStatus:
    """Polled progress/cancellation contract for long-running inversion."""

    total_steps: int
    step: int = 0
    best_loss: float = float("inf")
    done: bool = False
    _cancelled: bool = field(default=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def cancel(self) -> None:
        with self._lock:
            self._cancelled = True

    @property
    def cancelled(self) -> bool:
        with self._lock:
            return self._cancelled

    @property
    def progress(self) -> float:
        return self.step / self.total_steps if self.total_steps else 1.0


@dataclass
class InversionResult:
    latent: LatentWPlus
    loss_trace: list[float]
    best_loss: float


def optimize_invert(target: NormalizedField, bundle: ModelBundle,
                    steps: int = 200, lr: float = 0.05,
                    use_l2: bool = True, use_perceptual: bool = False,
                    perceptual_weight: float | None = None,
                    init: LatentWPlus | None = None, noise_seed: int = 0,
                    status: InversionStatus | None = None) -> InversionResult:
    """Gradient-descend an extended latent to match the target terrain.

    Initialization defaults to the encoder's estimate when one is trained,
    else the mean mapped style; convergence depends strongly on this choice.
    The best-loss iterate over the whole trace (including the starting
    point) is returned.
    """
    cfg = bundle.config
    if not (use_l2 or use_perceptual):
        raise ValueError("at least one of use_l2/use_perceptual must be on")
    if target.width != cfg.resolution or target.height != cfg.resolution:
        raise ValueError(f"target is {target.height}x{target.width}; bundle "
                         f"expects {cfg.resolution}x{cfg.resolution}")
    if init is None:
        if bundle.encoder_trained:
            init = encode(target, bundle)
        else:
            init = mean_w(bundle, n=10_000, seed=0)
    if status is None:
        status = InversionStatus(total_steps=steps)

    g = bundle.generator
    was_grad = [p.requires_grad for p in g.parameters()]
    for p in g.parameters():
        p.requires_grad_(False)
    try:
        target_t = torch.from_numpy(
            np.array(target.values, dtype=np.float32))[None, None]
        w = torch.from_numpy(np.array(init.layers)).unsqueeze(0)
        w = w.clone().requires_grad_(True)
        noise = make_noise(cfg.resolution, noise_seed)
        perceptual = feature_distance() if use_perceptual else None
        weight = (cfg.perceptual_weight if perceptual_weight is None
                  else perceptual_weight)
        opt = torch.optim.Adam([w], lr=lr)

        def loss_of(out):
            loss = out.new_zeros(())
            if use_l2:
                loss = loss + torch.nn.functional.mse_loss(out, target_t)
            if perceptual is not None:
                loss = loss + weight * perceptual(out, target_t)
            return loss

        with torch.no_grad():
            initial = loss_of(g.synthesis(w, noise)).item()
        trace = [initial]
        best_loss = initial
        best_w = w.detach().clone()
        for step in range(steps):
            if status.cancelled:
                break
            out = g.synthesis(w, noise)
            loss = loss_of(out)
            opt.zero_grad(set_to_none=True)
            loss.backward()
            opt.step()
            val = loss.detach().item()
            trace.append(val)
            if val < best_loss:
                best_loss = val
                best_w = w.detach().clone()
            status.step = step + 1
            status.best_loss = best_loss
    finally:
        for p, flag in zip(g.parameters(), was_grad):
            p.requires_grad_(flag)
    status.done = True
    return InversionResult(latent=LatentWPlus(layers=best_w.squeeze(0).numpy()),
                           loss_trace=trace, best_loss=best_loss)


def refine(t: Heightfield, bundle: ModelBundle,
           noise_seed: int = 0) -> Heightfield:
    """Push a terrain through the encoder and generator once, keeping the
    input's elevation range. Output lands at the bundle resolution; the
    operation is composable but not idempotent."""
    cfg = bundle.config
    src = t
    if t.width != cfg.resolution or t.height != cfg.resolution:
        src = resample(t, cfg.resolution, cfg.resolution)
    n = normalize(src)
    w = encode(n, bundle)
    out = synthesize(w, bundle, noise_seed=noise_seed)
    restored = NormalizedField(values=out.values, min_m=n.min_m, max_m=n.max_m)
    return denormalize(restored, cell_size=src.cell_size, origin=t.origin)


# -- latent file format ---------------------------------------------------------
#
# One UTF-8 JSON header line {"L", "D", "bundle_version"}, a newline, then
# L*D float32 little-endian values, row-major.

def save_latent(w: LatentWPlus, path: str | Path,
                bundle_version: str = "unversioned") -> None:
    header = json.dumps({"L": w.num_layers, "D": w.dim,
                         "bundle_version": bundle_version})
    payload = np.ascontiguousarray(w.layers, dtype="<f4").tobytes()
    Path(path).write_bytes(header.encode("utf-8") + b"\n" + payload)


def load_latent(path: str | Path) -> tuple[LatentWPlus, str]:
    data = Path(path).read_bytes()
    nl = data.index(b"\n")
    header = json.loads(data[:nl].decode("utf-8"))
    n_layers, dim = int(header["L"]), int(header["D"])
    payload = data[nl + 1:]
    expected = n_layers * dim * 4
    if len(payload) != expected:
        raise ValueError(f"latent payload is {len(payload)} bytes; header "
                         f"promises {expected}")
    layers = np.frombuffer(payload, dtype="<f4").reshape(n_layers, dim)
    return LatentWPlus(layers=layers), str(header.get("bundle_version", ""))

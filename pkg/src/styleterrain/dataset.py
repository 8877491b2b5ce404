"""Training-corpus construction: dynamics classification, class balancing,
and a self-contained synthetic fBm tile generator.

Real DEM tiles (any directory of heightfield PNGs) and synthetic fractal
tiles go through the same classify -> balance -> manifest pipeline, so the
repo trains end to end without external downloads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .heightfield import Heightfield, load_heightfield, save_heightfield

DEFAULT_TARGET_PER_CLASS = 20


@dataclass(frozen=True)
class TileEntry:
    path: str
    class_id: int
    min_m: float
    max_m: float


@dataclass(frozen=True)
class DynamicsClass:
    """One elevation-dynamics bucket: range rounded to the nearest ten
    meters, plus the tiles that landed in it."""

    class_id: int
    member_tiles: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.class_id < 0 or self.class_id % 10:
            raise ValueError(f"class_id must be a non-negative multiple of "
                             f"ten, got {self.class_id}")


def group_by_dynamics(tiles: list[tuple[str, int, float, float]]
                      ) -> list[DynamicsClass]:
    """Bucket classified tile entries, verifying each member's range
    re-rounds to its claimed class."""
    buckets: dict[int, list[str]] = {}
    for path, class_id, lo, hi in tiles:
        claimed = int(math.floor((hi - lo) / 10.0 + 0.5)) * 10
        if claimed != class_id:
            raise ValueError(f"tile {path}: range {hi - lo:.1f} m rounds to "
                             f"class {claimed}, not {class_id}")
        buckets.setdefault(class_id, []).append(path)
    return [DynamicsClass(class_id=cid, member_tiles=tuple(paths))
            for cid, paths in sorted(buckets.items())]


@dataclass(frozen=True)
class DatasetManifest:
    tiles: tuple[TileEntry, ...]
    target_per_class: int
    seed: int
    resolution: int

    def __post_init__(self) -> None:
        counts: dict[int, int] = {}
        for t in self.tiles:
            counts[t.class_id] = counts.get(t.class_id, 0) + 1
        over = {c: n for c, n in counts.items() if n > self.target_per_class}
        if over:
            raise ValueError(f"classes exceed target_per_class: {over}")

    @property
    def class_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for t in self.tiles:
            counts[t.class_id] = counts.get(t.class_id, 0) + 1
        return counts

    def save(self, path: str | Path) -> None:
        payload = {
            "tiles": [[t.path, t.class_id, t.min_m, t.max_m] for t in self.tiles],
            "target_per_class": self.target_per_class,
            "seed": self.seed,
            "resolution": self.resolution,
        }
        Path(path).write_text(json.dumps(payload, indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        payload = json.loads(Path(path).read_text())
        tiles = tuple(TileEntry(p, int(c), float(lo), float(hi))
                      for p, c, lo, hi in payload["tiles"])
        return cls(tiles=tiles,
                   target_per_class=int(payload["target_per_class"]),
                   seed=int(payload["seed"]),
                   resolution=int(payload["resolution"]))


def classify_dynamics(h: Heightfield) -> int:
    """Class id = elevation range rounded to the nearest ten meters.

    Exact .5 boundaries round up (135.0 m -> class 140), implemented as
    floor(range/10 + 0.5)*10 since Python's round() is banker's rounding.
    """
    rng = float(h.elevations.max() - h.elevations.min())
    return int(math.floor(rng / 10.0 + 0.5)) * 10


def balance_select(tiles: list[tuple[str, int, float, float]],
                   target_per_class: int, seed: int,
                   resolution: int) -> DatasetManifest:
    """Per class, uniformly sample min(target, available) tiles.

    Deterministic given the seed: classes are visited in sorted order and
    tiles within a class in their listed order, each class drawing from its
    own substream.
    """
    if not tiles:
        raise ValueError("no tiles to select from")
    if target_per_class < 1:
        raise ValueError("target_per_class must be >= 1")
    by_class: dict[int, list[tuple[str, int, float, float]]] = {}
    for entry in tiles:
        by_class.setdefault(entry[1], []).append(entry)
    rng = np.random.default_rng(seed)
    selected: list[TileEntry] = []
    for class_id in sorted(by_class):
        members = by_class[class_id]
        k = min(target_per_class, len(members))
        idx = rng.choice(len(members), size=k, replace=False)
        for i in sorted(idx):
            p, c, lo, hi = members[i]
            selected.append(TileEntry(p, c, lo, hi))
    return DatasetManifest(tiles=tuple(selected),
                           target_per_class=target_per_class,
                           seed=seed, resolution=resolution)


# -- synthetic fBm corpus -----------------------------------------------------

def _smoothstep5(t: np.ndarray) -> np.ndarray:
    return t * t * t * (t * (t * 6 - 15) + 10)


def _gradient_noise(rng: np.random.Generator, resolution: int,
                    freq: int) -> np.ndarray:
    """One octave of lattice gradient noise, `freq` cells across the tile."""
    angles = rng.uniform(0.0, 2.0 * np.pi, size=(freq + 1, freq + 1))
    gx, gy = np.cos(angles), np.sin(angles)
    lin = np.arange(resolution) * (freq / resolution)
    x, y = np.meshgrid(lin, lin)
    xi, yi = x.astype(int), y.astype(int)
    xf, yf = x - xi, y - yi
    u, v = _smoothstep5(xf), _smoothstep5(yf)

    def dot(ix, iy, dx, dy):
        return gx[iy, ix] * dx + gy[iy, ix] * dy

    n00 = dot(xi, yi, xf, yf)
    n10 = dot(xi + 1, yi, xf - 1, yf)
    n01 = dot(xi, yi + 1, xf, yf - 1)
    n11 = dot(xi + 1, yi + 1, xf - 1, yf - 1)
    top = n00 + u * (n10 - n00)
    bot = n01 + u * (n11 - n01)
    return top + v * (bot - top)


def synthesize_fbm_tile(seed: int, resolution: int, octaves: int = 6,
                        hurst: float = 0.8, relief_m: float | None = None,
                        cell_size: float = 30.0,
                        base_freq: int = 4) -> Heightfield:
    """Deterministic fractional-Brownian-motion heightfield.

    Octave o contributes gradient noise at frequency base_freq * 2**o with
    amplitude 2**(-hurst*o); higher hurst damps the fine octaves and yields
    smoother terrain. When relief_m is None the vertical range is drawn from
    the seed (uniform 20-400 m) so a synthetic corpus spans many dynamics
    classes.
    """
    if resolution < 16 or resolution & (resolution - 1):
        raise ValueError("resolution must be a power of two >= 16")
    if octaves < 1:
        raise ValueError("octaves must be >= 1")
    rng = np.random.default_rng(seed)
    relief = float(rng.uniform(20.0, 400.0)) if relief_m is None else float(relief_m)
    total = np.zeros((resolution, resolution))
    for o in range(octaves):
        freq = base_freq * (2 ** o)
        if freq >= resolution:
            break
        total += (2.0 ** (-hurst * o)) * _gradient_noise(rng, resolution, freq)
    lo, hi = total.min(), total.max()
    if hi > lo:
        total = (total - lo) / (hi - lo)
    else:
        total = np.zeros_like(total)
    return Heightfield(elevations=total * relief, cell_size=cell_size)


def build_synthetic_corpus(out_dir: str | Path, count: int, seed: int,
                           resolution: int, octaves: int = 6,
                           hurst_range: tuple[float, float] = (0.5, 0.95),
                           cell_size: float = 30.0) -> list[tuple[str, int, float, float]]:
    """Write `count` fBm tiles as PNG+sidecar; return classified entries."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    entries = []
    for i in range(count):
        tile_seed = int(rng.integers(0, 2**31 - 1))
        hurst = float(rng.uniform(*hurst_range))
        tile = synthesize_fbm_tile(tile_seed, resolution, octaves=octaves,
                                   hurst=hurst, cell_size=cell_size)
        path = out_dir / f"fbm_{i:05d}.png"
        save_heightfield(tile, path)
        entries.append((str(path), classify_dynamics(tile),
                        tile.min_m, tile.max_m))
    return entries


def ingest_tiles(input_dir: str | Path, resolution: int,
                 out_dir: str | Path) -> list[tuple[str, int, float, float]]:
    """Ingest a directory of heightfield PNGs, resampling to one resolution."""
    from .heightfield import resample

    input_dir = Path(input_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    paths = sorted(input_dir.glob("*.png"))
    if not paths:
        raise ValueError(f"no .png tiles found in {input_dir}")
    for p in paths:
        tile = load_heightfield(p)
        if tile.width != resolution or tile.height != resolution:
            tile = resample(tile, resolution, resolution)
        dest = out_dir / p.name
        save_heightfield(tile, dest)
        entries.append((str(dest), classify_dynamics(tile),
                        tile.min_m, tile.max_m))
    return entries


def build_dataset(out_dir: str | Path, resolution: int, seed: int,
                  target_per_class: int = DEFAULT_TARGET_PER_CLASS,
                  input_dir: str | Path | None = None,
                  synthetic_count: int = 256) -> DatasetManifest:
    """Full pipeline: tiles (ingested or synthesized) -> balanced manifest."""
    out_dir = Path(out_dir)
    tiles_dir = out_dir / "tiles"
    if input_dir is not None:
        entries = ingest_tiles(input_dir, resolution, tiles_dir)
    else:
        entries = build_synthetic_corpus(tiles_dir, synthetic_count, seed,
                                         resolution)
    manifest = balance_select(entries, target_per_class, seed, resolution)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest.save(out_dir / "manifest.json")
    return manifest


def load_manifest_tiles(manifest: DatasetManifest) -> list[Heightfield]:
    return [load_heightfield(t.path) for t in manifest.tiles]

"""Core terrain representation: elevation grids, normalization, resampling,
16-bit PNG I/O, and hillshade previews.

Everything downstream (dataset construction, networks, latent editing,
super-resolution, hydrology, service) moves terrain through the types in
this module. Operations are pure: inputs are never mutated and the backing
arrays are frozen read-only at construction.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

U16_MAX = 65535

# Fallback metadata when a heightfield PNG arrives without its JSON sidecar.
DEFAULT_MIN_M = 0.0
DEFAULT_MAX_M = 1000.0
DEFAULT_CELL_SIZE_M = 30.0


def _frozen_grid(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    if arr.ndim != 2:
        raise ValueError(f"grid must be 2-D, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Heightfield:
    """A W x H grid of elevations in meters with a square cell size.

    `elevations` is row-major (row 0 = north edge), shape (height, width).
    `origin` is the (x, y) offset in meters of the grid's top-left corner,
    used for patch bookkeeping during super-resolution.
    """

    elevations: np.ndarray
    cell_size: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        grid = _frozen_grid(self.elevations)
        object.__setattr__(self, "elevations", grid)
        if grid.shape[0] < 1 or grid.shape[1] < 1:
            raise ValueError("heightfield must be at least 1x1")
        if not np.isfinite(grid).all():
            bad = int(np.count_nonzero(~np.isfinite(grid)))
            raise ValueError(f"elevations contain {bad} non-finite cells")
        if not (self.cell_size > 0):
            raise ValueError(f"cell_size must be > 0, got {self.cell_size}")

    @property
    def height(self) -> int:
        return self.elevations.shape[0]

    @property
    def width(self) -> int:
        return self.elevations.shape[1]

    @property
    def extent_m(self) -> float:
        """Physical east-west extent in meters (width * cell_size)."""
        return self.width * self.cell_size

    @property
    def min_m(self) -> float:
        return float(self.elevations.min())

    @property
    def max_m(self) -> float:
        return float(self.elevations.max())


@dataclass(frozen=True)
class NormalizedField:
    """Unit-interval view of a heightfield plus the range needed to undo it."""

    values: np.ndarray
    min_m: float
    max_m: float

    def __post_init__(self) -> None:
        grid = _frozen_grid(self.values)
        object.__setattr__(self, "values", grid)
        if not np.isfinite(grid).all():
            raise ValueError("normalized values contain non-finite cells")
        lo, hi = float(grid.min()), float(grid.max())
        if lo < 0.0 or hi > 1.0:
            raise ValueError(f"normalized values outside [0, 1]: [{lo}, {hi}]")
        if self.min_m > self.max_m:
            raise ValueError(f"min_m {self.min_m} > max_m {self.max_m}")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class RegionMask:
    """Per-cell alpha in [0, 1] selecting a blend region."""

    alpha: np.ndarray

    def __post_init__(self) -> None:
        grid = _frozen_grid(self.alpha)
        object.__setattr__(self, "alpha", grid)
        if not np.isfinite(grid).all():
            raise ValueError("mask contains non-finite cells")
        if grid.min() < 0.0 or grid.max() > 1.0:
            raise ValueError("mask alpha outside [0, 1]")

    @property
    def height(self) -> int:
        return self.alpha.shape[0]

    @property
    def width(self) -> int:
        return self.alpha.shape[1]


def normalize(h: Heightfield) -> NormalizedField:
    """Linearly map the elevation range [min, max] onto [0, 1].

    A flat field maps to all 0.5 (mid-gray) with min_m == max_m recorded,
    so that sketches started from a blank canvas normalize cleanly instead
    of erroring.
    """
    lo = float(h.elevations.min())
    hi = float(h.elevations.max())
    if hi == lo:
        values = np.full(h.elevations.shape, 0.5)
    else:
        values = (h.elevations - lo) / (hi - lo)
        # Guard against rounding pushing the max a hair above 1.
        values = np.clip(values, 0.0, 1.0)
    return NormalizedField(values=values, min_m=lo, max_m=hi)


def denormalize(n: NormalizedField, cell_size: float,
                origin: tuple[float, float] = (0.0, 0.0)) -> Heightfield:
    """Inverse of normalize: v -> min_m + v * (max_m - min_m).

    The cell size is supplied by the caller since a normalized field does
    not carry one.
    """
    elev = n.min_m + n.values * (n.max_m - n.min_m)
    return Heightfield(elevations=elev, cell_size=cell_size, origin=origin)


def quantize16(values: np.ndarray) -> np.ndarray:
    """Round unit-interval values to uint16 PNG samples."""
    return np.round(np.clip(values, 0.0, 1.0) * U16_MAX).astype(np.uint16)


def dequantize16(samples: np.ndarray) -> np.ndarray:
    return samples.astype(np.float64) / U16_MAX


# -- bicubic resampling -------------------------------------------------------

def _catmull_rom_weights(n_in: int, n_out: int) -> np.ndarray:
    """Dense (n_out, n_in) Catmull-Rom (a = -0.5) interpolation matrix.

    Sample positions use align-corners mapping; taps that fall outside the
    grid are linearly extrapolated from the two edge samples, folded back
    into the weights so the matrix reproduces linear ramps exactly.
    """
    if n_out < 2:
        raise ValueError("resample target dimensions must be >= 2")
    if n_in == 1:
        return np.ones((n_out, 1))
    x = np.arange(n_out) * (n_in - 1) / (n_out - 1)
    base = np.floor(x).astype(int)
    base = np.minimum(base, n_in - 2)
    t = x - base
    t2, t3 = t * t, t * t * t
    w = np.stack([
        0.5 * (-t3 + 2 * t2 - t),
        0.5 * (3 * t3 - 5 * t2 + 2),
        0.5 * (-3 * t3 + 4 * t2 + t),
        0.5 * (t3 - t2),
    ], axis=1)
    mat = np.zeros((n_out, n_in))
    rows = np.arange(n_out)
    for k in range(4):
        idx = base + k - 1
        wk = w[:, k]
        inside = (idx >= 0) & (idx <= n_in - 1)
        np.add.at(mat, (rows[inside], idx[inside]), wk[inside])
        left = idx < 0  # virtual tap -1: 2*p0 - p1
        np.add.at(mat, (rows[left], np.zeros(left.sum(), int)), 2 * wk[left])
        np.add.at(mat, (rows[left], np.ones(left.sum(), int)), -wk[left])
        right = idx > n_in - 1  # virtual taps n, n+1: linear continuation
        steps = (idx[right] - (n_in - 1)).astype(float)
        np.add.at(mat, (rows[right], np.full(right.sum(), n_in - 1)),
                  (1 + steps) * wk[right])
        np.add.at(mat, (rows[right], np.full(right.sum(), n_in - 2)),
                  -steps * wk[right])
    return mat


def resample(h: Heightfield, new_width: int, new_height: int) -> Heightfield:
    """Bicubic (Catmull-Rom) resample preserving the physical extent.

    cell_size is rescaled by width / new_width so extent_m is unchanged;
    resampling to a different aspect ratio keeps cells square and changes
    the north-south extent accordingly.
    """
    if new_width < 2 or new_height < 2:
        raise ValueError(f"resample dimensions must be >= 2, got "
                         f"{new_width}x{new_height}")
    wy = _catmull_rom_weights(h.height, new_height)
    wx = _catmull_rom_weights(h.width, new_width)
    # Interpolate deviations from a reference value so constant fields
    # survive bit-exactly.
    ref = h.elevations.flat[0]
    out = wy @ (h.elevations - ref) @ wx.T + ref
    new_cell = h.cell_size * h.width / new_width
    return Heightfield(elevations=out, cell_size=new_cell, origin=h.origin)


def resample_normalized(n: NormalizedField, new_width: int,
                        new_height: int) -> NormalizedField:
    """Resample a normalized field, clipping cubic overshoot back to [0, 1]."""
    h = Heightfield(elevations=n.values, cell_size=1.0)
    out = resample(h, new_width, new_height)
    return NormalizedField(values=np.clip(out.elevations, 0.0, 1.0),
                           min_m=n.min_m, max_m=n.max_m)


# -- preview rendering --------------------------------------------------------

def hillshade(h: Heightfield, azimuth: float = 315.0,
              altitude: float = 45.0) -> np.ndarray:
    """Lambertian shaded relief in [0, 1].

    Surface normals come from central differences; azimuth is measured in
    degrees clockwise from north, altitude in degrees above the horizon.
    Flat terrain shades uniformly to sin(altitude).
    """
    az = np.radians(azimuth)
    alt = np.radians(altitude)
    if h.width > 1:
        dzdx = np.gradient(h.elevations, h.cell_size, axis=1)
    else:
        dzdx = np.zeros_like(h.elevations)
    if h.height > 1:
        dzdy = np.gradient(h.elevations, h.cell_size, axis=0)
    else:
        dzdy = np.zeros_like(h.elevations)
    # Normal in (east, north, up); +row points south.
    norm = np.sqrt(dzdx * dzdx + dzdy * dzdy + 1.0)
    n_e, n_n, n_u = -dzdx / norm, dzdy / norm, 1.0 / norm
    l_e = np.cos(alt) * np.sin(az)
    l_n = np.cos(alt) * np.cos(az)
    l_u = np.sin(alt)
    shade = n_e * l_e + n_n * l_n + n_u * l_u
    return np.clip(shade, 0.0, 1.0)


def feathered_disk_mask(width: int, height: int, center: tuple[float, float],
                        radius: float, feather: float = 4.0) -> RegionMask:
    """Soft brush mask: 1 inside the disk, Gaussian falloff over `feather`."""
    if radius <= 0:
        raise ValueError("radius must be > 0")
    yy, xx = np.mgrid[0:height, 0:width]
    d = np.hypot(xx - center[0], yy - center[1])
    alpha = np.where(d <= radius, 1.0,
                     np.exp(-0.5 * ((d - radius) / max(feather, 1e-9)) ** 2))
    return RegionMask(alpha=alpha)


# -- file I/O -----------------------------------------------------------------

def _sidecar_path(png_path: Path) -> Path:
    return png_path.with_suffix(".json")


def save_heightfield(h: Heightfield, path: str | Path) -> None:
    """Write a heightfield as 16-bit grayscale PNG + JSON sidecar.

    PNG samples encode the normalized elevation v/65535; the sidecar records
    the meter range and cell size needed to reconstruct elevations.
    """
    path = Path(path)
    n = normalize(h)
    png_bytes = encode_png16(n.values)
    path.write_bytes(png_bytes)
    sidecar = {"min_m": n.min_m, "max_m": n.max_m, "cell_size_m": h.cell_size}
    _sidecar_path(path).write_text(json.dumps(sidecar))


def load_heightfield(path: str | Path) -> Heightfield:
    """Load a heightfield PNG + sidecar.

    A missing sidecar is tolerated with a warning, assuming min_m=0,
    max_m=1000, cell_size=30.
    """
    path = Path(path)
    values = decode_png16(path.read_bytes())
    sidecar = _sidecar_path(path)
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        min_m = float(meta["min_m"])
        max_m = float(meta["max_m"])
        cell = float(meta["cell_size_m"])
    else:
        warnings.warn(f"no sidecar for {path.name}; assuming "
                      f"[{DEFAULT_MIN_M}, {DEFAULT_MAX_M}] m at "
                      f"{DEFAULT_CELL_SIZE_M} m/cell")
        min_m, max_m, cell = DEFAULT_MIN_M, DEFAULT_MAX_M, DEFAULT_CELL_SIZE_M
    n = NormalizedField(values=values, min_m=min_m, max_m=max_m)
    return denormalize(n, cell_size=cell)


def encode_png16(values: np.ndarray) -> bytes:
    """Encode unit-interval values as 16-bit single-channel PNG bytes."""
    import io

    samples = quantize16(np.asarray(values))
    img = Image.fromarray(samples)  # uint16 -> mode I;16
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def decode_png16(data: bytes) -> np.ndarray:
    """Decode a 16-bit (or 8-bit, promoted) grayscale PNG to unit floats."""
    import io

    img = Image.open(io.BytesIO(data))
    if img.mode in ("I;16", "I;16B", "I"):
        samples = np.asarray(img, dtype=np.uint32)
        return np.clip(samples, 0, U16_MAX).astype(np.float64) / U16_MAX
    if img.mode == "L":
        return np.asarray(img, dtype=np.float64) / 255.0
    raise ValueError(f"unsupported PNG mode for heightfields: {img.mode}")

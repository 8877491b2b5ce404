"""Patch-based terrain amplification: overlap-layer patch decomposition,
per-patch network amplification, histogram retargeting, and minimum-error
boundary-cut stitching, with optional two-model cascading.

The decomposition produces k^2 base patches plus three overlap layers offset
by half a patch in x, y, and both, (2k-1)^2 patches total; every interior
base seam is covered by an overlap patch whose borders are blended in along
least-squared-error seams.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d

from .heightfield import Heightfield, NormalizedField, normalize, resample

FEATHER_CELLS = 4


@dataclass(frozen=True)
class Patch:
    layer: str          # "base" | "x" | "y" | "xy"
    row: int            # patch index within its layer
    col: int
    y0: int             # origin in cells within the (padded) source
    x0: int
    grid: np.ndarray    # (s, s) elevations in meters

    @property
    def size(self) -> int:
        return self.grid.shape[0]


@dataclass(frozen=True)
class PatchGrid:
    """Decomposition of a heightfield into base + overlap patches."""

    kx: int
    ky: int
    patch_size: int
    patches: tuple[Patch, ...]
    padded_shape: tuple[int, int]
    crop: tuple[int, int]  # original (height, width) to crop back to

    def __post_init__(self) -> None:
        expected = (2 * self.kx - 1) * (2 * self.ky - 1)
        if len(self.patches) != expected:
            raise ValueError(f"expected {expected} patches, got {len(self.patches)}")

    @property
    def k(self) -> int:
        """Patches per side; defined for the square decompositions."""
        if self.kx != self.ky:
            raise ValueError(f"non-square decomposition: {self.kx}x{self.ky}")
        return self.kx

    @property
    def base_patches(self) -> list[Patch]:
        return self.layer_patches("base")

    @property
    def overlap_patches(self) -> list[Patch]:
        return [p for p in self.patches if p.layer != "base"]

    def layer_patches(self, layer: str) -> list[Patch]:
        return [p for p in self.patches if p.layer == layer]


def _reflect_pad_to_multiple(grid: np.ndarray, s: int) -> np.ndarray:
    h, w = grid.shape
    ph = (-h) % s
    pw = (-w) % s
    if ph == 0 and pw == 0:
        return grid
    return np.pad(grid, ((0, ph), (0, pw)), mode="reflect")


def decompose(t: Heightfield, s: int) -> PatchGrid:
    """Split a terrain into s-cell patches with half-offset overlap layers.

    Inputs whose dimensions are not multiples of s are reflect-padded to the
    next multiple (cropped back after assembly). A patch size larger than
    the terrain degenerates to a single-patch passthrough.
    """
    if s < 2:
        raise ValueError("patch size must be >= 2")
    grid = np.asarray(t.elevations, dtype=np.float64)
    if s >= t.width and s >= t.height:
        patch = Patch(layer="base", row=0, col=0, y0=0, x0=0, grid=grid.copy())
        return PatchGrid(kx=1, ky=1, patch_size=max(grid.shape),
                         patches=(patch,), padded_shape=grid.shape,
                         crop=grid.shape)
    if s % 2:
        raise ValueError("patch size must be even so half offsets land on cells")
    padded = _reflect_pad_to_multiple(grid, s)
    ph, pw = padded.shape
    ky, kx = ph // s, pw // s
    half = s // 2
    patches: list[Patch] = []
    for b in range(ky):
        for a in range(kx):
            patches.append(Patch("base", b, a, b * s, a * s,
                                 padded[b * s:(b + 1) * s, a * s:(a + 1) * s].copy()))
    for b in range(ky):           # x-offset layer covers vertical seams
        for a in range(kx - 1):
            y0, x0 = b * s, a * s + half
            patches.append(Patch("x", b, a, y0, x0,
                                 padded[y0:y0 + s, x0:x0 + s].copy()))
    for b in range(ky - 1):       # y-offset layer covers horizontal seams
        for a in range(kx):
            y0, x0 = b * s + half, a * s
            patches.append(Patch("y", b, a, y0, x0,
                                 padded[y0:y0 + s, x0:x0 + s].copy()))
    for b in range(ky - 1):       # diagonal layer covers seam crossings
        for a in range(kx - 1):
            y0, x0 = b * s + half, a * s + half
            patches.append(Patch("xy", b, a, y0, x0,
                                 padded[y0:y0 + s, x0:x0 + s].copy()))
    return PatchGrid(kx=kx, ky=ky, patch_size=s, patches=tuple(patches),
                     padded_shape=padded.shape, crop=grid.shape)


# -- histogram retargeting -----------------------------------------------------

def histogram_retarget(amplified: NormalizedField,
                       reference: Heightfield) -> Heightfield:
    """Quantile-map amplified values onto the reference elevation distribution.

    The mapping is monotone in the amplified ranks and endpoint-exact: the
    output minimum and maximum equal the reference minimum and maximum, so a
    patch recovers its original elevation range after amplification.
    """
    flat = amplified.values.ravel()
    n = flat.size
    ref_sorted = np.sort(reference.elevations, axis=None)
    m = ref_sorted.size
    order = np.argsort(flat, kind="stable")
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(n)
    if n > 1:
        pos = ranks * (m - 1) / (n - 1)
    else:
        pos = np.array([0.5 * (m - 1)])
    values = np.interp(pos, np.arange(m), ref_sorted)
    out_cell = reference.cell_size * reference.width / amplified.width
    return Heightfield(elevations=values.reshape(amplified.values.shape),
                       cell_size=out_cell, origin=reference.origin)


# -- minimum-error boundary cut --------------------------------------------------

def seam_cut(overlap_a: np.ndarray, overlap_b: np.ndarray) -> np.ndarray:
    """Top-to-bottom minimum-squared-error seam through two aligned strips.

    Returns one column index per row; consecutive indices differ by at most
    one (8-connected monotone path). Among equal-cost paths the
    lexicographically smallest is returned. Strips narrower than 3 columns
    fall back to the midline. Composite convention: columns left of the seam
    come from A, the seam column and everything right of it from B.
    """
    a = np.asarray(overlap_a, dtype=np.float64)
    b = np.asarray(overlap_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"overlap shapes differ: {a.shape} vs {b.shape}")
    rows, cols = a.shape
    if cols < 3:
        return np.full(rows, cols // 2, dtype=np.int64)
    err = (a - b) ** 2
    # Cost-to-go from each cell to the bottom row.
    cost = np.empty_like(err)
    cost[-1] = err[-1]
    for r in range(rows - 2, -1, -1):
        below = cost[r + 1]
        best = below.copy()
        np.minimum(best[1:], below[:-1], out=best[1:])    # step from j-1
        np.minimum(best[:-1], below[1:], out=best[:-1])   # step from j+1
        cost[r] = err[r] + best
    path = np.empty(rows, dtype=np.int64)
    path[0] = int(np.argmin(cost[0]))  # argmin takes the smallest index on ties
    for r in range(1, rows):
        j = path[r - 1]
        candidates = [c for c in (j - 1, j, j + 1) if 0 <= c < cols]
        best = min(cost[r][c] for c in candidates)
        path[r] = next(c for c in candidates if cost[r][c] == best)
    return path


def apply_seam(a: np.ndarray, b: np.ndarray, path: np.ndarray) -> np.ndarray:
    """Composite two strips along a seam: A left of the cut, B from it on."""
    out = a.copy()
    for r, j in enumerate(path):
        out[r, j:] = b[r, j:]
    return out


def _side_seam_mask(existing: np.ndarray, patch: np.ndarray,
                    skip_first: bool = False,
                    skip_last: bool = False) -> np.ndarray:
    """Per-row take-patch mask with cuts confined to the outer quarter strips.

    The left cut runs between existing (kept) and patch content in the first
    quarter of the columns, the right cut mirrors it in the last quarter, so
    the center half of every row is guaranteed patch content. Confining the
    cuts is what lets the three overlap layers jointly cover every base seam:
    each layer's guaranteed band plugs the gaps the previous one leaves near
    seam crossings. Sides flush with the assembly border skip their cut (the
    mask runs to the edge); there is nothing beyond the border to blend with.
    """
    rows, cols = patch.shape
    quarter = min(max(3, cols // 4), cols // 2)
    # Inset the strips from the patch border so cuts (and their feather)
    # never land on a base seam line; the guaranteed-1 region stays
    # [quarter, cols - quarter), preserving the layer-coverage tiling.
    margin = min(FEATHER_CELLS, max(0, quarter - 3))
    q = quarter - margin
    mask = np.zeros((rows, cols), dtype=np.float64)
    if skip_first:
        left = np.zeros(rows, dtype=np.int64)
    else:
        left = margin + seam_cut(existing[:, margin:margin + q],
                                 patch[:, margin:margin + q])
    if skip_last:
        right = np.full(rows, cols, dtype=np.int64)
    else:
        hi = cols - margin
        right = hi - q + seam_cut(patch[:, hi - q:hi], existing[:, hi - q:hi])
    for r in range(rows):
        mask[r, left[r]:right[r]] = 1.0
    return mask


def _feather(mask: np.ndarray, axis: int) -> np.ndarray:
    return uniform_filter1d(mask, size=FEATHER_CELLS, axis=axis,
                            mode="nearest")


def _blend_patch(assembly: np.ndarray, patch: Patch, amplified: np.ndarray,
                 upscale: int) -> None:
    """Seam-cut one overlap patch into the assembly in place.

    Every overlap patch is cut on all four borders (vertical cuts feathered
    horizontally, horizontal cuts feathered vertically), so pasted patches
    never leave hard edges of their own.
    """
    if patch.layer not in ("x", "y", "xy"):
        raise ValueError(f"not an overlap layer: {patch.layer}")
    s_out = amplified.shape[0]
    y0, x0 = patch.y0 * upscale, patch.x0 * upscale
    region = assembly[y0:y0 + s_out, x0:x0 + s_out]
    mv = _feather(_side_seam_mask(
        region, amplified,
        skip_first=(x0 == 0), skip_last=(x0 + s_out == assembly.shape[1])),
        axis=1)
    mh = _feather(_side_seam_mask(
        region.T, amplified.T,
        skip_first=(y0 == 0), skip_last=(y0 + s_out == assembly.shape[0])).T,
        axis=0)
    mask = mv * mh
    assembly[y0:y0 + s_out, x0:x0 + s_out] = (1.0 - mask) * region + mask * amplified


# -- the amplification pipeline ---------------------------------------------------

def _amplify_patch(patch: Patch, bundle, upscale: int, noise_seed: int,
                   cell_size: float) -> np.ndarray:
    """One patch through resample -> encode -> synthesize -> retarget."""
    from .networks.inference import encode, synthesize

    res = bundle.config.resolution
    src = Heightfield(elevations=patch.grid, cell_size=cell_size)
    upsampled = resample(src, res, res)
    field = normalize(upsampled)
    w = encode(field, bundle)
    detailed = synthesize(w, bundle, noise_seed=noise_seed)
    target = patch.size * upscale
    if detailed.width != target:
        from .heightfield import resample_normalized
        detailed = resample_normalized(detailed, target, target)
    return histogram_retarget(detailed, src).elevations


def amplify(t: Heightfield, bundle, upscale: int, noise_seed: int = 0,
            max_workers: int = 2, debug_dir=None) -> Heightfield:
    """Patch-based super-resolution of a terrain by an integer factor.

    Pipeline per patch: bicubic upsample to the model resolution, invert
    through the encoder, re-synthesize, then retarget the elevation
    histogram to the source patch. Base patches tile the output; the three
    overlap layers are stitched in over every base seam (x, then y, then
    diagonal) with minimum-error boundary cuts. Output is input resolution
    times `upscale` with cell_size divided by the same factor.
    """
    if upscale < 1:
        raise ValueError("upscale must be >= 1")
    res = bundle.config.resolution
    if res % upscale:
        raise ValueError(f"upscale {upscale} must divide the bundle "
                         f"resolution {res}")
    s = res // upscale
    grid = decompose(t, s)
    out_h = grid.padded_shape[0] * upscale
    out_w = grid.padded_shape[1] * upscale

    def run(indexed):
        i, patch = indexed
        try:
            return i, _amplify_patch(patch, bundle, upscale,
                                     noise_seed + i, t.cell_size)
        except Exception as exc:  # surface the failing patch coordinates
            raise RuntimeError(
                f"amplify failed on {patch.layer} patch ({patch.row}, "
                f"{patch.col}) at cells ({patch.y0}, {patch.x0}): {exc}"
            ) from exc

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = dict(pool.map(run, enumerate(grid.patches)))

    if debug_dir is not None:
        from pathlib import Path
        from .heightfield import save_heightfield
        dbg = Path(debug_dir)
        dbg.mkdir(parents=True, exist_ok=True)
        for i, patch in enumerate(grid.patches):
            save_heightfield(
                Heightfield(elevations=results[i], cell_size=t.cell_size / upscale),
                dbg / f"patch_{patch.layer}_{patch.row}_{patch.col}.png")

    assembly = np.zeros((out_h, out_w))
    for i, patch in enumerate(grid.patches):
        if patch.layer != "base":
            continue
        amp = results[i]
        y0, x0 = patch.y0 * upscale, patch.x0 * upscale
        assembly[y0:y0 + amp.shape[0], x0:x0 + amp.shape[1]] = amp
    for layer in ("x", "y", "xy"):
        for i, patch in enumerate(grid.patches):
            if patch.layer == layer:
                _blend_patch(assembly, patch, results[i], upscale)

    crop_h, crop_w = grid.crop[0] * upscale, grid.crop[1] * upscale
    return Heightfield(elevations=assembly[:crop_h, :crop_w],
                       cell_size=t.cell_size / upscale, origin=t.origin)


def cascade(t: Heightfield, coarse_bundle, fine_bundle, upscale_coarse: int,
            upscale_fine: int, noise_seed: int = 0) -> Heightfield:
    """Amplify with the coarse-scale model, then again with the fine one.

    Bundle scale tags must be ordered coarse to fine (e.g. 30m then 5m).
    """
    from .networks.bundle import scale_tag_meters

    coarse_m = scale_tag_meters(coarse_bundle.config.scale_tag)
    fine_m = scale_tag_meters(fine_bundle.config.scale_tag)
    if coarse_m <= fine_m:
        raise ValueError(
            f"cascade bundles must go coarse to fine, got "
            f"{coarse_bundle.config.scale_tag} -> {fine_bundle.config.scale_tag}")
    mid = amplify(t, coarse_bundle, upscale_coarse, noise_seed=noise_seed)
    return amplify(mid, fine_bundle, upscale_fine, noise_seed=noise_seed + 1)


def seam_jump_ratio(amplified: Heightfield, patch_size_out: int) -> float:
    """Regression metric: p95 cross-seam jump over the median cell jump."""
    elev = amplified.elevations
    jumps = []
    for x in range(patch_size_out, amplified.width, patch_size_out):
        jumps.extend(np.abs(elev[:, x] - elev[:, x - 1]))
    for y in range(patch_size_out, amplified.height, patch_size_out):
        jumps.extend(np.abs(elev[y, :] - elev[y - 1, :]))
    if not jumps:
        return 0.0
    all_dx = np.abs(np.diff(elev, axis=1)).ravel()
    all_dy = np.abs(np.diff(elev, axis=0)).ravel()
    median_jump = np.median(np.concatenate([all_dx, all_dy]))
    p95 = np.percentile(jumps, 95)
    return float(p95 / max(median_jump, 1e-12))

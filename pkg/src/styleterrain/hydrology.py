"""Drainage-consistency validation: pit detection, least-cost breaching, and
the removed-bedrock-volume metric.

Conventions: 8-connectivity, boundary cells drain off-map, and equal
elevations drain (non-ascending paths), so flats never need epsilon carving.
A terrain is drainage-consistent when every cell has a non-ascending
8-connected path to the boundary.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .heightfield import Heightfield

_NEIGHBORS = [(-1, -1), (-1, 0), (-1, 1),
              (0, -1), (0, 1),
              (1, -1), (1, 0), (1, 1)]


@dataclass(frozen=True)
class DrainageReport:
    """Outcome of a breaching run.

    v_t is the volume of bedrock removed (m^3); carve_depth is per-cell
    lowering in meters (>= 0 everywhere); drains_completely reports whether
    the breached terrain passes drainage consistency.
    """

    v_t: float
    carve_depth: np.ndarray
    pit_count_before: int
    drains_completely: bool

    def __post_init__(self) -> None:
        depth = np.asarray(self.carve_depth, dtype=np.float64)
        object.__setattr__(self, "carve_depth", depth)
        if depth.min() < 0:
            raise ValueError("carve depths must be >= 0")
        if self.v_t < 0:
            raise ValueError("v_t must be >= 0")

    def to_dict(self) -> dict:
        return {
            "v_t_m3": self.v_t,
            "pit_count_before": self.pit_count_before,
            "drains_completely": self.drains_completely,
            "max_carve_depth_m": float(self.carve_depth.max()),
            "carved_cells": int(np.count_nonzero(self.carve_depth)),
        }


def _drainable_mask(elev: np.ndarray) -> np.ndarray:
    """Cells with a non-ascending 8-path to the boundary.

    Closure from the boundary inward: a cell becomes drainable when it has a
    drainable neighbor at equal or lower elevation (flow steps never ascend).
    """
    h, w = elev.shape
    drain = np.zeros((h, w), dtype=bool)
    stack = []
    for y in range(h):
        for x in range(w):
            if y in (0, h - 1) or x in (0, w - 1):
                drain[y, x] = True
                stack.append((y, x))
    while stack:
        y, x = stack.pop()
        e = elev[y, x]
        for dy, dx in _NEIGHBORS:
            ny, nx = y + dy, x + dx
            if 0 <= ny < h and 0 <= nx < w and not drain[ny, nx] \
                    and elev[ny, nx] >= e:
                drain[ny, nx] = True
                stack.append((ny, nx))
    return drain


def _undrainable_basins(elev: np.ndarray,
                        drain: np.ndarray) -> list[list[tuple[int, int]]]:
    """8-connected components of the undrainable set."""
    h, w = elev.shape
    seen = drain.copy()
    basins = []
    for y in range(h):
        for x in range(w):
            if seen[y, x]:
                continue
            comp = [(y, x)]
            seen[y, x] = True
            head = 0
            while head < len(comp):
                cy, cx = comp[head]
                head += 1
                for dy, dx in _NEIGHBORS:
                    ny, nx = cy + dy, cx + dx
                    if 0 <= ny < h and 0 <= nx < w and not seen[ny, nx]:
                        seen[ny, nx] = True
                        comp.append((ny, nx))
            basins.append(comp)
    return basins


def find_pits(t: Heightfield) -> list[tuple[int, int]]:
    """Floor cells of every undrainable basin, as (row, col) pairs.

    Empty iff the terrain is drainage-consistent. For each basin only the
    cells at the basin's minimum elevation are reported; walls trapped below
    the spill are part of the basin but not of its floor.
    """
    elev = t.elevations
    drain = _drainable_mask(elev)
    pits: list[tuple[int, int]] = []
    for basin in _undrainable_basins(elev, drain):
        floor = min(elev[c] for c in basin)
        pits.extend(c for c in basin if elev[c] == floor)
    return sorted(pits)


def drainage_consistency(t: Heightfield) -> tuple[bool, list[tuple[int, int]]]:
    """True iff no pits remain; also returns the diagnostic pit list."""
    pits = find_pits(t)
    return (len(pits) == 0, pits)


def _breach_one_basin(elev: np.ndarray, basin: list[tuple[int, int]],
                      drain: np.ndarray) -> None:
    """Carve the least-cost channel from one basin floor to drainage.

    Dijkstra from the floor cells with per-cell cost max(0, elev - h) where
    h is the floor elevation; terminals are boundary cells (they drain
    off-map at any height) or already-drainable cells at or below h. The
    winning path is lowered to min(elev, h), a non-ascending profile.
    """
    h_grid, w_grid = elev.shape
    floor = min(elev[c] for c in basin)
    start = [c for c in basin if elev[c] == floor]
    dist = {}
    parent: dict[tuple[int, int], tuple[int, int] | None] = {}
    heap: list[tuple[float, int, int]] = []
    for c in start:
        dist[c] = 0.0
        parent[c] = None
        heapq.heappush(heap, (0.0, c[0], c[1]))
    goal = None
    while heap:
        d, y, x = heapq.heappop(heap)
        if d > dist.get((y, x), np.inf):
            continue
        on_boundary = y in (0, h_grid - 1) or x in (0, w_grid - 1)
        if on_boundary or (drain[y, x] and elev[y, x] <= floor):
            goal = (y, x)
            break
        for dy, dx in _NEIGHBORS:
            ny, nx = y + dy, x + dx
            if not (0 <= ny < h_grid and 0 <= nx < w_grid):
                continue
            nd = d + max(0.0, elev[ny, nx] - floor)
            if nd < dist.get((ny, nx), np.inf):
                dist[(ny, nx)] = nd
                parent[(ny, nx)] = (y, x)
                heapq.heappush(heap, (nd, ny, nx))
    assert goal is not None, "boundary is always reachable"
    node: tuple[int, int] | None = goal
    while node is not None:
        elev[node] = min(elev[node], floor)
        node = parent[node]


def breach(t: Heightfield) -> tuple[Heightfield, DrainageReport]:
    """Carve channels until every cell drains; never raises any cell.

    Basins are processed lowest floor first so later channels can reuse
    earlier ones. Always succeeds: worst case the channel runs to the map
    boundary.
    """
    elev = t.elevations.astype(np.float64).copy()
    before = elev.copy()
    pit_count = len(find_pits(t))
    while True:
        drain = _drainable_mask(elev)
        if drain.all():
            break
        basins = _undrainable_basins(elev, drain)
        basins.sort(key=lambda b: min(elev[c] for c in b))
        _breach_one_basin(elev, basins[0], drain)
    carve = before - elev
    cell_area = t.cell_size * t.cell_size
    v_t = float(carve.sum() * cell_area)
    out = Heightfield(elevations=elev, cell_size=t.cell_size, origin=t.origin)
    consistent, _ = drainage_consistency(out)
    report = DrainageReport(v_t=v_t, carve_depth=carve,
                            pit_count_before=pit_count,
                            drains_completely=consistent)
    return out, report


def batch_report(terrains: list[Heightfield]) -> dict:
    """Aggregate v_T over a set of terrains, raw and per square kilometer."""
    volumes = []
    per_km2 = []
    for t in terrains:
        _, rep = breach(t)
        volumes.append(rep.v_t)
        area_km2 = (t.width * t.cell_size) * (t.height * t.cell_size) / 1e6
        per_km2.append(rep.v_t / area_km2 if area_km2 > 0 else 0.0)
    return {
        "count": len(volumes),
        "mean_v_t_m3": float(np.mean(volumes)) if volumes else 0.0,
        "median_v_t_m3": float(np.median(volumes)) if volumes else 0.0,
        "mean_v_t_m3_per_km2": float(np.mean(per_km2)) if per_km2 else 0.0,
        "volumes_m3": [float(v) for v in volumes],
    }

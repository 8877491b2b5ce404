"""Latent carriers: a raw sample z, its mapped style vector w, and the
per-layer extended form used for all editing operations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _frozen(values, ndim) -> np.ndarray:
    arr = np.array(values, dtype=np.float32, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f"expected {ndim}-D latent, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("latent contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LatentZ:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, 1))

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class LatentW:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, 1))

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class LatentWPlus:
    """L x D matrix of style rows, ordered coarse to fine."""

    layers: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "layers", _frozen(self.layers, 2))

    @property
    def num_layers(self) -> int:
        return self.layers.shape[0]

    @property
    def dim(self) -> int:
        return self.layers.shape[1]

"""Support propagation through a hierarchical convolution stack, masked input.

Models only the nonzero structure (support), not feature values: a dense
convolution turns a cell nonzero as soon as any cell inside its kernel window
is nonzero, so dense support dilates layer by layer and the mask pattern
erodes. A sparse stack computes only at active cells, so support within a
stage never changes. Stage boundaries halve resolution with any-active 2x2
pooling, the support-level analogue of a strided convolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from .grid import MaskMap


@dataclass(frozen=True)
class SupportMap:
    """Active/computed positions on a cell grid (True = active)."""

    cols: int
    rows: int
    cells: tuple[bool, ...]

    def __post_init__(self):
        if len(self.cells) != self.cols * self.rows:
            raise ValueError("cell count does not match dimensions")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "SupportMap":
        a = np.asarray(arr, dtype=bool)
        return cls(a.shape[1], a.shape[0], tuple(bool(v) for v in a.reshape(-1)))

    def as_array(self) -> np.ndarray:
        return np.array(self.cells, dtype=bool).reshape(self.rows, self.cols)

    @property
    def active_count(self) -> int:
        return sum(self.cells)

    @property
    def is_full(self) -> bool:
        return all(self.cells)


@dataclass(frozen=True)
class StageStack:
    """Hierarchy description: stages halve resolution, layers dilate within."""

    num_stages: int = 4
    layers_per_stage: int = 2
    kernel_radius: int = 1
    downsample_factor: int = 2

    def __post_init__(self):
        if self.num_stages < 1:
            raise ValueError("num_stages must be >= 1")
        if self.layers_per_stage < 1:
            raise ValueError("layers_per_stage must be >= 1")
        if self.kernel_radius < 1:
            raise ValueError("kernel_radius must be >= 1")
        if self.downsample_factor != 2:
            raise ValueError("only a downsample factor of 2 is supported")

    @property
    def total_layers(self) -> int:
        return self.num_stages * self.layers_per_stage


def support_from_mask(mask: MaskMap) -> SupportMap:
    """Initial support: the unmasked cells."""
    return SupportMap.from_array(~mask.as_array())


def _pool_any(arr: np.ndarray) -> np.ndarray:
    # Odd dimensions are padded with inactive cells on the right/bottom so
    # every coarse cell pools a full 2x2 window.
    h, w = arr.shape
    padded = np.zeros((h + h % 2, w + w % 2), dtype=bool)
    padded[:h, :w] = arr
    ph, pw = padded.shape
    return padded.reshape(ph // 2, 2, pw // 2, 2).any(axis=(1, 3))


def _dilate(arr: np.ndarray, radius: int) -> np.ndarray:
    out = np.zeros_like(arr)
    h, w = arr.shape
    for dy in range(-radius, radius + 1):
        ys = slice(max(0, dy), min(h, h + dy))
        yd = slice(max(0, -dy), min(h, h - dy))
        for dx in range(-radius, radius + 1):
            xs = slice(max(0, dx), min(w, w + dx))
            xd = slice(max(0, -dx), min(w, w - dx))
            out[yd, xd] |= arr[ys, xs]
    return out


def downsample_mask(mask: MaskMap, stages: int) -> list[SupportMap]:
    """Any-unmasked 2x2 pooling applied stage by stage; one map per stage."""
    if stages < 1:
        raise ValueError("stages must be >= 1")
    arr = support_from_mask(mask).as_array()
    out = []
    for _ in range(stages):
        arr = _pool_any(arr)
        out.append(SupportMap.from_array(arr))
    return out


def dense_propagate(mask: MaskMap, stack: StageStack) -> list[list[SupportMap]]:
    """Per-stage support sequences [stage input, after each layer] for a
    dense stack: every layer dilates support by the kernel radius."""
    arr = support_from_mask(mask).as_array()
    stages = []
    for s in range(stack.num_stages):
        seq = [SupportMap.from_array(arr)]
        for _ in range(stack.layers_per_stage):
            arr = _dilate(arr, stack.kernel_radius)
            seq.append(SupportMap.from_array(arr))
        stages.append(seq)
        if s + 1 < stack.num_stages:
            arr = _pool_any(arr)
    return stages


def sparse_propagate(mask: MaskMap, stack: StageStack) -> list[list[SupportMap]]:
    """Per-stage support sequences for a sparse stack: computation is
    restricted to active cells, so support within a stage equals the stage
    input; only the pooling between stages changes it."""
    arr = support_from_mask(mask).as_array()
    stages = []
    for s in range(stack.num_stages):
        frame = SupportMap.from_array(arr)
        stages.append([frame] * (stack.layers_per_stage + 1))
        if s + 1 < stack.num_stages:
            arr = _pool_any(arr)
    return stages


def pattern_loss_depth(mask: MaskMap, stack: StageStack, mode: str = "dense") -> int | None:
    """Number of layers until support covers the whole grid, or None.

    A pattern is "lost" once nothing distinguishes masked from unmasked
    origins, i.e. support is full at the input resolution. Measured over
    stack.total_layers dilation steps without stage pooling: pooling changes
    resolution (an any-active pooled map can be trivially full), so fullness
    is only meaningful against the grid the mask lives on. 0 means the mask
    had no masked cells to begin with.
    """
    if mode not in ("dense", "sparse"):
        raise ValueError(f"unknown mode {mode!r}")
    arr = support_from_mask(mask).as_array()
    if arr.all():
        return 0
    if mode == "sparse":
        return None
    for layer in range(1, stack.total_layers + 1):
        arr = _dilate(arr, stack.kernel_radius)
        if arr.all():
            return layer
    return None


def dense_loss_bound(mask: MaskMap, stack: StageStack) -> int:
    """Upper bound on dense loss depth for any nonempty keep-set:
    ceil(grid diameter / kernel radius) layers suffice (Chebyshev metric)."""
    grid = mask.grid
    diameter = max(grid.cols, grid.rows) - 1
    return ceil(diameter / stack.kernel_radius) if diameter else 0

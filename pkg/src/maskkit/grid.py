"""Patch-lattice model: square-patch grids, boolean mask maps, grayscale images.

Cells are linearized row-major with the origin at the top-left patch, so the
patch at column i, row j has linear index ``cols * j + i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import floor
from typing import Iterable, Union

import numpy as np

RatioLike = Union[float, int, str, Fraction]


def exact_fraction(ratio: RatioLike) -> Fraction:
    """Normalize a ratio to an exact Fraction.

    Strings keep their decimal meaning ("0.7" -> 7/10); floats contribute
    their exact binary value. Every count formula floors an exact fraction,
    so no intermediate float rounding can move a count across an integer
    boundary.
    """
    if isinstance(ratio, Fraction):
        return ratio
    if isinstance(ratio, (str, int)):
        return Fraction(ratio)
    if isinstance(ratio, float):
        return Fraction(ratio)
    raise TypeError(f"cannot interpret {ratio!r} as a ratio")


@dataclass(frozen=True)
class PatchGrid:
    """A cols x rows lattice of square patches over an image.

    Trailing pixels not covered by a whole patch are remainder margins; they
    belong to the image but to no patch.
    """

    cols: int
    rows: int
    patch_size: int
    image_width: int
    image_height: int

    def __post_init__(self):
        if self.cols < 1 or self.rows < 1 or self.patch_size < 1:
            raise ValueError("grid dimensions and patch size must be >= 1")
        if self.cols != self.image_width // self.patch_size:
            raise ValueError("cols inconsistent with image width / patch size")
        if self.rows != self.image_height // self.patch_size:
            raise ValueError("rows inconsistent with image height / patch size")

    @property
    def total_patches(self) -> int:
        return self.cols * self.rows

    @property
    def margin_x(self) -> int:
        return self.image_width - self.cols * self.patch_size

    @property
    def margin_y(self) -> int:
        return self.image_height - self.rows * self.patch_size

    def linear_index(self, i: int, j: int) -> int:
        if not (0 <= i < self.cols and 0 <= j < self.rows):
            raise ValueError(f"patch ({i}, {j}) outside {self.cols}x{self.rows} grid")
        return self.cols * j + i

    def coord(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.total_patches:
            raise ValueError(f"linear index {index} outside grid")
        return index % self.cols, index // self.cols


def partition(image_width: int, image_height: int, patch_size: int) -> PatchGrid:
    """Divide an image into the largest top-left-aligned grid of square patches."""
    if image_width < 1 or image_height < 1 or patch_size < 1:
        raise ValueError("image dimensions and patch size must be >= 1")
    if patch_size > min(image_width, image_height):
        raise ValueError(
            f"patch size {patch_size} exceeds image {image_width}x{image_height}"
        )
    return PatchGrid(
        cols=image_width // patch_size,
        rows=image_height // patch_size,
        patch_size=patch_size,
        image_width=image_width,
        image_height=image_height,
    )


def bare_grid(cols: int, rows: int) -> PatchGrid:
    """A grid described only by its patch counts (one pixel per patch)."""
    return partition(cols, rows, 1)


@dataclass(frozen=True)
class MaskMap:
    """Boolean masked/unmasked assignment over a patch grid (True = masked)."""

    grid: PatchGrid
    cells: tuple[bool, ...]

    def __post_init__(self):
        if len(self.cells) != self.grid.total_patches:
            raise ValueError(
                f"mask has {len(self.cells)} cells, grid has {self.grid.total_patches}"
            )

    @classmethod
    def from_array(cls, grid: PatchGrid, cells: np.ndarray) -> "MaskMap":
        flat = np.asarray(cells, dtype=bool).reshape(-1)
        return cls(grid, tuple(bool(c) for c in flat))

    @classmethod
    def from_coords(cls, grid: PatchGrid, masked: Iterable[tuple[int, int]]) -> "MaskMap":
        cells = np.zeros(grid.total_patches, dtype=bool)
        for i, j in masked:
            cells[grid.linear_index(i, j)] = True
        return cls.from_array(grid, cells)

    def as_array(self) -> np.ndarray:
        return np.array(self.cells, dtype=bool).reshape(self.grid.rows, self.grid.cols)

    @property
    def masked_count(self) -> int:
        return sum(self.cells)

    def masked_coords(self) -> frozenset[tuple[int, int]]:
        return frozenset(
            self.grid.coord(idx) for idx, c in enumerate(self.cells) if c
        )

    def cell(self, i: int, j: int) -> bool:
        return self.cells[self.grid.linear_index(i, j)]


def masked_ratio(mask: MaskMap) -> float:
    """Fraction of patches masked, masked_count / total_patches."""
    return mask.masked_count / mask.grid.total_patches


def target_masked_count(grid: PatchGrid, ratio: RatioLike) -> int:
    """Masked-cell target under the keep-side floor convention.

    Keeps floor((1 - ratio) * total) patches and masks the rest; mesh, square
    and block-wise generators aim for this count. The random generator uses
    random_masked_count instead (the two differ by one on odd totals).
    """
    r = exact_fraction(ratio)
    if not 0 <= r <= 1:
        raise ValueError(f"ratio {ratio!r} outside [0, 1]")
    t = grid.total_patches
    return t - floor((1 - r) * t)


def random_masked_count(grid: PatchGrid, ratio: RatioLike) -> int:
    """Masked-cell count under the mask-side floor convention, floor(ratio * total)."""
    r = exact_fraction(ratio)
    if not 0 <= r <= 1:
        raise ValueError(f"ratio {ratio!r} outside [0, 1]")
    return floor(r * grid.total_patches)


def complement(mask: MaskMap) -> MaskMap:
    """Flip every cell."""
    return MaskMap(mask.grid, tuple(not c for c in mask.cells))


@dataclass(frozen=True)
class GrayImage:
    """Single-channel image with intensities in [0, max_value], row-major."""

    width: int
    height: int
    pixels: tuple[int, ...]
    max_value: int = 255

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        if self.max_value < 1:
            raise ValueError("max_value must be >= 1")
        if len(self.pixels) != self.width * self.height:
            raise ValueError(
                f"pixel count {len(self.pixels)} != {self.width}x{self.height}"
            )
        lo, hi = min(self.pixels), max(self.pixels)
        if lo < 0 or hi > self.max_value:
            raise ValueError(f"pixel values [{lo}, {hi}] outside [0, {self.max_value}]")

    @classmethod
    def from_array(cls, arr: np.ndarray, max_value: int = 255) -> "GrayImage":
        a = np.asarray(arr)
        if a.ndim != 2:
            raise ValueError("expected a 2-d array")
        return cls(
            width=a.shape[1],
            height=a.shape[0],
            pixels=tuple(int(v) for v in a.reshape(-1)),
            max_value=max_value,
        )

    def as_array(self) -> np.ndarray:
        return np.array(self.pixels, dtype=np.int32).reshape(self.height, self.width)

    @classmethod
    def flat(cls, width: int, height: int, value: int, max_value: int = 255) -> "GrayImage":
        return cls(width, height, (value,) * (width * height), max_value)


def apply_mask(image: GrayImage, mask: MaskMap, fill: int) -> GrayImage:
    """Replace every pixel inside a masked patch with fill.

    Remainder margins pass through unchanged. The mask's grid must have been
    built for this image's dimensions.
    """
    grid = mask.grid
    if (grid.image_width, grid.image_height) != (image.width, image.height):
        raise ValueError(
            f"mask grid built for {grid.image_width}x{grid.image_height}, "
            f"image is {image.width}x{image.height}"
        )
    if not 0 <= fill <= image.max_value:
        raise ValueError(f"fill {fill} outside [0, {image.max_value}]")
    arr = image.as_array().copy()
    p = grid.patch_size
    blowup = np.repeat(np.repeat(mask.as_array(), p, axis=0), p, axis=1)
    region = arr[: grid.rows * p, : grid.cols * p]
    region[blowup] = fill
    return GrayImage.from_array(arr, image.max_value)

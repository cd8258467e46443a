"""Mask generators: mesh, random, square, block-wise.

All generators are pure given (grid, parameters, seed). Randomness comes from
one numpy PCG64 stream per call (``numpy.random.default_rng(seed)``), drawn in
a fixed, documented order, so identical inputs give bit-identical masks on any
platform. Monte-Carlo consumers that need many masks per seed split
substreams per trial partition (see the occlusion module).

Count conventions differ between generators on purpose:

* mesh, square and block-wise target ``target_masked_count`` (keep-side
  floor, masking T - floor((1-r)*T) cells);
* random masks ``random_masked_count`` (mask-side floor, floor(r*T) cells).

On a 49-patch grid at ratio 0.6 these give 30 and 29 masked cells
respectively. The asymmetry is deliberate and surfaced in provenance output
rather than hidden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import floor
from typing import Callable, Union

import numpy as np

from .grid import (
    MaskMap,
    PatchGrid,
    RatioLike,
    exact_fraction,
    random_masked_count,
    target_masked_count,
)

GENERATOR_NAME = "numpy-pcg64"

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


def make_rng(seed: SeedLike) -> np.random.Generator:
    return np.random.default_rng(seed)


def substream(seed: int, key: int) -> np.random.Generator:
    """Derived stream for partitioned evaluation: (seed, partition key)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(key,)))


@dataclass(frozen=True)
class MeshSpec:
    """Checkerboard-candidate mask: kept cells drawn from one parity class.

    rounding selects how the kept-cell count is derived from the ratio:
    "floor" (default) or "round" (half-up, which can demand more cells than
    the smaller parity class holds at ratio 0.5 and then raises).
    parity_mode "linear" classifies cells by (cols*j + i) mod 2, which is a
    checkerboard on odd-width grids but degenerates to column stripes on
    even widths; "checkerboard" uses (i + j) mod 2 on any grid.
    """

    ratio: RatioLike
    rounding: str = "floor"
    parity_mode: str = "linear"

    def __post_init__(self):
        r = exact_fraction(self.ratio)
        if not r >= exact_fraction("0.5"):
            raise ValueError(f"mesh ratio must be at least 0.5, got {self.ratio!r}")
        if r > 1:
            raise ValueError(f"mesh ratio {self.ratio!r} outside [0.5, 1]")
        if self.rounding not in ("floor", "round"):
            raise ValueError(f"unknown rounding {self.rounding!r}")
        if self.parity_mode not in ("linear", "checkerboard"):
            raise ValueError(f"unknown parity mode {self.parity_mode!r}")


@dataclass(frozen=True)
class RandomSpec:
    """Uniform sample of floor(ratio * total) masked cells."""

    ratio: RatioLike

    def __post_init__(self):
        if not 0 <= exact_fraction(self.ratio) <= 1:
            raise ValueError(f"ratio {self.ratio!r} outside [0, 1]")


@dataclass(frozen=True)
class SquareSpec:
    """Union of fixed-size squares placed at random until the target is hit."""

    side: int
    ratio: RatioLike

    def __post_init__(self):
        if self.side < 1:
            raise ValueError("square side must be >= 1")
        if not 0 <= exact_fraction(self.ratio) <= 1:
            raise ValueError(f"ratio {self.ratio!r} outside [0, 1]")


@dataclass(frozen=True)
class BlockwiseSpec:
    """Union of random rectangles placed until the target is hit."""

    ratio: RatioLike
    min_block_area: int = 4
    aspect_low: float = 0.3
    aspect_high: float = 1 / 0.3

    def __post_init__(self):
        r = exact_fraction(self.ratio)
        if not 0 < r <= 1:
            raise ValueError(f"block-wise ratio must be in (0, 1], got {self.ratio!r}")
        if self.min_block_area < 1:
            raise ValueError("min_block_area must be >= 1")
        if not self.aspect_low <= 1 <= self.aspect_high:
            raise ValueError("aspect range must straddle 1")


PatternSpec = Union[MeshSpec, RandomSpec, SquareSpec, BlockwiseSpec]


def pattern_name(spec: PatternSpec) -> str:
    return {
        MeshSpec: "mesh",
        RandomSpec: "random",
        SquareSpec: "square",
        BlockwiseSpec: "blockwise",
    }[type(spec)]


def spec_fields(spec: PatternSpec) -> dict[str, str]:
    """Flat key=value form of a pattern spec, used in provenance headers."""
    fields = {"pattern": pattern_name(spec), "ratio": str(spec.ratio)}
    if isinstance(spec, MeshSpec):
        if spec.rounding != "floor":
            fields["rounding"] = spec.rounding
        if spec.parity_mode != "linear":
            fields["parity_mode"] = spec.parity_mode
    elif isinstance(spec, SquareSpec):
        fields["side"] = str(spec.side)
    elif isinstance(spec, BlockwiseSpec):
        fields["min_block_area"] = str(spec.min_block_area)
        fields["aspect"] = f"{spec.aspect_low}:{spec.aspect_high}"
    fields["rng"] = GENERATOR_NAME
    return fields


@dataclass(frozen=True)
class CandidateSet:
    """One checkerboard parity class of keep candidates."""

    grid: PatchGrid
    parity: int
    coords: frozenset[tuple[int, int]]


def _parity_of_cells(grid: PatchGrid, mode: str) -> np.ndarray:
    idx = np.arange(grid.total_patches)
    if mode == "linear":
        return idx % 2
    i = idx % grid.cols
    j = idx // grid.cols
    return (i + j) % 2


def mesh_candidates(grid: PatchGrid, parity: int, mode: str = "linear") -> CandidateSet:
    """All cells whose linear index (cols*j + i) has the given parity."""
    if parity not in (0, 1):
        raise ValueError(f"parity must be 0 or 1, got {parity!r}")
    if mode not in ("linear", "checkerboard"):
        raise ValueError(f"unknown parity mode {mode!r}")
    par = _parity_of_cells(grid, mode)
    coords = frozenset(grid.coord(int(k)) for k in np.flatnonzero(par == parity))
    return CandidateSet(grid=grid, parity=parity, coords=coords)


def _mesh_kept_count(grid: PatchGrid, ratio: RatioLike, rounding: str) -> int:
    r = exact_fraction(ratio)
    keep_exact = (1 - r) * grid.total_patches
    if rounding == "round":
        return floor(keep_exact + exact_fraction("0.5"))  # half-up
    return floor(keep_exact)


def _sample_mesh(
    grid: PatchGrid, kept: int, parity_mode: str, rng: np.random.Generator
) -> np.ndarray:
    # Draw order: one uniform for the parity coin, then one permutation of the
    # chosen candidate class.
    parity = 0 if rng.random() > 0.5 else 1
    par = _parity_of_cells(grid, parity_mode)
    cand = np.flatnonzero(par == parity)  # ascending = row-major order
    if kept > cand.size:
        raise ValueError(
            f"kept count {kept} exceeds candidate class size {cand.size} "
            f"(parity {parity})"
        )
    keep_idx = cand[rng.permutation(cand.size)[:kept]]
    cells = np.ones(grid.total_patches, dtype=bool)
    cells[keep_idx] = False
    return cells


def gen_mesh(
    grid: PatchGrid,
    ratio: RatioLike,
    seed: SeedLike,
    *,
    rounding: str = "floor",
    parity_mode: str = "linear",
) -> MaskMap:
    """Mesh mask: keep floor((1-ratio)*T) cells from one random parity class.

    The parity class is chosen with probability 1/2 each; the kept set is a
    uniform sample without replacement from that class; every other cell is
    masked. Requires ratio >= 0.5 so the kept count fits either class under
    the floor convention.
    """
    spec = MeshSpec(ratio, rounding=rounding, parity_mode=parity_mode)
    kept = _mesh_kept_count(grid, spec.ratio, rounding)
    cells = _sample_mesh(grid, kept, parity_mode, make_rng(seed))
    return MaskMap.from_array(grid, cells)


def _sample_random(grid: PatchGrid, masked: int, rng: np.random.Generator) -> np.ndarray:
    cells = np.zeros(grid.total_patches, dtype=bool)
    cells[rng.permutation(grid.total_patches)[:masked]] = True
    return cells


def gen_random(grid: PatchGrid, ratio: RatioLike, seed: SeedLike) -> MaskMap:
    """Random mask: a uniform sample of floor(ratio*T) masked cells."""
    RandomSpec(ratio)
    masked = random_masked_count(grid, ratio)
    return MaskMap.from_array(grid, _sample_random(grid, masked, make_rng(seed)))


def square_cells(grid: PatchGrid, x: int, y: int, side: int) -> frozenset[tuple[int, int]]:
    """Cells covered by a side x side square with top-left patch (x, y)."""
    if side < 1 or side > min(grid.cols, grid.rows):
        raise ValueError(f"square side {side} does not fit {grid.cols}x{grid.rows} grid")
    if not (0 <= x <= grid.cols - side and 0 <= y <= grid.rows - side):
        raise ValueError(f"square at ({x}, {y}) extends outside the grid")
    return frozenset((i, j) for j in range(y, y + side) for i in range(x, x + side))


def _sample_square(
    grid: PatchGrid, side: int, target: int, rng: np.random.Generator
) -> np.ndarray:
    cells = np.zeros(grid.total_patches, dtype=bool)
    # Draw order per placement: x then y, each uniform over in-bounds
    # top-left positions. Overlap between placements is allowed.
    while int(cells.sum()) < target:
        x = int(rng.integers(0, grid.cols - side + 1))
        y = int(rng.integers(0, grid.rows - side + 1))
        block = np.zeros((grid.rows, grid.cols), dtype=bool)
        block[y : y + side, x : x + side] = True
        cells |= block.reshape(-1)
    return cells


def gen_square(
    grid: PatchGrid, side: int, ratio: RatioLike, seed: SeedLike
) -> MaskMap:
    """Square mask: union of side x side squares placed until the target count.

    The final masked count lands in [target, target + side^2 - 1]; the last
    placement may overshoot by at most one square minus one cell.
    """
    SquareSpec(side, ratio)
    if side > min(grid.cols, grid.rows):
        raise ValueError(f"square side {side} does not fit {grid.cols}x{grid.rows} grid")
    target = target_masked_count(grid, ratio)
    return MaskMap.from_array(grid, _sample_square(grid, side, target, make_rng(seed)))


@dataclass(frozen=True)
class BlockPlacement:
    """One rectangle from the block-wise placement loop.

    requested_area is the sampled (continuous) target area before the
    rectangle is rounded to whole patches and clamped to the grid.
    """

    x: int
    y: int
    w: int
    h: int
    requested_area: float
    aspect: float


def _sample_blockwise(
    grid: PatchGrid,
    target: int,
    min_area: int,
    aspect_low: float,
    aspect_high: float,
    rng: np.random.Generator,
    log: list[BlockPlacement] | None = None,
) -> np.ndarray:
    cells = np.zeros(grid.total_patches, dtype=bool)
    grid2d = cells.reshape(grid.rows, grid.cols)
    log_a_low, log_a_high = math.log(aspect_low), math.log(aspect_high)
    # Draw order per placement: area, aspect, x, y.
    while int(cells.sum()) < target:
        remaining = target - int(cells.sum())
        area = float(rng.uniform(min_area, max(min_area, remaining)))
        aspect = math.exp(float(rng.uniform(log_a_low, log_a_high)))
        w = max(1, round(math.sqrt(area * aspect)))
        h = max(1, round(math.sqrt(area / aspect)))
        w = min(w, grid.cols)
        h = min(h, grid.rows)
        x = int(rng.integers(0, grid.cols - w + 1))
        y = int(rng.integers(0, grid.rows - h + 1))
        grid2d[y : y + h, x : x + w] = True
        if log is not None:
            log.append(BlockPlacement(x, y, w, h, area, aspect))
    return cells


def gen_blockwise(
    grid: PatchGrid,
    ratio: RatioLike,
    seed: SeedLike,
    *,
    min_block_area: int = 4,
    aspect_low: float = 0.3,
    aspect_high: float = 1 / 0.3,
) -> MaskMap:
    """Block-wise mask: union of random rectangles placed until the target count.

    Each rectangle's area is drawn uniformly between min_block_area and the
    remaining deficit, its aspect log-uniformly from the given range; the
    rectangle is rounded to whole patches, clamped to the grid and placed
    uniformly in bounds.
    """
    mask, _ = gen_blockwise_logged(
        grid,
        ratio,
        seed,
        min_block_area=min_block_area,
        aspect_low=aspect_low,
        aspect_high=aspect_high,
    )
    return mask


def gen_blockwise_logged(
    grid: PatchGrid,
    ratio: RatioLike,
    seed: SeedLike,
    *,
    min_block_area: int = 4,
    aspect_low: float = 0.3,
    aspect_high: float = 1 / 0.3,
) -> tuple[MaskMap, tuple[BlockPlacement, ...]]:
    """gen_blockwise plus the seeded placement log, for replay-style checks."""
    spec = BlockwiseSpec(ratio, min_block_area, aspect_low, aspect_high)
    target = target_masked_count(grid, ratio)
    log: list[BlockPlacement] = []
    cells = _sample_blockwise(
        grid,
        target,
        spec.min_block_area,
        spec.aspect_low,
        spec.aspect_high,
        make_rng(seed),
        log,
    )
    return MaskMap.from_array(grid, cells), tuple(log)


def _make_sampler(
    spec: PatternSpec, grid: PatchGrid
) -> Callable[[np.random.Generator], np.ndarray]:
    """Resolve a spec to a cells sampler over an externally owned stream.

    Counts and validation happen once here; the returned callable is the
    single sampling path shared by the gen_* wrappers and Monte-Carlo loops.
    """
    if isinstance(spec, MeshSpec):
        kept = _mesh_kept_count(grid, spec.ratio, spec.rounding)
        mode = spec.parity_mode
        return lambda rng: _sample_mesh(grid, kept, mode, rng)
    if isinstance(spec, RandomSpec):
        masked = random_masked_count(grid, spec.ratio)
        return lambda rng: _sample_random(grid, masked, rng)
    if isinstance(spec, SquareSpec):
        if spec.side > min(grid.cols, grid.rows):
            raise ValueError(
                f"square side {spec.side} does not fit {grid.cols}x{grid.rows} grid"
            )
        target = target_masked_count(grid, spec.ratio)
        return lambda rng: _sample_square(grid, spec.side, target, rng)
    if isinstance(spec, BlockwiseSpec):
        target = target_masked_count(grid, spec.ratio)
        return lambda rng: _sample_blockwise(
            grid, target, spec.min_block_area, spec.aspect_low, spec.aspect_high, rng
        )
    raise TypeError(f"unknown pattern spec {spec!r}")


def generate(spec: PatternSpec, grid: PatchGrid, seed: SeedLike) -> MaskMap:
    """Generate a mask for any pattern spec."""
    sampler = _make_sampler(spec, grid)
    return MaskMap.from_array(grid, sampler(make_rng(seed)))

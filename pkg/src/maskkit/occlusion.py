"""Full-occlusion probabilities: how likely is a small region to be entirely masked.

Exact closed forms exist for the random mask (hypergeometric) and the mesh
mask (mixture of per-parity hypergeometrics); square and block-wise patterns
go through the Monte-Carlo estimator.

Monte-Carlo trials are partitioned into fixed-size chunks; chunk p uses the
derived stream SeedSequence(entropy=seed, spawn_key=(p,)). Partition results
are summed in partition order, so sequential and thread-parallel evaluation
produce identical estimates for the same seed.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import comb, floor, sqrt
from typing import Iterable

import numpy as np

from .grid import PatchGrid, RatioLike, exact_fraction, random_masked_count
from .patterns import PatternSpec, _make_sampler, mesh_candidates, substream

MC_PARTITION = 1 << 16


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle of patches: top-left (x, y), w x h cells."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError("region must span at least one patch")
        if self.x < 0 or self.y < 0:
            raise ValueError("region origin must be non-negative")

    @property
    def area(self) -> int:
        return self.w * self.h

    def cells(self) -> frozenset[tuple[int, int]]:
        return frozenset(
            (i, j)
            for j in range(self.y, self.y + self.h)
            for i in range(self.x, self.x + self.w)
        )


@dataclass(frozen=True)
class OcclusionEstimate:
    probability: float
    stderr: float
    method: str
    trials: int

    def __post_init__(self):
        if not 0 <= self.probability <= 1:
            raise ValueError(f"probability {self.probability} outside [0, 1]")
        if self.stderr < 0:
            raise ValueError("stderr must be >= 0")
        if self.method not in ("exact", "monte_carlo"):
            raise ValueError(f"unknown method {self.method!r}")


def _check_region(grid: PatchGrid, region: Region) -> None:
    if region.x + region.w > grid.cols or region.y + region.h > grid.rows:
        raise ValueError(
            f"region {region.w}x{region.h} at ({region.x}, {region.y}) "
            f"extends outside {grid.cols}x{grid.rows} grid"
        )


def exact_random_occlusion(
    grid: PatchGrid,
    ratio: RatioLike,
    region: Region,
    *,
    masked_count: int | None = None,
) -> OcclusionEstimate:
    """P(region fully masked) under the random mask.

    With m masked cells drawn uniformly without replacement from T, a region
    of a cells is fully masked with probability C(T-a, m-a) / C(T, m).
    masked_count overrides the floor(ratio*T) convention for count-matched
    comparisons against other patterns.
    """
    _check_region(grid, region)
    t = grid.total_patches
    m = random_masked_count(grid, ratio) if masked_count is None else masked_count
    if not 0 <= m <= t:
        raise ValueError(f"masked count {m} outside [0, {t}]")
    a = region.area
    if a > m:
        return OcclusionEstimate(0.0, 0.0, "exact", 0)
    p = Fraction(comb(t - a, m - a), comb(t, m))
    return OcclusionEstimate(float(p), 0.0, "exact", 0)


def exact_mesh_occlusion(
    grid: PatchGrid,
    ratio: RatioLike,
    region: Region,
    *,
    parity_mode: str = "linear",
) -> OcclusionEstimate:
    """P(region fully masked) under the mesh mask.

    Conditioned on parity class p with c_p of the region's cells among its
    candidates, the region survives only through those candidates, so
    P(fully masked | p) = C(|K_p| - c_p, k) / C(|K_p|, k) with k kept cells
    (0 when k > |K_p| - c_p). The parity coin is fair, so the result is the
    average of the two conditional terms.
    """
    _check_region(grid, region)
    r = exact_fraction(ratio)
    if not r >= exact_fraction("0.5"):
        raise ValueError(f"mesh ratio must be at least 0.5, got {ratio!r}")
    if r > 1:
        raise ValueError(f"mesh ratio {ratio!r} outside [0.5, 1]")
    t = grid.total_patches
    k = floor((1 - r) * t)
    region_cells = region.cells()
    prob = Fraction(0)
    for parity in (0, 1):
        cand = mesh_candidates(grid, parity, parity_mode).coords
        n = len(cand)
        c = len(region_cells & cand)
        if k <= n - c:
            prob += Fraction(comb(n - c, k), 2 * comb(n, k))
    return OcclusionEstimate(float(prob), 0.0, "exact", 0)


def _region_indices(grid: PatchGrid, region: Region | Iterable[tuple[int, int]]) -> np.ndarray:
    if isinstance(region, Region):
        _check_region(grid, region)
        cells = region.cells()
    else:
        cells = frozenset(region)
        if not cells:
            raise ValueError("region cell set is empty")
    return np.array(sorted(grid.linear_index(i, j) for i, j in cells), dtype=np.intp)


def _partition_sizes(trials: int) -> list[int]:
    full, rest = divmod(trials, MC_PARTITION)
    return [MC_PARTITION] * full + ([rest] if rest else [])


def mc_occlusion(
    spec: PatternSpec,
    grid: PatchGrid,
    region: Region | Iterable[tuple[int, int]],
    trials: int,
    seed: int,
    *,
    threads: int = 1,
) -> OcclusionEstimate:
    """Monte-Carlo estimate of P(region fully masked) for any pattern.

    Accepts an arbitrary cell set in place of a rectangular region. stderr is
    the binomial estimate sqrt(p*(1-p)/trials).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    idx = _region_indices(grid, region)
    sampler = _make_sampler(spec, grid)

    def run_partition(part: int, n: int) -> int:
        rng = substream(seed, part)
        hits = 0
        for _ in range(n):
            if sampler(rng)[idx].all():
                hits += 1
        return hits

    sizes = _partition_sizes(trials)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            hits = sum(pool.map(run_partition, range(len(sizes)), sizes))
    else:
        hits = sum(run_partition(p, n) for p, n in enumerate(sizes))
    p_hat = hits / trials
    return OcclusionEstimate(
        p_hat, sqrt(p_hat * (1 - p_hat) / trials), "monte_carlo", trials
    )


def patch_mask_frequency(
    spec: PatternSpec, grid: PatchGrid, trials: int, seed: int
) -> np.ndarray:
    """Per-cell masked frequency over seeded trials, as a rows x cols grid."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    sampler = _make_sampler(spec, grid)
    counts = np.zeros(grid.total_patches, dtype=np.int64)
    for part, n in enumerate(_partition_sizes(trials)):
        rng = substream(seed, part)
        for _ in range(n):
            counts += sampler(rng)
    return (counts / trials).reshape(grid.rows, grid.cols)

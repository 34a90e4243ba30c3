"""Disparity-hint generation: random SGM draws and photometric fusion.

Fusion runs the matcher over a small hyperparameter grid and keeps, per
pixel, the candidate disparity whose reprojection scores best under
DSSIM+L1; pixels where no candidate produces a finite score stay holes.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import DisparityMap, Image, Rng
from .photometric import DEFAULT_ALPHA, photometric_loss_of_disparity
from .sgm import SgmParams, sgm_match

DEFAULT_BLOCK_SIZES = (3, 5, 9)
DEFAULT_DISPARITY_COUNTS = (64, 96, 128, 160)


@dataclass(frozen=True)
class HintCandidateSet:
    """Candidate disparity maps, one per hyperparameter configuration."""

    candidates: tuple[DisparityMap, ...]
    params: tuple[SgmParams, ...]

    def __post_init__(self):
        cands = tuple(self.candidates)
        pars = tuple(self.params)
        if len(cands) == 0 or len(cands) != len(pars):
            raise ValueError("candidates and params must be equally long and non-empty")
        size = (cands[0].height, cands[0].width)
        if any((c.height, c.width) != size for c in cands):
            raise ValueError("all candidates must share dimensions")
        object.__setattr__(self, "candidates", cands)
        object.__setattr__(self, "params", pars)

    def __len__(self) -> int:
        return len(self.candidates)


@dataclass(frozen=True)
class FusedHint:
    """Per-pixel winner among the candidates.

    ``source_index`` is -1 at holes; elsewhere it names the candidate whose
    (finite) photometric loss won, and ``score`` carries that loss.
    """

    disp: DisparityMap
    source_index: np.ndarray
    score: np.ndarray

    def __post_init__(self):
        idx = np.array(self.source_index, dtype=np.int32)
        sc = np.array(self.score, dtype=np.float64)
        if idx.shape != (self.disp.height, self.disp.width) or sc.shape != idx.shape:
            raise ValueError("source_index / score must match the disparity map")
        idx.flags.writeable = False
        sc.flags.writeable = False
        object.__setattr__(self, "source_index", idx)
        object.__setattr__(self, "score", sc)


def param_grid(
    block_sizes: Sequence[int] = DEFAULT_BLOCK_SIZES,
    disparity_counts: Sequence[int] = DEFAULT_DISPARITY_COUNTS,
) -> list[SgmParams]:
    """Cross product of block sizes and disparity counts, block-major order."""
    return [
        SgmParams(block_size=b, num_disparities=nd)
        for b in block_sizes
        for nd in disparity_counts
    ]


def random_params(
    rng: Rng,
    block_sizes: Sequence[int] = DEFAULT_BLOCK_SIZES,
    disparity_counts: Sequence[int] = DEFAULT_DISPARITY_COUNTS,
) -> SgmParams:
    """Uniform draw from the hyperparameter grid; deterministic under a fixed seed."""
    grid = param_grid(block_sizes, disparity_counts)
    return grid[int(rng.integers(0, len(grid)))]


def generate_candidates(
    left: Image,
    right: Image,
    grid: Sequence[SgmParams],
    with_lr: bool = False,
    threads: int = 1,
) -> HintCandidateSet:
    """One sgm_match per configuration; candidates keep the grid's order."""
    grid = list(grid)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            candidates = list(pool.map(lambda p: sgm_match(left, right, p, with_lr), grid))
    else:
        candidates = [sgm_match(left, right, p, with_lr) for p in grid]
    return HintCandidateSet(tuple(candidates), tuple(grid))


def fuse(
    candidates: HintCandidateSet,
    left: Image,
    right: Image,
    alpha: float = DEFAULT_ALPHA,
    direction: int = -1,
) -> FusedHint:
    """Pick, per pixel, the candidate with the lowest finite DSSIM+L1 score.

    Scoring warps the right image into the left view (direction = -1 under
    the usual rectified convention).  Ties go to the lowest candidate
    index; pixels with no finite-scoring candidate become holes.
    """
    h, w = candidates.candidates[0].height, candidates.candidates[0].width
    if (left.height, left.width) != (h, w):
        raise ValueError("candidate and image dimensions differ")
    best_score = np.full((h, w), np.inf)
    best_disp = np.zeros((h, w))
    best_idx = np.full((h, w), -1, dtype=np.int32)
    for i, cand in enumerate(candidates.candidates):
        score = photometric_loss_of_disparity(left, right, cand, direction, alpha).loss
        take = score < best_score
        best_score = np.where(take, score, best_score)
        best_disp = np.where(take, cand.disp, best_disp)
        best_idx = np.where(take, np.int32(i), best_idx)
    valid = best_idx >= 0
    return FusedHint(DisparityMap(best_disp, valid), best_idx, best_score)

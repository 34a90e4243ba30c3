"""From-scratch semi-global stereo matcher.

Matching cost is the Hamming distance between census descriptors whose
window equals the configured block size; costs are aggregated along 4 or 8
scanline directions with the classic small/large-jump penalties, and the
winner-take-all disparity is uniqueness-filtered and sub-pixel refined.
All cost arithmetic is integer, so results are exactly reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DisparityMap, Image, hflip, to_grayscale

# Sentinel for "no candidate"; far above any reachable path cost yet safe
# against int32 overflow after adding a penalty.
_BIG = np.int32(2 ** 30)

DIRECTIONS_4 = ((0, 1), (0, -1), (1, 0), (-1, 0))
DIRECTIONS_8 = DIRECTIONS_4 + ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class SgmParams:
    """Matcher hyperparameters.

    ``block_size`` is the census window (odd); ``num_disparities`` the
    search range [0, num_disparities) as a positive multiple of 16.  The
    jump penalties default to the usual block-area scaling p1 = 8 b^2,
    p2 = 32 b^2.
    """

    block_size: int = 5
    num_disparities: int = 64
    p1: Optional[int] = None
    p2: Optional[int] = None
    uniqueness_ratio: int = 10
    num_paths: int = 8

    def __post_init__(self):
        b = self.block_size
        if b < 1 or b % 2 == 0:
            raise ValueError("block_size must be an odd positive integer")
        nd = self.num_disparities
        if nd <= 0 or nd % 16 != 0:
            raise ValueError("num_disparities must be a positive multiple of 16")
        if self.p1 is None:
            object.__setattr__(self, "p1", 8 * b * b)
        if self.p2 is None:
            object.__setattr__(self, "p2", 32 * b * b)
        if not 0 < self.p1 < self.p2:
            raise ValueError("penalties must satisfy p2 > p1 > 0")
        if self.uniqueness_ratio < 0 or self.uniqueness_ratio > 100:
            raise ValueError("uniqueness_ratio is a percentage in [0, 100]")
        if self.num_paths not in (4, 8):
            raise ValueError("num_paths must be 4 or 8")


@dataclass(frozen=True)
class CostVolume:
    """Per-(pixel, disparity) non-negative integer matching cost, shape (H, W, D)."""

    cost: np.ndarray

    def __post_init__(self):
        c = np.array(self.cost, dtype=np.int32)
        if c.ndim != 3:
            raise ValueError(f"cost volume must be (H, W, D), got shape {np.shape(self.cost)}")
        if c.min() < 0:
            raise ValueError("costs must be >= 0")
        c.flags.writeable = False
        object.__setattr__(self, "cost", c)

    @property
    def height(self) -> int:
        return self.cost.shape[0]

    @property
    def width(self) -> int:
        return self.cost.shape[1]

    @property
    def num_disparities(self) -> int:
        return self.cost.shape[2]


def census_transform(img: Image, window: int) -> np.ndarray:
    """Per-pixel census descriptor over an odd window, edge-replicated borders.

    Bit k of the descriptor is the comparison "neighbor < center" for the
    k-th neighbor in row-major window order (center skipped).  Bits are
    packed LSB-first into (H, W, ceil((window^2 - 1) / 64)) uint64 planes.
    """
    if img.channels != 1:
        raise ValueError("census_transform needs a grayscale image")
    if window < 1 or window % 2 == 0:
        raise ValueError("census window must be an odd positive integer")
    data = img.data[:, :, 0]
    h, w = data.shape
    r = window // 2
    n_bits = window * window - 1
    n_planes = max(1, (n_bits + 63) // 64)
    planes = np.zeros((h, w, n_planes), dtype=np.uint64)
    if n_bits == 0:
        return planes
    padded = np.pad(data, r, mode="edge")
    k = 0
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            if dy == 0 and dx == 0:
                continue
            neighbor = padded[r + dy : r + dy + h, r + dx : r + dx + w]
            bit = (neighbor < data).astype(np.uint64)
            planes[:, :, k // 64] |= bit << np.uint64(k % 64)
            k += 1
    return planes


def _hamming(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a ^ b).sum(axis=-1).astype(np.int32)


def build_cost_volume(left: Image, right: Image, params: SgmParams) -> CostVolume:
    """Census-Hamming matching cost; samples with x - d < 0 get the maximal cost."""
    if left.data.shape != right.data.shape:
        raise ValueError("stereo pair dimensions differ")
    if left.channels != 1:
        raise ValueError("build_cost_volume needs grayscale images")
    census_l = census_transform(left, params.block_size)
    census_r = census_transform(right, params.block_size)
    h, w = left.height, left.width
    nd = params.num_disparities
    max_cost = params.block_size ** 2 - 1
    cost = np.empty((h, w, nd), dtype=np.int32)
    for d in range(nd):
        if d >= w:
            cost[:, :, d] = max_cost
            continue
        if d > 0:
            cost[:, :d, d] = max_cost
            cost[:, d:, d] = _hamming(census_l[:, d:], census_r[:, : w - d])
        else:
            cost[:, :, 0] = _hamming(census_l, census_r)
    return CostVolume(cost)


def _step(prev: np.ndarray, cost_slice: np.ndarray, p1: int, p2: int) -> np.ndarray:
    """One scanline-DP step of the aggregation recurrence (see aggregate_direction)."""
    up = np.empty_like(prev)
    up[..., 1:] = prev[..., :-1]
    up[..., 0] = _BIG
    dn = np.empty_like(prev)
    dn[..., :-1] = prev[..., 1:]
    dn[..., -1] = _BIG
    m = prev.min(axis=-1, keepdims=True)
    cand = np.minimum(np.minimum(prev, up + p1), np.minimum(dn + p1, m + p2))
    return cost_slice + cand - m


def aggregate_direction(vol: CostVolume, dy: int, dx: int, p1: int, p2: int) -> np.ndarray:
    """Path cost along one direction r = (dy, dx):

        L(p, d) = C(p, d) + min( L(p-r, d),
                                 L(p-r, d-1) + p1,
                                 L(p-r, d+1) + p1,
                                 min_k L(p-r, k) + p2 ) - min_k L(p-r, k)

    with L(p, d) = C(p, d) where p - r leaves the raster.
    """
    if (dy, dx) not in DIRECTIONS_8:
        raise ValueError(f"unsupported direction {(dy, dx)}")
    cost = vol.cost
    h, w = vol.height, vol.width
    out = cost.copy()
    if dy == 0:
        xs = range(1, w) if dx == 1 else range(w - 2, -1, -1)
        for x in xs:
            out[:, x] = _step(out[:, x - dx], cost[:, x], p1, p2)
    elif dx == 0:
        ys = range(1, h) if dy == 1 else range(h - 2, -1, -1)
        for y in ys:
            out[y] = _step(out[y - dy], cost[y], p1, p2)
    else:
        ys = range(1, h) if dy == 1 else range(h - 2, -1, -1)
        cur = slice(1, w) if dx == 1 else slice(0, w - 1)
        pre = slice(0, w - 1) if dx == 1 else slice(1, w)
        for y in ys:
            out[y, cur] = _step(out[y - dy, pre], cost[y, cur], p1, p2)
    return out


def aggregate_paths(vol: CostVolume, params: SgmParams) -> CostVolume:
    """Sum of the per-direction path costs over 4 or 8 directions."""
    directions = DIRECTIONS_8 if params.num_paths == 8 else DIRECTIONS_4
    total = np.zeros_like(vol.cost)
    for dy, dx in directions:
        total += aggregate_direction(vol, dy, dx, params.p1, params.p2)
    return CostVolume(total)


def _best_and_runner_up(cost: np.ndarray):
    """Per-pixel argmin cost and the best cost at a non-adjacent disparity."""
    nd = cost.shape[2]
    d0 = np.argmin(cost, axis=2)
    best = np.take_along_axis(cost, d0[:, :, None], axis=2)[:, :, 0]
    dgrid = np.arange(nd, dtype=np.int64)
    adjacent = np.abs(dgrid[None, None, :] - d0[:, :, None]) <= 1
    second = np.where(adjacent, _BIG, cost).min(axis=2)
    return d0, best, second


def wta_disparity(vol: CostVolume, params: SgmParams) -> DisparityMap:
    """Winner-take-all disparity with uniqueness rejection and parabolic sub-pixel fit.

    A pixel is kept only when the best cost is at least uniqueness_ratio
    percent below the runner-up at a non-adjacent disparity (strictly, so
    a tie with a distant disparity is ambiguous even at zero cost).
    """
    cost = vol.cost
    h, w, nd = cost.shape
    d0, best, second = _best_and_runner_up(cost)
    valid = best.astype(np.int64) * 100 < second.astype(np.int64) * (100 - params.uniqueness_ratio)

    interior = (d0 > 0) & (d0 < nd - 1)
    below = np.take_along_axis(cost, np.maximum(d0 - 1, 0)[:, :, None], axis=2)[:, :, 0]
    above = np.take_along_axis(cost, np.minimum(d0 + 1, nd - 1)[:, :, None], axis=2)[:, :, 0]
    denom = (below + above - 2 * best).astype(np.float64)
    refine = interior & (denom > 0)
    offset = np.zeros((h, w))
    offset[refine] = (below[refine] - above[refine]) / (2.0 * denom[refine])
    offset = np.clip(offset, -0.5, 0.5)
    disp = np.where(valid, d0 + offset, 0.0)
    return DisparityMap(disp, valid)


def lr_consistency(left_disp: DisparityMap, right_disp: DisparityMap, threshold: float) -> DisparityMap:
    """Keep left pixels whose disparity agrees with the right-reference map.

    A pixel at (x, y) survives iff
    |left(x, y) - right(x - round(left(x, y)), y)| <= threshold; pixels
    whose counterpart is missing are treated as disagreeing by +inf.
    """
    if (left_disp.height, left_disp.width) != (right_disp.height, right_disp.width):
        raise ValueError("disparity maps have mismatched dimensions")
    h, w = left_disp.height, left_disp.width
    xs = np.arange(w)[None, :].repeat(h, axis=0)
    xr = xs - np.rint(left_disp.disp).astype(np.int64)
    in_range = (xr >= 0) & (xr < w)
    xr_safe = np.clip(xr, 0, w - 1)
    ys = np.arange(h)[:, None].repeat(w, axis=1)
    other = right_disp.disp[ys, xr_safe]
    other_ok = right_disp.valid[ys, xr_safe] & in_range
    diff = np.where(other_ok, np.abs(left_disp.disp - other), np.inf)
    keep = left_disp.valid & (diff <= threshold)
    return DisparityMap(np.where(keep, left_disp.disp, 0.0), keep)


def sgm_match(
    left: Image,
    right: Image,
    params: SgmParams,
    with_lr_check: bool = False,
    lr_threshold: float = 1.0,
) -> DisparityMap:
    """Full pipeline: census -> cost volume -> path aggregation -> WTA (+ optional LR check).

    The right-reference disparity for the consistency check is obtained by
    matching the horizontally flipped, swapped pair with the same
    hyperparameters.
    """
    gray_l = to_grayscale(left)
    gray_r = to_grayscale(right)

    def match(vol):
        disp = wta_disparity(aggregate_paths(vol, params), params)
        # hole where the data term is fully ambiguous: the raw cost is flat
        # across every in-range disparity, so the pixel carries no matching
        # evidence whatsoever (textureless input)
        w = vol.width
        in_range = np.arange(vol.num_disparities)[None, None, :] <= np.arange(w)[None, :, None]
        lo = np.where(in_range, vol.cost, _BIG).min(axis=2)
        hi = np.where(in_range, vol.cost, -1).max(axis=2)
        keep = disp.valid & (lo != hi)
        return DisparityMap(np.where(keep, disp.disp, 0.0), keep)

    disp = match(build_cost_volume(gray_l, gray_r, params))
    if with_lr_check:
        vol_r = build_cost_volume(hflip(gray_r), hflip(gray_l), params)
        flipped = match(vol_r)
        right_ref = DisparityMap(flipped.disp[:, ::-1], flipped.valid[:, ::-1])
        disp = lr_consistency(disp, right_ref, lr_threshold)
    return disp

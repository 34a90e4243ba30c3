"""Standard seven-metric depth evaluation with crop, cap, and flip averaging."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import DepthMap, DisparityMap, Rect

# Interior evaluation region as fractions of the raster; the de-facto
# community constants (row span then column span), truncated to integers
# at a given resolution.
GARG_CROP_FRACTIONS = (0.40810811, 0.99189189, 0.03594771, 0.96405229)

METRIC_NAMES = ("abs_rel", "sq_rel", "rmse", "rmse_log", "a1", "a2", "a3")


@dataclass(frozen=True)
class DepthMetrics:
    """The seven standard numbers: four errors (lower better), three deltas (higher better)."""

    abs_rel: float
    sq_rel: float
    rmse: float
    rmse_log: float
    a1: float
    a2: float
    a3: float

    def __post_init__(self):
        values = self.as_tuple()
        if not all(np.isfinite(v) for v in values):
            raise ValueError("metrics must be finite")
        if not self.a1 <= self.a2 <= self.a3:
            raise ValueError("delta fractions must be non-decreasing")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.abs_rel, self.sq_rel, self.rmse, self.rmse_log, self.a1, self.a2, self.a3)


@dataclass(frozen=True)
class EvalConfig:
    min_depth: float = 1e-3
    max_depth: float = 80.0
    crop: Optional[Callable[[int, int], Rect]] = None
    median_scaling: bool = False

    def __post_init__(self):
        if not 0 < self.min_depth < self.max_depth:
            raise ValueError("require 0 < min_depth < max_depth")


def garg_crop(width: int, height: int) -> Rect:
    """The standard interior crop: rows [0.408 H, 0.992 H), cols [0.036 W, 0.964 W)."""
    if width <= 0 or height <= 0:
        raise ValueError("dimensions must be positive")
    r0, r1, c0, c1 = GARG_CROP_FRACTIONS
    return Rect(int(c0 * width), int(r0 * height), int(c1 * width), int(r1 * height))


def compute_metrics(pred: DepthMap, gt: DepthMap, cfg: EvalConfig = EvalConfig()) -> DepthMetrics:
    """Seven metrics over jointly-valid pixels with gt inside [min_depth, max_depth].

    Optional median scaling multiplies predictions by median(gt)/median(pred)
    first; predictions are then clamped to the depth bounds, following the
    usual evaluation protocol.
    """
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise ValueError("prediction and ground truth dimensions differ")
    mask = pred.valid & gt.valid & (gt.depth >= cfg.min_depth) & (gt.depth <= cfg.max_depth)
    if cfg.crop is not None:
        rect = cfg.crop(gt.width, gt.height).check_within(gt.width, gt.height)
        inside = np.zeros_like(mask)
        inside[rect.slices()] = True
        mask &= inside
    if not np.any(mask):
        raise ValueError("no valid pixels to evaluate")
    p = pred.depth[mask]
    g = gt.depth[mask]
    if cfg.median_scaling:
        p = p * (np.median(g) / np.median(p))
    p = np.clip(p, cfg.min_depth, cfg.max_depth)

    ratio = np.maximum(p / g, g / p)
    diff = p - g
    return DepthMetrics(
        abs_rel=float(np.mean(np.abs(diff) / g)),
        sq_rel=float(np.mean(diff * diff / g)),
        rmse=float(np.sqrt(np.mean(diff * diff))),
        rmse_log=float(np.sqrt(np.mean((np.log(p) - np.log(g)) ** 2))),
        a1=float(np.mean(ratio < 1.25)),
        a2=float(np.mean(ratio < 1.25 ** 2)),
        a3=float(np.mean(ratio < 1.25 ** 3)),
    )


def flip_postprocess(d: DisparityMap, d_flipped: DisparityMap, ramp: float = 0.05) -> DisparityMap:
    """Blend a prediction with the un-flipped prediction from the flipped input.

    With d' = hflip(d_flipped), the output is w_l d' + w_r d + (1 - w_l - w_r)(d + d')/2,
    where w_l falls linearly from 1 at the left edge to 0 at ``ramp`` * W and
    w_r is its mirror.  Column 0 is therefore pure d', the last column pure
    d, and the interior the plain average.  Where only one input is valid
    its value is passed through.
    """
    if (d.height, d.width) != (d_flipped.height, d_flipped.width):
        raise ValueError("disparity maps have mismatched dimensions")
    if not 0.0 < ramp < 0.5:
        raise ValueError("ramp must lie in (0, 0.5)")
    h, w = d.height, d.width
    dp = d_flipped.disp[:, ::-1]
    dp_valid = d_flipped.valid[:, ::-1]

    xs = np.arange(w, dtype=np.float64)
    wl = np.clip(1.0 - xs / (ramp * w), 0.0, 1.0)[None, :]
    wr = wl[:, ::-1]
    mid = 1.0 - wl - wr
    blend = wl * dp + wr * d.disp + mid * (d.disp + dp) * 0.5

    both = d.valid & dp_valid
    out = np.where(both, blend, np.where(d.valid, d.disp, dp))
    return DisparityMap(out, d.valid | dp_valid)

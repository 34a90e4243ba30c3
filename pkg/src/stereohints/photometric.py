"""Image reprojection and the DSSIM+L1 photometric loss.

The per-pixel loss is

    alpha * (1 - SSIM(I, I_warped)) / 2 + (1 - alpha) * |I - I_warped|

with SSIM over a 3x3 box window and the L1 term averaged over channels.
Pixels whose warp sample leaves the source raster carry +inf, the "no
supervision here" convention used everywhere downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import DepthMap, DisparityMap, Image, StereoCalibration

SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2
DEFAULT_ALPHA = 0.85


@dataclass(frozen=True)
class LossField:
    """Per-pixel non-negative loss; +inf marks pixels without supervision."""

    loss: np.ndarray

    def __post_init__(self):
        l = np.array(self.loss, dtype=np.float64)
        if l.ndim != 2:
            raise ValueError(f"loss field must be 2-D, got shape {np.shape(self.loss)}")
        if np.any(np.isnan(l)):
            raise ValueError("loss field must not contain NaN")
        if l.min() < 0.0:
            raise ValueError("loss values must be >= 0")
        l.flags.writeable = False
        object.__setattr__(self, "loss", l)

    @property
    def height(self) -> int:
        return self.loss.shape[0]

    @property
    def width(self) -> int:
        return self.loss.shape[1]

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.loss)


@dataclass(frozen=True)
class WarpResult:
    """A reprojection of the source image plus the per-pixel in-bounds mask.

    Out-of-bounds pixels still carry (edge-clamped) intensities so window
    statistics of neighbors stay defined, but they must never contribute a
    finite loss themselves.
    """

    image: Image
    in_bounds: np.ndarray

    def __post_init__(self):
        m = np.array(self.in_bounds, dtype=bool)
        if m.shape != (self.image.height, self.image.width):
            raise ValueError("in_bounds mask does not match image size")
        m.flags.writeable = False
        object.__setattr__(self, "in_bounds", m)


def _sample_bilinear(data: np.ndarray, xs: np.ndarray, ys: np.ndarray):
    """Bilinear sample of (H, W, C) data at float coordinates.

    Coordinates are clamped to the raster for the intensity value; the
    returned mask is False wherever the *unclamped* coordinate left
    [0, W-1] x [0, H-1].
    """
    h, w = data.shape[:2]
    inb = (xs >= 0.0) & (xs <= w - 1.0) & (ys >= 0.0) & (ys <= h - 1.0)
    xc = np.clip(xs, 0.0, w - 1.0)
    yc = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xc).astype(np.intp)
    y0 = np.floor(yc).astype(np.intp)
    fx = (xc - x0)[..., None]
    fy = (yc - y0)[..., None]
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    top = (1.0 - fx) * data[y0, x0] + fx * data[y0, x1]
    bot = (1.0 - fx) * data[y1, x0] + fx * data[y1, x1]
    vals = (1.0 - fy) * top + fy * bot
    # bilinear interpolation of in-range values can overshoot [0, 1] by an ulp
    return np.clip(vals, 0.0, 1.0), inb


def warp_disparity(source: Image, disp: DisparityMap, direction: int) -> WarpResult:
    """Resample ``source`` at (x + direction * disp, y).

    For a left-reference KITTI pair with the right image as source, use
    direction = -1.  Invalid-disparity pixels are flagged out-of-bounds.
    """
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    if (disp.height, disp.width) != (source.height, source.width):
        raise ValueError("disparity and source dimensions differ")
    ys, xs = np.meshgrid(
        np.arange(source.height, dtype=np.float64),
        np.arange(source.width, dtype=np.float64),
        indexing="ij",
    )
    vals, inb = _sample_bilinear(source.data, xs + direction * disp.disp, ys)
    return WarpResult(Image(vals), inb & disp.valid)


def warp_pose(source: Image, depth: DepthMap, calib: StereoCalibration) -> WarpResult:
    """Backproject reference pixels with K^-1 and depth, apply (R, t), project with K_other, sample.

    Pixels with invalid depth, points behind the other camera, or samples
    outside the source are flagged.
    """
    if (depth.height, depth.width) != (source.height, source.width):
        raise ValueError("depth and source dimensions differ")
    K = calib.K
    if abs(np.linalg.det(K)) < 1e-12:
        raise ValueError("singular reference intrinsics")
    h, w = depth.height, depth.width
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    pix = np.stack([xs.ravel(), ys.ravel(), np.ones(h * w)], axis=0)
    rays = np.linalg.solve(K, pix)
    z = np.where(depth.valid, depth.depth, 1.0).ravel()
    pts = rays * z
    pts = calib.R @ pts + calib.t[:, None]
    front = pts[2] > 0.0
    zsafe = np.where(front, pts[2], 1.0)
    proj = calib.K_other @ (pts / zsafe)
    xw = proj[0].reshape(h, w)
    yw = proj[1].reshape(h, w)
    vals, inb = _sample_bilinear(source.data, xw, yw)
    inb = inb & front.reshape(h, w) & depth.valid
    return WarpResult(Image(vals), inb)


def _box3(x: np.ndarray) -> np.ndarray:
    """3x3 box mean with edge replication.

    The nine taps are added in fixed row-major order so that a scalar
    re-implementation reproduces the result bit for bit.
    """
    p = np.pad(x, ((1, 1), (1, 1)) + ((0, 0),) * (x.ndim - 2), mode="edge")
    s = (
        p[:-2, :-2]
        + p[:-2, 1:-1]
        + p[:-2, 2:]
        + p[1:-1, :-2]
        + p[1:-1, 1:-1]
        + p[1:-1, 2:]
        + p[2:, :-2]
        + p[2:, 1:-1]
        + p[2:, 2:]
    )
    return s / 9.0


def _channel_mean(x: np.ndarray) -> np.ndarray:
    if x.shape[2] == 1:
        return x[:, :, 0]
    return (x[:, :, 0] + x[:, :, 1] + x[:, :, 2]) / 3.0


def ssim_map(a: Image, b: Image) -> np.ndarray:
    """Per-pixel SSIM over a 3x3 box window, channels averaged.

    Uses the standard stabilizers C1 = 0.01^2, C2 = 0.03^2 for a [0, 1]
    dynamic range; output is clipped to [-1, 1] to absorb float noise.
    """
    if a.data.shape != b.data.shape:
        raise ValueError("ssim_map requires matching dimensions and channels")
    mu_a = _box3(a.data)
    mu_b = _box3(b.data)
    e_aa = _box3(a.data * a.data)
    e_bb = _box3(b.data * b.data)
    e_ab = _box3(a.data * b.data)
    var_a = e_aa - mu_a * mu_a
    var_b = e_bb - mu_b * mu_b
    cov = e_ab - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    s = np.clip(num / den, -1.0, 1.0)
    return _channel_mean(s)


def dssim_l1(reference: Image, reprojected: WarpResult, alpha: float = DEFAULT_ALPHA) -> LossField:
    """alpha * (1 - SSIM)/2 + (1 - alpha) * mean-over-channels |I - I_warped|; +inf off-bounds."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    warped = reprojected.image
    if reference.data.shape != warped.data.shape:
        raise ValueError("reference and reprojection dimensions differ")
    s = ssim_map(reference, warped)
    l1 = _channel_mean(np.abs(reference.data - warped.data))
    loss = alpha * ((1.0 - s) * 0.5) + (1.0 - alpha) * l1
    loss = np.where(reprojected.in_bounds, loss, np.inf)
    return LossField(loss)


def min_over_views(fields: Sequence[LossField]) -> LossField:
    """Pointwise minimum across loss fields; +inf only where every input is +inf."""
    if len(fields) == 0:
        raise ValueError("min_over_views needs at least one field")
    shape = fields[0].loss.shape
    for f in fields[1:]:
        if f.loss.shape != shape:
            raise ValueError("loss fields have mismatched dimensions")
    return LossField(np.minimum.reduce([f.loss for f in fields]))


def photometric_loss_of_disparity(
    ref: Image,
    other: Image,
    disp: DisparityMap,
    direction: int,
    alpha: float = DEFAULT_ALPHA,
) -> LossField:
    """Warp ``other`` by ``disp`` and score it against ``ref`` (the l_r evaluator)."""
    return dssim_l1(ref, warp_disparity(other, disp, direction), alpha)

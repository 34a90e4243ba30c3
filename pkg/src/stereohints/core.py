"""Shared raster types: images, disparity/depth maps, calibration, RNG."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

# Disparities at or below this are treated as "at infinity" when converting
# to depth; well below sensor resolution.
EPSILON_DISP = 1e-3

_GRAY_WEIGHTS = (0.299, 0.587, 0.114)


def _locked(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Image:
    """Rectified raster with normalized intensities.

    ``data`` is stored as (H, W, C) float64 with C in {1, 3}; every value
    must be finite and inside [0, 1].  A 2-D array is accepted and treated
    as single-channel.  The array is copied and frozen on construction.
    """

    data: np.ndarray

    def __post_init__(self):
        d = np.array(self.data, dtype=np.float64)
        if d.ndim == 2:
            d = d[:, :, None]
        if d.ndim != 3 or d.shape[2] not in (1, 3):
            raise ValueError(f"image must be (H, W) or (H, W, 1|3), got shape {np.shape(self.data)}")
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError("image must have at least one pixel")
        if not np.all(np.isfinite(d)):
            raise ValueError("image intensities must be finite")
        if d.min() < 0.0 or d.max() > 1.0:
            raise ValueError("image intensities must lie in [0, 1]")
        object.__setattr__(self, "data", _locked(d))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class DisparityMap:
    """Per-pixel horizontal disparity (pixels) with a validity mask.

    Invalid entries are stored as 0 so downstream arithmetic stays finite;
    only ``disp[valid]`` is meaningful.  ``valid=None`` means all pixels
    are valid.
    """

    disp: np.ndarray
    valid: Optional[np.ndarray] = None

    def __post_init__(self):
        d = np.array(self.disp, dtype=np.float64)
        if d.ndim != 2:
            raise ValueError(f"disparity must be 2-D, got shape {np.shape(self.disp)}")
        if self.valid is None:
            v = np.ones(d.shape, dtype=bool)
        else:
            v = np.array(self.valid, dtype=bool)
        if v.shape != d.shape:
            raise ValueError("disparity / valid shape mismatch")
        vd = d[v]
        if vd.size and (not np.all(np.isfinite(vd)) or vd.min() < 0.0):
            raise ValueError("valid disparities must be finite and >= 0")
        d = np.where(v, d, 0.0)
        object.__setattr__(self, "disp", _locked(d))
        object.__setattr__(self, "valid", _locked(v))

    @property
    def height(self) -> int:
        return self.disp.shape[0]

    @property
    def width(self) -> int:
        return self.disp.shape[1]


@dataclass(frozen=True)
class DepthMap:
    """Per-pixel depth in meters (> 0 where valid); invalid entries stored as 0."""

    depth: np.ndarray
    valid: Optional[np.ndarray] = None

    def __post_init__(self):
        d = np.array(self.depth, dtype=np.float64)
        if d.ndim != 2:
            raise ValueError(f"depth must be 2-D, got shape {np.shape(self.depth)}")
        if self.valid is None:
            v = np.ones(d.shape, dtype=bool)
        else:
            v = np.array(self.valid, dtype=bool)
        if v.shape != d.shape:
            raise ValueError("depth / valid shape mismatch")
        vd = d[v]
        if vd.size and (not np.all(np.isfinite(vd)) or vd.min() <= 0.0):
            raise ValueError("valid depths must be finite and > 0")
        d = np.where(v, d, 0.0)
        object.__setattr__(self, "depth", _locked(d))
        object.__setattr__(self, "valid", _locked(v))

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]


@dataclass(frozen=True)
class StereoCalibration:
    """Rectified stereo geometry plus the optional general-pose matrices.

    ``K``/``K_other`` are 3x3 intrinsics of the reference and other view,
    ``R``/``t`` the rigid transform taking reference-camera coordinates to
    other-camera coordinates.  When omitted they are filled in from the
    rectified parameters (identical intrinsics, pure horizontal baseline,
    t = (-baseline, 0, 0)).
    """

    focal: float
    principal_point: tuple[float, float]
    baseline: float
    K: Optional[np.ndarray] = None
    K_other: Optional[np.ndarray] = None
    R: Optional[np.ndarray] = None
    t: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (np.isfinite(self.focal) and self.focal > 0):
            raise ValueError("focal must be finite and > 0")
        if not (np.isfinite(self.baseline) and self.baseline > 0):
            raise ValueError("baseline must be finite and > 0")
        cx, cy = self.principal_point
        K = self.K
        if K is None:
            K = np.array([[self.focal, 0.0, cx], [0.0, self.focal, cy], [0.0, 0.0, 1.0]])
        else:
            K = np.array(K, dtype=np.float64)
        K_other = np.array(self.K_other, dtype=np.float64) if self.K_other is not None else K.copy()
        R = np.array(self.R, dtype=np.float64) if self.R is not None else np.eye(3)
        t = np.array(self.t, dtype=np.float64) if self.t is not None else np.array([-self.baseline, 0.0, 0.0])
        for name, M in (("K", K), ("K_other", K_other)):
            if M.shape != (3, 3):
                raise ValueError(f"{name} must be 3x3")
            if np.any(np.abs(M[np.tril_indices(3, -1)]) > 0):
                raise ValueError(f"{name} must be upper-triangular")
            if np.any(np.diag(M) <= 0):
                raise ValueError(f"{name} must have a positive diagonal")
        if R.shape != (3, 3) or not np.allclose(R.T @ R, np.eye(3), atol=1e-9):
            raise ValueError("R must be orthonormal (R'R = I within 1e-9)")
        if t.shape != (3,):
            raise ValueError("t must be a 3-vector")
        object.__setattr__(self, "K", _locked(K))
        object.__setattr__(self, "K_other", _locked(K_other))
        object.__setattr__(self, "R", _locked(R))
        object.__setattr__(self, "t", _locked(t))


@dataclass(frozen=True)
class Rect:
    """Half-open pixel rectangle [x0, x1) x [y0, y1)."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if not (0 <= self.x0 < self.x1 and 0 <= self.y0 < self.y1):
            raise ValueError(f"degenerate rect {(self.x0, self.y0, self.x1, self.y1)}")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    def check_within(self, width: int, height: int) -> "Rect":
        if self.x1 > width or self.y1 > height:
            raise ValueError(f"rect {self} exceeds {width}x{height} raster")
        return self

    def slices(self) -> tuple[slice, slice]:
        return slice(self.y0, self.y1), slice(self.x0, self.x1)


class Rng:
    """Deterministic random stream backed by numpy's Philox generator.

    Philox is a counter-based PRNG: a fixed seed (plus spawn key) always
    reproduces the identical stream, which keeps randomized-hyperparameter
    experiments byte-reproducible.  ``derive`` yields an independent child
    stream so sub-tasks (per-surface textures, per-run draws) never share
    state.
    """

    def __init__(self, seed: int, _spawn_key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self._spawn_key = tuple(_spawn_key)
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=self._spawn_key)
        self.generator = np.random.Generator(np.random.Philox(seq))

    def derive(self, index: int) -> "Rng":
        return Rng(self.seed, self._spawn_key + (int(index),))

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size=size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size=size)


def to_grayscale(img: Image) -> Image:
    """Collapse RGB to luminance (0.299 R + 0.587 G + 0.114 B); identity on grayscale."""
    if img.channels == 1:
        return img
    r, g, b = img.data[:, :, 0], img.data[:, :, 1], img.data[:, :, 2]
    lum = _GRAY_WEIGHTS[0] * r + _GRAY_WEIGHTS[1] * g + _GRAY_WEIGHTS[2] * b
    # weights sum to 1 only up to rounding; clip guards the [0, 1] invariant
    return Image(np.clip(lum, 0.0, 1.0))


def hflip(img: Image) -> Image:
    """Reverse columns in every row, preserving channels."""
    return Image(img.data[:, ::-1, :].copy())


def disparity_to_depth(d: DisparityMap, calib: StereoCalibration) -> DepthMap:
    """depth = focal * baseline / disparity; near-zero or invalid disparities become invalid."""
    valid = d.valid & (d.disp > EPSILON_DISP)
    fb = calib.focal * calib.baseline
    with np.errstate(divide="ignore"):
        depth = np.where(valid, fb / np.where(valid, d.disp, 1.0), 0.0)
    return DepthMap(depth, valid)

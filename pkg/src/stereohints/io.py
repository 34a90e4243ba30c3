"""File formats and the synthetic-scene generator.

Scenes are stacks of fronto-parallel textured surfaces; the right view is
re-rendered from the shifted viewpoint (never warped from the left image),
so occluded regions contain genuinely different content and ground-truth
disparity plus co-visibility come out exact by construction.

Formats: KITTI-style 16-bit disparity PNG (value = round(256 * disp), 0 =
invalid), PFM float maps, 8-bit PNG/PGM images, plain-text calibration,
and a JSON scene description (schema documented on SceneSpec).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from PIL import Image as PILImage

from .core import DisparityMap, Image, Rect, Rng, StereoCalibration

TEXTURE_KINDS = ("noise", "gradient", "stripes")
STRUCTURE_KINDS = ("plane", "thin_bar", "stripes")


@dataclass(frozen=True)
class TextureSpec:
    """Surface texture: seeded value noise, a horizontal ramp, or a sinusoid of given period."""

    kind: str = "noise"
    amplitude: float = 0.25
    seed: int = 0
    period: float = 8.0

    def __post_init__(self):
        if self.kind not in TEXTURE_KINDS:
            raise ValueError(f"texture kind must be one of {TEXTURE_KINDS}")
        if not 0.0 <= self.amplitude <= 0.5:
            raise ValueError("texture amplitude must lie in [0, 0.5]")
        if self.period <= 0:
            raise ValueError("texture period must be > 0")


@dataclass(frozen=True)
class Structure:
    """A fronto-parallel element: a filled rectangle ('plane' / 'thin_bar') or a
    repeating comb of vertical bars ('stripes', 50% duty cycle of ``period``)."""

    kind: str
    region: Rect
    disparity: float
    period: float = 8.0
    texture: Optional[TextureSpec] = None

    def __post_init__(self):
        if self.kind not in STRUCTURE_KINDS:
            raise ValueError(f"structure kind must be one of {STRUCTURE_KINDS}")
        if not (np.isfinite(self.disparity) and self.disparity >= 0):
            raise ValueError("structure disparity must be finite and >= 0")
        if self.period <= 0:
            raise ValueError("structure period must be > 0")


@dataclass(frozen=True)
class SceneSpec:
    """Scene description; JSON form:

    {
      "width": 256, "height": 128,
      "background_disparity": 5.0,
      "texture": {"kind": "stripes", "amplitude": 0.3, "seed": 7, "period": 16.0},
      "structures": [
        {"kind": "thin_bar", "region": [60, 20, 65, 110], "disparity": 20.0,
         "texture": {"kind": "noise", "amplitude": 0.3, "seed": 3}}
      ]
    }

    Structure regions are [x0, y0, x1, y1] half-open pixel rects in the
    left view; per-structure textures default to the scene texture.
    """

    width: int
    height: int
    background_disparity: float
    texture: TextureSpec = field(default_factory=TextureSpec)
    structures: tuple[Structure, ...] = ()

    def __post_init__(self):
        if self.width < 2 or self.height < 2:
            raise ValueError("scene must be at least 2x2")
        if not 0 <= self.background_disparity < self.width:
            raise ValueError("background disparity must lie in [0, width)")
        object.__setattr__(self, "structures", tuple(self.structures))
        for s in self.structures:
            s.region.check_within(self.width, self.height)
            if s.disparity >= self.width:
                raise ValueError("structure disparities must be < width")


@dataclass(frozen=True)
class SyntheticPair:
    """Rendered stereo pair with exact left-reference ground truth.

    ``co_visible`` is True where the left pixel's surface point is not
    hidden by a nearer surface in the right view (leaving the right
    image's frame is tracked separately, by the warp's in-bounds mask).
    """

    left: Image
    right: Image
    gt_disparity: DisparityMap
    co_visible: np.ndarray

    def __post_init__(self):
        m = np.array(self.co_visible, dtype=bool)
        if m.shape != (self.left.height, self.left.width):
            raise ValueError("co_visible mask does not match the images")
        m.flags.writeable = False
        object.__setattr__(self, "co_visible", m)


class _Surface:
    """Internal: one renderable layer with its coverage test and texture field."""

    def __init__(self, spec: SceneSpec, index: int, kind: str, region: Optional[Rect],
                 disparity: float, period: float, texture: TextureSpec):
        self.index = index
        self.kind = kind
        self.region = region
        self.disparity = float(disparity)
        self.period = float(period)
        self.texture = texture
        rng = Rng(texture.seed).derive(index)
        self.base = float(rng.uniform(0.3, 0.7))
        self.phase = float(rng.uniform(0.0, texture.period))
        extent = spec.width + int(np.ceil(disparity)) + 2
        if texture.kind == "noise":
            self.noise = rng.uniform(-1.0, 1.0, (spec.height, extent))
        else:
            self.noise = None
        self.ramp_span = max(spec.width - 1, 1)

    def covers(self, xq: np.ndarray, yq: np.ndarray) -> np.ndarray:
        if self.region is None:
            return np.ones(xq.shape, dtype=bool)
        r = self.region
        inside = (xq >= r.x0) & (xq < r.x1) & (yq >= r.y0) & (yq < r.y1)
        if self.kind == "stripes":
            inside &= np.mod(xq - r.x0, self.period) < 0.5 * self.period
        return inside

    def shade(self, xq: np.ndarray, yq: np.ndarray) -> np.ndarray:
        t = self.texture
        if t.kind == "noise":
            ix = np.clip(np.floor(xq).astype(np.intp), 0, self.noise.shape[1] - 2)
            fx = xq - ix
            pattern = (1.0 - fx) * self.noise[yq, ix] + fx * self.noise[yq, ix + 1]
        elif t.kind == "gradient":
            pattern = 2.0 * (xq / self.ramp_span) - 1.0
        else:
            pattern = np.sin(2.0 * np.pi * (xq + self.phase) / t.period)
        return np.clip(self.base + t.amplitude * pattern, 0.0, 1.0)


def _surfaces(spec: SceneSpec) -> list[_Surface]:
    layers = [_Surface(spec, 0, "plane", None, spec.background_disparity, 1.0, spec.texture)]
    for i, s in enumerate(spec.structures):
        layers.append(_Surface(spec, i + 1, s.kind, s.region, s.disparity, s.period,
                               s.texture if s.texture is not None else spec.texture))
    # nearer (larger disparity) surfaces win; later structures break ties
    layers.sort(key=lambda s: (s.disparity, s.index))
    return layers


def render_scene(spec: SceneSpec) -> SyntheticPair:
    """Deterministic render of a scene, its mirror view, and exact ground truth."""
    h, w = spec.height, spec.width
    layers = _surfaces(spec)
    yq = np.arange(h, dtype=np.intp)[:, None].repeat(w, axis=1)
    xgrid = np.arange(w, dtype=np.float64)[None, :].repeat(h, axis=0)

    left = np.zeros((h, w))
    gt = np.zeros((h, w))
    win_prio = np.zeros((h, w), dtype=np.intp)
    for prio, s in enumerate(layers):
        cover = s.covers(xgrid, yq)
        left[cover] = s.shade(xgrid, yq)[cover]
        gt[cover] = s.disparity
        win_prio[cover] = prio

    right = np.zeros((h, w))
    for s in layers:
        xq = xgrid + s.disparity
        cover = s.covers(xq, yq)
        right[cover] = s.shade(xq, yq)[cover]

    occluded = np.zeros((h, w), dtype=bool)
    for prio, s in enumerate(layers):
        xq = xgrid - gt + s.disparity
        occluded |= s.covers(xq, yq) & (prio > win_prio)

    return SyntheticPair(
        Image(left), Image(right), DisparityMap(gt), ~occluded
    )


# --------------------------------------------------------------------------
# Disparity PNG (KITTI convention)

def write_disparity_png16(path: Union[str, Path], d: DisparityMap) -> None:
    """Store round(disp * 256) as uint16, 0 = invalid; requires disparities < 256.

    Valid pixels quantizing to 0 are stored as 1 so the mask survives the
    round trip; the induced error stays within the 1/256 quantization bound.
    """
    if np.any(d.disp[d.valid] >= 256.0):
        raise ValueError("disparities must be < 256 for 16-bit PNG storage")
    q = np.rint(d.disp * 256.0)
    q = np.clip(q, 1, 65535)
    q = np.where(d.valid, q, 0).astype(np.uint16)
    PILImage.fromarray(q).save(str(path), format="PNG")


def read_disparity_png16(path: Union[str, Path]) -> DisparityMap:
    with PILImage.open(str(path)) as im:
        arr = np.array(im)
    if arr.ndim != 2 or arr.dtype not in (np.dtype(np.uint16), np.dtype(np.int32)):
        raise ValueError(f"{path}: not a 16-bit single-channel PNG")
    arr = arr.astype(np.int64)
    if arr.min() < 0 or arr.max() > 65535:
        raise ValueError(f"{path}: values outside the uint16 range")
    valid = arr > 0
    return DisparityMap(np.where(valid, arr / 256.0, 0.0), valid)


# --------------------------------------------------------------------------
# PFM (float32 maps; grayscale "Pf" variant)

def write_pfm(path: Union[str, Path], data: np.ndarray) -> None:
    """Standard PFM: 'Pf' header, bottom-up rows, negative scale = little-endian."""
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError("write_pfm expects a 2-D array")
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{arr.shape[1]} {arr.shape[0]}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(np.flipud(arr).astype("<f4").tobytes())


def read_pfm(path: Union[str, Path]) -> np.ndarray:
    with open(path, "rb") as f:
        blob = f.read()
    tokens = []
    pos = 0
    while len(tokens) < 4 and pos < len(blob):
        # header is whitespace-separated ASCII: magic, width, height, scale
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        tokens.append(blob[start:pos])
    if len(tokens) < 4 or tokens[0] != b"Pf":
        raise ValueError(f"{path}: not a grayscale PFM file")
    try:
        width, height = int(tokens[1]), int(tokens[2])
        scale = float(tokens[3])
    except ValueError as e:
        raise ValueError(f"{path}: malformed PFM header") from e
    pos += 1  # single whitespace byte after the scale
    expected = width * height * 4
    raw = blob[pos : pos + expected]
    if len(raw) != expected or width <= 0 or height <= 0 or scale == 0.0:
        raise ValueError(f"{path}: malformed PFM payload")
    dtype = "<f4" if scale < 0 else ">f4"
    arr = np.frombuffer(raw, dtype=dtype).reshape(height, width)
    return np.flipud(arr).astype(np.float32)


# --------------------------------------------------------------------------
# 8/16-bit images

def write_image(path: Union[str, Path], img: Image) -> None:
    """8-bit PNG or PGM (by extension), intensities quantized as round(v * 255)."""
    q = np.rint(img.data * 255.0).astype(np.uint8)
    if img.channels == 1:
        PILImage.fromarray(q[:, :, 0], mode="L").save(str(path))
    else:
        PILImage.fromarray(q, mode="RGB").save(str(path))


def read_image(path: Union[str, Path]) -> Image:
    """Load PNG/PGM; 8-bit data is divided by 255, 16-bit by 65535."""
    with PILImage.open(str(path)) as im:
        arr = np.array(im)
    if arr.dtype == np.uint8:
        data = arr / 255.0
    elif arr.dtype in (np.dtype(np.uint16), np.dtype(np.int32)):
        data = arr / 65535.0
    else:
        raise ValueError(f"{path}: unsupported sample format {arr.dtype}")
    if data.ndim == 3 and data.shape[2] == 4:
        data = data[:, :, :3]
    return Image(data)


# --------------------------------------------------------------------------
# Calibration text files

_CALIB_KEYS = ("focal_px", "cx", "cy", "baseline_m")


def read_calibration(path: Union[str, Path]) -> StereoCalibration:
    """Parse the plain-text calibration format.

    Lines are "key value..." or "key: value..."; '#' starts a comment.
    Explicit keys: focal_px, cx, cy, baseline_m.  Alternatively P1 and P2
    give 3x4 row-major projection matrices for the reference and other
    camera, from which focal = P1[0][0], cx = P1[0][2], cy = P1[1][2] and
    baseline = -(P2[0][3] - P1[0][3]) / focal are derived.  Explicit keys
    win over matrix-derived values (a warning is emitted on conflict).
    """
    values: dict[str, float] = {}
    matrices: dict[str, np.ndarray] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.replace(":", " ", 1).partition(" ")
        fields = rest.split()
        if key in _CALIB_KEYS and len(fields) == 1:
            values[key] = float(fields[0])
        elif key in ("P1", "P2") and len(fields) == 12:
            matrices[key] = np.array([float(v) for v in fields]).reshape(3, 4)
        else:
            raise ValueError(f"{path}: cannot parse line {raw!r}")

    derived: dict[str, float] = {}
    if "P1" in matrices and "P2" in matrices:
        p1, p2 = matrices["P1"], matrices["P2"]
        f = p1[0, 0]
        if f <= 0:
            raise ValueError(f"{path}: projection matrix has non-positive focal")
        derived = {
            "focal_px": f,
            "cx": p1[0, 2],
            "cy": p1[1, 2],
            "baseline_m": -(p2[0, 3] - p1[0, 3]) / f,
        }
    elif matrices:
        raise ValueError(f"{path}: both P1 and P2 are required to derive calibration")

    for key in values:
        if key in derived and not np.isclose(values[key], derived[key], rtol=1e-9, atol=1e-12):
            warnings.warn(
                f"{path}: explicit {key}={values[key]} overrides matrix-derived {derived[key]}",
                stacklevel=2,
            )
    merged = {**derived, **values}
    missing = [k for k in _CALIB_KEYS if k not in merged]
    if missing:
        raise ValueError(f"{path}: missing calibration keys: {', '.join(missing)}")
    return StereoCalibration(
        focal=merged["focal_px"],
        principal_point=(merged["cx"], merged["cy"]),
        baseline=merged["baseline_m"],
    )


# --------------------------------------------------------------------------
# Scene JSON

def scene_spec_to_dict(spec: SceneSpec) -> dict:
    def tex(t: TextureSpec) -> dict:
        return {"kind": t.kind, "amplitude": t.amplitude, "seed": t.seed, "period": t.period}

    return {
        "width": spec.width,
        "height": spec.height,
        "background_disparity": spec.background_disparity,
        "texture": tex(spec.texture),
        "structures": [
            {
                "kind": s.kind,
                "region": [s.region.x0, s.region.y0, s.region.x1, s.region.y1],
                "disparity": s.disparity,
                "period": s.period,
                **({"texture": tex(s.texture)} if s.texture is not None else {}),
            }
            for s in spec.structures
        ],
    }


def scene_spec_from_dict(d: dict) -> SceneSpec:
    def tex(td: Optional[dict]) -> Optional[TextureSpec]:
        if td is None:
            return None
        return TextureSpec(**td)

    structures = tuple(
        Structure(
            kind=sd["kind"],
            region=Rect(*sd["region"]),
            disparity=sd["disparity"],
            period=sd.get("period", 8.0),
            texture=tex(sd.get("texture")),
        )
        for sd in d.get("structures", [])
    )
    return SceneSpec(
        width=d["width"],
        height=d["height"],
        background_disparity=d["background_disparity"],
        texture=tex(d.get("texture")) or TextureSpec(),
        structures=structures,
    )


def load_scene_spec(path: Union[str, Path]) -> SceneSpec:
    return scene_spec_from_dict(json.loads(Path(path).read_text()))


def save_scene_spec(path: Union[str, Path], spec: SceneSpec) -> None:
    Path(path).write_text(json.dumps(scene_spec_to_dict(spec), indent=2) + "\n")

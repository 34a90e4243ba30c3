import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stereohints.core import Rect
from stereohints.io import SceneSpec, Structure, TextureSpec, render_scene


@pytest.fixture(scope="session")
def scene_shift():
    """Single fronto-parallel noise plane at disparity 6: right = left shifted."""
    spec = SceneSpec(
        width=96,
        height=48,
        background_disparity=6.0,
        texture=TextureSpec(kind="noise", amplitude=0.35, seed=11),
    )
    return render_scene(spec)


@pytest.fixture(scope="session")
def scene_two_planes():
    """Noise background at disparity 4 with a nearer noise plane at 12."""
    spec = SceneSpec(
        width=128,
        height=64,
        background_disparity=4.0,
        texture=TextureSpec(kind="noise", amplitude=0.3, seed=5),
        structures=(
            Structure(
                kind="plane",
                region=Rect(40, 16, 96, 52),
                disparity=12.0,
                texture=TextureSpec(kind="noise", amplitude=0.35, seed=6),
            ),
        ),
    )
    return render_scene(spec)


@pytest.fixture(scope="session")
def scene_layered():
    """Three textured planes up to disparity 48 on a 256x128 raster."""
    spec = SceneSpec(
        width=256,
        height=128,
        background_disparity=10.0,
        texture=TextureSpec(kind="noise", amplitude=0.32, seed=21),
        structures=(
            Structure(
                kind="plane",
                region=Rect(30, 18, 120, 104),
                disparity=30.0,
                texture=TextureSpec(kind="noise", amplitude=0.34, seed=22),
            ),
            Structure(
                kind="plane",
                region=Rect(150, 30, 242, 112),
                disparity=48.0,
                texture=TextureSpec(kind="noise", amplitude=0.36, seed=23),
            ),
        ),
    )
    return render_scene(spec)


THIN_BAR_DISPARITY = 12.0
THIN_BG_DISPARITY = 4.0
THIN_TEXTURE_PERIOD = 8.0
THIN_BAR_COLUMNS = ((58, 64), (126, 132), (194, 200))


@pytest.fixture(scope="session")
def scene_thin():
    """Thin noise bars at disparity 12 over a periodic stripe background at 4.

    The repeating background texture (period 8 px) gives the photometric
    loss of bar pixels several local minima between a flat initialization
    and the true disparity.
    """
    bars = tuple(
        Structure(
            kind="thin_bar",
            region=Rect(x0, 16, x1, 112),
            disparity=THIN_BAR_DISPARITY,
            texture=TextureSpec(kind="noise", amplitude=0.35, seed=30 + i),
        )
        for i, (x0, x1) in enumerate(THIN_BAR_COLUMNS)
    )
    spec = SceneSpec(
        width=256,
        height=128,
        background_disparity=THIN_BG_DISPARITY,
        texture=TextureSpec(kind="stripes", amplitude=0.25, seed=29, period=THIN_TEXTURE_PERIOD),
        structures=bars,
    )
    return render_scene(spec)

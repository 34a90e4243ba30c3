"""Shared bits for the demo scripts: output folder and the two stock scenes."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

from stereohints import Rect, SceneSpec, Structure, TextureSpec

OUT = Path(__file__).parent / "out"


def outdir(name: str) -> Path:
    d = OUT / name
    d.mkdir(parents=True, exist_ok=True)
    return d


def layered_scene() -> SceneSpec:
    """Three noise-textured planes, disparities 10 / 30 / 48."""
    return SceneSpec(
        width=256,
        height=128,
        background_disparity=10.0,
        texture=TextureSpec(kind="noise", amplitude=0.32, seed=21),
        structures=(
            Structure(kind="plane", region=Rect(30, 18, 120, 104), disparity=30.0,
                      texture=TextureSpec(kind="noise", amplitude=0.34, seed=22)),
            Structure(kind="plane", region=Rect(150, 30, 242, 112), disparity=48.0,
                      texture=TextureSpec(kind="noise", amplitude=0.36, seed=23)),
        ),
    )


def thin_structure_scene() -> SceneSpec:
    """Thin noise bars (disparity 12) over a periodic stripe background (disparity 4).

    The period-8 stripes give bar pixels a photometric loss with several
    local minima between a flat initialization and the true disparity.
    """
    bars = tuple(
        Structure(kind="thin_bar", region=Rect(x0, 16, x1, 112), disparity=12.0,
                  texture=TextureSpec(kind="noise", amplitude=0.35, seed=30 + i))
        for i, (x0, x1) in enumerate(((58, 64), (126, 132), (194, 200)))
    )
    return SceneSpec(
        width=256,
        height=128,
        background_disparity=4.0,
        texture=TextureSpec(kind="stripes", amplitude=0.25, seed=29, period=8.0),
        structures=bars,
    )

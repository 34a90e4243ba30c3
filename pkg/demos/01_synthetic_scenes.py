"""Render synthetic stereo scenes with exact ground truth.

The right view is re-rendered from the shifted viewpoint rather than warped
from the left image, so occluded regions contain genuinely different
content.  This script renders the two stock scenes, writes all rasters in
their on-disk formats, and saves a contact sheet.
"""

import matplotlib.pyplot as plt
import numpy as np

from stereohints import render_scene, save_scene_spec, write_disparity_png16, write_image, Image

from demo_common import layered_scene, outdir, thin_structure_scene


def show(ax, data, title, **kw):
    ax.imshow(data, cmap=kw.pop("cmap", "gray"), **kw)
    ax.set_title(title, fontsize=9)
    ax.axis("off")


def main():
    out = outdir("01_synthetic_scenes")
    for name, spec in (("layered", layered_scene()), ("thin_bars", thin_structure_scene())):
        pair = render_scene(spec)
        save_scene_spec(out / f"{name}.json", spec)
        write_image(out / f"{name}_left.png", pair.left)
        write_image(out / f"{name}_right.png", pair.right)
        write_disparity_png16(out / f"{name}_gt.png", pair.gt_disparity)
        write_image(out / f"{name}_occlusion.png", Image((~pair.co_visible).astype(float)))

        fig, axes = plt.subplots(2, 2, figsize=(10, 5))
        show(axes[0, 0], pair.left.data[:, :, 0], f"{name}: left view")
        show(axes[0, 1], pair.right.data[:, :, 0], "right view")
        show(axes[1, 0], pair.gt_disparity.disp, "ground-truth disparity", cmap="magma")
        show(axes[1, 1], ~pair.co_visible, "occluded in right view")
        fig.tight_layout()
        fig.savefig(out / f"{name}_sheet.png", dpi=120)
        plt.close(fig)

        occ = (~pair.co_visible).mean()
        print(f"{name}: {spec.width}x{spec.height}, "
              f"disparities {sorted(set(np.unique(pair.gt_disparity.disp)))} "
              f"occluded {occ:.1%}")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()

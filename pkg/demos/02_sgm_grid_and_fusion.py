"""Run the stereo matcher over its hyperparameter grid and fuse the results.

Each of the 12 block-size x disparity-count configurations produces a
different disparity map with different holes and mistakes, and fusion
keeps, per pixel, the candidate whose reprojection scores best under
DSSIM+L1 -- no ground truth involved.

Two scenes make the point from both sides.  On distinctively textured
planes every configuration is already accurate and fusion mainly fills
holes.  On a periodic background the matcher often locks onto an alignment
one texture period away; that error is invisible to the reprojection score
too (a period-shifted match reprojects equally well), so fusion keeps it,
while the distinctively textured thin bars come out right.
"""

import matplotlib.pyplot as plt
import numpy as np

from stereohints import fuse, generate_candidates, param_grid, render_scene

from demo_common import layered_scene, outdir, thin_structure_scene


def stats(cand, gt, usable):
    cov = cand.valid[usable].mean()
    bad = (np.abs(cand.disp - gt) > 1.0)[usable & cand.valid].mean()
    return cov, bad


def main():
    out = outdir("02_sgm_grid_and_fusion")
    for name, spec in (("layered", layered_scene()), ("thin_bars", thin_structure_scene())):
        pair = render_scene(spec)
        gt = pair.gt_disparity.disp
        in_frame = (np.arange(pair.left.width)[None, :] - gt) >= 0
        usable = pair.co_visible & in_frame

        grid = param_grid()
        candidates = generate_candidates(pair.left, pair.right, grid)
        fused = fuse(candidates, pair.left, pair.right)

        print(f"--- {name} ---")
        print(f"{'config':>14} {'coverage':>9} {'bad>1px':>8}")
        for params, cand in zip(candidates.params, candidates.candidates):
            cov, bad = stats(cand, gt, usable)
            print(f"  b{params.block_size} d{params.num_disparities:>3}    {cov:8.1%} {bad:8.1%}")
        cov, bad = stats(fused.disp, gt, usable)
        print(f"{'fused':>14} {cov:8.1%} {bad:8.1%}")
        if name == "thin_bars":
            bars = (gt == 12.0) & usable & fused.disp.valid
            err = np.abs(fused.disp.disp - gt)
            print(f"fused on the bars alone: median |err| {np.median(err[bars]):.3f} px "
                  f"(background errors are period-shifted alignments)")

        vmax = float(gt.max()) + 2
        fig, axes = plt.subplots(2, 3, figsize=(13, 5))
        for ax, idx in zip(axes[0], (0, 5, 11)):
            p = candidates.params[idx]
            d = candidates.candidates[idx]
            ax.imshow(np.where(d.valid, d.disp, np.nan), cmap="magma", vmin=0, vmax=vmax)
            ax.set_title(f"candidate b{p.block_size} d{p.num_disparities}", fontsize=9)
            ax.axis("off")
        axes[1, 0].imshow(np.where(fused.disp.valid, fused.disp.disp, np.nan),
                          cmap="magma", vmin=0, vmax=vmax)
        axes[1, 0].set_title("fused", fontsize=9)
        axes[1, 1].imshow(fused.source_index, cmap="tab20", vmin=-1, vmax=11)
        axes[1, 1].set_title("winning candidate index", fontsize=9)
        axes[1, 2].imshow(gt, cmap="magma", vmin=0, vmax=vmax)
        axes[1, 2].set_title("ground truth", fontsize=9)
        for ax in axes[1]:
            ax.axis("off")
        fig.tight_layout()
        fig.savefig(out / f"{name}_fusion_sheet.png", dpi=120)
        plt.close(fig)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()

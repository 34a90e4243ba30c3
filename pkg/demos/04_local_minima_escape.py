"""Show hint-gated descent escaping local minima that trap plain descent.

Both runs start from the same flat disparity field and take the same number
of fixed-size gradient steps.  Plain DSSIM+L1 descent parks the thin-bar
pixels in the nearest stripe-alignment minimum; the gated objective pulls
them out wherever the fused matcher hint reprojects better, and its uptake
of hints shrinks as the field converges.
"""

import matplotlib.pyplot as plt
import numpy as np

from stereohints import (
    FlatInit,
    OptimizeConfig,
    fuse,
    generate_candidates,
    param_grid,
    render_scene,
)
from stereohints.optimizer import optimize

from demo_common import outdir, thin_structure_scene


def main():
    out = outdir("04_local_minima_escape")
    pair = render_scene(thin_structure_scene())
    gt = pair.gt_disparity.disp
    bar_px = gt == 12.0

    fused = fuse(generate_candidates(pair.left, pair.right, param_grid()),
                 pair.left, pair.right)

    runs = {}
    for name, use_hints in (("plain", False), ("hinted", True)):
        cfg = OptimizeConfig(iterations=500, step_size=0.5, init=FlatInit(2.0),
                             record_every=25, use_hints=use_hints)
        runs[name] = optimize(pair.left, pair.right, cfg,
                              hint=fused.disp if use_hints else None)
        epe = np.abs(runs[name].final.disp - gt)
        print(f"{name:>7}: median EPE bars {np.median(epe[bar_px]):6.2f}  "
              f"background {np.median(epe[~bar_px]):6.2f}")
    # The striped background is photometrically periodic, so a hint that is
    # off by one full period reprojects just as well as the truth and the
    # gate cannot reject it; the bars, with their distinctive texture, are
    # exactly where hints make the difference.

    rows = []
    for name, traj in runs.items():
        for p in traj.snapshots:
            rows.append(f"{name},{p.iteration},{p.mean_loss!r},{p.hint_fraction!r}")
    (out / "trajectories.csv").write_text("run,iteration,mean_loss,hint_fraction\n"
                                          + "\n".join(rows) + "\n")

    fig, axes = plt.subplots(1, 4, figsize=(15, 3.2))
    for name, traj in runs.items():
        iters = [p.iteration for p in traj.snapshots]
        axes[0].plot(iters, [p.mean_loss for p in traj.snapshots], label=name)
    axes[0].set_xlabel("iteration"), axes[0].set_ylabel("mean loss"), axes[0].legend()
    hinted = runs["hinted"]
    axes[1].plot([p.iteration for p in hinted.snapshots],
                 [p.hint_fraction for p in hinted.snapshots], color="tab:orange")
    axes[1].set_xlabel("iteration"), axes[1].set_ylabel("hint usage fraction")
    for ax, name in zip(axes[2:], runs):
        ax.imshow(runs[name].final.disp, cmap="magma", vmin=0, vmax=16)
        ax.set_title(f"final disparity: {name}", fontsize=9)
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(out / "escape.png", dpi=120)
    plt.close(fig)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()

"""Evaluate disparity predictions with the seven standard depth metrics.

Converts disparities to metric depth with a synthetic calibration, scores a
matcher output against ground truth (with and without the interior crop),
shows what median scaling does to a uniformly mis-scaled prediction, and
applies flip-averaging post-processing.
"""

import numpy as np

from stereohints import (
    DisparityMap,
    EvalConfig,
    METRIC_NAMES,
    SgmParams,
    StereoCalibration,
    compute_metrics,
    disparity_to_depth,
    flip_postprocess,
    garg_crop,
    hflip,
    render_scene,
    sgm_match,
)

from demo_common import layered_scene, outdir


def row(label, m):
    print(f"{label:>24} " + " ".join(f"{v:8.4f}" for v in m.as_tuple()))


def main():
    out = outdir("05_depth_evaluation")
    pair = render_scene(layered_scene())
    calib = StereoCalibration(focal=720.0, principal_point=(128.0, 64.0), baseline=0.54)

    pred_disp = sgm_match(pair.left, pair.right, SgmParams())
    pred = disparity_to_depth(pred_disp, calib)
    gt = disparity_to_depth(pair.gt_disparity, calib)

    print(f"{'':>24} " + " ".join(f"{n:>8}" for n in METRIC_NAMES))
    row("matcher output", compute_metrics(pred, gt))
    row("with interior crop", compute_metrics(pred, gt, EvalConfig(crop=garg_crop)))

    half = DisparityMap(pred_disp.disp * 2.0, pred_disp.valid)  # depth halved
    row("depth / 2, no scaling", compute_metrics(disparity_to_depth(half, calib), gt))
    row("depth / 2, median scal.", compute_metrics(
        disparity_to_depth(half, calib), gt, EvalConfig(median_scaling=True)))

    # flip averaging: simulate a predictor run twice, on the original and on
    # the mirrored input (an ideal predictor returns the mirrored map there),
    # with independent noise; the blend averages the noise away
    rng = np.random.default_rng(0)
    noisy = DisparityMap(np.clip(pair.gt_disparity.disp + rng.normal(0, 0.8, gt.depth.shape), 0.1, None))
    noisy_on_flipped = DisparityMap(
        np.clip(pair.gt_disparity.disp + rng.normal(0, 0.8, gt.depth.shape), 0.1, None).copy()[:, ::-1]
    )
    merged = flip_postprocess(noisy, noisy_on_flipped)
    row("one noisy prediction", compute_metrics(disparity_to_depth(noisy, calib), gt))
    row("flip post-processed", compute_metrics(disparity_to_depth(merged, calib), gt))

    lines = [",".join(METRIC_NAMES)]
    lines.append(",".join(repr(v) for v in compute_metrics(pred, gt).as_tuple()))
    (out / "metrics.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()

import math

import numpy as np
import pytest

from stereohints.core import DisparityMap, Image
from stereohints.io import SceneSpec, TextureSpec, render_scene
from stereohints.losses import reduce_mean
from stereohints.optimizer import (
    FlatInit,
    MapInit,
    OptimizeConfig,
    RandomInit,
    cost_curve,
    gated_gradient,
    optimize,
    photometric_gradient,
)
from stereohints.photometric import photometric_loss_of_disparity

from oracles import scalar_pixel_loss, scalar_rigid_window_loss


def _fd_check(pair, disp, samples=400, seed=0, gate=None, hint=None, alpha=0.85):
    """Fraction of sampled pixels whose analytic gradient matches central FD."""
    ref, other = pair.left.data, pair.right.data
    if gate is None:
        g = photometric_gradient(pair.left, pair.right, disp, -1, alpha)
    else:
        g = gated_gradient(pair.left, pair.right, disp, hint, -1, alpha, gate=gate)
    rng = np.random.default_rng(seed)
    eps = 1e-3
    tested = failed = 0
    h, w = disp.height, disp.width
    while tested < samples:
        x = int(rng.integers(0, w))
        y = int(rng.integers(0, h))
        if abs(g[y, x]) <= 1e-6:
            continue
        d0 = disp.disp[y, x]
        vals = []
        for t in (d0 + eps, d0 - eps):
            loss = scalar_pixel_loss(ref, other, disp.disp, disp.valid, x, y, -1, alpha, trial=t)
            if gate is not None and gate[y, x]:
                loss = loss + math.log1p(abs(t - hint.disp[y, x]))
            vals.append(loss)
        if not all(np.isfinite(vals)):
            continue
        tested += 1
        fd = (vals[0] - vals[1]) / (2 * eps)
        if abs(fd - g[y, x]) / abs(g[y, x]) > 1e-3:
            failed += 1
    return tested, failed


def _fractional_field(gt, seed):
    """Disparity field with fractional parts well away from bilinear kinks."""
    rng = np.random.default_rng(seed)
    base = np.floor(gt) + rng.uniform(0.15, 0.85, gt.shape)
    return DisparityMap(np.maximum(base, 0.0))


def test_gradient_zero_at_exact_constant_match():
    img = Image(np.full((10, 14), 0.5))
    g = photometric_gradient(img, img, DisparityMap(np.zeros((10, 14))), -1)
    assert np.all(g == 0.0)


def test_gradient_zero_when_out_of_bounds():
    img = Image(np.random.default_rng(0).uniform(0, 1, (8, 12)))
    g = photometric_gradient(img, img, DisparityMap(np.full((8, 12), 50.0)), -1)
    assert np.all(g == 0.0)


def test_gradient_matches_finite_differences(scene_two_planes, scene_thin):
    gradient_scene = render_scene(
        SceneSpec(width=96, height=48, background_disparity=6.0,
                  texture=TextureSpec(kind="gradient", amplitude=0.4, seed=2))
    )
    for i, pair in enumerate((scene_two_planes, scene_thin, gradient_scene)):
        disp = _fractional_field(pair.gt_disparity.disp, seed=10 + i)
        tested, failed = _fd_check(pair, disp, samples=300, seed=20 + i)
        assert failed <= 0.01 * tested, (i, tested, failed)


def test_gated_gradient_equals_photometric_off_gate(scene_two_planes):
    pair = scene_two_planes
    h, w = pair.left.height, pair.left.width
    disp = _fractional_field(pair.gt_disparity.disp, seed=3)
    hint = pair.gt_disparity
    off = np.zeros((h, w), dtype=bool)
    g_plain = photometric_gradient(pair.left, pair.right, disp, -1)
    g_gated = gated_gradient(pair.left, pair.right, disp, hint, -1, gate=off)
    assert np.array_equal(g_plain, g_gated)


def test_gated_gradient_supervised_term():
    img = Image(np.full((6, 8), 0.5))
    d = DisparityMap(np.full((6, 8), 3.0))
    h = DisparityMap(np.full((6, 8), 1.0))
    on = np.ones((6, 8), dtype=bool)
    g = gated_gradient(img, img, d, h, -1, gate=on)
    plain = photometric_gradient(img, img, d, -1)
    assert np.allclose(g - plain, 1.0 / (1.0 + 2.0), atol=1e-12)


def test_gated_gradient_matches_frozen_gate_fd(scene_two_planes):
    pair = scene_two_planes
    disp = _fractional_field(pair.gt_disparity.disp, seed=4)
    hint = pair.gt_disparity
    lr_d = photometric_loss_of_disparity(pair.left, pair.right, disp, -1)
    lr_h = photometric_loss_of_disparity(pair.left, pair.right, hint, -1)
    gate = hint.valid & (lr_h.loss < lr_d.loss)
    assert gate.any() and (~gate).any()
    tested, failed = _fd_check(pair, disp, samples=300, seed=5, gate=gate, hint=hint)
    assert failed <= 0.01 * tested, (tested, failed)


def test_optimize_from_truth_stays_near_truth(scene_two_planes):
    pair = scene_two_planes
    cfg = OptimizeConfig(iterations=60, step_size=0.02, init=MapInit(pair.gt_disparity))
    traj = optimize(pair.left, pair.right, cfg)
    assert traj.snapshots[-1].mean_loss <= traj.snapshots[0].mean_loss
    err = np.abs(traj.final.disp - pair.gt_disparity.disp)
    assert np.median(err) < 0.5


def test_optimize_descends_at_small_steps(scene_two_planes, scene_shift):
    for pair, init in ((scene_two_planes, FlatInit(2.0)), (scene_shift, RandomInit(0.0, 8.0, 7))):
        cfg = OptimizeConfig(iterations=80, step_size=0.05, init=init)
        traj = optimize(pair.left, pair.right, cfg)
        assert traj.snapshots[-1].mean_loss <= traj.snapshots[0].mean_loss


def test_optimize_zero_iterations_holds_init(scene_two_planes):
    pair = scene_two_planes
    cfg = OptimizeConfig(iterations=0, step_size=0.1, init=FlatInit(3.0))
    traj = optimize(pair.left, pair.right, cfg)
    assert len(traj.snapshots) == 1
    assert np.all(traj.final.disp == 3.0)
    assert traj.snapshots[0].iteration == 0


def test_optimize_deterministic(scene_two_planes):
    pair = scene_two_planes
    cfg = OptimizeConfig(iterations=25, step_size=0.1, init=RandomInit(0.0, 10.0, 99), record_every=5)
    a = optimize(pair.left, pair.right, cfg)
    b = optimize(pair.left, pair.right, cfg)
    assert np.array_equal(a.final.disp, b.final.disp)
    for pa, pb in zip(a.snapshots, b.snapshots):
        assert pa.iteration == pb.iteration
        assert pa.mean_loss == pb.mean_loss
        assert np.array_equal(pa.disparity.disp, pb.disparity.disp)


def test_optimize_hint_flag_consistency(scene_two_planes):
    pair = scene_two_planes
    cfg = OptimizeConfig(iterations=5, step_size=0.1, init=FlatInit(1.0), use_hints=True)
    with pytest.raises(ValueError):
        optimize(pair.left, pair.right, cfg)
    cfg_plain = OptimizeConfig(iterations=5, step_size=0.1, init=FlatInit(1.0))
    with pytest.raises(ValueError):
        optimize(pair.left, pair.right, cfg_plain, hint=pair.gt_disparity)


def test_optimize_usage_fraction_decreases(scene_thin):
    pair = scene_thin
    cfg = OptimizeConfig(
        iterations=150, step_size=0.5, init=FlatInit(2.0), use_hints=True, record_every=25
    )
    traj = optimize(pair.left, pair.right, cfg, hint=pair.gt_disparity)
    fractions = [p.hint_fraction for p in traj.snapshots]
    assert fractions[0] > fractions[-1]
    assert all(0.0 <= f <= 1.0 for f in fractions)


def test_cost_curve_identical_pair_min_at_zero():
    rng = np.random.default_rng(6)
    img = Image(rng.uniform(0, 1, (24, 48)))
    curve = cost_curve(img, img, (30, 12), d_max=20.0, steps=101)
    assert curve.shape == (101, 2)
    assert curve[np.argmin(curve[:, 1]), 0] == 0.0


def test_cost_curve_min_near_true_disparity(scene_two_planes):
    pair = scene_two_planes
    x, y = 60, 30  # inside the disparity-12 plane
    assert pair.gt_disparity.disp[y, x] == 12.0
    curve = cost_curve(pair.left, pair.right, (x, y), d_max=20.0, steps=201)
    best = curve[np.argmin(curve[:, 1]), 0]
    assert abs(best - 12.0) <= 1.0


def test_cost_curve_periodic_scene_has_multiple_minima():
    spec = SceneSpec(width=96, height=32, background_disparity=0.0,
                     texture=TextureSpec(kind="stripes", amplitude=0.3, seed=8, period=8.0))
    pair = render_scene(spec)
    curve = cost_curve(pair.left, pair.right, (60, 16), d_max=24.0, steps=241)
    loss = curve[:, 1]
    minima = [(curve[i, 0], loss[i]) for i in range(1, 240)
              if loss[i] < loss[i - 1] and loss[i] <= loss[i + 1] and np.isfinite(loss[i])]
    # the true texture alignments are the deep minima; the sinusoid also has
    # shallow mirror-alignment dips between them
    deep = [d for d, l in minima if l < 0.05]
    assert len(deep) >= 2
    assert max(deep) - min(deep) >= 8.0
    assert np.all(np.abs(np.diff(deep) - 8.0) < 1.5)


def test_cost_curve_matches_scalar_oracle(scene_two_planes):
    pair = scene_two_planes
    curve = cost_curve(pair.left, pair.right, (40, 20), d_max=15.0, steps=31)
    for d, loss in curve[::5]:
        want = scalar_rigid_window_loss(pair.left.data, pair.right.data, 40, 20, d, -1, 0.85)
        if math.isinf(want):
            assert math.isinf(loss)
        else:
            assert loss == pytest.approx(want, abs=1e-12)


def test_cost_curve_out_of_bounds_pixel_errors(scene_two_planes):
    pair = scene_two_planes
    with pytest.raises(ValueError):
        cost_curve(pair.left, pair.right, (10_000, 0), d_max=5.0, steps=10)

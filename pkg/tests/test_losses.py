import math

import numpy as np
import pytest

from stereohints.core import DepthMap, DisparityMap, Image
from stereohints.losses import (
    berhu,
    hint_gated_loss,
    hint_usage_fraction,
    log_l1,
    proxy_supervised_loss,
    reduce_mean,
    sum_loss,
)
from stereohints.photometric import LossField, photometric_loss_of_disparity

from oracles import scalar_pixel_loss


def _dmap(arr, valid=None):
    return DisparityMap(np.asarray(arr, dtype=float), valid)


def test_log_l1_zero_at_equality():
    d = _dmap(np.random.default_rng(0).uniform(0, 10, (5, 5)))
    out = log_l1(d, d)
    assert np.all(out.loss == 0.0)


def test_log_l1_log_identity():
    a = _dmap(np.full((2, 2), 1.0))
    b = _dmap(np.full((2, 2), 1.0 + (math.e - 1.0)))
    assert np.allclose(log_l1(a, b).loss, 1.0, atol=1e-12)


def test_log_l1_invalid_gives_inf():
    a = _dmap(np.ones((2, 2)))
    valid = np.array([[True, False], [True, True]])
    b = _dmap(np.ones((2, 2)), valid)
    out = log_l1(a, b)
    assert np.isinf(out.loss[0, 1])
    assert out.loss[0, 0] == 0.0


def test_log_l1_symmetric_zero_iff_equal():
    rng = np.random.default_rng(1)
    a = _dmap(rng.uniform(0, 20, (8, 8)))
    b = _dmap(rng.uniform(0, 20, (8, 8)))
    assert np.array_equal(log_l1(a, b).loss, log_l1(b, a).loss)
    zeros = log_l1(a, b).loss == 0.0
    assert np.array_equal(zeros, a.disp == b.disp)


def test_berhu_hand_values():
    d = DepthMap(np.array([[2.0, 2.0]]))
    ref = DepthMap(np.array([[3.0, 12.0]]))  # residuals 1 and 10 -> delta = 2
    out = berhu(d, ref)
    assert out.loss[0, 0] == pytest.approx(1.0, abs=1e-12)
    assert out.loss[0, 1] == pytest.approx(26.0, abs=1e-12)


def test_berhu_identity_zero():
    d = DepthMap(np.full((3, 3), 4.0))
    assert np.all(berhu(d, d).loss == 0.0)


def test_berhu_knee_continuity():
    # residuals: one at ~delta, one at 5 fixing delta = 1
    eps = 1e-9
    for sign in (-1.0, 1.0):
        d = DepthMap(np.array([[10.0, 10.0]]))
        ref = DepthMap(np.array([[10.0 + 1.0 + sign * eps, 15.0]]))
        out = berhu(d, ref)
        r = 1.0 + sign * eps
        l1_branch = r
        quad_branch = (r * r + 1.0) / 2.0
        assert abs(l1_branch - quad_branch) < 1e-7
        assert out.loss[0, 0] == pytest.approx(l1_branch, abs=1e-7)


def test_berhu_requires_joint_pixels():
    none = np.zeros((2, 2), dtype=bool)
    with pytest.raises(ValueError):
        berhu(DepthMap(np.ones((2, 2)), none), DepthMap(np.ones((2, 2))))


def test_proxy_supervised_is_exact_alias():
    rng = np.random.default_rng(2)
    d = _dmap(rng.uniform(0, 30, (6, 6)))
    hint = _dmap(rng.uniform(0, 30, (6, 6)), rng.uniform(size=(6, 6)) > 0.3)
    a = proxy_supervised_loss(d, hint).loss
    b = log_l1(d, hint).loss
    assert np.array_equal(a, b)
    assert np.isinf(a[~hint.valid]).all()


def test_sum_loss_hole_contributes_nothing():
    photo = LossField(np.full((2, 2), 0.3))
    d = _dmap(np.full((2, 2), 7.0))
    hint = _dmap(np.full((2, 2), 3.0), np.array([[False, True], [True, True]]))
    out = sum_loss(photo, d, hint)
    assert out.loss[0, 0] == 0.3
    assert out.loss[0, 1] == pytest.approx(0.3 + math.log1p(4.0), abs=1e-12)


def test_sum_loss_identity_hint():
    photo = LossField(np.random.default_rng(3).uniform(0, 1, (4, 4)))
    d = _dmap(np.full((4, 4), 5.0))
    out = sum_loss(photo, d, d)
    assert np.array_equal(out.loss, photo.loss)


def test_sum_loss_dominates_photometric():
    rng = np.random.default_rng(4)
    photo = LossField(rng.uniform(0, 1, (5, 5)))
    d = _dmap(rng.uniform(0, 10, (5, 5)))
    hint = _dmap(rng.uniform(0, 10, (5, 5)), rng.uniform(size=(5, 5)) > 0.5)
    out = sum_loss(photo, d, hint)
    assert np.all(out.loss >= photo.loss)


def test_gate_tie_goes_to_plain_loss(scene_two_planes):
    pair = scene_two_planes
    d = pair.gt_disparity
    gated = hint_gated_loss(pair.left, pair.right, d, d, direction=-1)
    assert not np.any(gated.gate)
    lr = photometric_loss_of_disparity(pair.left, pair.right, d, -1)
    assert np.array_equal(gated.loss.loss, lr.loss)


def test_gate_respects_hint_holes(scene_two_planes):
    pair = scene_two_planes
    h, w = pair.left.height, pair.left.width
    flat = _dmap(np.full((h, w), 1.0))
    holes = np.zeros((h, w), dtype=bool)
    hint = _dmap(pair.gt_disparity.disp, holes)
    gated = hint_gated_loss(pair.left, pair.right, flat, hint, direction=-1)
    assert not np.any(gated.gate)


def test_gate_matches_scalar_oracle(scene_two_planes):
    pair = scene_two_planes
    h, w = pair.left.height, pair.left.width
    rng = np.random.default_rng(5)
    d = _dmap(rng.uniform(0.0, 16.0, (h, w)))
    hint = DisparityMap(pair.gt_disparity.disp, rng.uniform(size=(h, w)) > 0.25)
    gated = hint_gated_loss(pair.left, pair.right, d, hint, direction=-1)

    ref = pair.left.data
    other = pair.right.data
    for _ in range(300):
        x = int(rng.integers(0, w))
        y = int(rng.integers(0, h))
        lr_d = scalar_pixel_loss(ref, other, d.disp, d.valid, x, y, -1, 0.85)
        lr_h = scalar_pixel_loss(ref, other, hint.disp, hint.valid, x, y, -1, 0.85)
        expect = bool(hint.valid[y, x]) and lr_h < lr_d
        assert gated.gate[y, x] == expect, (x, y, lr_d, lr_h)


def test_gate_majority_on_textured_pixels(scene_two_planes):
    pair = scene_two_planes
    h, w = pair.left.height, pair.left.width
    flat = _dmap(np.full((h, w), 1.0))
    gated = hint_gated_loss(pair.left, pair.right, flat, pair.gt_disparity, direction=-1)
    lr_flat = photometric_loss_of_disparity(pair.left, pair.right, flat, -1)
    usable = pair.co_visible & np.isfinite(lr_flat.loss)
    assert gated.gate[usable].mean() > 0.5


def test_gated_dominance_and_equality_off_gate(scene_two_planes):
    pair = scene_two_planes
    h, w = pair.left.height, pair.left.width
    rng = np.random.default_rng(6)
    d = _dmap(rng.uniform(0.0, 16.0, (h, w)))
    gated = hint_gated_loss(pair.left, pair.right, d, pair.gt_disparity, direction=-1)
    lr = photometric_loss_of_disparity(pair.left, pair.right, d, -1)
    finite = np.isfinite(lr.loss)
    assert np.all(gated.loss.loss[finite] >= lr.loss[finite])
    off = finite & ~gated.gate
    assert np.array_equal(gated.loss.loss[off], lr.loss[off])
    on = finite & gated.gate & (d.disp != pair.gt_disparity.disp)
    assert np.all(gated.loss.loss[on] > lr.loss[on])


def test_hint_usage_fraction_edges(scene_two_planes):
    pair = scene_two_planes
    h, w = pair.left.height, pair.left.width
    flat = _dmap(np.full((h, w), 1.0))
    no_hints = DisparityMap(pair.gt_disparity.disp, np.zeros((h, w), dtype=bool))
    gated = hint_gated_loss(pair.left, pair.right, flat, no_hints, direction=-1)
    assert hint_usage_fraction(gated) == 0.0
    full = hint_gated_loss(pair.left, pair.right, flat, pair.gt_disparity, direction=-1)
    frac = hint_usage_fraction(full)
    assert 0.0 < frac <= 1.0
    assert frac == full.gate.sum() / full.hint_valid.sum()


def test_reduce_mean():
    assert reduce_mean(LossField(np.full((3, 3), 0.5))) == pytest.approx(0.5)
    assert reduce_mean(LossField(np.array([[0.2, np.inf]]))) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        reduce_mean(LossField(np.full((2, 2), np.inf)))

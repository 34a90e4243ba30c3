"""Supervised-style losses, baseline objectives, and the hint-gated loss.

The gated objective consults a per-pixel disparity hint h only where the
hint's reprojection beats the current prediction d:

    loss_i = l_r(d_i) + log(1 + |d_i - h_i|)   if l_r(h_i) < l_r(d_i)
    loss_i = l_r(d_i)                          otherwise

with strict inequality, so ties (and hint holes, whose losses are +inf)
fall through to the plain photometric loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DepthMap, DisparityMap, Image
from .photometric import DEFAULT_ALPHA, LossField, photometric_loss_of_disparity


@dataclass(frozen=True)
class GatedLoss:
    """Per-pixel gated loss with the gate and hint-validity masks.

    gate[i] implies hint_valid[i]; where the gate is off the loss equals
    the plain photometric loss exactly.
    """

    loss: LossField
    gate: np.ndarray
    hint_valid: np.ndarray

    def __post_init__(self):
        g = np.array(self.gate, dtype=bool)
        hv = np.array(self.hint_valid, dtype=bool)
        if g.shape != self.loss.loss.shape or hv.shape != g.shape:
            raise ValueError("gate / hint_valid masks must match the loss field")
        if np.any(g & ~hv):
            raise ValueError("gate must be off wherever the hint is invalid")
        g.flags.writeable = False
        hv.flags.writeable = False
        object.__setattr__(self, "gate", g)
        object.__setattr__(self, "hint_valid", hv)


def _check_same_size(a, b):
    if (a.height, a.width) != (b.height, b.width):
        raise ValueError("operands have mismatched dimensions")


def log_l1(d: DisparityMap, d_ref: DisparityMap) -> LossField:
    """log(1 + |d - d_ref|) per pixel; +inf where either map is invalid."""
    _check_same_size(d, d_ref)
    joint = d.valid & d_ref.valid
    loss = np.where(joint, np.log1p(np.abs(d.disp - d_ref.disp)), np.inf)
    return LossField(loss)


def berhu(d: DepthMap, d_ref: DepthMap) -> LossField:
    """Reverse Huber: L1 up to delta, quadratic beyond, delta = 0.2 * max residual.

    The threshold is taken over jointly-valid pixels; identical maps give
    delta = 0 and a zero loss (the 0/0 branch is defined as 0).
    """
    _check_same_size(d, d_ref)
    joint = d.valid & d_ref.valid
    if not np.any(joint):
        raise ValueError("berhu needs at least one jointly-valid pixel")
    r = np.abs(d.depth - d_ref.depth)
    delta = 0.2 * r[joint].max()
    if delta == 0.0:
        loss = np.zeros(r.shape)
    else:
        loss = np.where(r <= delta, r, (r * r + delta * delta) / (2.0 * delta))
    return LossField(np.where(joint, loss, np.inf))


def proxy_supervised_loss(d: DisparityMap, hint: DisparityMap) -> LossField:
    """The proxy-supervised baseline: log-L1 against the hint map (holes give +inf)."""
    return log_l1(d, hint)


def sum_loss(photometric: LossField, d: DisparityMap, hint: DisparityMap) -> LossField:
    """Photometric plus log-L1-to-hint; hint holes contribute 0 so photometric still supervises."""
    _check_same_size(photometric, d)
    _check_same_size(d, hint)
    joint = d.valid & hint.valid
    supervised = np.where(joint, np.log1p(np.abs(d.disp - hint.disp)), 0.0)
    return LossField(photometric.loss + supervised)


def hint_gated_loss(
    ref: Image,
    other: Image,
    d: DisparityMap,
    hint: DisparityMap,
    direction: int,
    alpha: float = DEFAULT_ALPHA,
) -> GatedLoss:
    """Evaluate the gated objective, taking the hint branch only where it wins photometrically."""
    _check_same_size(d, hint)
    lr_d = photometric_loss_of_disparity(ref, other, d, direction, alpha)
    lr_h = photometric_loss_of_disparity(ref, other, hint, direction, alpha)
    gate = hint.valid & (lr_h.loss < lr_d.loss)
    supervised = np.where(gate, np.log1p(np.abs(d.disp - hint.disp)), 0.0)
    return GatedLoss(LossField(lr_d.loss + supervised), gate, hint.valid.copy())


def hint_usage_fraction(g: GatedLoss) -> float:
    """Fraction of hint-valid pixels whose gate fired; 0 when no hints are valid."""
    n_valid = int(g.hint_valid.sum())
    if n_valid == 0:
        return 0.0
    return float(g.gate.sum()) / n_valid


def reduce_mean(field: LossField) -> float:
    """Mean over finite-loss pixels; an all-infinite field is an error."""
    finite = field.finite
    if not np.any(finite):
        raise ValueError("loss field has no finite pixels")
    return float(field.loss[finite].mean())

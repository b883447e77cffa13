"""Center-point labels, the penalty-reduced focal loss with the RA-dropout
term, and the RA/RV/VA feature fusion kernel. Forward-only numpy code.

Label and prediction tensors are laid out ``[frame, range bin, angle bin, class]``;
feature tensors ``[channel, frame, axis1, axis2]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ShapeError
from .radar_model import CLASSES, PointTarget, RadarConfig, Scene, TargetClass

DEFAULT_SIGMA = {TargetClass.PEDESTRIAN: 2.0, TargetClass.CYCLIST: 3.0, TargetClass.CAR: 5.0}
EPS = 1e-7


@dataclass(frozen=True)
class Center:
    """A ground-truth object centre on the (range bin, angle bin) grid."""

    t: int
    r: int
    theta: int
    cls: TargetClass
    sigma: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "cls", TargetClass.parse(self.cls))

    @property
    def spread(self) -> float:
        return DEFAULT_SIGMA[self.cls] if self.sigma is None else float(self.sigma)


@dataclass(frozen=True)
class LossParams:
    alpha: float = 2.0
    beta: float = 4.0
    kappa: float = 4.0
    gamma: float = 0.5
    n_obj: int | None = None

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.kappa <= 0 or self.gamma < 0:
            raise DomainError("loss needs alpha, beta, gamma >= 0 and kappa > 0")


def rasterize_labels(
    centers: Iterable[Center],
    shape: tuple[int, int, int],
    num_classes: int = len(CLASSES),
    sigma: dict[TargetClass, float] | None = None,
) -> np.ndarray:
    """Splat Gaussian bumps ``exp(-d^2 / (2 sigma^2))`` (d in bins) per class and
    frame; overlapping bumps of one class merge by element-wise maximum."""
    d, w, h = shape
    y = np.zeros((d, w, h, num_classes))
    rr = np.arange(w)[:, None]
    aa = np.arange(h)[None, :]
    for c in centers:
        if not (0 <= c.t < d and 0 <= c.r < w and 0 <= c.theta < h):
            raise DomainError(f"centre {c} lies off the {shape} grid")
        s = sigma.get(c.cls, c.spread) if sigma and c.sigma is None else c.spread
        if s <= 0:
            raise DomainError("sigma must be positive")
        k = c.cls.index
        if k >= num_classes:
            raise DomainError(f"class {c.cls.value} beyond {num_classes} label channels")
        bump = np.exp(-((rr - c.r) ** 2 + (aa - c.theta) ** 2) / (2 * s * s))
        np.maximum(y[c.t, :, :, k], bump, out=y[c.t, :, :, k])
    return y


def focal_loss(pred: np.ndarray, truth: np.ndarray, params: LossParams | None = None) -> float:
    params = params or LossParams()
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ShapeError(f"prediction {pred.shape} and truth {truth.shape} differ")
    p = np.clip(pred, EPS, 1 - EPS)
    pos = truth == 1
    present = truth > 0
    # Y = 0 here but some other class is present at the same cell
    other = (present.sum(axis=-1, keepdims=True) - present) > 0
    neg_weight = np.where((truth == 0) & other, params.kappa, 1.0)

    pos_term = params.kappa * (1 - p) ** params.alpha * np.log(p)
    neg_term = neg_weight * (1 - truth) ** params.beta * p ** params.alpha * np.log(1 - p)
    total = np.where(pos, pos_term, neg_term).sum()
    n_obj = int(pos.sum()) if params.n_obj is None else params.n_obj
    return float(-total / max(n_obj, 1))


def combined_loss(pred: np.ndarray, pred_no_ra: np.ndarray, truth: np.ndarray,
                  params: LossParams | None = None) -> float:
    """``focal(pred) + gamma * focal(pred_no_ra)``; ``pred_no_ra`` is the output
    with the RA input zeroed."""
    params = params or LossParams()
    return focal_loss(pred, truth, params) + params.gamma * focal_loss(pred_no_ra, truth, params)


def fuse_features(ra: np.ndarray, rv: np.ndarray, va: np.ndarray) -> np.ndarray:
    """Map RV and VA features onto the RA grid and stack channels.

    ``ra``: ``[C1, D, R, A]``, ``rv``: ``[C2, D, R, V]``, ``va``: ``[C3, D, V, A]``.
    Both velocity-bearing features are summed over velocity; the RV result is
    repeated along angle and the VA result along range.
    """
    ra, rv, va = (np.asarray(x) for x in (ra, rv, va))
    if ra.ndim != 4 or rv.ndim != 4 or va.ndim != 4:
        raise ShapeError("features must be [channel, frame, axis1, axis2]")
    _, d, r, a = ra.shape
    if rv.shape[1] != d or va.shape[1] != d:
        raise ShapeError("frame counts differ")
    if rv.shape[2] != r or va.shape[3] != a or rv.shape[3] != va.shape[2]:
        raise ShapeError(f"incompatible grids RA{ra.shape} RV{rv.shape} VA{va.shape}")
    rv_block = np.broadcast_to(rv.sum(axis=3)[..., None], (rv.shape[0], d, r, a))
    va_block = np.broadcast_to(va.sum(axis=2)[:, :, None, :], (va.shape[0], d, r, a))
    return np.concatenate([ra, rv_block, va_block], axis=0)


def centers_from_detections(dets: Sequence, sigma: float | None = None) -> list[Center]:
    return [Center(d.frame, d.range_bin, d.angle_bin, d.cls, sigma) for d in dets]


def center_of_target(cfg: RadarConfig, target: PointTarget, t: int = 0) -> Center:
    """Label centre at the nearest range and angle bins, where the processed
    cube peaks for an on-grid target."""
    r = min(int(round(target.r / cfg.range_bin_width)), cfg.range_fft_points - 1)
    m = cfg.angle_fft_points
    a = int(round(m * cfg.element_spacing * math.sin(target.theta) / cfg.wavelength)) + m // 2
    return Center(t, r, min(max(a, 0), m - 1), target.cls)


def centers_from_scene(cfg: RadarConfig, scene: Scene) -> list[Center]:
    return [center_of_target(cfg, tgt, k) for k, frame in enumerate(scene.frames) for tgt in frame]

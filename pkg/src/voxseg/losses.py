"""Composite segmentation loss and LR schedules as pure numeric functions.

This is verification math, not a training loop: each loss takes small
prediction/target arrays, returns a scalar, and has a closed-form gradient
(``*_grad``) with respect to the prediction entries treated as free
variables.  That makes every gradient checkable against central finite
differences, which the test suite does.

The combined loss is  w_ce*CE + w_focal*focal + w_dice*dice  with default
weights (1, 20, 20).  Its dice term averages the soft dice loss over the
one-vs-rest binary mask of each class.

Probabilities are clamped from below at ``EPS_PROB`` inside the log-based
losses; no upper clamp, so the functions stay smooth near p=1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import OutOfRange, ShapeMismatch

EPS_PROB = 1e-7
DEFAULT_GAMMA = 2.0
DEFAULT_ALPHA = 0.25
DEFAULT_EPS_SMOOTH = 1.0


@dataclass(frozen=True)
class SoftPrediction:
    """Per-pixel class probabilities, shape (classes, h, w).

    Construction checks the distribution invariants (values in (0, 1),
    pixel sums 1 within 1e-6).  The loss functions below also accept plain
    arrays, whose entries are then treated as unconstrained variables; that
    is what makes finite-difference gradient checks possible.
    """

    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.ndim != 3:
            raise ValueError(f"probs must be (classes, h, w), got shape {arr.shape}")
        if arr.min() <= 0.0 or arr.max() >= 1.0:
            raise ValueError("probabilities must lie strictly inside (0, 1)")
        sums = arr.sum(axis=0)
        if np.abs(sums - 1.0).max() > 1e-6:
            raise ValueError("per-pixel class probabilities must sum to 1 within 1e-6")
        view = arr.view()
        view.flags.writeable = False
        object.__setattr__(self, "probs", view)


@dataclass(frozen=True)
class LossWeights:
    ce: float = 1.0
    focal: float = 20.0
    dice: float = 20.0

    def __post_init__(self):
        for name in ("ce", "focal", "dice"):
            if getattr(self, name) < 0:
                raise ValueError(f"weight {name} must be nonnegative")


DEFAULT_WEIGHTS = LossWeights()


def _as_probs(pred) -> np.ndarray:
    arr = pred.probs if isinstance(pred, SoftPrediction) else np.asarray(pred)
    return arr.astype(np.float64, copy=False)


def _check_ce_shapes(probs: np.ndarray, target: np.ndarray) -> None:
    if probs.ndim != 3:
        raise ShapeMismatch(f"prediction must be (classes, h, w), got {probs.shape}")
    if target.shape != probs.shape[1:]:
        raise ShapeMismatch(f"target {target.shape} does not match prediction {probs.shape}")
    if target.min() < 0 or target.max() >= probs.shape[0]:
        raise ValueError(f"target classes must lie in [0, {probs.shape[0]})")


def _p_true(probs: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Per-pixel probability assigned to the true class, clamped below."""
    taken = np.take_along_axis(probs, target[None].astype(np.intp), axis=0)[0]
    return np.maximum(taken, EPS_PROB)


def cross_entropy_loss(pred, target: np.ndarray) -> float:
    """Mean over pixels of -log p_true."""
    probs = _as_probs(pred)
    target = np.asarray(target)
    _check_ce_shapes(probs, target)
    return float(np.mean(-np.log(_p_true(probs, target))))


def cross_entropy_grad(pred, target: np.ndarray) -> np.ndarray:
    """d(cross_entropy_loss)/d(pred), same shape as pred."""
    probs = _as_probs(pred)
    target = np.asarray(target)
    _check_ce_shapes(probs, target)
    grad = np.zeros_like(probs)
    pt = _p_true(probs, target)
    np.put_along_axis(grad, target[None].astype(np.intp), (-1.0 / pt)[None], axis=0)
    return grad / target.size


def focal_loss(pred, target: np.ndarray, gamma: float = DEFAULT_GAMMA, alpha: float = DEFAULT_ALPHA) -> float:
    """Mean of -alpha * (1 - p_t)^gamma * log(p_t).

    With gamma=0 and alpha=1 this reduces to cross_entropy_loss exactly
    (the modulating factor evaluates to 1.0 bit for bit).
    """
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    probs = _as_probs(pred)
    target = np.asarray(target)
    _check_ce_shapes(probs, target)
    pt = _p_true(probs, target)
    return float(np.mean(-alpha * (1.0 - pt) ** gamma * np.log(pt)))


def focal_loss_grad(pred, target: np.ndarray, gamma: float = DEFAULT_GAMMA, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """d(focal_loss)/d(pred), same shape as pred."""
    probs = _as_probs(pred)
    target = np.asarray(target)
    _check_ce_shapes(probs, target)
    pt = _p_true(probs, target)
    if gamma == 0.0:
        per_pixel = -alpha / pt
    else:
        per_pixel = alpha * gamma * (1.0 - pt) ** (gamma - 1.0) * np.log(pt) - alpha * (1.0 - pt) ** gamma / pt
    grad = np.zeros_like(probs)
    np.put_along_axis(grad, target[None].astype(np.intp), per_pixel[None], axis=0)
    return grad / target.size


def _check_dice_shapes(pred: np.ndarray, target: np.ndarray, eps_smooth: float) -> None:
    if pred.shape != target.shape:
        raise ShapeMismatch(f"prediction {pred.shape} does not match target {target.shape}")
    if eps_smooth <= 0:
        raise ValueError(f"eps_smooth must be positive, got {eps_smooth}")


def soft_dice_loss(pred_fg, target: np.ndarray, eps_smooth: float = DEFAULT_EPS_SMOOTH) -> float:
    """1 - (2*sum(p*g) + eps) / (sum(p) + sum(g) + eps) over a soft mask."""
    p = _as_probs(pred_fg)
    g = np.asarray(target, dtype=np.float64)
    _check_dice_shapes(p, g, eps_smooth)
    num = 2.0 * float(np.sum(p * g)) + eps_smooth
    den = float(np.sum(p)) + float(np.sum(g)) + eps_smooth
    return 1.0 - num / den


def soft_dice_grad(pred_fg, target: np.ndarray, eps_smooth: float = DEFAULT_EPS_SMOOTH) -> np.ndarray:
    """d(soft_dice_loss)/d(pred_fg), same shape as pred_fg."""
    p = _as_probs(pred_fg)
    g = np.asarray(target, dtype=np.float64)
    _check_dice_shapes(p, g, eps_smooth)
    num = 2.0 * float(np.sum(p * g)) + eps_smooth
    den = float(np.sum(p)) + float(np.sum(g)) + eps_smooth
    return -(2.0 * g * den - num) / den**2


def combined_mask_loss(
    pred,
    target: np.ndarray,
    weights: LossWeights = DEFAULT_WEIGHTS,
    gamma: float = DEFAULT_GAMMA,
    alpha: float = DEFAULT_ALPHA,
    eps_smooth: float = DEFAULT_EPS_SMOOTH,
) -> float:
    """Weighted sum of the three component losses on one prediction.

    The dice component is the mean of soft_dice_loss over each class's
    one-vs-rest binary target.
    """
    probs = _as_probs(pred)
    target = np.asarray(target)
    _check_ce_shapes(probs, target)
    n_classes = probs.shape[0]
    dice = sum(
        soft_dice_loss(probs[c], (target == c).astype(np.float64), eps_smooth)
        for c in range(n_classes)
    ) / n_classes
    return (
        weights.ce * cross_entropy_loss(probs, target)
        + weights.focal * focal_loss(probs, target, gamma, alpha)
        + weights.dice * dice
    )


def combined_mask_loss_grad(
    pred,
    target: np.ndarray,
    weights: LossWeights = DEFAULT_WEIGHTS,
    gamma: float = DEFAULT_GAMMA,
    alpha: float = DEFAULT_ALPHA,
    eps_smooth: float = DEFAULT_EPS_SMOOTH,
) -> np.ndarray:
    """d(combined_mask_loss)/d(pred), same shape as pred."""
    probs = _as_probs(pred)
    target = np.asarray(target)
    _check_ce_shapes(probs, target)
    n_classes = probs.shape[0]
    grad = weights.ce * cross_entropy_grad(probs, target)
    grad += weights.focal * focal_loss_grad(probs, target, gamma, alpha)
    for c in range(n_classes):
        grad[c] += (weights.dice / n_classes) * soft_dice_grad(
            probs[c], (target == c).astype(np.float64), eps_smooth
        )
    return grad


def finite_difference_grad(fn, arr: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central-difference numeric gradient of a scalar function of an array."""
    work = np.array(arr, dtype=np.float64, copy=True)
    flat = work.reshape(-1)
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        fp = fn(work)
        flat[i] = orig - step
        fm = fn(work)
        flat[i] = orig
        grad[i] = (fp - fm) / (2.0 * step)
    return grad.reshape(work.shape)


def gradient_check(fn, grad_fn, arr: np.ndarray, step: float = 1e-5) -> float:
    """Relative error between the analytic and numeric gradients.

    Uses the vector-norm form |g_a - g_fd| / max(|g_a|, |g_fd|), which is
    what the < 1e-4 acceptance threshold refers to.
    """
    analytic = np.asarray(grad_fn(arr), dtype=np.float64)
    numeric = finite_difference_grad(fn, arr, step)
    denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-300)
    return float(np.linalg.norm(analytic - numeric) / denom)


class ScheduleKind(Enum):
    CONSTANT = "constant"
    COSINE = "cosine"


@dataclass(frozen=True)
class LrSchedule:
    """Per-epoch learning-rate schedule, a single anneal with no restarts."""

    kind: ScheduleKind
    eta_initial: float
    total_epochs: int
    eta_min: float = 0.0

    def __post_init__(self):
        if self.eta_initial <= 0:
            raise ValueError(f"eta_initial must be positive, got {self.eta_initial}")
        if not 0 <= self.eta_min <= self.eta_initial:
            raise ValueError(f"eta_min must lie in [0, eta_initial], got {self.eta_min}")
        if self.total_epochs < 1:
            raise ValueError(f"total_epochs must be >= 1, got {self.total_epochs}")


def lr_at_epoch(schedule: LrSchedule, t: int) -> float:
    """Learning rate at integer epoch t in [0, total_epochs].

    Constant gives eta_initial everywhere.  Cosine gives
    eta_min + (eta_initial - eta_min) * (1 + cos(pi * t / T)) / 2, with the
    endpoints returned exactly (no trigonometric rounding at t=0 or t=T).
    """
    if not 0 <= t <= schedule.total_epochs:
        raise OutOfRange(f"epoch {t} outside [0, {schedule.total_epochs}]")
    if schedule.kind is ScheduleKind.CONSTANT:
        return schedule.eta_initial
    if t == 0:
        return schedule.eta_initial
    if t == schedule.total_epochs:
        return schedule.eta_min
    cos_term = math.cos(math.pi * t / schedule.total_epochs)
    return schedule.eta_min + 0.5 * (schedule.eta_initial - schedule.eta_min) * (1.0 + cos_term)

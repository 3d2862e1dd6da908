"""Training losses. Each returns (scalar loss, gradient w.r.t. prediction).

Reductions run in float64 regardless of input dtype; the gradient comes
back in the prediction's dtype so it can flow straight into backward.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError

BCE_EPS = 1e-7


def mse(pred: np.ndarray, target: np.ndarray):
    """Mean squared error over all elements; grad = 2(p - t)/n."""
    if pred.shape != target.shape:
        raise ShapeError(f"mse: prediction {pred.shape} vs target {target.shape}")
    diff = pred - target
    n = diff.size
    loss = float(np.mean(np.square(diff, dtype=np.float64)))
    grad = (2.0 / n) * diff
    return loss, grad.astype(pred.dtype, copy=False)


def bce(pred: np.ndarray, target: np.ndarray):
    """Binary cross-entropy, mean over all elements.

    Predictions are clamped to [eps, 1-eps] before the logs; the gradient
    is zero where the clamp is active (the clamped value is constant there).
    """
    if pred.shape != target.shape:
        raise ShapeError(f"bce: prediction {pred.shape} vs target {target.shape}")
    p = np.clip(pred, BCE_EPS, 1.0 - BCE_EPS)
    t = target
    n = p.size
    p64 = p.astype(np.float64)
    loss = float(-np.mean(t * np.log(p64) + (1.0 - t) * np.log1p(-p64)))
    inside = (pred > BCE_EPS) & (pred < 1.0 - BCE_EPS)
    grad = np.where(inside, (p - t) / (p * (1.0 - p) * n), 0.0)
    return loss, grad.astype(pred.dtype, copy=False)


LOSSES = {"mse": mse, "bce": bce}


def loss_eval(pred: np.ndarray, target: np.ndarray, kind: str):
    """Dispatch by loss kind name ('mse' or 'bce')."""
    try:
        fn = LOSSES[kind]
    except KeyError:
        raise ValueError(f"unknown loss kind {kind!r}; expected one of {sorted(LOSSES)}")
    return fn(pred, target)

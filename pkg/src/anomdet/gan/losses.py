"""The two-player objectives.

With r = D(x) on real images and f = D(G(z)) on fakes,

    J_D          = -1/2 mean log r - 1/2 mean log(1 - f)
    J_G (nonsat) = -1/2 mean log f
    J_G (minimax)= -J_D, computed literally as the negation

Probabilities are clamped to [eps, 1-eps] before the logs; gradients are
zero where the clamp is active, matching the derivative of the clamped
expression actually evaluated.
"""

import numpy as np

GAN_EPS = 1e-7

__all__ = ["GAN_EPS", "gan_losses", "minimax_generator_loss"]


def _clamped_log_stats(p: np.ndarray):
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    clamped = np.clip(p, GAN_EPS, 1.0 - GAN_EPS)
    inside = (p > GAN_EPS) & (p < 1.0 - GAN_EPS)
    return p, clamped, inside


def gan_losses(d_real, d_fake):
    """Return (J_D, J_G_nonsaturating) for the given probability batches."""
    _, r, _ = _clamped_log_stats(d_real)
    _, f, _ = _clamped_log_stats(d_fake)
    j_d = -0.5 * float(np.mean(np.log(r))) - 0.5 * float(np.mean(np.log(1.0 - f)))
    j_g = -0.5 * float(np.mean(np.log(f)))
    return j_d, j_g


def minimax_generator_loss(d_real, d_fake) -> float:
    """The saturating objective, kept only as a reference diagnostic."""
    return -gan_losses(d_real, d_fake)[0]


def discriminator_loss_grads(d_real, d_fake):
    """J_D plus its gradients w.r.t. the raw probability vectors.

    Gradient shapes match the flattened inputs; callers reshape back.
    """
    _, r, in_r = _clamped_log_stats(d_real)
    _, f, in_f = _clamped_log_stats(d_fake)
    j_d = -0.5 * float(np.mean(np.log(r))) - 0.5 * float(np.mean(np.log(1.0 - f)))
    g_r = np.where(in_r, -1.0 / (2.0 * r.size * r), 0.0)
    g_f = np.where(in_f, 1.0 / (2.0 * f.size * (1.0 - f)), 0.0)
    return j_d, g_r, g_f


def generator_loss_grad(d_fake):
    """Non-saturating J_G plus its gradient w.r.t. the fake probabilities."""
    _, f, in_f = _clamped_log_stats(d_fake)
    j_g = -0.5 * float(np.mean(np.log(f)))
    g_f = np.where(in_f, -1.0 / (2.0 * f.size * f), 0.0)
    return j_g, g_f

"""Alternating GAN training: k discriminator updates, then one generator
update on the non-saturating objective. The minimax form is never used for
updates."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import DataError, ShapeError
from ..nn.optim import RmsProp
from ..rng import stream
from .losses import discriminator_loss_grads, generator_loss_grad
from .models import GanConfig, GanPair

__all__ = ["GanStepRecord", "GanHistory", "train_gan", "to_gan_range", "from_gan_range"]


def to_gan_range(x01: np.ndarray) -> np.ndarray:
    """Map [0,1] pixels to the tanh range [-1,1]."""
    return (np.asarray(x01, dtype=np.float32) * 2.0 - 1.0).astype(np.float32)


def from_gan_range(x11: np.ndarray) -> np.ndarray:
    """Map generator output back to [0,1], clipping float fuzz."""
    return np.clip((np.asarray(x11, dtype=np.float32) + 1.0) / 2.0, 0.0, 1.0)


@dataclass(frozen=True)
class GanStepRecord:
    step: int
    j_d: float
    j_g: float
    mean_d_real: float
    mean_d_fake: float


@dataclass
class GanHistory:
    records: list = field(default_factory=list)
    aborted_at: Optional[int] = None

    def save_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "j_d", "j_g", "mean_d_real", "mean_d_fake"])
            for r in self.records:
                w.writerow(
                    [r.step, f"{r.j_d:.6f}", f"{r.j_g:.6f}",
                     f"{r.mean_d_real:.6f}", f"{r.mean_d_fake:.6f}"]
                )


class _BatchCycler:
    """Walk a shuffled index pool in fixed-size slices, reshuffling when
    fewer than a full batch remains."""

    def __init__(self, n: int, batch: int, rng):
        self.n, self.batch, self.rng = n, batch, rng
        self.order = rng.permutation(n)
        self.pos = 0

    def take(self) -> np.ndarray:
        if self.pos + self.batch > self.n:
            self.order = self.rng.permutation(self.n)
            self.pos = 0
        out = self.order[self.pos : self.pos + self.batch]
        self.pos += self.batch
        return out


def _snapshot(model):
    return (
        {k: v.copy() for k, v in model.params.items()},
        {k: v.copy() for k, v in model.buffers.items()},
    )


def _restore(model, snap) -> None:
    params, buffers = snap
    for k, v in params.items():
        model.params[k][...] = v
    for k, v in buffers.items():
        model.buffers[k][...] = v


def train_gan(
    pair: GanPair,
    images: np.ndarray,
    steps: int,
    config: Optional[GanConfig] = None,
    *,
    snapshot_every: int = 100,
) -> GanPair:
    """Run `steps` alternating updates on `images` (already in [-1,1]).

    Each step takes `config.k_disc_steps` discriminator updates followed by
    one generator update; both players use rmsprop at their configured
    rates. History is appended per step. A non-finite loss aborts the run,
    restores the last snapshot (taken every `snapshot_every` steps), and
    stamps `history.aborted_at`.
    """
    cfg = config if config is not None else pair.config
    cfg.validate()
    x = np.asarray(images, dtype=np.float32)
    expect = (cfg.channels, cfg.image_size, cfg.image_size)
    if x.ndim != 4 or x.shape[1:] != expect:
        raise ShapeError(f"images must be (N,{expect[0]},{expect[1]},{expect[2]}), got {x.shape}")
    if x.shape[0] < cfg.batch_size:
        raise DataError(f"need at least one batch of {cfg.batch_size} images, got {x.shape[0]}")
    if float(x.min()) < -1.0 or float(x.max()) > 1.0:
        raise DataError("images must be rescaled to [-1,1] before GAN training")
    if steps == 0:
        return pair

    gen, disc = pair.generator, pair.discriminator
    z_rng = stream(cfg.seed, "gan-z")
    cycler = _BatchCycler(x.shape[0], cfg.batch_size, stream(cfg.seed, "gan-batch"))
    opt_g = RmsProp(lr=cfg.lr_generator)
    opt_d = RmsProp(lr=cfg.lr_discriminator)
    m = cfg.batch_size

    good = (_snapshot(gen), _snapshot(disc))
    start = len(pair.history.records)
    for s in range(start + 1, start + steps + 1):
        j_d = mean_real = 0.0
        for _ in range(cfg.k_disc_steps):
            real = x[cycler.take()]
            z = z_rng.standard_normal((m, cfg.z_dim)).astype(np.float32)
            fake = gen.forward(z, mode="train")
            caches_r: list = []
            caches_f: list = []
            d_real = disc.forward(real, mode="train", caches=caches_r)
            d_fake = disc.forward(fake, mode="train", caches=caches_f)
            j_d, g_r, g_f = discriminator_loss_grads(d_real, d_fake)
            _, grads_r = disc.backward(g_r.reshape(d_real.shape), caches_r)
            _, grads_f = disc.backward(g_f.reshape(d_fake.shape), caches_f)
            grads = {k: grads_r[k] + grads_f[k] for k in grads_r}
            opt_d.step(disc.params, grads)
            mean_real = float(d_real.mean())

        z = z_rng.standard_normal((m, cfg.z_dim)).astype(np.float32)
        caches_g: list = []
        caches_d: list = []
        fake = gen.forward(z, mode="train", caches=caches_g)
        d_out = disc.forward(fake, mode="train", caches=caches_d)
        j_g, g_fake = generator_loss_grad(d_out)
        d_in_grad, _ = disc.backward(g_fake.reshape(d_out.shape), caches_d)
        _, grads_g = gen.backward(d_in_grad, caches_g)
        opt_g.step(gen.params, grads_g)

        if not (np.isfinite(j_d) and np.isfinite(j_g)):
            _restore(gen, good[0])
            _restore(disc, good[1])
            pair.history.aborted_at = s
            break

        pair.history.records.append(
            GanStepRecord(s, j_d, j_g, mean_real, float(d_out.mean()))
        )
        if s % snapshot_every == 0:
            good = (_snapshot(gen), _snapshot(disc))
    return pair

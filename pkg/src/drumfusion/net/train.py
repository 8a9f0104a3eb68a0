"""Adam training over sequences sliced from multimodal records.

Records are cut into non-overlapping windows of ``sequence_length`` frames
(a trailing remainder shorter than one window is dropped).  Each window
keeps a stable index; its dropout mask for a given epoch comes from
``apply_modality_dropout(seed, p, epoch * n_windows + window_index)``, so
masks do not depend on the shuffle order.  Shuffling, masks, and parameter
updates are all seeded, which makes the whole run bitwise reproducible.

Images enter the network as intensity / 255, spectra as stored, joint
angles as q / pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..record import MultimodalRecord
from .model import (
    PARAM_ORDER,
    FusionModel,
    apply_modality_dropout,
    backward_from_cache,
    batch_loss,
    forward_batch,
)


@dataclass(frozen=True)
class Hyper:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    contractive_weight: float = 1e-4
    dropout_p: float = 0.3
    sequence_length: int = 50
    batch_size: int = 8
    epochs: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate < 0.0:
            raise ValueError("learning_rate must be >= 0")
        if not 0.0 < self.beta1 < 1.0 or not 0.0 < self.beta2 < 1.0:
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.eps <= 0.0:
            raise ValueError("eps must be > 0")
        if self.contractive_weight < 0.0:
            raise ValueError("contractive_weight must be >= 0")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError("dropout_p must be in [0, 1)")
        if self.sequence_length < 1 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("sequence_length and batch_size must be >= 1, epochs >= 0")


def slice_records(
    records: Sequence[MultimodalRecord], sequence_length: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack record frames into window arrays (n, t, ...).

    Returns (images uint8, specs float32, q float32); callers normalize.
    """
    if not records:
        raise ValueError("empty dataset")
    m0 = records[0].meta
    imgs = []
    specs = []
    qs = []
    for rec in records:
        m = rec.meta
        if (m.image_w, m.image_h, m.joint_count) != (m0.image_w, m0.image_h, m0.joint_count):
            raise ValueError(f"record shape mismatch: {m} vs {m0}")
        n_win = len(rec.frames) // sequence_length
        for w in range(n_win):
            window = rec.frames[w * sequence_length : (w + 1) * sequence_length]
            imgs.append(np.stack([f.image for f in window]))
            specs.append(np.stack([f.spec for f in window]))
            qs.append(np.stack([f.q for f in window]))
    if not imgs:
        raise ValueError(
            f"no record is at least {sequence_length} frames long"
        )
    return np.stack(imgs), np.stack(specs), np.stack(qs)


class _Adam:
    def __init__(self, model: FusionModel, hyper: Hyper):
        self.hyper = hyper
        self.t = 0
        self.m = {k: np.zeros_like(model.params[k]) for k in PARAM_ORDER}
        self.v = {k: np.zeros_like(model.params[k]) for k in PARAM_ORDER}

    def step(self, model: FusionModel, grads: dict[str, np.ndarray]) -> None:
        hp = self.hyper
        self.t += 1
        b1t = 1.0 - hp.beta1**self.t
        b2t = 1.0 - hp.beta2**self.t
        for k in PARAM_ORDER:
            g = grads[k]
            self.m[k] = hp.beta1 * self.m[k] + (1.0 - hp.beta1) * g
            self.v[k] = hp.beta2 * self.v[k] + (1.0 - hp.beta2) * g * g
            m_hat = self.m[k] / b1t
            v_hat = self.v[k] / b2t
            model.params[k] -= hp.learning_rate * m_hat / (np.sqrt(v_hat) + hp.eps)


def train(
    model: FusionModel,
    records: Sequence[MultimodalRecord],
    hyper: Hyper,
    *,
    on_epoch=None,
) -> tuple[FusionModel, list[float]]:
    """Train in place; returns (model, per-epoch mean training loss).

    on_epoch, when given, is called after every epoch as
    ``on_epoch(epoch_index, model, mean_loss)``; it sees the live model, so
    callers that want a snapshot must copy the parameters themselves.
    """
    images_u8, specs_f32, q_f32 = slice_records(records, hyper.sequence_length)
    n_win = images_u8.shape[0]
    opt = _Adam(model, hyper)
    history: list[float] = []
    for epoch in range(hyper.epochs):
        order = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence([hyper.seed, 31, epoch]))
        ).permutation(n_win)
        loss_sum = 0.0
        for lo in range(0, n_win, hyper.batch_size):
            idx = order[lo : lo + hyper.batch_size]
            imgs = images_u8[idx].astype(np.float64) / 255.0
            specs = specs_f32[idx].astype(np.float64)
            qn = q_f32[idx].astype(np.float64) / math.pi
            masks = [
                apply_modality_dropout(hyper.seed, hyper.dropout_p, epoch * n_win + int(i))
                for i in idx
            ]
            out, cache = forward_batch(model, imgs, specs, qn, masks)
            loss = batch_loss(out, cache, hyper.contractive_weight)
            grads = backward_from_cache(model, cache, hyper.contractive_weight)
            opt.step(model, grads)
            loss_sum += loss * len(idx)
        history.append(loss_sum / n_win)
        if on_epoch is not None:
            on_epoch(epoch, model, history[-1])
    return model, history

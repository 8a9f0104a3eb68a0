"""The fusion autoencoder: parameters, forward pass, exact BPTT backward.

Data flow per timestep (widths for the default architecture):

    image 1x64x64 --conv-conv-dense--> 32 \
    spectrum 128  --dense-dense------> 32  } concat -> fused 70
    joints q/pi   --identity---------> 6  /
    fused 70 --tanh contraction--> code 64 --LSTM--> h 64 --dense--> 70
    fused reconstruction 70 --mirrored decoders--> image, spectrum, joints

Dropped modalities are zeroed BEFORE their encoder; reconstruction targets
are always the full signals.  The training loss is the unweighted mean of
the three per-modality MSEs plus ``lam`` times the contraction layer's
Jacobian penalty sum_j (1 - h_j^2)^2 * ||w_j||^2, averaged over timesteps.

The backward pass is hand-derived reverse mode through every layer,
including both gradient paths of the penalty (the explicit weight-norm term
and the term through h's dependence on the weights).  Everything is float64
and bitwise deterministic.
"""

from __future__ import annotations

import io
import json
import struct
import zlib
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..errors import FormatError
from .arch import ArchSpec
from .layers import (
    conv2d,
    conv2d_backward,
    conv2d_transpose,
    conv2d_transpose_backward,
    dense,
    dense_backward,
    relu,
    relu_backward,
    sigmoid,
)

# Checkpoint tensor order.  Frozen: files store raw float64 in exactly this
# sequence, gate columns inside lstm_W/lstm_b are ordered i, f, g, o.
PARAM_ORDER = (
    "conv1_W",
    "conv1_b",
    "conv2_W",
    "conv2_b",
    "img_fc_W",
    "img_fc_b",
    "aud1_W",
    "aud1_b",
    "aud2_W",
    "aud2_b",
    "con_W",
    "con_b",
    "lstm_W",
    "lstm_b",
    "out_W",
    "out_b",
    "dimg_fc_W",
    "dimg_fc_b",
    "dconv2_W",
    "dconv2_b",
    "dconv1_W",
    "dconv1_b",
    "daud1_W",
    "daud1_b",
    "daud2_W",
    "daud2_b",
)

MODEL_MAGIC = b"MMF1"
MODEL_VERSION = 1


def param_shapes(arch: ArchSpec) -> dict[str, tuple[int, ...]]:
    c1, c2 = arch.conv_channels
    k = arch.kernel
    d = arch.fused_dim
    h = arch.code_dim
    shapes: dict[str, tuple[int, ...]] = {
        "conv1_W": (c1, 1, k, k),
        "conv1_b": (c1,),
        "conv2_W": (c2, c1, k, k),
        "conv2_b": (c2,),
        "img_fc_W": (arch.conv_flat, arch.img_feat),
        "img_fc_b": (arch.img_feat,),
        "aud1_W": (arch.spec_bins, arch.aud_hidden),
        "aud1_b": (arch.aud_hidden,),
        "aud2_W": (arch.aud_hidden, arch.aud_feat),
        "aud2_b": (arch.aud_feat,),
        "con_W": (d, h),
        "con_b": (h,),
        "lstm_W": (h + h, 4 * h),
        "lstm_b": (4 * h,),
        "out_W": (h, d),
        "out_b": (d,),
        "dimg_fc_W": (arch.img_feat, arch.conv_flat),
        "dimg_fc_b": (arch.conv_flat,),
        "dconv2_W": (c2, c1, k, k),
        "dconv2_b": (c1,),
        "dconv1_W": (c1, 1, k, k),
        "dconv1_b": (1,),
        "daud1_W": (arch.aud_feat, arch.aud_hidden),
        "daud1_b": (arch.aud_hidden,),
        "daud2_W": (arch.aud_hidden, arch.spec_bins),
        "daud2_b": (arch.spec_bins,),
    }
    return {name: shapes[name] for name in PARAM_ORDER}


@dataclass
class FusionModel:
    arch: ArchSpec
    params: dict[str, np.ndarray]

    @property
    def param_count(self) -> int:
        return sum(int(p.size) for p in self.params.values())


def _glorot_fans(name: str, shape: tuple[int, ...]) -> tuple[int, int]:
    if len(shape) == 4:
        f, c, k, _ = shape
        if name.startswith("dconv"):
            # transposed conv maps f channels onto c channels
            return f * k * k, c * k * k
        return c * k * k, f * k * k
    return shape[0], shape[1]


def init_params(arch: ArchSpec, seed: int) -> FusionModel:
    """Glorot-uniform weights, zero biases, LSTM forget-gate bias 1.0."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 41])))
    params: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(arch).items():
        if name.endswith("_b"):
            params[name] = np.zeros(shape, dtype=np.float64)
        else:
            fan_in, fan_out = _glorot_fans(name, shape)
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            params[name] = rng.uniform(-limit, limit, size=shape)
    h = arch.code_dim
    params["lstm_b"][h : 2 * h] = 1.0
    return FusionModel(arch=arch, params=params)


def model_digest(model: FusionModel) -> str:
    """CRC32 over arch JSON plus all parameter bytes, as 8 hex digits."""
    crc = zlib.crc32(model.arch.to_json().encode("utf-8"))
    for name in PARAM_ORDER:
        crc = zlib.crc32(np.ascontiguousarray(model.params[name], dtype="<f8").tobytes(), crc)
    return f"{crc & 0xFFFFFFFF:08x}"


class DropoutMask(NamedTuple):
    keep_image: bool
    keep_audio: bool
    keep_motion: bool

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=bool)


KEEP_ALL = DropoutMask(True, True, True)


def _mask_stream(seed: int, sequence_index: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([seed, 29, sequence_index]))
    )


def apply_modality_dropout(seed: int, p: float, sequence_index: int) -> DropoutMask:
    """Per-sequence mask: each modality dropped independently with
    probability p; an all-dropped draw is resampled.  Deterministic per
    (seed, sequence_index)."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    rng = _mask_stream(seed, sequence_index)
    while True:
        drop = rng.random(3) < p
        if not drop.all():
            return DropoutMask(not drop[0], not drop[1], not drop[2])


def fuse(img_feat: np.ndarray, aud_feat: np.ndarray, q_norm: np.ndarray) -> np.ndarray:
    """Concatenate (image, audio, motion) along the last axis."""
    return np.concatenate([img_feat, aud_feat, q_norm], axis=-1)


def split_fused(x: np.ndarray, arch: ArchSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    a = arch.img_feat
    b = a + arch.aud_feat
    return x[..., :a], x[..., a:b], x[..., b:]


def contractive_penalty(h: np.ndarray, w: np.ndarray) -> float:
    """sum_j (1 - h_j^2)^2 * ||w_j||^2 for h = tanh(x @ w + b), averaged
    over any leading axes of h.

    w has shape (fused_dim, code_dim), so unit j's incoming weights are
    column j; the value equals the squared Frobenius norm of dh/dx.
    """
    r = (w * w).sum(axis=0)
    g = (1.0 - h * h) ** 2
    return float((g @ r).mean())


def _lstm_step(
    params: dict[str, np.ndarray], xc: np.ndarray, h: np.ndarray, c: np.ndarray
) -> tuple[np.ndarray, np.ndarray, dict[str, np.ndarray]]:
    """One LSTM update on a (batch, code) input.  Gate order i, f, g, o."""
    n = h.shape[-1]
    z = np.concatenate([xc, h], axis=-1)
    gates = dense(z, params["lstm_W"], params["lstm_b"])
    i = sigmoid(gates[..., :n])
    f = sigmoid(gates[..., n : 2 * n])
    g = np.tanh(gates[..., 2 * n : 3 * n])
    o = sigmoid(gates[..., 3 * n :])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    cache = {"z": z, "i": i, "f": f, "g": g, "o": o, "c_prev": c, "tanh_c": tc}
    return h_new, c_new, cache


def core_step(
    model: FusionModel,
    x: np.ndarray,
    state: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[tuple[np.ndarray, np.ndarray], np.ndarray, np.ndarray]:
    """One recurrent step on a fused vector: contraction, LSTM, readout.

    Accepts a (fused_dim,) vector or a (batch, fused_dim) matrix; state is
    an (h, c) pair (zeros when None).  Returns (state', x_hat, hcon).
    """
    p = model.params
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if xb.shape[-1] != model.arch.fused_dim:
        raise ValueError(f"fused input width {xb.shape[-1]} != {model.arch.fused_dim}")
    if state is None:
        h = np.zeros((xb.shape[0], model.arch.code_dim))
        c = np.zeros((xb.shape[0], model.arch.code_dim))
    else:
        h, c = state
        h = h[None, :] if single else h
        c = c[None, :] if single else c
    hcon = np.tanh(dense(xb, p["con_W"], p["con_b"]))
    h_new, c_new, _ = _lstm_step(p, hcon, h, c)
    x_hat = dense(h_new, p["out_W"], p["out_b"])
    if single:
        return (h_new[0], c_new[0]), x_hat[0], hcon[0]
    return (h_new, c_new), x_hat, hcon


class BatchOut(NamedTuple):
    images: np.ndarray  # (batch, steps, s, s) reconstruction
    specs: np.ndarray  # (batch, steps, spec_bins)
    motion: np.ndarray  # (batch, steps, motion_dim), normalized units
    penalty: float


def _as_keep_array(mask, batch: int) -> np.ndarray:
    if isinstance(mask, DropoutMask):
        keep = np.tile(mask.as_array(), (batch, 1))
    else:
        keep = np.asarray([m.as_array() if isinstance(m, DropoutMask) else m for m in mask], dtype=bool)
    if keep.shape != (batch, 3):
        raise ValueError(f"need one (image, audio, motion) keep triple per sequence, got {keep.shape}")
    if not keep.any(axis=1).all():
        raise ValueError("a mask drops all three modalities")
    return keep


def forward_batch(
    model: FusionModel,
    images: np.ndarray,
    specs: np.ndarray,
    q_norm: np.ndarray,
    mask: DropoutMask | list[DropoutMask] | np.ndarray = KEEP_ALL,
) -> tuple[BatchOut, dict]:
    """Run whole sequences through the network.

    images (batch, steps, s, s) in [0, 1]; specs (batch, steps, spec_bins);
    q_norm (batch, steps, motion_dim) in [-1, 1].  mask holds per-sequence
    keep flags; dropped modalities enter their encoders as zeros while the
    returned cache keeps the full signals as reconstruction targets.
    """
    arch = model.arch
    p = model.params
    images = np.asarray(images, dtype=np.float64)
    specs = np.asarray(specs, dtype=np.float64)
    q_norm = np.asarray(q_norm, dtype=np.float64)
    bsz, steps = images.shape[:2]
    s = arch.image_size
    if images.shape != (bsz, steps, s, s):
        raise ValueError(f"image batch shape {images.shape} != {(bsz, steps, s, s)}")
    if specs.shape != (bsz, steps, arch.spec_bins):
        raise ValueError(f"spec batch shape {specs.shape} != {(bsz, steps, arch.spec_bins)}")
    if q_norm.shape != (bsz, steps, arch.motion_dim):
        raise ValueError(f"motion batch shape {q_norm.shape} != {(bsz, steps, arch.motion_dim)}")
    keep = _as_keep_array(mask, bsz)
    n = bsz * steps

    kf = keep.astype(np.float64)
    x_img = (images * kf[:, 0, None, None, None]).reshape(n, 1, s, s)
    x_spec = (specs * kf[:, 1, None, None]).reshape(n, arch.spec_bins)
    x_qn = (q_norm * kf[:, 2, None, None]).reshape(n, arch.motion_dim)

    # encoders, batched over every timestep at once
    pre_c1, x_img_cols = conv2d(x_img, p["conv1_W"], p["conv1_b"], arch.stride, return_cols=True)
    c1 = relu(pre_c1)
    pre_c2, c1_cols = conv2d(c1, p["conv2_W"], p["conv2_b"], arch.stride, return_cols=True)
    c2 = relu(pre_c2)
    flat = c2.reshape(n, arch.conv_flat)
    fi = dense(flat, p["img_fc_W"], p["img_fc_b"])
    a1 = relu(dense(x_spec, p["aud1_W"], p["aud1_b"]))
    fa = dense(a1, p["aud2_W"], p["aud2_b"])
    x_fused = fuse(fi, fa, x_qn)

    # recurrent core
    h_c = np.tanh(dense(x_fused, p["con_W"], p["con_b"]))
    hc_seq = h_c.reshape(bsz, steps, arch.code_dim)
    h = np.zeros((bsz, arch.code_dim))
    c = np.zeros((bsz, arch.code_dim))
    h_seq = np.empty((bsz, steps, arch.code_dim))
    lstm_caches: list[dict[str, np.ndarray]] = []
    for t in range(steps):
        h, c, cache_t = _lstm_step(p, hc_seq[:, t], h, c)
        h_seq[:, t] = h
        lstm_caches.append(cache_t)
    x_hat = dense(h_seq.reshape(n, arch.code_dim), p["out_W"], p["out_b"])

    # decoders
    xh_img, xh_aud, mot_hat = split_fused(x_hat, arch)
    d1 = relu(dense(xh_img, p["dimg_fc_W"], p["dimg_fc_b"]))
    d1_img = d1.reshape(n, arch.conv_channels[1], arch.conv2_size, arch.conv2_size)
    t2 = relu(
        conv2d_transpose(d1_img, p["dconv2_W"], p["dconv2_b"], arch.stride, arch.conv1_size)
    )
    img_hat = conv2d_transpose(t2, p["dconv1_W"], p["dconv1_b"], arch.stride, s)
    da1 = relu(dense(xh_aud, p["daud1_W"], p["daud1_b"]))
    spec_hat = dense(da1, p["daud2_W"], p["daud2_b"])

    penalty = contractive_penalty(h_c, p["con_W"])
    out = BatchOut(
        images=img_hat.reshape(bsz, steps, s, s),
        specs=spec_hat.reshape(bsz, steps, arch.spec_bins),
        motion=mot_hat.reshape(bsz, steps, arch.motion_dim),
        penalty=penalty,
    )
    cache = {
        "bsz": bsz,
        "steps": steps,
        "x_img": x_img,
        "x_img_cols": x_img_cols,
        "c1": c1,
        "c1_cols": c1_cols,
        "c2": c2,
        "flat": flat,
        "x_spec": x_spec,
        "a1": a1,
        "x_fused": x_fused,
        "h_c": h_c,
        "lstm": lstm_caches,
        "h_seq": h_seq,
        "x_hat": x_hat,
        "xh_img": xh_img,
        "xh_aud": xh_aud,
        "d1": d1,
        "d1_img": d1_img,
        "t2": t2,
        "da1": da1,
        "img_hat": img_hat,
        "spec_hat": spec_hat,
        "mot_hat": mot_hat,
        "t_img": images.reshape(n, 1, s, s),
        "t_spec": specs.reshape(n, arch.spec_bins),
        "t_qn": q_norm.reshape(n, arch.motion_dim),
    }
    return out, cache


class SequenceRecon(NamedTuple):
    images: np.ndarray  # (steps, s, s)
    specs: np.ndarray  # (steps, spec_bins)
    motion: np.ndarray  # (steps, motion_dim), same normalized units as input
    penalty: float


def forward_sequence(model: FusionModel, frames, mask: DropoutMask = KEEP_ALL) -> SequenceRecon:
    """Single-sequence forward pass.

    frames is a sequence of (image, spec, q_norm) triples (or three stacked
    arrays).  Reconstructions cover all three modalities regardless of the
    mask; only encoder inputs are blanked.
    """
    if isinstance(frames, tuple) and len(frames) == 3 and np.asarray(frames[0]).ndim == 3:
        images, specs, q_norm = (np.asarray(a, dtype=np.float64) for a in frames)
    else:
        if len(frames) == 0:
            raise ValueError("empty frame sequence")
        images = np.stack([np.asarray(f[0], dtype=np.float64) for f in frames])
        specs = np.stack([np.asarray(f[1], dtype=np.float64) for f in frames])
        q_norm = np.stack([np.asarray(f[2], dtype=np.float64) for f in frames])
    out, _ = forward_batch(model, images[None], specs[None], q_norm[None], mask)
    return SequenceRecon(out.images[0], out.specs[0], out.motion[0], out.penalty)


def loss_value(recons, targets, penalty: float, lam: float) -> float:
    """Mean of the three per-modality MSEs plus lam times the penalty."""
    total = 0.0
    for r, t in zip(recons, targets):
        r = np.asarray(r)
        t = np.asarray(t)
        if r.shape != t.shape:
            raise ValueError(f"reconstruction shape {r.shape} != target shape {t.shape}")
        total += float(np.mean((r - t) ** 2))
    return total / 3.0 + lam * float(penalty)


def batch_loss(out: BatchOut, cache: dict, lam: float) -> float:
    bsz, steps, s = cache["bsz"], cache["steps"], out.images.shape[-1]
    n = bsz * steps
    return loss_value(
        (cache["img_hat"].reshape(n, s, s), cache["spec_hat"], cache["mot_hat"]),
        (cache["t_img"].reshape(n, s, s), cache["t_spec"], cache["t_qn"]),
        out.penalty,
        lam,
    )


def backward_from_cache(model: FusionModel, cache: dict, lam: float) -> dict[str, np.ndarray]:
    """Exact gradients of batch_loss with respect to every parameter."""
    arch = model.arch
    p = model.params
    bsz, steps = cache["bsz"], cache["steps"]
    n = bsz * steps
    grads = {name: np.zeros_like(p[name]) for name in PARAM_ORDER}

    # residual scaling: each modality MSE is a per-element mean, weight 1/3
    d_img_hat = (2.0 / (3.0 * cache["img_hat"].size)) * (cache["img_hat"] - cache["t_img"])
    d_spec_hat = (2.0 / (3.0 * cache["spec_hat"].size)) * (cache["spec_hat"] - cache["t_spec"])
    d_mot_hat = (2.0 / (3.0 * cache["mot_hat"].size)) * (cache["mot_hat"] - cache["t_qn"])

    # image decoder
    d_t2, dw, db = conv2d_transpose_backward(d_img_hat, cache["t2"], p["dconv1_W"], arch.stride)
    grads["dconv1_W"] += dw
    grads["dconv1_b"] += db
    d_t2 = relu_backward(d_t2, cache["t2"])
    d_d1_img, dw, db = conv2d_transpose_backward(d_t2, cache["d1_img"], p["dconv2_W"], arch.stride)
    grads["dconv2_W"] += dw
    grads["dconv2_b"] += db
    d_d1 = relu_backward(d_d1_img.reshape(n, arch.conv_flat), cache["d1"])
    d_xh_img, dw, db = dense_backward(d_d1, cache["xh_img"], p["dimg_fc_W"])
    grads["dimg_fc_W"] += dw
    grads["dimg_fc_b"] += db

    # audio decoder
    d_da1, dw, db = dense_backward(d_spec_hat, cache["da1"], p["daud2_W"])
    grads["daud2_W"] += dw
    grads["daud2_b"] += db
    d_da1 = relu_backward(d_da1, cache["da1"])
    d_xh_aud, dw, db = dense_backward(d_da1, cache["xh_aud"], p["daud1_W"])
    grads["daud1_W"] += dw
    grads["daud1_b"] += db

    # fused reconstruction and readout
    d_x_hat = np.concatenate([d_xh_img, d_xh_aud, d_mot_hat], axis=-1)
    d_h_flat, dw, db = dense_backward(d_x_hat, cache["h_seq"].reshape(n, arch.code_dim), p["out_W"])
    grads["out_W"] += dw
    grads["out_b"] += db
    d_h_seq = d_h_flat.reshape(bsz, steps, arch.code_dim)

    # BPTT through the LSTM
    hdim = arch.code_dim
    d_hc_seq = np.empty((bsz, steps, hdim))
    d_h_next = np.zeros((bsz, hdim))
    d_c_next = np.zeros((bsz, hdim))
    for t in range(steps - 1, -1, -1):
        ct = cache["lstm"][t]
        d_h = d_h_seq[:, t] + d_h_next
        d_o = d_h * ct["tanh_c"]
        d_c = d_c_next + d_h * ct["o"] * (1.0 - ct["tanh_c"] ** 2)
        d_i = d_c * ct["g"]
        d_g = d_c * ct["i"]
        d_f = d_c * ct["c_prev"]
        d_c_next = d_c * ct["f"]
        d_gates = np.concatenate(
            [
                d_i * ct["i"] * (1.0 - ct["i"]),
                d_f * ct["f"] * (1.0 - ct["f"]),
                d_g * (1.0 - ct["g"] ** 2),
                d_o * ct["o"] * (1.0 - ct["o"]),
            ],
            axis=-1,
        )
        d_z, dw, db = dense_backward(d_gates, ct["z"], p["lstm_W"])
        grads["lstm_W"] += dw
        grads["lstm_b"] += db
        d_hc_seq[:, t] = d_z[:, :hdim]
        d_h_next = d_z[:, hdim:]

    # contraction layer; the penalty contributes through both h and con_W
    h_c = cache["h_c"]
    one_m_h2 = 1.0 - h_c**2
    r = (p["con_W"] * p["con_W"]).sum(axis=0)
    d_h_c = d_hc_seq.reshape(n, hdim)
    d_a_c = d_h_c * one_m_h2 + (lam / n) * (-4.0 * h_c * one_m_h2**2) * r
    d_x_fused, dw, db = dense_backward(d_a_c, cache["x_fused"], p["con_W"])
    grads["con_W"] += dw + (2.0 * lam / n) * p["con_W"] * (one_m_h2**2).sum(axis=0)
    grads["con_b"] += db

    d_fi, d_fa, _ = split_fused(d_x_fused, arch)

    # image encoder
    d_flat, dw, db = dense_backward(d_fi, cache["flat"], p["img_fc_W"])
    grads["img_fc_W"] += dw
    grads["img_fc_b"] += db
    d_c2 = relu_backward(
        d_flat.reshape(n, arch.conv_channels[1], arch.conv2_size, arch.conv2_size), cache["c2"]
    )
    d_c1, dw, db = conv2d_backward(
        d_c2, cache["c1"], p["conv2_W"], arch.stride, cols=cache["c1_cols"]
    )
    grads["conv2_W"] += dw
    grads["conv2_b"] += db
    d_c1 = relu_backward(d_c1, cache["c1"])
    _, dw, db = conv2d_backward(
        d_c1, cache["x_img"], p["conv1_W"], arch.stride, cols=cache["x_img_cols"], need_dx=False
    )
    grads["conv1_W"] += dw
    grads["conv1_b"] += db

    # audio encoder
    d_a1, dw, db = dense_backward(d_fa, cache["a1"], p["aud2_W"])
    grads["aud2_W"] += dw
    grads["aud2_b"] += db
    d_a1 = relu_backward(d_a1, cache["a1"])
    _, dw, db = dense_backward(d_a1, cache["x_spec"], p["aud1_W"])
    grads["aud1_W"] += dw
    grads["aud1_b"] += db
    return grads


def backward(
    model: FusionModel,
    images: np.ndarray,
    specs: np.ndarray,
    q_norm: np.ndarray,
    mask: DropoutMask | list[DropoutMask] | np.ndarray,
    lam: float,
) -> dict[str, np.ndarray]:
    """Forward plus reverse pass; returns the gradient for every tensor."""
    _, cache = forward_batch(model, images, specs, q_norm, mask)
    return backward_from_cache(model, cache, lam)


def save_model(model: FusionModel, path) -> int:
    """Checkpoint layout: magic, u16 version, u32-length arch JSON, float64
    tensors in PARAM_ORDER, u32 CRC32 of all preceding bytes."""
    buf = io.BytesIO()
    buf.write(MODEL_MAGIC)
    buf.write(struct.pack("<H", MODEL_VERSION))
    arch_json = model.arch.to_json().encode("utf-8")
    buf.write(struct.pack("<I", len(arch_json)))
    buf.write(arch_json)
    shapes = param_shapes(model.arch)
    for name in PARAM_ORDER:
        t = np.ascontiguousarray(model.params[name], dtype="<f8")
        if t.shape != shapes[name]:
            raise ValueError(f"{name} has shape {t.shape}, expected {shapes[name]}")
        buf.write(t.tobytes())
    payload = buf.getvalue()
    blob = payload + struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
    with open(path, "wb") as fh:
        fh.write(blob)
    return len(blob)


def load_model(path) -> FusionModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 10:
        raise FormatError("truncated", f"model file too short ({len(blob)} bytes)")
    if blob[:4] != MODEL_MAGIC:
        raise FormatError("bad-magic", f"bad model magic {blob[:4]!r}")
    (version,) = struct.unpack_from("<H", blob, 4)
    if version != MODEL_VERSION:
        raise FormatError("bad-version", f"unsupported model version {version}")
    (jlen,) = struct.unpack_from("<I", blob, 6)
    if len(blob) < 10 + jlen:
        raise FormatError("truncated", "model file ends inside the header")
    try:
        arch = ArchSpec.from_json(blob[10 : 10 + jlen].decode("utf-8"))
    except (ValueError, TypeError, UnicodeDecodeError) as exc:
        raise FormatError("bad-header", f"unreadable architecture header: {exc}") from None
    shapes = param_shapes(arch)
    body = sum(int(np.prod(s)) * 8 for s in shapes.values())
    expected = 10 + jlen + body + 4
    if len(blob) < expected:
        raise FormatError("truncated", f"model file is {len(blob)} bytes, expected {expected}")
    if len(blob) > expected:
        raise FormatError("shape-mismatch", f"model file is {len(blob)} bytes, expected {expected}")
    (crc_stored,) = struct.unpack_from("<I", blob, expected - 4)
    if zlib.crc32(blob[: expected - 4]) & 0xFFFFFFFF != crc_stored:
        raise FormatError("crc-mismatch", "model checksum mismatch")
    params: dict[str, np.ndarray] = {}
    off = 10 + jlen
    for name in PARAM_ORDER:
        shape = shapes[name]
        size = int(np.prod(shape)) * 8
        params[name] = (
            np.frombuffer(blob, dtype="<f8", count=size // 8, offset=off)
            .reshape(shape)
            .astype(np.float64)
        )
        off += size
    model = FusionModel(arch=arch, params=params)
    if not all(np.isfinite(t).all() for t in params.values()):
        raise FormatError("shape-mismatch", "model contains non-finite parameters")
    return model

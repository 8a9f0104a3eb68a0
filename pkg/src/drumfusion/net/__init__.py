"""Multimodal fusion autoencoder: encoders, contractive LSTM core, decoders.

Everything is plain numpy in double precision.  ``arch`` declares layer
sizes, ``layers`` holds the dense/conv building blocks with hand-written
backward passes, ``model`` assembles the full network (forward, BPTT
backward, checkpoint I/O), ``train`` runs Adam over sliced record sequences,
and ``gradcheck`` compares every analytic gradient against central finite
differences on the tiny preset.
"""

from .arch import ArchSpec, tiny_arch
from .gradcheck import gradcheck
from .model import (
    PARAM_ORDER,
    DropoutMask,
    FusionModel,
    apply_modality_dropout,
    backward,
    backward_from_cache,
    batch_loss,
    contractive_penalty,
    core_step,
    forward_batch,
    forward_sequence,
    fuse,
    init_params,
    load_model,
    loss_value,
    model_digest,
    param_shapes,
    save_model,
    split_fused,
)
from .train import Hyper, train

__all__ = [
    "ArchSpec",
    "DropoutMask",
    "FusionModel",
    "Hyper",
    "PARAM_ORDER",
    "apply_modality_dropout",
    "backward",
    "backward_from_cache",
    "batch_loss",
    "contractive_penalty",
    "core_step",
    "forward_batch",
    "forward_sequence",
    "fuse",
    "gradcheck",
    "init_params",
    "load_model",
    "loss_value",
    "model_digest",
    "param_shapes",
    "save_model",
    "split_fused",
    "tiny_arch",
    "train",
]

"""Layer-size declaration for the fusion autoencoder.

The defaults describe the full-size network: 64x64 grayscale frames through
two stride-2 valid convolutions into a 32-wide image feature, 128 log-power
spectrum bins through a two-layer dense stack into a 32-wide audio feature,
and six joint angles passed through raw.  The concatenated 70-vector is
squeezed by a tanh contraction layer into the 64-wide code that feeds the
LSTM.  Decoders mirror the encoders exactly (the transposed convolutions are
the adjoints of the forward convolutions), so reconstruction shapes always
equal input shapes.

A much smaller variant, ``tiny_arch``, exists so finite-difference gradient
checks over every parameter finish in seconds.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class ArchSpec:
    image_size: int = 64
    conv_channels: tuple[int, int] = (8, 16)
    kernel: int = 5
    stride: int = 2
    img_feat: int = 32
    spec_bins: int = 128
    aud_hidden: int = 64
    aud_feat: int = 32
    motion_dim: int = 6
    code_dim: int = 64  # contraction output width; also the LSTM hidden width

    def __post_init__(self) -> None:
        for name in (
            "image_size",
            "kernel",
            "stride",
            "img_feat",
            "spec_bins",
            "aud_hidden",
            "aud_feat",
            "motion_dim",
            "code_dim",
        ):
            v = getattr(self, name)
            if not isinstance(v, int) or v <= 0:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        c1, c2 = self.conv_channels
        if c1 <= 0 or c2 <= 0:
            raise ValueError(f"conv_channels must be positive, got {self.conv_channels!r}")
        # both conv layers must leave at least one output pixel
        if self.conv1_size < 1 or self.conv2_size < 1:
            raise ValueError(
                f"image_size {self.image_size} too small for two "
                f"{self.kernel}x{self.kernel} stride-{self.stride} convolutions"
            )

    @property
    def conv1_size(self) -> int:
        return (self.image_size - self.kernel) // self.stride + 1

    @property
    def conv2_size(self) -> int:
        return (self.conv1_size - self.kernel) // self.stride + 1

    @property
    def conv_flat(self) -> int:
        return self.conv_channels[1] * self.conv2_size * self.conv2_size

    @property
    def fused_dim(self) -> int:
        return self.img_feat + self.aud_feat + self.motion_dim

    def to_json(self) -> str:
        d = asdict(self)
        d["conv_channels"] = list(self.conv_channels)
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @staticmethod
    def from_json(text: str) -> "ArchSpec":
        d = json.loads(text)
        d["conv_channels"] = tuple(d["conv_channels"])
        return ArchSpec(**d)


def tiny_arch() -> ArchSpec:
    """Small preset (1410 parameters) for exhaustive gradient checks."""
    return ArchSpec(
        image_size=12,
        conv_channels=(2, 3),
        kernel=3,
        stride=2,
        img_feat=4,
        spec_bins=16,
        aud_hidden=8,
        aud_feat=4,
        motion_dim=6,
        code_dim=8,
    )

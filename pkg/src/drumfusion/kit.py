"""Drum pad and kit types shared by the planner, simulator and renderers."""

from __future__ import annotations

from dataclasses import dataclass

from .audio import TimbreSpec


@dataclass(frozen=True)
class DrumPad:
    drum_id: str
    x_center: float
    y_surface: float
    half_width: float
    timbre: TimbreSpec

    def __post_init__(self) -> None:
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")


@dataclass(frozen=True)
class DrumKit:
    pads: tuple[DrumPad, ...]

    def __post_init__(self) -> None:
        ids = [pad.drum_id for pad in self.pads]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate drum ids in kit: {ids}")

    @property
    def drum_ids(self) -> tuple[str, ...]:
        return tuple(pad.drum_id for pad in self.pads)

    def pad(self, drum_id: str) -> DrumPad:
        for pad in self.pads:
            if pad.drum_id == drum_id:
                return pad
        raise KeyError(drum_id)

    def index(self, drum_id: str) -> int:
        for i, pad in enumerate(self.pads):
            if pad.drum_id == drum_id:
                return i
        raise KeyError(drum_id)

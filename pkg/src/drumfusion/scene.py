"""Scene configuration: arms, kit, planner and clock parameters, viewport.

The default scene is the reference fixture for the whole pipeline.  Numbers
worth noting:

* bases (-0.35, 0.9) and (0.35, 0.9): every pad's contact and hover points
  sit inside both the wrist annulus of its preferred arm and, for the snare,
  of both arms; the far outer pads are out of reach for the wrong arm and
  the planner's candidate machinery knows it.
* hover_height 0.1: joint-space transits between hover poses sag about
  0.04 m below hover level mid-path; 0.1 keeps the effector at least
  0.019 m above every pad span it passes over (checked by test oracle).
* strike_depth 3e-5: the contact pose presses slightly through the pad
  surface so the down-stroke produces a genuine crossing; the crossing
  leads the beat by about 4 ms and stays below the surface for about 8 ms,
  longer than one 5 ms detection substep.
* tone frequency 100 Hz: a multiple of the frame rate, so the tonal drum's
  analysis frames decay exactly geometrically (see the audio module).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .arm import ArmConfig, make_arm
from .audio import AudioClock, TimbreSpec
from .errors import ReachError
from .kit import DrumKit, DrumPad
from .planner import reachable_arms
from .vision import Viewport


@dataclass(frozen=True)
class SceneConfig:
    arms: tuple[ArmConfig, ArmConfig]
    kit: DrumKit
    viewport: Viewport = Viewport()
    frame_rate: int = 25
    sample_rate: int = 8000
    substeps: int = 8
    rearm_eps: float = 0.01
    stroke_dur: float = 0.12
    hover_height: float = 0.1
    min_transit: float = 0.05
    tail_s: float = 0.5
    strike_depth: float = 3e-5

    @property
    def clock(self) -> AudioClock:
        return AudioClock(self.sample_rate, self.frame_rate)

    def candidates(self) -> dict[str, tuple[int, ...]]:
        """Drum id -> arm indices in preference order."""
        return {
            pad.drum_id: reachable_arms(pad, self.arms, self.hover_height, self.strike_depth)
            for pad in self.kit.pads
        }


def default_scene() -> SceneConfig:
    kit = DrumKit((
        DrumPad("HH", -0.45, 0.35, 0.12, TimbreSpec("hipass_noise", 0.03, 0.6)),
        DrumPad("SN", 0.0, 0.35, 0.12, TimbreSpec("noise", 0.08, 0.8)),
        DrumPad("TM", 0.45, 0.35, 0.12, TimbreSpec("tone", 0.25, 0.9, freq_hz=100.0)),
    ))
    arms = (make_arm((-0.35, 0.9), "left"), make_arm((0.35, 0.9), "right"))
    return SceneConfig(arms, kit)


def validate_scene(scene: SceneConfig) -> SceneConfig:
    """Check rate divisibility and that every pad is strikeable by its
    preferred arm; raises ValueError or ReachError."""
    if scene.sample_rate % scene.frame_rate != 0:
        raise ValueError(
            f"sample_rate {scene.sample_rate} not divisible by frame_rate {scene.frame_rate}"
        )
    for pad in scene.kit.pads:
        cands = reachable_arms(pad, scene.arms, scene.hover_height, scene.strike_depth)
        if not cands:
            raise ReachError(f"pad {pad.drum_id!r} unreachable by either arm", drum_id=pad.drum_id)
    return scene


def scene_to_json(scene: SceneConfig) -> str:
    doc = {
        "arms": [
            {
                "base": list(a.base),
                "link_lengths": list(a.link_lengths),
                "joint_limits": [list(lim) for lim in a.joint_limits],
                "handedness": a.handedness,
            }
            for a in scene.arms
        ],
        "kit": [
            {
                "drum_id": p.drum_id,
                "x_center": p.x_center,
                "y_surface": p.y_surface,
                "half_width": p.half_width,
                "timbre": {
                    "kind": p.timbre.kind,
                    "decay_tau_s": p.timbre.decay_tau_s,
                    "amplitude": p.timbre.amplitude,
                    "freq_hz": p.timbre.freq_hz,
                },
            }
            for p in scene.kit.pads
        ],
        "viewport": [scene.viewport.x_min, scene.viewport.x_max,
                     scene.viewport.y_min, scene.viewport.y_max],
        "frame_rate": scene.frame_rate,
        "sample_rate": scene.sample_rate,
        "substeps": scene.substeps,
        "rearm_eps": scene.rearm_eps,
        "stroke_dur": scene.stroke_dur,
        "hover_height": scene.hover_height,
        "min_transit": scene.min_transit,
        "tail_s": scene.tail_s,
        "strike_depth": scene.strike_depth,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def scene_from_json(text: str) -> SceneConfig:
    doc = json.loads(text)
    arms = tuple(
        ArmConfig(
            tuple(a["base"]),
            tuple(a["link_lengths"]),
            tuple(tuple(lim) for lim in a["joint_limits"]),
            a["handedness"],
        )
        for a in doc["arms"]
    )
    pads = tuple(
        DrumPad(
            p["drum_id"], p["x_center"], p["y_surface"], p["half_width"],
            TimbreSpec(
                p["timbre"]["kind"], p["timbre"]["decay_tau_s"],
                p["timbre"]["amplitude"], p["timbre"].get("freq_hz", 0.0),
            ),
        )
        for p in doc["kit"]
    )
    vx0, vx1, vy0, vy1 = doc["viewport"]
    return SceneConfig(
        arms, DrumKit(pads), Viewport(vx0, vx1, vy0, vy1),
        frame_rate=doc["frame_rate"], sample_rate=doc["sample_rate"],
        substeps=doc["substeps"], rearm_eps=doc["rearm_eps"],
        stroke_dur=doc["stroke_dur"], hover_height=doc["hover_height"],
        min_transit=doc["min_transit"], tail_s=doc["tail_s"],
        strike_depth=doc["strike_depth"],
    )

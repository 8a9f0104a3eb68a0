"""Time-stepped world: advance the trajectory, detect pad strikes with
sub-frame timing, and emit per-frame state.

Contact detection is an edge trigger with hysteresis: a pad fires for an
arm when that arm's effector crosses the pad surface downward inside the
pad's x-span while armed, then stays disarmed until the effector climbs
back above y_surface + rearm_eps.  Crossing position and time come from
linear interpolation between the bracketing substep samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .arm import ArmConfig, JointState, forward_kinematics
from .kit import DrumKit, DrumPad
from .planner import Trajectory, sample_trajectory


@dataclass(frozen=True)
class ContactEvent:
    time_s: float
    drum_id: str
    arm_id: int


@dataclass(frozen=True)
class WorldFrame:
    time_s: float
    states: tuple[JointState, ...]
    effectors: tuple[tuple[float, float], ...]
    contact_flags: tuple[bool, ...]


def detect_contact(
    prev: tuple[float, float],
    cur: tuple[float, float],
    prev_t: float,
    cur_t: float,
    pad: DrumPad,
    armed: bool,
    rearm_eps: float = 0.01,
) -> tuple[float | None, bool]:
    """One substep of the edge trigger for one (effector, pad) pair.

    Returns (contact_time or None, new_armed).
    """
    ys = pad.y_surface
    if armed and prev[1] > ys and cur[1] <= ys:
        f = (prev[1] - ys) / (prev[1] - cur[1])
        x = prev[0] + f * (cur[0] - prev[0])
        if abs(x - pad.x_center) <= pad.half_width:
            return prev_t + f * (cur_t - prev_t), False
    if not armed and cur[1] > ys + rearm_eps:
        armed = True
    return None, armed


def frame_count(duration_s: float, frame_rate: int) -> int:
    """Number of frames covering [0, duration]: indices 0..ceil(d * rate),
    with fp slack so an exact-integer product is not pushed up a frame."""
    return int(math.ceil(duration_s * frame_rate - 1e-9)) + 1


def simulate(
    traj: Trajectory,
    kit: DrumKit,
    arms: Sequence[ArmConfig],
    frame_rate: int = 25,
    substeps: int = 8,
    rearm_eps: float = 0.01,
) -> tuple[list[WorldFrame], list[ContactEvent]]:
    """Run the trajectory and return per-frame world state plus all contacts.

    Frame instants are t_k = k / frame_rate clamped to the trajectory
    duration; each inter-frame interval is scanned in `substeps` equal
    sub-intervals per arm and pad.  A frame's contact flags cover strikes
    in [t_k, t_{k+1}), matching the frame's audio sample span.
    """
    n_frames = frame_count(traj.duration_s, frame_rate)
    n_arms = len(arms)

    def effector(t: float) -> list[tuple[float, float]]:
        out = []
        for a in range(n_arms):
            st = sample_trajectory(traj, t, a)
            x, y, _ = forward_kinematics(st.q, arms[a])
            out.append((x, y))
        return out

    prev_pos = effector(0.0)
    prev_t = 0.0
    armed = [[pos[1] > pad.y_surface + rearm_eps for pad in kit.pads] for pos in prev_pos]
    events: list[ContactEvent] = []
    flags = np.zeros((n_frames, len(kit.pads)), dtype=bool)

    for k in range(1, n_frames):
        ta = min((k - 1) / frame_rate, traj.duration_s)
        tb = min(k / frame_rate, traj.duration_s)
        for s in range(1, substeps + 1):
            t = ta + (tb - ta) * s / substeps
            pos = effector(t)
            for a in range(n_arms):
                for p, pad in enumerate(kit.pads):
                    hit, armed[a][p] = detect_contact(
                        prev_pos[a], pos[a], prev_t, t, pad, armed[a][p], rearm_eps
                    )
                    if hit is not None:
                        events.append(ContactEvent(hit, pad.drum_id, a))
                        frame = min(int(math.floor(hit * frame_rate + 1e-9)), n_frames - 1)
                        flags[frame, p] = True
            prev_pos = pos
            prev_t = t

    events.sort(key=lambda e: (e.time_s, kit.index(e.drum_id), e.arm_id))
    frames = []
    for k in range(n_frames):
        t = min(k / frame_rate, traj.duration_s)
        states = tuple(sample_trajectory(traj, t, a) for a in range(n_arms))
        effs = tuple(
            forward_kinematics(st.q, arms[a])[:2] for a, st in enumerate(states)
        )
        frames.append(WorldFrame(t, states, effs, tuple(flags[k])))
    return frames, events

"""Strike primitives and tab-to-trajectory compilation.

A primitive is the three-waypoint gesture for one (drum, arm) pair: hover
pose, contact pose, and an end pose identical to the hover pose.  The
contact point is pressed strike_depth below the pad surface so the
simulator's strict surface-crossing test has a real crossing to find; the
crossing then leads the beat by a few milliseconds (T * cbrt(depth /
(10 * hover_height)) for the quintic profile), well inside the simulator's
substep resolution.

schedule() compiles a validated tab into one piecewise minimum-jerk
trajectory per arm: a transit filling each inter-stroke window, a
down-stroke ending exactly at the beat time, an up-stroke, and holds.
Segment boundaries share endpoint arrays, so position continuity is exact
and boundary velocities are exactly zero by construction.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .arm import ArmConfig, JointState, inverse_kinematics
from .errors import PlanError, ReachError
from .kit import DrumKit, DrumPad
from .tab import BeatEvent, DrumTab
from .timing import assign_events

TOOL_ANGLE = -math.pi / 2.0  # stick points straight down at contact


@dataclass(frozen=True)
class MotionPrimitive:
    drum_id: str
    arm_id: int
    q_start: np.ndarray
    q_contact: np.ndarray
    stroke_dur_s: float

    @property
    def q_end(self) -> np.ndarray:
        return self.q_start


class Segment(NamedTuple):
    t0: float
    t1: float
    q0: np.ndarray
    q1: np.ndarray
    arm_id: int


@dataclass(frozen=True)
class Trajectory:
    segments: tuple[Segment, ...]
    duration_s: float
    _starts: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        for seg in self.segments:
            arm = self._starts.setdefault(seg.arm_id, ([], []))
            arm[0].append(seg.t0)
            arm[1].append(seg)

    def arm_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self._starts))

    def segment_at(self, t: float, arm_id: int) -> Segment:
        if arm_id not in self._starts:
            raise ValueError(f"trajectory has no arm {arm_id}")
        starts, segs = self._starts[arm_id]
        i = bisect.bisect_right(starts, t) - 1
        if i < 0:
            raise ValueError(f"t={t} before trajectory start")
        return segs[i]


def min_jerk(q0: np.ndarray, q1: np.ndarray, T: float, t: float):
    """Quintic minimum-jerk interpolation between q0 and q1 over T seconds.

    Returns (q, qd, qdd) at time t.  The profile is
    q0 + (q1 - q0) * (10 s^3 - 15 s^4 + 6 s^5) with s = t / T, which has
    exactly zero velocity and acceleration at both ends.
    """
    if T <= 0:
        raise ValueError(f"T must be positive, got {T}")
    if t < 0 or t > T:
        raise ValueError(f"t={t} outside [0, {T}]")
    q0 = np.asarray(q0, dtype=float)
    dq = np.asarray(q1, dtype=float) - q0
    s = t / T
    p = s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
    pd = s * s * (30.0 + s * (-60.0 + 30.0 * s)) / T
    pdd = s * (60.0 + s * (-180.0 + 120.0 * s)) / (T * T)
    return q0 + dq * p, dq * pd, dq * pdd


def build_primitive(
    drum: DrumPad,
    arm: ArmConfig,
    hover_height: float,
    stroke_dur: float,
    strike_depth: float = 3e-5,
    arm_id: int = 0,
) -> MotionPrimitive:
    """IK the hover and contact waypoints for one drum/arm pair."""
    target_y = drum.y_surface - strike_depth
    try:
        q_contact = inverse_kinematics((drum.x_center, target_y), TOOL_ANGLE, arm)
        q_start = inverse_kinematics((drum.x_center, target_y + hover_height), TOOL_ANGLE, arm)
    except ReachError as e:
        raise ReachError(str(e), drum_id=drum.drum_id, arm_id=arm_id) from None
    q_contact.setflags(write=False)
    q_start.setflags(write=False)
    return MotionPrimitive(drum.drum_id, arm_id, q_start, q_contact, stroke_dur)


def reachable_arms(
    drum: DrumPad,
    arms: Sequence[ArmConfig],
    hover_height: float,
    strike_depth: float = 3e-5,
) -> tuple[int, ...]:
    """Arm indices able to strike the drum, preferred arm first.

    Preference is nearest base in x; ties go to the lower index.
    """
    order = sorted(range(len(arms)), key=lambda i: (abs(drum.x_center - arms[i].base[0]), i))
    out = []
    for i in order:
        try:
            build_primitive(drum, arms[i], hover_height, 0.1, strike_depth, i)
            out.append(i)
        except ReachError:
            continue
    return tuple(out)


def assign_arms(
    tab: DrumTab,
    kit: DrumKit,
    arms: Sequence[ArmConfig],
    stroke_dur: float,
    min_transit: float,
    hover_height: float = 0.1,
    strike_depth: float = 3e-5,
) -> list[tuple[BeatEvent, int]]:
    """Give every beat event an arm under the greedy availability policy."""
    candidates = {
        pad.drum_id: reachable_arms(pad, arms, hover_height, strike_depth) for pad in kit.pads
    }
    for drum_id, cands in candidates.items():
        if not cands and any(ev.drum_id == drum_id for ev in tab.events):
            raise PlanError(f"drum {drum_id!r} unreachable by any arm", drum_id=drum_id)
    assignment, failed, _ = assign_events(
        [(ev.time_s, ev.drum_id) for ev in tab.events], candidates, stroke_dur, min_transit
    )
    if failed is not None:
        t, drum = failed
        if t < stroke_dur + min_transit:
            raise PlanError(
                f"tab starts too early: beat on {drum} at {t:.3f} s needs at least "
                f"{stroke_dur + min_transit:.3f} s of lead time",
                time_s=t, drum_id=str(drum),
            )
        raise PlanError(
            f"infeasible tab: no arm available for {drum} at {t:.3f} s", time_s=t, drum_id=str(drum)
        )
    return list(zip(tab.events, assignment))


def rest_primitive(
    arm_id: int,
    arms: Sequence[ArmConfig],
    kit: DrumKit,
    hover_height: float,
    stroke_dur: float,
    strike_depth: float = 3e-5,
) -> MotionPrimitive:
    """Rest pose: hover over the reachable drum nearest the arm's base."""
    best = None
    for pad in kit.pads:
        if arm_id not in reachable_arms(pad, arms, hover_height, strike_depth):
            continue
        d = abs(pad.x_center - arms[arm_id].base[0])
        if best is None or d < best[0]:
            best = (d, pad)
    if best is None:
        raise PlanError(f"arm {arm_id} reaches no drum")
    return build_primitive(best[1], arms[arm_id], hover_height, stroke_dur, strike_depth, arm_id)


def schedule(
    tab: DrumTab,
    kit: DrumKit,
    arms: Sequence[ArmConfig],
    stroke_dur: float = 0.12,
    hover_height: float = 0.1,
    min_transit: float = 0.05,
    tail_s: float = 0.5,
    strike_depth: float = 3e-5,
    total_duration: float | None = None,
) -> Trajectory:
    """Compile a validated tab into a two-arm trajectory.

    Duration is last beat + stroke_dur + tail_s, extended (never shortened)
    to total_duration when given; both arms hold their final hover pose
    through the tail.
    """
    if not tab.events:
        raise PlanError("tab has no events")
    assigned = assign_arms(tab, kit, arms, stroke_dur, min_transit, hover_height, strike_depth)
    primitives: dict[tuple[str, int], MotionPrimitive] = {}
    for ev, arm_id in assigned:
        key = (ev.drum_id, arm_id)
        if key not in primitives:
            primitives[key] = build_primitive(
                kit.pad(ev.drum_id), arms[arm_id], hover_height, stroke_dur, strike_depth, arm_id
            )

    last_beat = max(ev.time_s for ev in tab.events)
    duration = last_beat + stroke_dur + tail_s
    if total_duration is not None:
        duration = max(duration, total_duration)

    segments: list[Segment] = []
    for arm_id in range(len(arms)):
        rest = rest_primitive(arm_id, arms, kit, hover_height, stroke_dur, strike_depth)
        cur_q = rest.q_start
        cur_t = 0.0
        for ev, a in assigned:
            if a != arm_id:
                continue
            prim = primitives[(ev.drum_id, arm_id)]
            t_down = ev.time_s - stroke_dur
            if t_down < cur_t - 1e-9:
                raise PlanError(f"overlapping strokes on arm {arm_id} at {ev.time_s:.3f} s")
            if t_down > cur_t + 1e-12:
                segments.append(Segment(cur_t, t_down, cur_q, prim.q_start, arm_id))
            segments.append(Segment(t_down, ev.time_s, prim.q_start, prim.q_contact, arm_id))
            segments.append(Segment(ev.time_s, ev.time_s + stroke_dur, prim.q_contact, prim.q_start, arm_id))
            cur_q = prim.q_start
            cur_t = ev.time_s + stroke_dur
        if duration > cur_t:
            segments.append(Segment(cur_t, duration, cur_q, cur_q, arm_id))
    segments.sort(key=lambda s: (s.t0, s.arm_id))
    return Trajectory(tuple(segments), duration)


def sample_trajectory(traj: Trajectory, t: float, arm_id: int):
    """JointState (q, qd, qdd) of one arm at time t.

    A time on a segment boundary samples the later segment; continuity
    makes the choice unobservable in q.
    """
    if t < 0 or t > traj.duration_s:
        raise ValueError(f"t={t} outside [0, {traj.duration_s}]")
    seg = traj.segment_at(min(t, np.nextafter(traj.duration_s, -np.inf)), arm_id)
    t_local = min(t, seg.t1) - seg.t0
    q, qd, qdd = min_jerk(seg.q0, seg.q1, seg.t1 - seg.t0, t_local)
    return JointState(q, qd, qdd)

"""Compile a tab into a two-arm trajectory and watch the strikes land.

Every strike becomes a three-waypoint gesture (hover, contact, back to
hover) interpolated with minimum-jerk quintics, so velocity and
acceleration are zero at every waypoint.  The simulator then scans the
effector paths against the drum pads and reports sub-frame contact times,
which should sit on the tab's beat grid to within a few milliseconds.
"""

import numpy as np

from drumfusion import default_scene, parse_tab, sample_trajectory, schedule, simulate, validate_tab

TAB = """\
tempo: 100
div: 2
offset: 0.5
HH|x-x-x-|
SN|--x--x|
TM|x----x|
"""

scene = default_scene()
tab = validate_tab(parse_tab(TAB), scene.kit)
traj = schedule(
    tab, scene.kit, scene.arms,
    stroke_dur=scene.stroke_dur, hover_height=scene.hover_height,
    min_transit=scene.min_transit, tail_s=scene.tail_s,
    strike_depth=scene.strike_depth,
)

print(f"{len(traj.segments)} segments over {traj.duration_s:.2f} s on arms {traj.arm_ids()}")
for arm_id in traj.arm_ids():
    n = sum(1 for s in traj.segments if s.arm_id == arm_id)
    print(f"  arm {arm_id}: {n} segments")

# velocities vanish at segment boundaries: sample just before and after one
boundary = traj.segments[3].t1
for t in (boundary - 1e-6, boundary + 1e-6):
    st = sample_trajectory(traj, t, traj.segments[3].arm_id)
    print(f"  |qd| at t={t:.6f}: {np.linalg.norm(st.qd):.2e}")

frames, contacts = simulate(traj, scene.kit, scene.arms, scene.frame_rate, scene.substeps)
print(f"\n{len(frames)} frames, {len(contacts)} contacts:")
beats = sorted((ev.drum_id, ev.time_s) for ev in tab.events)
hits = sorted((c.drum_id, c.time_s, c.arm_id) for c in contacts)
for (bd, bt), (cd, ct, arm) in zip(beats, hits):
    print(f"  beat {bt:5.2f} s {bd}  ->  contact {ct:7.4f} s {cd} by arm {arm}  (dt {1e3*(ct-bt):+.2f} ms)")

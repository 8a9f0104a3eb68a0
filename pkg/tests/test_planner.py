import math

import numpy as np
import pytest

from drumfusion import (
    PlanError,
    ReachError,
    assign_arms,
    build_primitive,
    default_scene,
    forward_kinematics,
    make_arm,
    min_jerk,
    parse_tab,
    reachable_arms,
    sample_trajectory,
    schedule,
)


def test_min_jerk_boundary_conditions():
    q0 = np.array([0.2, -1.0, 0.5])
    q1 = np.array([-0.3, 0.4, 1.1])
    T = 0.37
    for t, expect in ((0.0, q0), (T, q1)):
        q, qd, qdd = min_jerk(q0, q1, T, t)
        assert q == pytest.approx(expect, abs=1e-12)
        assert qd == pytest.approx(np.zeros(3), abs=1e-12)
        assert qdd == pytest.approx(np.zeros(3), abs=1e-12)


def test_min_jerk_midpoint_velocity():
    q0 = np.array([0.0])
    q1 = np.array([1.0])
    T = 0.4
    _, qd, _ = min_jerk(q0, q1, T, T / 2)
    # peak speed of the quintic: 15/8 * distance / time
    assert qd[0] == pytest.approx(1.875 / T)


def test_min_jerk_derivatives_match_finite_differences():
    q0 = np.array([0.1, -0.8])
    q1 = np.array([1.3, 0.9])
    T = 0.25
    h = 1e-6
    for t in (0.03, 0.11, 0.19, 0.23):
        q, qd, qdd = min_jerk(q0, q1, T, t)
        qp = min_jerk(q0, q1, T, t + h)[0]
        qm = min_jerk(q0, q1, T, t - h)[0]
        assert qd == pytest.approx((qp - qm) / (2 * h), abs=1e-5)
        assert qdd == pytest.approx((qp - 2 * q + qm) / (h * h), abs=1e-3)


def test_min_jerk_monotone_for_scalar_move():
    q0, q1 = np.array([0.0]), np.array([2.0])
    last = -1.0
    for t in np.linspace(0, 1, 50):
        q = min_jerk(q0, q1, 1.0, t)[0][0]
        assert q >= last - 1e-12
        last = q


def test_min_jerk_rejects_bad_times():
    q = np.zeros(1)
    with pytest.raises(ValueError):
        min_jerk(q, q, 0.0, 0.0)
    with pytest.raises(ValueError):
        min_jerk(q, q, 1.0, -0.1)
    with pytest.raises(ValueError):
        min_jerk(q, q, 1.0, 1.1)


def test_build_primitive_start_and_contact_poses():
    scene = default_scene()
    pad = scene.kit.pad("SN")
    prim = build_primitive(pad, scene.arms[0], hover_height=0.1, stroke_dur=0.12, arm_id=0)
    x, y, a = forward_kinematics(prim.q_contact, scene.arms[0])
    assert x == pytest.approx(pad.x_center, abs=1e-9)
    assert y == pytest.approx(pad.y_surface - 3e-5, abs=1e-9)
    assert a == pytest.approx(-math.pi / 2, abs=1e-9)
    xs, ys, _ = forward_kinematics(prim.q_start, scene.arms[0])
    assert xs == pytest.approx(pad.x_center, abs=1e-9)
    assert ys == pytest.approx(pad.y_surface - 3e-5 + 0.1, abs=1e-9)
    assert prim.q_end is prim.q_start
    assert prim.stroke_dur_s == 0.12


def test_build_primitive_tags_reach_error():
    far = make_arm((5.0, 0.9), "left")
    scene = default_scene()
    with pytest.raises(ReachError) as err:
        build_primitive(scene.kit.pad("SN"), far, 0.1, 0.12, arm_id=1)
    assert err.value.drum_id == "SN"
    assert err.value.arm_id == 1


def test_reachable_arms_default_scene():
    scene = default_scene()
    table = {
        d: reachable_arms(scene.kit.pad(d), scene.arms, 0.1) for d in scene.kit.drum_ids
    }
    assert table == {"HH": (0,), "SN": (0, 1), "TM": (1,)}


def test_assign_arms_prefers_nearer_arm_and_honors_cooldown():
    scene = default_scene()
    tab = parse_tab("offset: 0.5\nSN|x-x-|\n")
    assigned = assign_arms(tab, scene.kit, scene.arms, 0.12, 0.05)
    assert [a for _, a in assigned] == [0, 0]
    # two SN strikes one cell apart: arm 0 is still cooling down, arm 1 takes it
    fast = parse_tab("offset: 0.5\nSN|xx|\n")
    assigned = assign_arms(fast, scene.kit, scene.arms, 0.12, 0.05)
    assert [a for _, a in assigned] == [0, 1]


def test_assign_arms_rejects_unreachable_and_early_and_overfull():
    scene = default_scene()
    with pytest.raises(PlanError, match="starts too early"):
        assign_arms(parse_tab("SN|x|\n"), scene.kit, scene.arms, 0.12, 0.05)
    crowded = parse_tab("offset: 0.5\ndiv: 4\nTM|xx|\n")
    with pytest.raises(PlanError) as err:
        assign_arms(crowded, scene.kit, scene.arms, 0.12, 0.05)
    assert "TM" in str(err.value)


def test_schedule_segments_tile_each_arm_exactly():
    scene = default_scene()
    tab = parse_tab("offset: 0.5\nHH|x-x-|\nTM|-x-x|\n")
    traj = schedule(tab, scene.kit, scene.arms)
    assert traj.duration_s == pytest.approx(0.5 + 3 * 0.25 + 0.12 + 0.5)
    for arm_id in traj.arm_ids():
        segs = [s for s in traj.segments if s.arm_id == arm_id]
        assert segs[0].t0 == 0.0
        assert segs[-1].t1 == pytest.approx(traj.duration_s)
        for a, b in zip(segs, segs[1:]):
            assert a.t1 == b.t0
            assert a.q1 is b.q0  # shared endpoint array: continuity is exact


def test_schedule_hits_contact_pose_at_each_beat():
    scene = default_scene()
    tab = parse_tab("offset: 0.5\nHH|x-x-|\nTM|-x-x|\n")
    traj = schedule(tab, scene.kit, scene.arms)
    for ev, arm_id in (
        ((0.5, "HH"), 0), ((0.75, "TM"), 1), ((1.0, "HH"), 0), ((1.25, "TM"), 1)
    ):
        t, drum = ev
        state = sample_trajectory(traj, t, arm_id)
        pad = scene.kit.pad(drum)
        x, y, _ = forward_kinematics(state.q, scene.arms[arm_id])
        assert x == pytest.approx(pad.x_center, abs=1e-9)
        assert y == pytest.approx(pad.y_surface - 3e-5, abs=1e-9)
        assert state.qd == pytest.approx(np.zeros(3), abs=1e-12)


def test_schedule_starts_at_rest_pose_with_zero_velocity():
    scene = default_scene()
    tab = parse_tab("offset: 0.5\nSN|x|\n")
    traj = schedule(tab, scene.kit, scene.arms)
    for arm_id in (0, 1):
        state = sample_trajectory(traj, 0.0, arm_id)
        assert state.qd == pytest.approx(np.zeros(3), abs=1e-12)
        assert state.qdd == pytest.approx(np.zeros(3), abs=1e-12)
        x, y, _ = forward_kinematics(state.q, scene.arms[arm_id])
        # rest pose hovers over the nearest reachable pad
        near = "HH" if arm_id == 0 else "TM"
        pad = scene.kit.pad(near)
        assert x == pytest.approx(pad.x_center, abs=1e-9)
        assert y == pytest.approx(pad.y_surface - 3e-5 + 0.1, abs=1e-9)


def test_schedule_total_duration_extends_final_hold():
    scene = default_scene()
    tab = parse_tab("offset: 0.5\nSN|x|\n")
    traj = schedule(tab, scene.kit, scene.arms, total_duration=5.0)
    assert traj.duration_s == 5.0
    q_end = sample_trajectory(traj, 5.0, 0).q
    q_after_stroke = sample_trajectory(traj, 0.7, 0).q
    assert q_end == pytest.approx(q_after_stroke, abs=1e-12)


def test_schedule_rejects_empty_tab():
    from drumfusion import DrumTab

    scene = default_scene()
    with pytest.raises(PlanError):
        schedule(DrumTab(), scene.kit, scene.arms)


def test_sample_trajectory_range_checks():
    scene = default_scene()
    tab = parse_tab("offset: 0.5\nSN|x|\n")
    traj = schedule(tab, scene.kit, scene.arms)
    sample_trajectory(traj, traj.duration_s, 0)  # endpoint is valid
    with pytest.raises(ValueError):
        sample_trajectory(traj, -0.01, 0)
    with pytest.raises(ValueError):
        sample_trajectory(traj, traj.duration_s + 0.01, 0)
    with pytest.raises(ValueError):
        sample_trajectory(traj, 0.5, 2)

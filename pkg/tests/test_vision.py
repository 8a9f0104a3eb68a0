import numpy as np
import pytest

from drumfusion import (
    Viewport,
    default_scene,
    forward_kinematics,
    inverse_kinematics,
    joint_positions,
    render_frame,
    world_to_pixel,
)
from drumfusion.vision import ARM_INTENSITY, BACKGROUND, EFFECTOR_INTENSITY, draw_line


def test_world_to_pixel_corners_and_center():
    vp = Viewport()
    assert world_to_pixel((-1.0, 1.2), vp) == (0, 0)
    assert world_to_pixel((1.0, 0.0), vp) == (63, 63)
    assert world_to_pixel((1.0, 1.2), vp) == (63, 0)
    assert world_to_pixel((0.0, 0.6), vp) == (31, 31)


def test_world_to_pixel_monotone_axes():
    vp = Viewport()
    cols = [world_to_pixel((x, 0.6), vp)[0] for x in np.linspace(-1, 1, 40)]
    rows = [world_to_pixel((0.0, y), vp)[1] for y in np.linspace(0, 1.2, 40)]
    assert cols == sorted(cols)
    assert rows == sorted(rows, reverse=True)


def test_world_to_pixel_out_of_view_unclamped():
    col, row = world_to_pixel((-1.5, 1.5), Viewport())
    assert col < 0
    assert row < 0


def test_draw_line_endpoints_and_connectivity():
    frame = np.zeros((64, 64))
    draw_line(frame, (5, 10), (20, 3), 1.0)
    assert frame[10, 5] == 1.0
    assert frame[3, 20] == 1.0
    # 8-connected: one lit pixel per column across the span
    for c in range(5, 21):
        assert np.count_nonzero(frame[:, c]) >= 1


def test_draw_line_clips_out_of_bounds():
    frame = np.zeros((64, 64))
    draw_line(frame, (-10, -10), (70, 70), 1.0)  # diagonal through the image
    assert frame[30, 30] == 1.0
    draw_line(frame, (-10, 200), (-5, 300), 1.0)  # fully outside
    assert np.count_nonzero(frame) == np.count_nonzero(np.diag(frame))


def test_render_background_and_pad_stripes():
    scene = default_scene()
    # park both arms well above the pads so the pad row is unobstructed
    qs = []
    for arm in scene.arms:
        q = inverse_kinematics((arm.base[0], arm.base[1] - 0.25), -np.pi / 2, arm)
        qs.append(q)
    frame = render_frame(scene.kit, qs, scene.arms, scene.viewport)
    assert frame.shape == (64, 64)
    vals = set(np.round(np.unique(frame), 6))
    assert {BACKGROUND, 0.5, 0.6, 0.7, ARM_INTENSITY, EFFECTOR_INTENSITY} <= vals
    # pad i is painted at 0.5 + 0.1 * i between its x extent at the surface row
    for i, pad in enumerate(scene.kit.pads):
        c0, r0 = world_to_pixel((pad.x_center - pad.half_width, pad.y_surface), scene.viewport)
        c1, r1 = world_to_pixel((pad.x_center + pad.half_width, pad.y_surface - 0.03), scene.viewport)
        rect = frame[r0 : r1 + 1, c0 : c1 + 1]
        assert np.all(rect == pytest.approx(0.5 + 0.1 * i))


def test_render_effector_square_on_top():
    scene = default_scene()
    qs = []
    for arm in scene.arms:
        q = inverse_kinematics((arm.base[0], arm.base[1] - 0.25), -np.pi / 2, arm)
        qs.append(q)
    frame = render_frame(scene.kit, qs, scene.arms, scene.viewport)
    for q, arm in zip(qs, scene.arms):
        x, y, _ = forward_kinematics(q, arm)
        c, r = world_to_pixel((x, y), scene.viewport)
        assert np.all(frame[r - 1 : r + 2, c - 1 : c + 2] == EFFECTOR_INTENSITY)


def test_render_links_touch_base_and_effector():
    scene = default_scene()
    qs = []
    for arm in scene.arms:
        qs.append(inverse_kinematics((arm.base[0], arm.base[1] - 0.25), -np.pi / 2, arm))
    frame = render_frame(scene.kit, qs, scene.arms, scene.viewport)
    for q, arm in zip(qs, scene.arms):
        pts = joint_positions(q, arm)
        c, r = world_to_pixel(tuple(pts[0]), scene.viewport)
        assert frame[r, c] in (ARM_INTENSITY, EFFECTOR_INTENSITY)


def test_render_is_deterministic():
    scene = default_scene()
    qs = [np.array([-2.0, 1.0, -0.5]), np.array([-1.0, -1.0, 0.5])]
    a = render_frame(scene.kit, qs, scene.arms, scene.viewport)
    b = render_frame(scene.kit, qs, scene.arms, scene.viewport)
    assert np.array_equal(a, b)

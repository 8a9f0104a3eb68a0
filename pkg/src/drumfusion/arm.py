"""Planar 3-link arm: forward kinematics, Jacobian, closed-form inverse
kinematics.

The arm lives in a side-view x/y plane.  Joint angles are absolute-relative
in the usual chain sense: link i points along q1 + ... + qi.  The elbow
(q2) is restricted to one half-range per arm so the inverse kinematics has
a canonical branch: q2 >= 0 for a left arm, q2 <= 0 for a right arm, with
the opposite branch used as a fallback when joint limits reject the
preferred one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ReachError

# Slack for reach and joint-limit comparisons at the boundary of the
# feasible set, where acos/atan2 round at ulp scale.
_EPS = 1e-9


@dataclass(frozen=True)
class JointState:
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray


@dataclass(frozen=True)
class ArmConfig:
    base: tuple[float, float]
    link_lengths: tuple[float, float, float]
    joint_limits: tuple[tuple[float, float], tuple[float, float], tuple[float, float]]
    handedness: str  # left | right

    def __post_init__(self) -> None:
        if self.handedness not in ("left", "right"):
            raise ValueError(f"handedness must be left or right, got {self.handedness!r}")
        if any(l <= 0 for l in self.link_lengths):
            raise ValueError("link lengths must be positive")
        for lo, hi in self.joint_limits:
            if lo >= hi:
                raise ValueError(f"joint limit [{lo}, {hi}] is empty")


def make_arm(base: tuple[float, float], handedness: str,
             link_lengths: tuple[float, float, float] = (0.3, 0.25, 0.15)) -> ArmConfig:
    """ArmConfig with the default limit scheme: shoulder and wrist free in
    [-pi, pi], elbow confined to its branch half-range."""
    elbow = (0.0, math.pi) if handedness == "left" else (-math.pi, 0.0)
    return ArmConfig(base, link_lengths, ((-math.pi, math.pi), elbow, (-math.pi, math.pi)), handedness)


def forward_kinematics(q: np.ndarray, arm: ArmConfig) -> tuple[float, float, float]:
    """End-effector (x, y, tool_angle) for joint angles q."""
    l1, l2, l3 = arm.link_lengths
    a1 = q[0]
    a2 = a1 + q[1]
    a3 = a2 + q[2]
    x = arm.base[0] + l1 * math.cos(a1) + l2 * math.cos(a2) + l3 * math.cos(a3)
    y = arm.base[1] + l1 * math.sin(a1) + l2 * math.sin(a2) + l3 * math.sin(a3)
    return x, y, a3


def joint_positions(q: np.ndarray, arm: ArmConfig) -> np.ndarray:
    """Positions of base, elbow, wrist and effector, shape (4, 2).  Used by
    the renderer to draw the links."""
    l1, l2, l3 = arm.link_lengths
    a1 = q[0]
    a2 = a1 + q[1]
    a3 = a2 + q[2]
    pts = np.empty((4, 2))
    pts[0] = arm.base
    pts[1] = pts[0] + (l1 * math.cos(a1), l1 * math.sin(a1))
    pts[2] = pts[1] + (l2 * math.cos(a2), l2 * math.sin(a2))
    pts[3] = pts[2] + (l3 * math.cos(a3), l3 * math.sin(a3))
    return pts


def jacobian(q: np.ndarray, arm: ArmConfig) -> np.ndarray:
    """Analytic d(x, y)/dq, shape (2, 3)."""
    l1, l2, l3 = arm.link_lengths
    a1 = q[0]
    a2 = a1 + q[1]
    a3 = a2 + q[2]
    s = l1 * math.sin(a1), l2 * math.sin(a2), l3 * math.sin(a3)
    c = l1 * math.cos(a1), l2 * math.cos(a2), l3 * math.cos(a3)
    return np.array([
        [-(s[0] + s[1] + s[2]), -(s[1] + s[2]), -s[2]],
        [c[0] + c[1] + c[2], c[1] + c[2], c[2]],
    ])


def _wrap(angle: float) -> float:
    """Map to (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def _within_limits(q: tuple[float, float, float], arm: ArmConfig) -> bool:
    return all(lo - _EPS <= qi <= hi + _EPS for qi, (lo, hi) in zip(q, arm.joint_limits))


def inverse_kinematics(target: tuple[float, float], tool_angle: float, arm: ArmConfig) -> np.ndarray:
    """Joint angles reaching target with the last link at tool_angle.

    The wrist point is target minus l3 along tool_angle; the remaining
    2-link problem is solved in closed form on the arm's preferred elbow
    branch, falling back to the other branch if joint limits reject it.
    Raises ReachError when the wrist is outside the annulus [|l1 - l2|,
    l1 + l2] or neither branch fits the limits.
    """
    l1, l2, l3 = arm.link_lengths
    wx = target[0] - l3 * math.cos(tool_angle)
    wy = target[1] - l3 * math.sin(tool_angle)
    dx = wx - arm.base[0]
    dy = wy - arm.base[1]
    r2 = dx * dx + dy * dy
    r = math.sqrt(r2)
    if r > l1 + l2 + _EPS or r < abs(l1 - l2) - _EPS:
        raise ReachError(
            f"wrist point ({wx:.4f}, {wy:.4f}) at distance {r:.4f} outside reach "
            f"[{abs(l1 - l2):.4f}, {l1 + l2:.4f}]"
        )
    c2 = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
    c2 = min(1.0, max(-1.0, c2))
    elbow = math.acos(c2)
    first = elbow if arm.handedness == "left" else -elbow
    for q2 in (first, -first):
        q1 = math.atan2(dy, dx) - math.atan2(l2 * math.sin(q2), l1 + l2 * math.cos(q2))
        q1 = _wrap(q1)
        q3 = _wrap(tool_angle - q1 - q2)
        q = (q1, q2, q3)
        if _within_limits(q, arm):
            return np.array(q)
    raise ReachError(
        f"no elbow branch satisfies joint limits for target ({target[0]:.4f}, {target[1]:.4f})"
    )

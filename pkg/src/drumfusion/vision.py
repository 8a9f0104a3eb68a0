"""Side-view rasterizer producing the 64 x 64 grayscale camera stream.

Intensity coding, painted in this order so later layers win: background
0.05, pad rectangles 0.5 + 0.1 * pad_index, arm links 0.9, end-effector
3 x 3 squares 1.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .arm import ArmConfig, joint_positions
from .kit import DrumKit

IMAGE_SIZE = 64
BACKGROUND = 0.05
ARM_INTENSITY = 0.9
EFFECTOR_INTENSITY = 1.0
PAD_THICKNESS_M = 0.03


@dataclass(frozen=True)
class Viewport:
    x_min: float = -1.0
    x_max: float = 1.0
    y_min: float = 0.0
    y_max: float = 1.2


def world_to_pixel(p: tuple[float, float], viewport: Viewport = Viewport(),
                   size: int = IMAGE_SIZE) -> tuple[int, int]:
    """(col, row) of a world point; x maps left-to-right, y top-down.

    Rounding is half-down (ceil(v - 0.5)) so the exact viewport center
    lands on the lower pixel index and corners map to 0 and size - 1.
    Results may lie outside the image; raster ops clip.
    """
    col_f = (p[0] - viewport.x_min) / (viewport.x_max - viewport.x_min) * (size - 1)
    row_f = (viewport.y_max - p[1]) / (viewport.y_max - viewport.y_min) * (size - 1)
    return math.ceil(col_f - 0.5), math.ceil(row_f - 0.5)


def draw_line(frame: np.ndarray, p0: tuple[int, int], p1: tuple[int, int],
              intensity: float) -> np.ndarray:
    """Bresenham line from pixel p0 to p1 (col, row); out-of-bounds pixels
    are skipped."""
    h, w = frame.shape
    x0, y0 = p0
    x1, y1 = p1
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        if 0 <= x0 < w and 0 <= y0 < h:
            frame[y0, x0] = intensity
        if x0 == x1 and y0 == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy
    return frame


def _fill_rect(frame: np.ndarray, c0: int, r0: int, c1: int, r1: int, intensity: float) -> None:
    h, w = frame.shape
    c_lo, c_hi = max(0, min(c0, c1)), min(w - 1, max(c0, c1))
    r_lo, r_hi = max(0, min(r0, r1)), min(h - 1, max(r0, r1))
    if c_lo <= c_hi and r_lo <= r_hi:
        frame[r_lo : r_hi + 1, c_lo : c_hi + 1] = intensity


def render_frame(
    kit: DrumKit,
    joint_angles: Sequence[np.ndarray],
    arms: Sequence[ArmConfig],
    viewport: Viewport = Viewport(),
    size: int = IMAGE_SIZE,
) -> np.ndarray:
    """Rasterize pads, arms and effectors into a size x size float image."""
    frame = np.full((size, size), BACKGROUND)
    for i, pad in enumerate(kit.pads):
        c0, r0 = world_to_pixel((pad.x_center - pad.half_width, pad.y_surface), viewport, size)
        c1, r1 = world_to_pixel((pad.x_center + pad.half_width, pad.y_surface - PAD_THICKNESS_M),
                                viewport, size)
        _fill_rect(frame, c0, r0, c1, r1, 0.5 + 0.1 * i)
    pixel_chains = []
    for q, arm in zip(joint_angles, arms):
        pts = joint_positions(q, arm)
        pixels = [world_to_pixel((x, y), viewport, size) for x, y in pts]
        pixel_chains.append(pixels)
        for a, b in zip(pixels, pixels[1:]):
            draw_line(frame, a, b, ARM_INTENSITY)
    for pixels in pixel_chains:
        c, r = pixels[-1]
        _fill_rect(frame, c - 1, r - 1, c + 1, r + 1, EFFECTOR_INTENSITY)
    return frame

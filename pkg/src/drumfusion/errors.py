"""Exception types shared across the package.

Each parse or decode failure carries a machine-readable ``kind`` string so
callers (and the CLI exit-code mapping) can dispatch without string-matching
human-readable messages.
"""

from __future__ import annotations


class DrumFusionError(Exception):
    """Base class for all package-specific errors."""


class TabError(DrumFusionError):
    """Tablature parse or validation failure.

    kind is one of: bad-header, bad-cell, bad-line, empty, unknown-drum,
    duplicate-event. line and col are 1-based; (0, 0) means whole-input.
    """

    def __init__(self, kind: str, line: int, col: int, message: str):
        super().__init__(f"{message} (line {line}, col {col})" if line else message)
        self.kind = kind
        self.line = line
        self.col = col


class ReachError(DrumFusionError):
    """Inverse kinematics target outside the arm's reachable set, or no
    elbow branch satisfies the joint limits."""

    def __init__(self, message: str, drum_id: str | None = None, arm_id: str | None = None):
        tag = ""
        if drum_id is not None or arm_id is not None:
            tag = f" [drum={drum_id}, arm={arm_id}]"
        super().__init__(message + tag)
        self.drum_id = drum_id
        self.arm_id = arm_id


class PlanError(DrumFusionError):
    """Tab cannot be realized by the two arms under the timing policy."""

    def __init__(self, message: str, time_s: float | None = None, drum_id: str | None = None):
        super().__init__(message)
        self.time_s = time_s
        self.drum_id = drum_id


class FormatError(DrumFusionError):
    """Binary container decode failure.

    kind is one of: bad-magic, bad-version, crc-mismatch, truncated,
    shape-mismatch, bad-header.
    """

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind

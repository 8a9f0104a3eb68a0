"""Grid drum tablature: parsing, validation, serialization, random generation.

Format by example::

    tempo: 120
    div: 2
    offset: 0.5
    # comment
    HH|x-x-|x-x-|
    SN|--x-|--x-|

Header lines set tempo (beats per minute), div (grid cells per beat) and
offset (seconds added to every cell time); defaults are 120, 2 and 0.  A
track line is a drum name followed by cells, where ``x`` strikes and ``-``
rests; ``|`` is a visual separator with no timing meaning.  Several track
lines for one drum concatenate left to right.  Cell k of a drum strikes at
offset + k * 60 / (tempo * div).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .errors import TabError
from .timing import assign_events

if TYPE_CHECKING:
    from .kit import DrumKit

_HEADER_RE = re.compile(r"^(tempo|div|offset)\s*:\s*(.*)$")


@dataclass(frozen=True)
class BeatEvent:
    time_s: float
    drum_id: str


@dataclass(frozen=True)
class DrumTab:
    tempo_bpm: float = 120.0
    div: int = 2
    offset_s: float = 0.0
    events: tuple[BeatEvent, ...] = ()

    @property
    def cell_s(self) -> float:
        return 60.0 / (self.tempo_bpm * self.div)


def parse_tab(text: str) -> DrumTab:
    """Parse tablature text into a DrumTab.

    Raises TabError (kinds bad-header, bad-cell, bad-line, empty) with a
    1-based line/column position.
    """
    tempo = 120.0
    div = 2
    offset = 0.0
    cells: dict[str, list[bool]] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line or line.lstrip().startswith("#"):
            continue
        header = _HEADER_RE.match(line)
        if header:
            name, value = header.group(1), header.group(2).strip()
            col = header.start(2) + 1
            if name == "tempo":
                tempo = _parse_positive_float(value, "tempo", lineno, col)
            elif name == "div":
                try:
                    div = int(value)
                except ValueError:
                    raise TabError("bad-header", lineno, col, f"div must be an integer, got {value!r}") from None
                if div <= 0:
                    raise TabError("bad-header", lineno, col, f"div must be positive, got {div}")
            else:
                offset = _parse_positive_float(value, "offset", lineno, col, allow_zero=True)
            continue
        if "|" not in line:
            raise TabError("bad-line", lineno, 1, f"unrecognized line {line!r}")
        name_part, rest = line.split("|", 1)
        drum = name_part.strip()
        if not drum:
            raise TabError("bad-line", lineno, 1, "track line has no drum name")
        track = cells.setdefault(drum, [])
        for i, ch in enumerate(rest):
            if ch == "|":
                continue
            if ch == "x":
                track.append(True)
            elif ch == "-":
                track.append(False)
            else:
                col = len(name_part) + 1 + i + 1
                raise TabError("bad-cell", lineno, col, f"unknown cell character {ch!r}")

    cell_s = 60.0 / (tempo * div)
    events = [
        BeatEvent(offset + k * cell_s, drum)
        for drum, track in cells.items()
        for k, struck in enumerate(track)
        if struck
    ]
    if not events:
        raise TabError("empty", 0, 0, "tab has no strikes")
    events.sort(key=lambda e: (e.time_s, e.drum_id))
    return DrumTab(tempo, div, offset, tuple(events))


def _parse_positive_float(value: str, name: str, line: int, col: int, allow_zero: bool = False) -> float:
    try:
        x = float(value)
    except ValueError:
        raise TabError("bad-header", line, col, f"{name} must be a number, got {value!r}") from None
    if not math.isfinite(x) or x < 0 or (x == 0 and not allow_zero):
        raise TabError("bad-header", line, col, f"{name} out of range: {value}")
    return x


def serialize_tab(tab: DrumTab) -> str:
    """Canonical text form: headers, then one track line per drum (sorted by
    name), cells grouped div per bar.  parse_tab(serialize_tab(t)) reproduces
    t exactly for any tab whose events lie on its own grid."""
    cell_s = tab.cell_s
    indices: dict[str, list[int]] = {}
    max_k = -1
    for ev in tab.events:
        k = round((ev.time_s - tab.offset_s) / cell_s)
        if abs(tab.offset_s + k * cell_s - ev.time_s) > 1e-9 * max(1.0, abs(ev.time_s)) or k < 0:
            raise ValueError(f"event at {ev.time_s} s is off the tab grid")
        indices.setdefault(ev.drum_id, []).append(k)
        max_k = max(max_k, k)
    n_cells = max_k + 1
    lines = [f"tempo: {tab.tempo_bpm:g}", f"div: {tab.div}", f"offset: {tab.offset_s:g}"]
    for drum in sorted(indices):
        struck = set(indices[drum])
        row = "".join("x" if k in struck else "-" for k in range(n_cells))
        bars = "|".join(row[i : i + tab.div] for i in range(0, n_cells, tab.div))
        lines.append(f"{drum}|{bars}|")
    return "\n".join(lines) + "\n"


def validate_tab(tab: DrumTab, kit: "DrumKit") -> DrumTab:
    """Check drum names against the kit and the (time, drum) uniqueness
    invariant; returns the tab with events stable-sorted by (time, drum)."""
    names = {pad.drum_id for pad in kit.pads}
    for ev in tab.events:
        if ev.drum_id not in names:
            raise TabError("unknown-drum", 0, 0, f"unknown drum {ev.drum_id!r}")
    events = sorted(tab.events, key=lambda e: (e.time_s, e.drum_id))
    for a, b in zip(events, events[1:]):
        if a.time_s == b.time_s and a.drum_id == b.drum_id:
            raise TabError("duplicate-event", 0, 0, f"duplicate strike of {a.drum_id} at {a.time_s} s")
    return DrumTab(tab.tempo_bpm, tab.div, tab.offset_s, tuple(events))


def gen_random_tab(
    seed: int,
    duration_s: float,
    tempo_bpm: float,
    div: int,
    density: float,
    kit: "DrumKit",
    *,
    offset_s: float = 0.5,
    candidates: Mapping[str, Sequence[int]] | None = None,
    stroke_dur: float = 0.12,
    min_transit: float = 0.05,
    max_column_tries: int = 100,
) -> DrumTab:
    """Draw a random tab over floor(duration_s / cell) grid cells.

    Each (cell, drum) pair strikes independently with probability density.
    Columns are accepted only if the greedy arm-availability policy (the one
    the planner uses) can serve them given everything accepted so far;
    infeasible columns are redrawn, and forced empty after max_column_tries.
    candidates maps drum to arm indices in preference order (default: both
    arms for every drum).  Deterministic per seed.
    """
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density must be in [0, 1], got {density}")
    if duration_s <= 0:
        raise ValueError(f"duration_s must be positive, got {duration_s}")
    drums = [pad.drum_id for pad in kit.pads]
    if candidates is None:
        candidates = {d: (0, 1) for d in drums}
    cell_s = 60.0 / (tempo_bpm * div)
    n_cells = int(math.floor(duration_s / cell_s + 1e-9))
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed)])))

    events: list[BeatEvent] = []
    busy: tuple[float, ...] = (0.0, 0.0)
    for k in range(n_cells):
        t = offset_s + k * cell_s
        for _ in range(max_column_tries):
            struck = sorted(d for d in drums if rng.random() < density)
            column = [(t, d) for d in struck]
            _, failed, new_busy = assign_events(column, candidates, stroke_dur, min_transit, busy)
            if failed is None:
                break
        else:
            struck, new_busy = [], busy
        busy = new_busy
        events.extend(BeatEvent(t, d) for d in struck)
    return DrumTab(tempo_bpm, div, offset_s, tuple(events))

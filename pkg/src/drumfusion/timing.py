"""Greedy arm-availability policy shared by tab generation and planning.

An arm that strikes at time t is busy on [t - stroke_dur, t + stroke_dur]
(down-stroke then up-stroke) and additionally needs min_transit seconds of
travel before its next down-stroke begins.  The policy walks events in time
order and gives each one the first available arm from its candidate list.

The random tab generator enforces feasibility with the same function the
planner uses for assignment, so a generated tab can never be rejected later.
"""

from __future__ import annotations

from typing import Hashable, Iterable, Mapping, Sequence

# Grid times are sums of fp products; allow harmless rounding slack when
# comparing against availability windows.
_TIME_EPS = 1e-12


def assign_events(
    events: Iterable[tuple[float, Hashable]],
    candidates: Mapping[Hashable, Sequence[int]],
    stroke_dur: float,
    min_transit: float,
    busy_end: Sequence[float] = (0.0, 0.0),
) -> tuple[list[int] | None, tuple[float, Hashable] | None, tuple[float, ...]]:
    """Assign each (time, key) event to an arm index, greedily.

    events must be sorted ascending by time (ties in any stable order).
    candidates maps an event key to arm indices in preference order.
    busy_end[i] is the time arm i finishes its current engagement.

    Returns (assignment, failed_event, new_busy_end).  On success the
    assignment lists one arm index per event and failed_event is None; on
    failure assignment is None and failed_event names the first event no
    candidate arm could serve.
    """
    busy = list(busy_end)
    out: list[int] = []
    for time_s, key in events:
        for arm in candidates[key]:
            if time_s - stroke_dur >= busy[arm] + min_transit - _TIME_EPS:
                out.append(arm)
                busy[arm] = time_s + stroke_dur
                break
        else:
            return None, (time_s, key), tuple(busy)
    return out, None, tuple(busy)

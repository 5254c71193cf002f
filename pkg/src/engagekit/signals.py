"""Per-signal normalization of raw telemetry into unit-scaled engagement signals.

Each mapping is a linear ramp clamped to [0, 1]:

* head stability: 1 at perfect stillness, 0 at or beyond the 30 deg/s
  scanning threshold,
* gaze: dwell time relative to the 1.0 s intentionality threshold,
* locomotion: 1 when standing still, 0 at or beyond the 1.2 m/s
  comfortable-walking baseline,
* reading context: binary, latched once gaze has rested on the same text
  panel for strictly more than 2.0 s.

Dwell accounting is explicit state (``DwellTracker``) passed through
``update_dwell``; nothing here touches wall-clock time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import InvalidSignalError

HEAD_SCAN_THRESHOLD_DPS = 30.0
GAZE_DWELL_THRESHOLD_S = 1.0
LOCOMOTION_BASELINE_MPS = 1.2
READING_DWELL_THRESHOLD_S = 2.0
GAZE_MISS_GRACE_S = 0.25
NOMINAL_FRAME_RATE_HZ = 90.0
# Largest per-frame dt credited to a dwell; a single stalled frame must not
# vault the intentionality threshold.
MAX_DWELL_FRAME_DT_S = 3.0 / NOMINAL_FRAME_RATE_HZ


def _check_signal(value: float, name: str) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise InvalidSignalError(f"{name} must be finite, got {value!r}")
    if value < 0.0:
        raise InvalidSignalError(f"{name} must be >= 0, got {value!r}")
    return value


def _clamp01(x: float) -> float:
    if x < 0.0:
        return 0.0
    if x > 1.0:
        return 1.0
    return x


@dataclass(frozen=True)
class TelemetryFrame:
    """One telemetry sample.

    ``gaze_target`` is the identifier of the exhibit currently hit by the
    forward gaze ray, or ``None`` on a raycast miss. ``gaze_is_text`` marks
    that the hit collider is a text panel and therefore requires a target.
    """

    timestamp: float
    head_angular_velocity: float
    locomotion_velocity: float
    gaze_target: Optional[str] = None
    gaze_is_text: bool = False

    def __post_init__(self):
        ts = float(self.timestamp)
        if not math.isfinite(ts):
            raise InvalidSignalError(f"timestamp must be finite, got {ts!r}")
        object.__setattr__(self, "timestamp", ts)
        object.__setattr__(
            self,
            "head_angular_velocity",
            _check_signal(self.head_angular_velocity, "head_angular_velocity"),
        )
        object.__setattr__(
            self,
            "locomotion_velocity",
            _check_signal(self.locomotion_velocity, "locomotion_velocity"),
        )
        if self.gaze_is_text and self.gaze_target is None:
            raise InvalidSignalError("gaze_is_text requires a gaze_target")


@dataclass(frozen=True)
class NormalizedSignals:
    """Unit-scaled signal bundle: three [0, 1] scores plus the binary reading flag."""

    s_head: float
    s_gaze: float
    s_loco: float
    s_read: int

    def __post_init__(self):
        for name in ("s_head", "s_gaze", "s_loco"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise InvalidSignalError(f"{name} out of [0,1]: {v!r}")
        if self.s_read not in (0, 1):
            raise InvalidSignalError(f"s_read must be 0 or 1, got {self.s_read!r}")


@dataclass(frozen=True)
class DwellTracker:
    """Gaze dwell accounting for one session.

    ``dwell_elapsed`` accumulates time on the current target and resets to 0
    whenever the target changes. ``text_dwell_elapsed`` accumulates only while
    the gaze rests on a text panel and never exceeds ``dwell_elapsed``.
    ``miss_elapsed`` tracks an ongoing raycast miss; a dwell survives misses
    up to the grace period (blinks, tracking jitter) and is destroyed after.
    """

    current_target: Optional[str] = None
    dwell_elapsed: float = 0.0
    text_dwell_elapsed: float = 0.0
    miss_elapsed: float = 0.0


def normalize_head(omega: float, threshold: float = HEAD_SCAN_THRESHOLD_DPS) -> float:
    """Map head angular velocity (deg/s) to a stability score in [0, 1].

    1.0 at perfect stillness, linearly falling to 0.0 at or beyond the
    scanning threshold. Raises ``InvalidSignalError`` for non-finite or
    negative input.
    """
    omega = _check_signal(omega, "head angular velocity")
    return _clamp01(1.0 - omega / threshold)


def normalize_locomotion(v: float, baseline: float = LOCOMOTION_BASELINE_MPS) -> float:
    """Map locomotion velocity (m/s) to a score in [0, 1].

    1.0 when standing still, linearly falling to 0.0 at or beyond the
    comfortable-walking baseline. Raises ``InvalidSignalError`` for
    non-finite or negative input.
    """
    v = _check_signal(v, "locomotion velocity")
    return _clamp01(1.0 - v / baseline)


def normalize_gaze(tracker: DwellTracker, threshold: float = GAZE_DWELL_THRESHOLD_S) -> float:
    """Map the current dwell to a score in [0, 1].

    Linear ramp reaching 1.0 once the dwell has lasted the full
    intentionality threshold; 0.0 when no target is held.
    """
    if tracker.current_target is None:
        return 0.0
    return _clamp01(tracker.dwell_elapsed / threshold)


def compute_reading_context(
    tracker: DwellTracker, threshold: float = READING_DWELL_THRESHOLD_S
) -> int:
    """Return 1 iff the gaze has dwelt on text strictly longer than the threshold."""
    return 1 if tracker.text_dwell_elapsed > threshold else 0


def update_dwell(
    tracker: DwellTracker,
    frame: TelemetryFrame,
    dt: float,
    *,
    grace_s: float = GAZE_MISS_GRACE_S,
    max_frame_dt: float = MAX_DWELL_FRAME_DT_S,
) -> DwellTracker:
    """Advance dwell accounting by one frame and return the new tracker.

    Rules:

    * same target as before: ``dwell_elapsed`` grows by ``dt`` (and
      ``text_dwell_elapsed`` too when the frame is on text); a pending miss
      is cleared,
    * different target: all counters reset and the new target is acquired,
    * raycast miss: the held target and its counters survive until the miss
      outlasts the grace period, after which the tracker resets fully.

    ``dt`` is capped at ``max_frame_dt`` so dropped frames cannot fabricate
    dwell time. ``dt`` must be >= 0 (0 performs acquisition only).
    """
    dt = float(dt)
    if not math.isfinite(dt) or dt < 0.0:
        raise InvalidSignalError(f"dt must be finite and >= 0, got {dt!r}")
    dt = min(dt, max_frame_dt)

    if frame.gaze_target is None:
        if tracker.current_target is None:
            return tracker
        miss = tracker.miss_elapsed + dt
        if miss > grace_s:
            return DwellTracker()
        return DwellTracker(
            current_target=tracker.current_target,
            dwell_elapsed=tracker.dwell_elapsed,
            text_dwell_elapsed=tracker.text_dwell_elapsed,
            miss_elapsed=miss,
        )

    if frame.gaze_target == tracker.current_target:
        text_dt = dt if frame.gaze_is_text else 0.0
        return DwellTracker(
            current_target=tracker.current_target,
            dwell_elapsed=tracker.dwell_elapsed + dt,
            text_dwell_elapsed=tracker.text_dwell_elapsed + text_dt,
            miss_elapsed=0.0,
        )

    # Target changed: counters reset at acquisition.
    return DwellTracker(current_target=frame.gaze_target)


def normalize_frame(
    frame: TelemetryFrame,
    tracker: DwellTracker,
    *,
    head_threshold: float = HEAD_SCAN_THRESHOLD_DPS,
    gaze_threshold: float = GAZE_DWELL_THRESHOLD_S,
    loco_baseline: float = LOCOMOTION_BASELINE_MPS,
    reading_threshold: float = READING_DWELL_THRESHOLD_S,
) -> NormalizedSignals:
    """Normalize one frame against an already-updated dwell tracker."""
    return NormalizedSignals(
        s_head=normalize_head(frame.head_angular_velocity, head_threshold),
        s_gaze=normalize_gaze(tracker, gaze_threshold),
        s_loco=normalize_locomotion(frame.locomotion_velocity, loco_baseline),
        s_read=compute_reading_context(tracker, reading_threshold),
    )

"""Per-session behavioral measures accumulated during replay.

Counts mirror what an instrumented session would log: reading events (a text
dwell crossing the 1.0 s intentionality threshold, once per continuous
dwell), reading view time (integrated while the reading context is active),
words exposed (summed over displayed content records), cards collected, and
time plus share per engagement state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .content import DisplayEvent
from .engine import TickResult
from .states import REPORT_ORDER, EngagementState

READING_EVENT_THRESHOLD_S = 1.0
CARDS_MAX = 18


@dataclass(frozen=True)
class SessionMetrics:
    """Immutable end-of-session snapshot."""

    session_id: str
    session_duration: float
    reading_events: int
    reading_view_time: float
    words_exposed: int
    cards_collected: int
    state_time: dict[EngagementState, float]
    state_distribution: Optional[dict[EngagementState, float]]

    @property
    def distribution_defined(self) -> bool:
        return self.state_distribution is not None

    def to_record(self, config_fingerprint: str = "") -> dict:
        """Machine-readable report record (one JSON line)."""
        distribution = (
            None
            if self.state_distribution is None
            else {s.key: self.state_distribution[s] for s in EngagementState}
        )
        return {
            "session_id": self.session_id,
            "session_duration_s": self.session_duration,
            "reading_events": self.reading_events,
            "reading_view_time_s": self.reading_view_time,
            "words_exposed": self.words_exposed,
            "cards_collected": self.cards_collected,
            "state_time_s": {s.key: self.state_time[s] for s in EngagementState},
            "state_distribution": distribution,
            "distribution_defined": self.distribution_defined,
            "config_fingerprint": config_fingerprint,
        }


class MetricsAccumulator:
    """Single-writer accumulator fed once per tick by the inference loop."""

    def __init__(
        self,
        session_id: str = "session",
        reading_event_threshold_s: float = READING_EVENT_THRESHOLD_S,
    ):
        self.session_id = session_id
        self._reading_threshold = reading_event_threshold_s
        self._duration = 0.0
        self._reading_events = 0
        self._reading_view_time = 0.0
        self._words_exposed = 0
        self._cards = 0
        self._state_time = {state: 0.0 for state in EngagementState}
        self._prev_text_dwell = 0.0

    def add_tick(
        self,
        tick: TickResult,
        displays: Iterable[DisplayEvent] = (),
        cards_picked: int = 0,
    ) -> None:
        dt = tick.dt
        self._duration += dt
        self._state_time[tick.state] += dt
        # One reading event per continuous dwell, at the moment it crosses
        # the intentionality threshold.
        if self._prev_text_dwell < self._reading_threshold <= tick.text_dwell_elapsed:
            self._reading_events += 1
        self._prev_text_dwell = tick.text_dwell_elapsed
        if tick.signals.s_read:
            self._reading_view_time += dt
        for event in displays:
            self._words_exposed += event.record.word_count
        if cards_picked:
            self._cards = min(CARDS_MAX, self._cards + cards_picked)

    def close(self) -> SessionMetrics:
        if self._duration > 0.0:
            distribution = {
                state: self._state_time[state] / self._duration for state in EngagementState
            }
        else:
            distribution = None  # empty session: no share is defined
        return SessionMetrics(
            session_id=self.session_id,
            session_duration=self._duration,
            reading_events=self._reading_events,
            reading_view_time=self._reading_view_time,
            words_exposed=self._words_exposed,
            cards_collected=self._cards,
            state_time=dict(self._state_time),
            state_distribution=distribution,
        )


def render_table(metrics: SessionMetrics) -> str:
    """Human-readable session summary with the five-state percentage row."""
    lines = [
        "Session summary",
        "---------------",
        f"Session id         {metrics.session_id}",
        f"Session duration   {metrics.session_duration:.1f} s",
        f"Reading events     {metrics.reading_events}",
        f"Reading view time  {metrics.reading_view_time:.1f} s",
        f"Words exposed      {metrics.words_exposed}",
        f"Cards collected    {metrics.cards_collected} / {CARDS_MAX}",
        "",
        "Engagement state distribution (% of session time)",
    ]
    labels = [state.label for state in REPORT_ORDER]
    if metrics.state_distribution is None:
        cells = ["n/a" for _ in REPORT_ORDER]
        note = "empty session: distribution undefined"
    else:
        cells = [f"{100.0 * metrics.state_distribution[s]:.1f}%" for s in REPORT_ORDER]
        note = None
    widths = [max(len(a), len(b)) for a, b in zip(labels, cells)]
    lines.append("  ".join(label.rjust(w) for label, w in zip(labels, widths)))
    lines.append("  ".join(cell.rjust(w) for cell, w in zip(cells, widths)))
    if note:
        lines.append(note)
    return "\n".join(lines) + "\n"


def write_metrics_record(metrics: SessionMetrics, path, config_fingerprint: str = "") -> None:
    """Append-style machine-readable output: one JSON record per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(metrics.to_record(config_fingerprint)) + "\n")

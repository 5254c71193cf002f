"""Offline trace replay: run the full loop and emit timeline plus metrics.

The timeline is line-delimited JSON, one record per frame:
(timestamp, e_raw, e_windowed, e_smoothed, gate, state, state_updated).
It carries enough to regenerate every score/state plot and to cross-check
the metrics report independently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Callable, Iterable, Optional, Union

from .config import EngineConfig
from .content import ContentPipeline, Exhibit, catalog_or_builtin
from .engine import EngagementEngine, TickResult
from .errors import TraceFormatError
from .metrics import MetricsAccumulator, SessionMetrics
from .providers import make_provider
from .states import EngagementState
from .trace import ParsedTrace


def timeline_row(tick: TickResult) -> dict:
    return {
        "timestamp": tick.timestamp,
        "e_raw": tick.estimate.e_raw,
        "e_windowed": tick.estimate.e_windowed,
        "e_smoothed": tick.estimate.e_smoothed,
        "gate": tick.gate.value,
        "state": tick.state.key,
        "state_updated": tick.state_updated,
    }


def format_timeline_row(tick: TickResult) -> str:
    return json.dumps(timeline_row(tick))


def read_timeline(path) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise TraceFormatError(f"invalid timeline JSON: {exc.msg}", lineno) from exc
    return rows


@dataclass
class ReplayResult:
    metrics: SessionMetrics
    displays: int
    provider_calls: int


def replay(
    trace: ParsedTrace,
    config: Optional[EngineConfig] = None,
    catalog: Optional[dict[str, Exhibit]] = None,
    provider=None,
    timeline_sink: Optional[Union[IO[str], Callable[[TickResult], None]]] = None,
    pipeline: Optional[ContentPipeline] = None,
) -> ReplayResult:
    """Re-run the closed loop over a parsed trace.

    ``timeline_sink`` may be an open text file (rows are written as JSON
    lines) or a callable invoked with each ``TickResult``. Content pipeline
    defaults to the mock provider over the built-in catalog.
    """
    config = config or EngineConfig()
    engine = EngagementEngine(config, nominal_rate=trace.header.nominal_rate)
    if pipeline is None:
        if catalog is None:
            catalog = catalog_or_builtin(None)
        if provider is None:
            provider = make_provider(config.content)
        pipeline = ContentPipeline(catalog, config.content, provider)
    accumulator = MetricsAccumulator(session_id=trace.header.session_id)

    write_row: Callable[[TickResult], None]
    if timeline_sink is None:
        write_row = lambda tick: None
    elif callable(timeline_sink):
        write_row = timeline_sink
    else:
        sink = timeline_sink
        write_row = lambda tick: sink.write(format_timeline_row(tick) + "\n")

    events = sorted(trace.events, key=lambda e: e.timestamp)
    event_idx = 0
    displays_total = 0
    try:
        for frame in trace.frames:
            tick = engine.process_frame(frame)
            cards = 0
            while event_idx < len(events) and events[event_idx].timestamp <= tick.timestamp:
                if events[event_idx].kind == "card_pickup":
                    cards += 1
                event_idx += 1
            displays = pipeline.on_tick(tick.timestamp, tick.gaze_target, tick.state)
            displays_total += len(displays)
            accumulator.add_tick(tick, displays, cards_picked=cards)
            write_row(tick)
    finally:
        pipeline.close()
    return ReplayResult(
        metrics=accumulator.close(),
        displays=displays_total,
        provider_calls=pipeline.provider_calls,
    )


def state_time_from_rows(rows: Iterable[dict]) -> dict[EngagementState, float]:
    """Recompute per-state time from timeline rows (for report cross-checks)."""
    totals = {state: 0.0 for state in EngagementState}
    prev_t: Optional[float] = None
    for row in rows:
        t = float(row["timestamp"])
        if prev_t is not None:
            totals[EngagementState.from_key(row["state"])] += t - prev_t
        prev_t = t
    return totals

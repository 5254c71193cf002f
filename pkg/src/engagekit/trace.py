"""Telemetry trace files and synthetic scenario generation.

A trace is line-delimited JSON: a header record first, then one record per
90 Hz frame with named fields, optionally interleaved with discrete pickup
events. The format is versioned and round-trips bit-exactly, so replays and
diffs are trustworthy.

Scenario generators produce labeled synthetic traces (focused reader,
scanner, walker, runner, or mixed segments) that are deterministic for a
fixed seed; jitter is bounded uniform noise so the advertised signal ranges
are hard guarantees.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, Optional, Union

from .errors import (
    ConfigError,
    InvalidSignalError,
    OrderingError,
    TraceFormatError,
    TraceVersionError,
)
from .signals import TelemetryFrame

SCHEMA_VERSION = 1
NOMINAL_RATE_HZ = 90.0

_FRAME_FIELDS = {
    "timestamp",
    "head_angular_velocity",
    "locomotion_velocity",
    "gaze_target",
    "gaze_is_text",
}


@dataclass(frozen=True)
class TraceHeader:
    schema_version: int = SCHEMA_VERSION
    nominal_rate: float = NOMINAL_RATE_HZ
    session_id: str = "session"
    exhibit_catalog_ref: str = "builtin"

    def __post_init__(self):
        if self.nominal_rate <= 0:
            raise ConfigError(f"nominal_rate must be > 0, got {self.nominal_rate!r}")


@dataclass(frozen=True)
class PickupEvent:
    """A discrete gamification event embedded in the trace (e.g. card pickup)."""

    timestamp: float
    kind: str = "card_pickup"
    item_id: str = ""


@dataclass(frozen=True)
class ParsedTrace:
    header: TraceHeader
    frames: tuple[TelemetryFrame, ...]
    events: tuple[PickupEvent, ...] = ()


# ---------------------------------------------------------------------------
# Serialization


def _header_line(header: TraceHeader) -> str:
    return json.dumps(
        {
            "schema_version": header.schema_version,
            "nominal_rate": header.nominal_rate,
            "session_id": header.session_id,
            "exhibit_catalog_ref": header.exhibit_catalog_ref,
        }
    )


def _frame_line(frame: TelemetryFrame) -> str:
    return json.dumps(
        {
            "timestamp": frame.timestamp,
            "head_angular_velocity": frame.head_angular_velocity,
            "locomotion_velocity": frame.locomotion_velocity,
            "gaze_target": frame.gaze_target,
            "gaze_is_text": frame.gaze_is_text,
        }
    )


def _event_line(event: PickupEvent) -> str:
    return json.dumps(
        {"event": event.kind, "timestamp": event.timestamp, "item_id": event.item_id}
    )


def trace_lines(
    header: TraceHeader,
    frames: Iterable[TelemetryFrame],
    events: Iterable[PickupEvent] = (),
) -> Iterator[str]:
    """Yield the file lines for a trace; events merge in timestamp order
    (an event ties after the frame at the same timestamp)."""
    yield _header_line(header)
    pending = sorted(events, key=lambda e: e.timestamp)
    idx = 0
    for frame in frames:
        while idx < len(pending) and pending[idx].timestamp < frame.timestamp:
            yield _event_line(pending[idx])
            idx += 1
        yield _frame_line(frame)
    for event in pending[idx:]:
        yield _event_line(event)


def write_trace(
    target: Union[str, Path, IO[str]],
    header: TraceHeader,
    frames: Iterable[TelemetryFrame],
    events: Iterable[PickupEvent] = (),
) -> None:
    lines = trace_lines(header, frames, events)
    if hasattr(target, "write"):
        for line in lines:
            target.write(line + "\n")
        return
    with open(target, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")


# ---------------------------------------------------------------------------
# Parsing


def _parse_header(obj: dict, lineno: int) -> TraceHeader:
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise TraceVersionError(f"unsupported schema_version {version!r}", lineno)
    try:
        return TraceHeader(
            schema_version=int(version),
            nominal_rate=float(obj["nominal_rate"]),
            session_id=str(obj.get("session_id", "session")),
            exhibit_catalog_ref=str(obj.get("exhibit_catalog_ref", "builtin")),
        )
    except (KeyError, TypeError, ValueError, ConfigError) as exc:
        raise TraceFormatError(f"bad header: {exc}", lineno) from exc


def parse_trace(source: Union[str, Path, IO[str]]) -> ParsedTrace:
    """Parse and validate a trace file (path or open text stream).

    Raises ``TraceFormatError`` (with the line number) on malformed records,
    ``TraceVersionError`` for unknown schema versions, and ``OrderingError``
    when frame timestamps fail to strictly increase.
    """
    if hasattr(source, "read"):
        return _parse_lines(iter(source))
    with open(source, "r", encoding="utf-8") as fh:
        return _parse_lines(iter(fh))


def _parse_lines(lines: Iterator[str]) -> ParsedTrace:
    header: Optional[TraceHeader] = None
    frames: list[TelemetryFrame] = []
    events: list[PickupEvent] = []
    last_t: Optional[float] = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"invalid JSON: {exc.msg}", lineno) from exc
        if not isinstance(obj, dict):
            raise TraceFormatError("record must be a JSON object", lineno)
        if header is None:
            if "schema_version" not in obj:
                raise TraceFormatError("first record must be the trace header", lineno)
            header = _parse_header(obj, lineno)
            continue
        if "event" in obj:
            try:
                events.append(
                    PickupEvent(
                        timestamp=float(obj["timestamp"]),
                        kind=str(obj["event"]),
                        item_id=str(obj.get("item_id", "")),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise TraceFormatError(f"bad event record: {exc}", lineno) from exc
            continue
        unknown = set(obj) - _FRAME_FIELDS
        if unknown:
            raise TraceFormatError(f"unknown frame field(s): {sorted(unknown)}", lineno)
        try:
            frame = TelemetryFrame(
                timestamp=float(obj["timestamp"]),
                head_angular_velocity=float(obj["head_angular_velocity"]),
                locomotion_velocity=float(obj["locomotion_velocity"]),
                gaze_target=obj.get("gaze_target"),
                gaze_is_text=bool(obj.get("gaze_is_text", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise TraceFormatError(f"bad frame: {exc}", lineno) from exc
        if last_t is not None and frame.timestamp <= last_t:
            raise OrderingError(
                f"line {lineno}: timestamp {frame.timestamp!r} does not increase past {last_t!r}"
            )
        last_t = frame.timestamp
        frames.append(frame)
    if header is None:
        raise TraceFormatError("empty trace: missing header", 1)
    return ParsedTrace(header=header, frames=tuple(frames), events=tuple(events))


# ---------------------------------------------------------------------------
# Scenarios


@dataclass(frozen=True)
class FocusedReader:
    """Standing still, gaze locked on one text panel."""

    exhibit_id: str = "copper-brazier"


@dataclass(frozen=True)
class Scanner:
    """Short glances panning across many targets, never settling."""

    targets: tuple[str, ...] = (
        "copper-brazier",
        "wooden-loom",
        "bridal-costume",
        "flintlock-musket",
        "carved-cradle",
        "stone-hearth",
    )
    glance_s: float = 0.4


@dataclass(frozen=True)
class Walker:
    """Sustained locomotion above walking threshold but below running."""

    velocity: float = 1.5


@dataclass(frozen=True)
class Runner:
    """Sustained locomotion above the running threshold."""

    velocity: float = 2.5


@dataclass(frozen=True)
class Mixed:
    """Back-to-back segments of the other scenario kinds."""

    segments: tuple[tuple["Scenario", float], ...]


Scenario = Union[FocusedReader, Scanner, Walker, Runner, Mixed]


def validate_scenario(scenario: Scenario) -> None:
    if isinstance(scenario, FocusedReader):
        if not scenario.exhibit_id:
            raise ConfigError("focused-reader needs a non-empty exhibit_id")
    elif isinstance(scenario, Scanner):
        if not scenario.targets:
            raise ConfigError("scanner needs at least one target")
        if scenario.glance_s <= 0:
            raise ConfigError(f"glance_s must be > 0, got {scenario.glance_s!r}")
    elif isinstance(scenario, Walker):
        if not (1.2 < scenario.velocity <= 2.0):
            raise ConfigError(
                f"walker velocity must lie in (1.2, 2.0], got {scenario.velocity!r}"
            )
    elif isinstance(scenario, Runner):
        if not scenario.velocity > 2.0:
            raise ConfigError(f"runner velocity must exceed 2.0, got {scenario.velocity!r}")
    elif isinstance(scenario, Mixed):
        if not scenario.segments:
            raise ConfigError("mixed scenario needs at least one segment")
        for sub, duration in scenario.segments:
            if isinstance(sub, Mixed):
                raise ConfigError("mixed segments cannot nest")
            if duration <= 0:
                raise ConfigError(f"segment duration must be > 0, got {duration!r}")
            validate_scenario(sub)
    else:
        raise ConfigError(f"unknown scenario: {scenario!r}")


def _sample(scenario: Scenario, rng: random.Random, local_t: float):
    """One frame's (omega, velocity, gaze_target, gaze_is_text) for a scenario."""
    if isinstance(scenario, FocusedReader):
        return rng.uniform(0.0, 5.0), rng.uniform(0.0, 0.05), scenario.exhibit_id, True
    if isinstance(scenario, Scanner):
        slot = int(local_t / scenario.glance_s)
        target = scenario.targets[slot % len(scenario.targets)]
        return rng.uniform(20.0, 60.0), rng.uniform(0.3, 0.8), target, False
    if isinstance(scenario, Walker):
        v = scenario.velocity + rng.uniform(-0.05, 0.05)
        v = min(2.0, max(1.21, v))
        glancing = (local_t % 2.0) < 0.3
        target = "wooden-loom" if glancing else None
        return rng.uniform(10.0, 40.0), v, target, False
    if isinstance(scenario, Runner):
        v = max(2.01, scenario.velocity + rng.uniform(-0.1, 0.1))
        return rng.uniform(30.0, 90.0), v, None, False
    raise ConfigError(f"unknown scenario: {scenario!r}")


def generate_frames(
    scenario: Scenario,
    duration_s: float,
    seed: int,
    rate: float = NOMINAL_RATE_HZ,
) -> list[TelemetryFrame]:
    """Deterministic frame sequence for a scenario at the nominal rate."""
    if duration_s <= 0:
        raise ConfigError(f"duration must be > 0, got {duration_s!r}")
    if rate <= 0:
        raise ConfigError(f"rate must be > 0, got {rate!r}")
    validate_scenario(scenario)
    rng = random.Random(seed)
    n = int(round(duration_s * rate))
    frames: list[TelemetryFrame] = []
    if isinstance(scenario, Mixed):
        boundaries: list[tuple[float, Scenario]] = []
        start = 0.0
        for sub, seg_duration in scenario.segments:
            boundaries.append((start, sub))
            start += seg_duration
        total = start
        for i in range(n):
            t = i / rate
            cycle_t = t % total
            seg_start, sub = boundaries[0]
            for candidate_start, candidate in boundaries:
                if candidate_start <= cycle_t:
                    seg_start, sub = candidate_start, candidate
                else:
                    break
            omega, v, target, is_text = _sample(sub, rng, cycle_t - seg_start)
            frames.append(TelemetryFrame(t, omega, v, target, is_text))
        return frames
    for i in range(n):
        t = i / rate
        omega, v, target, is_text = _sample(scenario, rng, t)
        frames.append(TelemetryFrame(t, omega, v, target, is_text))
    return frames


def generate_trace(
    scenario: Scenario,
    duration_s: float,
    seed: int,
    rate: float = NOMINAL_RATE_HZ,
    session_id: Optional[str] = None,
) -> tuple[TraceHeader, list[TelemetryFrame]]:
    frames = generate_frames(scenario, duration_s, seed, rate)
    name = type(scenario).__name__.lower()
    header = TraceHeader(
        schema_version=SCHEMA_VERSION,
        nominal_rate=rate,
        session_id=session_id or f"sim-{name}-{seed}",
        exhibit_catalog_ref="builtin",
    )
    return header, frames

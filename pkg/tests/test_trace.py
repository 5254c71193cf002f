"""Trace format round-trips, validation, and scenario generator guarantees."""

from __future__ import annotations

import io

import pytest

from engagekit.errors import ConfigError, OrderingError, TraceFormatError, TraceVersionError
from engagekit.signals import TelemetryFrame
from engagekit.trace import (
    FocusedReader,
    Mixed,
    PickupEvent,
    Runner,
    Scanner,
    TraceHeader,
    Walker,
    generate_frames,
    generate_trace,
    parse_trace,
    trace_lines,
    validate_scenario,
    write_trace,
)
from helpers import make_frame

HEADER = TraceHeader(session_id="t")


def render(header, frames, events=()):
    buffer = io.StringIO()
    write_trace(buffer, header, frames, events)
    return buffer.getvalue()


# -- serialization / parsing -----------------------------------------------------


def test_roundtrip_identity():
    frames = [
        make_frame(0.0, 12.5, 0.3, "a", True),
        make_frame(1.0 / 90.0, 0.0, 0.0),
        make_frame(2.0 / 90.0, 31.4159, 2.25, "b", False),
    ]
    events = [PickupEvent(0.015, "card_pickup", "card-1")]
    text = render(HEADER, frames, events)
    parsed = parse_trace(io.StringIO(text))
    assert parsed.header == HEADER
    assert list(parsed.frames) == frames
    assert list(parsed.events) == events
    # serialize(parse(x)) == x byte for byte
    assert render(parsed.header, parsed.frames, parsed.events) == text


def test_empty_body_after_header_is_fine():
    parsed = parse_trace(io.StringIO(render(HEADER, [])))
    assert parsed.frames == ()
    assert parsed.events == ()


def test_missing_header_rejected():
    with pytest.raises(TraceFormatError):
        parse_trace(io.StringIO('{"timestamp": 0.0}\n'))
    with pytest.raises(TraceFormatError):
        parse_trace(io.StringIO(""))


def test_unknown_schema_version():
    bad = render(HEADER, []).replace('"schema_version": 1', '"schema_version": 99')
    with pytest.raises(TraceVersionError):
        parse_trace(io.StringIO(bad))


def test_negative_velocity_names_the_line():
    lines = [
        render(HEADER, []).strip(),
        '{"timestamp": 0.0, "head_angular_velocity": 1.0, "locomotion_velocity": -2.0, "gaze_target": null, "gaze_is_text": false}',
    ]
    with pytest.raises(TraceFormatError) as excinfo:
        parse_trace(io.StringIO("\n".join(lines) + "\n"))
    assert "line 2" in str(excinfo.value)


def test_invalid_json_names_the_line():
    text = render(HEADER, [make_frame(0.0)]) + "not json\n"
    with pytest.raises(TraceFormatError) as excinfo:
        parse_trace(io.StringIO(text))
    assert "line 3" in str(excinfo.value)


def test_non_monotonic_timestamps_rejected():
    frames = [make_frame(0.0), make_frame(1.0)]
    text = render(HEADER, frames)
    swapped = "\n".join([text.splitlines()[0], text.splitlines()[2], text.splitlines()[1]])
    with pytest.raises(OrderingError):
        parse_trace(io.StringIO(swapped + "\n"))
    # Equal timestamps are rejected too.
    dup = "\n".join([text.splitlines()[0], text.splitlines()[1], text.splitlines()[1]])
    with pytest.raises(OrderingError):
        parse_trace(io.StringIO(dup + "\n"))


def test_unknown_frame_field_rejected():
    text = render(HEADER, []).strip() + "\n" + (
        '{"timestamp": 0.0, "head_angular_velocity": 1.0, "locomotion_velocity": 0.0,'
        ' "gaze_target": null, "gaze_is_text": false, "surprise": 1}\n'
    )
    with pytest.raises(TraceFormatError):
        parse_trace(io.StringIO(text))


def test_file_roundtrip(tmp_path):
    header, frames = generate_trace(FocusedReader(), 2.0, seed=5)
    path = tmp_path / "trace.jsonl"
    write_trace(path, header, frames)
    parsed = parse_trace(path)
    assert list(parsed.frames) == frames
    assert parsed.header == header


# -- generators -------------------------------------------------------------------


def test_generator_deterministic_bytes():
    a = "\n".join(trace_lines(*generate_trace(Scanner(), 5.0, seed=42)))
    b = "\n".join(trace_lines(*generate_trace(Scanner(), 5.0, seed=42)))
    assert a == b
    c = "\n".join(trace_lines(*generate_trace(Scanner(), 5.0, seed=43)))
    assert a != c


def test_focused_reader_postconditions():
    frames = generate_frames(FocusedReader("copper-brazier"), 60.0, seed=7)
    assert len(frames) == 5400
    assert all(f.gaze_is_text and f.gaze_target == "copper-brazier" for f in frames)
    assert all(f.locomotion_velocity < 0.1 for f in frames)
    assert all(f.head_angular_velocity < 5.0 for f in frames)


def test_runner_postconditions():
    frames = generate_frames(Runner(2.5), 30.0, seed=9)
    assert all(f.locomotion_velocity > 2.0 for f in frames)
    assert all(abs(f.locomotion_velocity - 2.5) <= 0.1 + 1e-12 for f in frames)
    assert all(f.gaze_target is None for f in frames)


def test_walker_velocity_stays_in_walk_band():
    frames = generate_frames(Walker(1.5), 20.0, seed=11)
    assert all(1.2 < f.locomotion_velocity <= 2.0 for f in frames)


def test_scanner_changes_targets():
    frames = generate_frames(Scanner(glance_s=0.4), 10.0, seed=13)
    targets = {f.gaze_target for f in frames}
    assert len(targets) >= 3
    assert all(not f.gaze_is_text for f in frames)


def test_rate_integrity():
    frames = generate_frames(FocusedReader(), 10.0, seed=1)
    nominal = 1.0 / 90.0
    dts = [b.timestamp - a.timestamp for a, b in zip(frames, frames[1:])]
    assert all(abs(dt - nominal) / nominal < 0.01 for dt in dts)


def test_mixed_concatenates_segments():
    scenario = Mixed(segments=((FocusedReader(), 2.0), (Runner(2.5), 2.0)))
    frames = generate_frames(scenario, 4.0, seed=3)
    head = [f for f in frames if f.timestamp < 2.0]
    tail = [f for f in frames if f.timestamp >= 2.0]
    assert all(f.gaze_is_text for f in head)
    assert all(f.locomotion_velocity > 2.0 for f in tail)


def test_scenario_validation():
    with pytest.raises(ConfigError):
        validate_scenario(Runner(1.0))
    with pytest.raises(ConfigError):
        validate_scenario(Runner(2.0))
    with pytest.raises(ConfigError):
        validate_scenario(Walker(1.0))
    with pytest.raises(ConfigError):
        validate_scenario(Walker(2.5))
    with pytest.raises(ConfigError):
        validate_scenario(Scanner(targets=()))
    with pytest.raises(ConfigError):
        validate_scenario(Mixed(segments=()))
    with pytest.raises(ConfigError):
        validate_scenario(Mixed(segments=((Runner(2.5), -1.0),)))
    with pytest.raises(ConfigError):
        generate_frames(FocusedReader(), -5.0, seed=0)


def test_header_validation():
    with pytest.raises(ConfigError):
        TraceHeader(nominal_rate=0.0)

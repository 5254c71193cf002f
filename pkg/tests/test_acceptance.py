"""Acceptance suite: one test per release criterion, each printing PASS/FAIL.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. Every tolerance is pinned here; nothing is deferred to calibration.
"""

from __future__ import annotations

import math
import random
import statistics

import pytest

from engagekit.bench import (
    measure_paired_tick_latencies,
    measure_tick_latencies,
    percentile,
    run_bench,
)
from engagekit.cli import main as cli_main
from engagekit.config import EngineConfig
from engagekit.content import (
    ContentConfig,
    ContentPipeline,
    ThreadedDispatcher,
    build_prompt,
    builtin_catalog,
    count_words,
)
from engagekit.engine import EngagementEngine
from engagekit.fusion import FusionWeights, RollingWindow, fuse, smooth
from engagekit.metrics import MetricsAccumulator
from engagekit.providers import MockProvider
from engagekit.session import read_timeline, replay, state_time_from_rows
from engagekit.signals import (
    DwellTracker,
    compute_reading_context,
    normalize_gaze,
    normalize_head,
    normalize_locomotion,
)
from engagekit.states import EngagementState
from engagekit.trace import (
    FocusedReader,
    Mixed,
    ParsedTrace,
    Runner,
    Scanner,
    Walker,
    generate_trace,
)
from helpers import SlowProvider

WARMUP_S = 6.0  # window fill plus smoothing settle


def report(number: int, title: str) -> None:
    print(f"[acceptance] PASS  C{number:02d} {title}")


def replay_rows(scenario, duration, seed, config=None):
    header, frames = generate_trace(scenario, duration, seed)
    rows = []
    result = replay(
        ParsedTrace(header, tuple(frames)),
        config or EngineConfig(),
        timeline_sink=lambda tick: rows.append(tick),
    )
    return rows, result


def random_mixed(rng: random.Random) -> Mixed:
    kinds = ["reader", "scanner", "walker", "runner"]
    segments = []
    for _ in range(rng.randint(4, 7)):
        kind = rng.choice(kinds)
        duration = rng.uniform(3.0, 8.0)
        if kind == "reader":
            segments.append((FocusedReader(), duration))
        elif kind == "scanner":
            segments.append((Scanner(glance_s=rng.uniform(0.2, 0.8)), duration))
        elif kind == "walker":
            segments.append((Walker(velocity=rng.uniform(1.3, 1.9)), duration))
        else:
            segments.append((Runner(velocity=rng.uniform(2.2, 3.0)), duration))
    return Mixed(segments=tuple(segments))


# -- C1 ------------------------------------------------------------------------


def test_c01_fusion_equation_exactness():
    """10,000 randomized pairs match the closed-form weighted sum to 1e-12."""
    rng = random.Random(101)
    weights = FusionWeights()
    worst = 0.0
    for _ in range(10_000):
        s_phys = rng.random()
        s_read = float(rng.randint(0, 1))
        expected = 0.75 * s_phys + 0.25 * s_read
        worst = max(worst, abs(fuse(s_phys, s_read, weights) - expected))
    assert worst <= 1e-12, f"worst divergence {worst}"
    report(1, f"fusion equation exact over 10k pairs (worst {worst:.1e})")


# -- C2 ------------------------------------------------------------------------


def test_c02_threshold_boundary_suite():
    """Published thresholds map exactly onto their boundary values."""
    assert normalize_head(30.0) == 0.0
    assert normalize_locomotion(1.2) == 0.0
    assert normalize_gaze(DwellTracker(current_target="x", dwell_elapsed=1.0)) == 1.0
    assert compute_reading_context(DwellTracker("x", 3.0, 2.0)) == 0
    assert compute_reading_context(DwellTracker("x", 3.0, math.nextafter(2.0, 3.0))) == 1
    report(2, "threshold boundaries exact (30 deg/s, 1.2 m/s, 1.0 s, >2.0 s)")


# -- C3 ------------------------------------------------------------------------


class GateOracle:
    """Independent re-statement of the sustain/release rule, fed raw velocity."""

    def __init__(self, threshold, sustain=0.5, release_sustain=0.5, hysteresis=0.1):
        self.threshold = threshold
        self.sustain = sustain
        self.release_sustain = release_sustain
        self.hysteresis = hysteresis
        self.active = False
        self.timer = 0.0

    def step(self, v, dt):
        if self.active:
            if v < self.threshold - self.hysteresis:
                self.timer += dt
                if self.timer >= self.release_sustain:
                    self.active, self.timer = False, 0.0
            else:
                self.timer = 0.0
        else:
            if v > self.threshold:
                self.timer += dt
                if self.timer >= self.sustain:
                    self.active, self.timer = True, 0.0
            else:
                self.timer = 0.0
        return self.active


def test_c03_gate_dominance_on_random_mixed_traces():
    """Run gate forces Disengaged and walk gate caps at Neutral, every tick."""
    rng = random.Random(303)
    violations = 0
    ticks_checked = 0
    for trial in range(100):
        scenario = random_mixed(rng)
        header, frames = generate_trace(scenario, sum(d for _, d in scenario.segments), seed=trial)
        engine = EngagementEngine(EngineConfig())
        walk = GateOracle(1.2)
        run = GateOracle(2.0)
        prev_t = None
        for frame in frames:
            tick = engine.process_frame(frame)
            dt = 0.0 if prev_t is None else frame.timestamp - prev_t
            prev_t = frame.timestamp
            walk_active = walk.step(frame.locomotion_velocity, dt)
            run_active = run.step(frame.locomotion_velocity, dt)
            ticks_checked += 1
            expected_gate = "run_force" if run_active else ("walk_cap" if walk_active else "none")
            if tick.gate.value != expected_gate:
                violations += 1
            elif run_active and tick.state != EngagementState.DISENGAGED:
                violations += 1
            elif walk_active and not run_active and tick.state > EngagementState.NEUTRAL:
                violations += 1
    assert violations == 0, f"{violations} violations over {ticks_checked} ticks"
    report(3, f"gate dominance: 0 violations over {ticks_checked} ticks / 100 traces")


# -- C4 ------------------------------------------------------------------------


def test_c04_smoothing_properties():
    """Contraction 0.65 +/- 1e-9, no overshoot, outputs stay in [0, 1]."""
    target = 0.85
    value = 0.05
    checked = 0
    while abs(value - target) > 1e-6:
        nxt = smooth(value, target, 0.35)
        ratio = abs(nxt - target) / abs(value - target)
        assert ratio == pytest.approx(0.65, abs=1e-9)
        value = nxt
        checked += 1
    assert checked > 20

    rng = random.Random(404)
    value = rng.random()
    for _ in range(1000):
        goal = rng.random()
        nxt = smooth(value, goal, 0.35)
        assert min(value, goal) - 1e-15 <= nxt <= max(value, goal) + 1e-15
        assert 0.0 <= nxt <= 1.0
        value = nxt
    report(4, f"smoothing: contraction 0.65 over {checked} steps, 1000 steps no overshoot")


# -- C5 ------------------------------------------------------------------------


def test_c05_window_streaming_equals_rescan():
    """Streaming rolling mean matches the naive full-rescan oracle to 1e-12."""
    rng = random.Random(505)
    worst = 0.0
    for trial in range(50):
        window = RollingWindow(4.0)
        history = []
        t = 0.0
        for _ in range(1200):
            t += rng.uniform(0.005, 0.04)
            v = rng.random()
            history.append((t, v))
            got = window.update(t, v)
            kept = [val for (ts, val) in history if ts >= t - 4.0]
            expected = math.fsum(kept) / len(kept)
            worst = max(worst, abs(got - expected))
    assert worst <= 1e-12, f"worst divergence {worst}"
    report(5, f"window streaming == rescan over 50 traces (worst {worst:.1e})")


# -- C6 ------------------------------------------------------------------------


def test_c06_end_to_end_determinism(tmp_path):
    """Replaying a trace twice produces bitwise-identical output files."""
    trace_path = tmp_path / "trace.jsonl"
    code = cli_main(
        ["simulate", "scanner", "--duration", "20", "--seed", "11", "--out", str(trace_path)]
    )
    assert code == 0
    for out_name in ("a", "b"):
        assert (
            cli_main(
                [
                    "replay",
                    str(trace_path),
                    "--out-dir",
                    str(tmp_path / out_name),
                    "--no-figures",
                ]
            )
            == 0
        )
    for name in ("timeline.jsonl", "metrics.jsonl", "metrics.txt"):
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        assert a == b, f"{name} differs between replays"
    report(6, "replay twice: timeline and metrics bitwise identical")


# -- C7 ------------------------------------------------------------------------


def post_warmup_share(rows, states):
    post = [r for r in rows if r.timestamp >= WARMUP_S]
    hits = sum(1 for r in post if r.state in states)
    return hits / len(post)


def test_c07_scenario_label_soundness():
    """Generated scenarios land in their designed states post-warmup."""
    reader_rows, _ = replay_rows(FocusedReader(), 60.0, seed=1)
    reader_share = post_warmup_share(
        reader_rows, {EngagementState.HIGHLY_ENGAGED, EngagementState.ENGAGED}
    )
    assert reader_share >= 0.80, f"focused reader engaged share {reader_share:.3f}"

    runner_rows, _ = replay_rows(Runner(2.5), 30.0, seed=2)
    runner_share = post_warmup_share(runner_rows, {EngagementState.DISENGAGED})
    assert runner_share >= 0.80, f"runner disengaged share {runner_share:.3f}"

    scanner_rows, _ = replay_rows(Scanner(), 60.0, seed=3)
    scanner_share = post_warmup_share(scanner_rows, {EngagementState.HIGHLY_ENGAGED})
    assert scanner_share <= 0.20, f"scanner highly-engaged share {scanner_share:.3f}"
    report(
        7,
        "labels: reader {:.0%} engaged, runner {:.0%} disengaged, scanner {:.0%} top".format(
            reader_share, runner_share, scanner_share
        ),
    )


# -- C8 ------------------------------------------------------------------------


def test_c08_latency_budget_and_nonblocking_contract():
    """p99 under 1 ms across >= 5400 ticks; a 5 s provider delay must not move
    the loop's tick latency (median drift < 5%, p99 still under budget)."""
    bench = run_bench(EngineConfig(), duration_s=60.0, seed=42)
    assert bench.ticks >= 5400
    assert bench.p99_us < 1000.0, f"p99 {bench.p99_us:.1f} us"

    header, frames = generate_trace(FocusedReader(), 60.0, seed=7)
    catalog = builtin_catalog()

    def make_pipeline(provider):
        return ContentPipeline(
            catalog,
            ContentConfig(debounce_s=0.5),
            provider,
            dispatcher=ThreadedDispatcher(),
        )

    warm = make_pipeline(MockProvider())
    measure_tick_latencies(EngineConfig(), frames[:900], warm)  # warm code paths
    warm.close()

    pipelines = [make_pipeline(MockProvider()), make_pipeline(SlowProvider(5.0))]
    try:
        baseline, delayed = measure_paired_tick_latencies(
            EngineConfig(), frames, pipelines
        )
    finally:
        for pipeline in pipelines:
            pipeline.close()
    assert len(baseline.inference_ns) >= 5400
    baseline_median = statistics.median(baseline.inference_ns)
    delayed_median = statistics.median(delayed.inference_ns)
    drift = abs(delayed_median - baseline_median) / baseline_median
    assert drift < 0.05, (
        f"inference median drift {drift:.3f} "
        f"(baseline {baseline_median} ns, delayed {delayed_median} ns)"
    )
    # The whole tick, pipeline work included, stays under budget either way.
    for label, loop in (("baseline", baseline), ("delayed", delayed)):
        full_p99_us = percentile(sorted(loop.full_tick_ns), 0.99) / 1000.0
        assert full_p99_us < 1000.0, f"{label} full-tick p99 {full_p99_us:.1f} us"
    report(
        8,
        f"latency: bench p99 {bench.p99_us:.0f} us over {bench.ticks} ticks; "
        f"5 s provider delay moved the inference median {100 * drift:.1f}%",
    )


# -- C9 ------------------------------------------------------------------------


def test_c09_cache_coherence_random_sequences():
    """Provider calls never exceed distinct (exhibit, level) pairs; repeats hit."""
    rng = random.Random(909)
    catalog = builtin_catalog()
    exhibits = list(catalog)

    class Counting(MockProvider):
        calls = 0

        def generate(self, spec, exhibit):
            type(self).calls += 1
            return super().generate(spec, exhibit)

    for trial in range(10):
        Counting.calls = 0
        pipeline = ContentPipeline(
            catalog, ContentConfig(debounce_s=0.0), Counting()
        )
        distinct = set()
        t = 0.0
        for _ in range(400):
            exhibit = rng.choice(exhibits)
            level = rng.choice(list(EngagementState))
            distinct.add((exhibit, level))
            for _ in range(rng.randint(1, 3)):
                t += 1.0 / 90.0
                pipeline.on_tick(t, exhibit, level)
        assert Counting.calls <= len(distinct)
        # Replaying the identical request sequence is all cache hits.
        calls_before = Counting.calls
        rng2 = random.Random(909 + trial)
        for pair in sorted(distinct):
            t += 1.0 / 90.0
            pipeline.on_tick(t, pair[0], pair[1])
            t += 1.0 / 90.0
            pipeline.on_tick(t, pair[0], pair[1])
        assert Counting.calls == calls_before, "revisit triggered a provider call"
    report(9, "cache coherence: calls <= distinct pairs, revisits are zero-call")


# -- C10 -----------------------------------------------------------------------


def test_c10_word_budget_compliance():
    """Mock output honors bullet shape and the level word budgets."""
    provider = MockProvider()
    for exhibit in builtin_catalog().values():
        spec = build_prompt(exhibit, EngagementState.DISENGAGED)
        text = provider.generate(spec, exhibit)
        lines = text.splitlines()
        assert 2 <= len(lines) <= 3, f"{exhibit.exhibit_id}: {len(lines)} bullets"
        assert all(count_words(line) < 10 for line in lines)
        lo, hi = spec.word_budget
        assert lo <= count_words(text) <= hi

        for level, (lo, hi) in (
            (EngagementState.NEUTRAL, (25, 40)),
            (EngagementState.HIGHLY_ENGAGED, (40, 70)),
        ):
            spec = build_prompt(exhibit, level)
            assert spec.word_budget == (lo, hi)
            text = provider.generate(spec, exhibit)
            assert lo <= count_words(text) <= hi, (exhibit.exhibit_id, level)
    report(10, "word budgets: bullets 2-3 x <10 words; prose within level budgets")


# -- C11 -----------------------------------------------------------------------


def test_c11_metrics_conservation(tmp_path):
    """State time sums to the session duration; shares sum to 1; the timeline
    recomputation agrees with the report."""
    scenario = Mixed(
        segments=((FocusedReader(), 15.0), (Runner(2.5), 10.0), (Scanner(), 15.0))
    )
    header, frames = generate_trace(scenario, 40.0, seed=17)
    rows = []
    result = replay(
        ParsedTrace(header, tuple(frames)),
        EngineConfig(),
        timeline_sink=lambda tick: rows.append(tick),
    )
    metrics = result.metrics
    tick_s = 1.0 / header.nominal_rate

    total_state_time = math.fsum(metrics.state_time.values())
    assert abs(total_state_time - metrics.session_duration) <= tick_s
    assert math.fsum(metrics.state_distribution.values()) == pytest.approx(1.0, abs=1e-6)

    dict_rows = [
        {"timestamp": r.timestamp, "state": r.state.key} for r in rows
    ]
    recomputed = state_time_from_rows(dict_rows)
    for state in EngagementState:
        assert abs(recomputed[state] - metrics.state_time[state]) <= tick_s
    recomputed_total = math.fsum(recomputed.values())
    for state in EngagementState:
        share = recomputed[state] / recomputed_total
        assert share == pytest.approx(metrics.state_distribution[state], abs=1e-9)
    report(11, "metrics conservation and timeline/report agreement")

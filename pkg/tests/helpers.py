"""Shared test doubles and small builders."""

from __future__ import annotations

import time
from typing import Callable, Optional

from engagekit.content import CompletedJob, ContentRecord, ContentRequest
from engagekit.providers import MockProvider
from engagekit.signals import TelemetryFrame

FRAME_DT = 1.0 / 90.0


def make_frame(
    t: float,
    omega: float = 0.0,
    v: float = 0.0,
    target: Optional[str] = None,
    text: bool = False,
) -> TelemetryFrame:
    return TelemetryFrame(
        timestamp=t,
        head_angular_velocity=omega,
        locomotion_velocity=v,
        gaze_target=target,
        gaze_is_text=text,
    )


def frame_seq(specs) -> list[TelemetryFrame]:
    """Build frames at 90 Hz from (omega, v, target, text) tuples."""
    return [
        make_frame(i * FRAME_DT, omega, v, target, text)
        for i, (omega, v, target, text) in enumerate(specs)
    ]


class CountingProvider:
    """Mock provider that counts generate() calls."""

    provenance = "mock"

    def __init__(self):
        self._inner = MockProvider()
        self.calls = 0

    def generate(self, spec, exhibit) -> str:
        self.calls += 1
        return self._inner.generate(spec, exhibit)


class SlowProvider:
    """Sleeps on the worker thread before answering; counts calls."""

    provenance = "mock"

    def __init__(self, delay_s: float):
        self.delay_s = delay_s
        self._inner = MockProvider()
        self.calls = 0

    def generate(self, spec, exhibit) -> str:
        self.calls += 1
        time.sleep(self.delay_s)
        return self._inner.generate(spec, exhibit)


class FailingProvider:
    provenance = "mock"

    def generate(self, spec, exhibit) -> str:
        raise RuntimeError("synthetic provider failure")


class ManualDispatcher:
    """Dispatcher whose completions are released explicitly by the test."""

    def __init__(self):
        self.held: list[tuple[ContentRequest, Callable[[], ContentRecord]]] = []
        self._ready: list[CompletedJob] = []

    def submit(self, request, job):
        self.held.append((request, job))

    def release(self, count: Optional[int] = None, elapsed_s: float = 0.0):
        """Run held jobs and queue their completions for the next drain."""
        n = len(self.held) if count is None else count
        for request, job in self.held[:n]:
            try:
                record, error = job(), None
            except Exception as exc:  # pragma: no cover - not exercised
                record, error = None, exc
            self._ready.append(CompletedJob(request, record, error, elapsed_s))
        del self.held[:n]

    def drain(self):
        ready, self._ready = self._ready, []
        return ready

    def close(self):
        pass

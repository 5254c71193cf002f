"""The per-frame inference loop: normalize, fuse, window, smooth, gate, classify.

Frames arrive at the trace rate (nominally 90 Hz). Every frame updates dwell
accounting, the fused raw score, the rolling-window mean, and the gate
sustain timers. The smoothed score and the hysteresis classification advance
on a slower fixed-period state tick (default 10 Hz) so the interpolation
models inertia on a human timescale instead of per-frame noise. Gate
overrides are applied to the emitted state on every frame, so a sustained
run is reported as Disengaged immediately, not at the next state tick.

All time comes from frame timestamps; a fixed input sequence yields a
bitwise-identical output sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .config import EngineConfig
from .errors import OrderingError
from .fusion import EngagementEstimate, RollingWindow, compute_physical_score, fuse, smooth
from .gating import GateKind, GateState, classify, gated_state, update_gates
from .signals import DwellTracker, NormalizedSignals, TelemetryFrame, normalize_frame, update_dwell
from .states import EngagementState


@dataclass(frozen=True)
class TickResult:
    """Everything one processed frame exposes to metrics, content, and logs."""

    timestamp: float
    dt: float
    signals: NormalizedSignals
    estimate: EngagementEstimate
    gate: GateKind
    classified_state: EngagementState
    state: EngagementState
    state_updated: bool
    gaze_target: Optional[str]
    text_dwell_elapsed: float


class EngagementEngine:
    """Single-session inference state machine.

    One instance per session; ``process_frame`` is the only mutator and must
    be fed frames with strictly increasing timestamps.
    """

    def __init__(self, config: Optional[EngineConfig] = None, nominal_rate: Optional[float] = None):
        self.config = config or EngineConfig()
        rate = nominal_rate if nominal_rate is not None else self.config.nominal_rate
        ncfg = self.config.normalization
        self._max_dwell_dt = ncfg.max_frame_dt_factor / rate
        self._weights = self.config.fusion.weights()
        self._bands = self.config.gating.bands()
        self._gate_config = self.config.gating.gate_config()
        self._alpha = self.config.fusion.alpha
        self._window_first = self.config.fusion.pipeline_order == "window_then_smooth"
        self._update_period = 1.0 / self.config.fusion.state_update_hz
        self._window = RollingWindow(self.config.fusion.window_duration_s)
        self._tracker = DwellTracker()
        self._gate = GateState()
        self._smoothed = 0.0  # cold start leans disengaged
        self._classified: Optional[EngagementState] = None
        self._next_update_t: Optional[float] = None
        self._prev_t: Optional[float] = None

    @property
    def smoothed(self) -> float:
        return self._smoothed

    def process_frame(self, frame: TelemetryFrame) -> TickResult:
        """Advance the session by one frame and return the tick outcome."""
        t = frame.timestamp
        if self._prev_t is not None and t <= self._prev_t:
            raise OrderingError(
                f"frame timestamp {t!r} does not increase past {self._prev_t!r}"
            )
        dt = 0.0 if self._prev_t is None else t - self._prev_t
        self._prev_t = t

        ncfg = self.config.normalization
        self._tracker = update_dwell(
            self._tracker,
            frame,
            dt,
            grace_s=ncfg.gaze_miss_grace_s,
            max_frame_dt=self._max_dwell_dt,
        )
        signals = normalize_frame(
            frame,
            self._tracker,
            head_threshold=ncfg.head_scan_threshold_dps,
            gaze_threshold=ncfg.gaze_dwell_threshold_s,
            loco_baseline=ncfg.locomotion_baseline_mps,
            reading_threshold=ncfg.reading_dwell_threshold_s,
        )
        s_phys = compute_physical_score(signals, self._weights)
        e_raw = fuse(s_phys, float(signals.s_read), self._weights)

        if self._next_update_t is None:
            self._next_update_t = t
        state_updated = False
        if self._window_first:
            e_windowed = self._window.update(t, e_raw)
            while t >= self._next_update_t:
                self._smoothed = smooth(self._smoothed, e_windowed, self._alpha)
                # Weight sets are allowed to miss 1.0 by 1e-9, so the score
                # can stray past the unit interval by rounding;
                # classification requires [0, 1] exactly.
                self._smoothed = min(1.0, max(0.0, self._smoothed))
                self._classified = classify(self._smoothed, self._bands, self._classified)
                self._next_update_t += self._update_period
                state_updated = True
        else:
            # Swapped conditioning: interpolate the raw score at the state
            # tick, window the interpolated signal, classify the window mean.
            while t >= self._next_update_t:
                self._smoothed = smooth(self._smoothed, e_raw, self._alpha)
                self._smoothed = min(1.0, max(0.0, self._smoothed))
                self._next_update_t += self._update_period
                state_updated = True
            e_windowed = self._window.update(t, self._smoothed)
            if state_updated:
                score = min(1.0, max(0.0, e_windowed))
                self._classified = classify(score, self._bands, self._classified)

        self._gate, _ceiling = update_gates(
            self._gate, frame.locomotion_velocity, dt, self._gate_config
        )
        emitted = gated_state(self._classified, self._gate)

        return TickResult(
            timestamp=t,
            dt=dt,
            signals=signals,
            estimate=EngagementEstimate(
                e_raw=e_raw, e_windowed=e_windowed, e_smoothed=self._smoothed, timestamp=t
            ),
            gate=self._gate.active_gate,
            classified_state=self._classified,
            state=emitted,
            state_updated=state_updated,
            gaze_target=self._tracker.current_target,
            text_dwell_elapsed=self._tracker.text_dwell_elapsed,
        )

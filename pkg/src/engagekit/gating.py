"""Velocity safety gates and score-to-state classification with hysteresis.

Two gates watch locomotion velocity:

* walk gate (> 1.2 m/s sustained): caps the emitted state at Neutral,
* run gate (> 2.0 m/s sustained): forces the emitted state to Disengaged.

A gate activates only after its threshold has been exceeded continuously for
the sustain duration, and releases only after the velocity has stayed below
threshold minus a release hysteresis for the release duration, so single-frame
velocity spikes never gate. Gates override the emitted state; the underlying
smoothed score keeps evolving so release is seamless.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError, InvalidSignalError
from .states import EngagementState

WALK_GATE_THRESHOLD_MPS = 1.2
RUN_GATE_THRESHOLD_MPS = 2.0
GATE_SUSTAIN_S = 0.5
GATE_RELEASE_SUSTAIN_S = 0.5
GATE_RELEASE_HYSTERESIS_MPS = 0.1
HYSTERESIS_MARGIN = 0.05
DEFAULT_BAND_BOUNDS = (0.2, 0.4, 0.6, 0.8)


class GateKind(Enum):
    NONE = "none"
    WALK_CAP = "walk_cap"
    RUN_FORCE = "run_force"


@dataclass(frozen=True)
class GateConfig:
    walk_threshold: float = WALK_GATE_THRESHOLD_MPS
    run_threshold: float = RUN_GATE_THRESHOLD_MPS
    sustain_s: float = GATE_SUSTAIN_S
    release_sustain_s: float = GATE_RELEASE_SUSTAIN_S
    release_hysteresis: float = GATE_RELEASE_HYSTERESIS_MPS

    def __post_init__(self):
        if not (0.0 < self.walk_threshold < self.run_threshold):
            raise ConfigError(
                "need 0 < walk_threshold < run_threshold, got "
                f"{self.walk_threshold!r} and {self.run_threshold!r}"
            )
        if self.sustain_s < 0.0 or self.release_sustain_s < 0.0:
            raise ConfigError("gate sustain durations must be >= 0")
        if self.release_hysteresis < 0.0:
            raise ConfigError("gate release hysteresis must be >= 0")


@dataclass(frozen=True)
class GateState:
    """Sustain timers and activation flags for both gates.

    While a gate is inactive its timer accumulates time above threshold;
    while active it accumulates time below the release threshold. The run
    gate dominates the walk gate in ``active_gate``.
    """

    walk_sustain_elapsed: float = 0.0
    run_sustain_elapsed: float = 0.0
    walk_active: bool = False
    run_active: bool = False

    @property
    def active_gate(self) -> GateKind:
        if self.run_active:
            return GateKind.RUN_FORCE
        if self.walk_active:
            return GateKind.WALK_CAP
        return GateKind.NONE


def _step_gate(
    active: bool, sustain: float, v: float, threshold: float, dt: float, config: GateConfig
) -> tuple[bool, float]:
    if active:
        if v < threshold - config.release_hysteresis:
            sustain += dt
            if sustain >= config.release_sustain_s:
                return False, 0.0
            return True, sustain
        return True, 0.0
    if v > threshold:
        sustain += dt
        if sustain >= config.sustain_s:
            return True, 0.0
        return False, sustain
    return False, 0.0


def update_gates(
    gate: GateState, v: float, dt: float, config: GateConfig
) -> tuple[GateState, EngagementState]:
    """Advance both sustain timers by ``dt`` and return (new state, ceiling).

    The ceiling is ``HIGHLY_ENGAGED`` when no gate is active (no constraint),
    ``NEUTRAL`` under the walk gate, and ``DISENGAGED`` under the run gate.
    Note the run gate is a force, not a cap; see ``gated_state``.
    """
    if dt < 0.0:
        raise InvalidSignalError(f"dt must be >= 0, got {dt!r}")
    walk_active, walk_t = _step_gate(
        gate.walk_active, gate.walk_sustain_elapsed, v, config.walk_threshold, dt, config
    )
    run_active, run_t = _step_gate(
        gate.run_active, gate.run_sustain_elapsed, v, config.run_threshold, dt, config
    )
    new = GateState(
        walk_sustain_elapsed=walk_t,
        run_sustain_elapsed=run_t,
        walk_active=walk_active,
        run_active=run_active,
    )
    if run_active:
        ceiling = EngagementState.DISENGAGED
    elif walk_active:
        ceiling = EngagementState.NEUTRAL
    else:
        ceiling = EngagementState.HIGHLY_ENGAGED
    return new, ceiling


def gated_state(classified: EngagementState, gate: GateState) -> EngagementState:
    """Apply gate overrides to the classified state.

    Run gate forces exactly Disengaged; walk gate caps at Neutral; otherwise
    the classified state passes through unchanged.
    """
    if gate.run_active:
        return EngagementState.DISENGAGED
    if gate.walk_active:
        return min(classified, EngagementState.NEUTRAL)
    return classified


@dataclass(frozen=True)
class ClassifierBands:
    """Partition of [0, 1] into five contiguous state bands.

    ``bounds`` are the four inner boundaries in increasing order; band i is
    [bounds[i-1], bounds[i]) with the top band closed at 1.0. A transition
    away from the previous state happens only when the score leaves the
    previous band by more than ``hysteresis_margin``.
    """

    bounds: tuple[float, float, float, float] = DEFAULT_BAND_BOUNDS
    hysteresis_margin: float = HYSTERESIS_MARGIN

    def __post_init__(self):
        bounds = tuple(float(b) for b in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        if len(bounds) != len(EngagementState) - 1:
            raise ConfigError(f"expected {len(EngagementState) - 1} band bounds, got {len(bounds)}")
        if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
            raise ConfigError(f"band bounds must be strictly increasing: {bounds!r}")
        if bounds[0] <= 0.0 or bounds[-1] >= 1.0:
            raise ConfigError(f"band bounds must lie strictly inside (0, 1): {bounds!r}")
        if not (0.0 <= self.hysteresis_margin < 0.5):
            raise ConfigError(f"hysteresis_margin out of [0, 0.5): {self.hysteresis_margin!r}")

    def band_of(self, score: float) -> EngagementState:
        """The state whose band contains ``score`` (hysteresis-free)."""
        return EngagementState(bisect_right(self.bounds, score))

    def band_bounds(self, state: EngagementState) -> tuple[float, float]:
        low = self.bounds[state - 1] if state > 0 else 0.0
        high = self.bounds[state] if state < len(EngagementState) - 1 else 1.0
        return low, high


def classify(
    score: float,
    bands: ClassifierBands,
    previous: EngagementState | None = None,
) -> EngagementState:
    """Map a score in [0, 1] to a state, sticky around the previous band.

    With no previous state the containing band wins outright. Otherwise the
    previous state is kept while the score stays within its band widened by
    the hysteresis margin on both sides.
    """
    if not (0.0 <= score <= 1.0):
        raise InvalidSignalError(f"score out of [0,1]: {score!r}")
    if previous is not None:
        low, high = bands.band_bounds(previous)
        m = bands.hysteresis_margin
        if (low - m) <= score <= (high + m):
            return previous
    return bands.band_of(score)

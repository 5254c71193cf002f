"""Weighted fusion of normalized signals and temporal conditioning of the score.

The composite score is a two-level convex combination:

    physical = w_head * s_head + w_gaze * s_gaze + w_loco * s_loco
    raw      = w_phys * physical + w_read * s_read

with defaults w_phys/w_read = 0.75/0.25 and sub-weights 0.35/0.30/0.35.
The raw score is then averaged over a 4-second rolling window and pulled
toward the windowed value by linear interpolation (alpha = 0.35) to model
the inertia of engagement.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

from .errors import ConfigError, OrderingError
from .signals import NormalizedSignals

W_PHYS = 0.75
W_READ = 0.25
W_HEAD = 0.35
W_GAZE = 0.30
W_LOCO = 0.35
SMOOTHING_ALPHA = 0.35
WINDOW_DURATION_S = 4.0
STATE_UPDATE_HZ = 10.0
_WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class FusionWeights:
    """Fusion weights; each group must sum to 1 within 1e-9."""

    w_phys: float = W_PHYS
    w_read: float = W_READ
    w_head: float = W_HEAD
    w_gaze: float = W_GAZE
    w_loco: float = W_LOCO

    def __post_init__(self):
        for name in ("w_phys", "w_read", "w_head", "w_gaze", "w_loco"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ConfigError(f"{name} out of [0,1]: {v!r}")
        if abs(self.w_phys + self.w_read - 1.0) > _WEIGHT_SUM_TOL:
            raise ConfigError(
                f"w_phys + w_read must equal 1, got {self.w_phys + self.w_read!r}"
            )
        sub = self.w_head + self.w_gaze + self.w_loco
        if abs(sub - 1.0) > _WEIGHT_SUM_TOL:
            raise ConfigError(f"w_head + w_gaze + w_loco must equal 1, got {sub!r}")


@dataclass(frozen=True)
class EngagementEstimate:
    """The score at each conditioning stage for one tick."""

    e_raw: float
    e_windowed: float
    e_smoothed: float
    timestamp: float


def compute_physical_score(s: NormalizedSignals, weights: FusionWeights) -> float:
    """Convex combination of the three physical signals."""
    return weights.w_head * s.s_head + weights.w_gaze * s.s_gaze + weights.w_loco * s.s_loco


def fuse(s_phys: float, s_read: float, weights: FusionWeights) -> float:
    """Combine the physical score with the binary reading context."""
    return weights.w_phys * s_phys + weights.w_read * s_read


def smooth(previous: float, target: float, alpha: float = SMOOTHING_ALPHA) -> float:
    """One linear-interpolation step from ``previous`` toward ``target``.

    The result always lies between the two inputs; with a constant target the
    gap contracts by a factor of (1 - alpha) per step.
    """
    return previous + alpha * (target - previous)


class RollingWindow:
    """Streaming mean over a fixed-duration window of (timestamp, value) samples.

    Insertion and eviction are O(1) amortized: the sum is maintained
    incrementally with Neumaier compensation and re-derived exactly from the
    retained samples every ``REBASE_INTERVAL`` updates, so the streaming mean
    never drifts from a full rescan by more than a few ulps.
    """

    REBASE_INTERVAL = 4096

    def __init__(self, capacity_duration: float = WINDOW_DURATION_S):
        if not math.isfinite(capacity_duration) or capacity_duration <= 0.0:
            raise ConfigError(f"window duration must be > 0, got {capacity_duration!r}")
        self.capacity_duration = float(capacity_duration)
        self._samples: deque[tuple[float, float]] = deque()
        self._sum = 0.0
        self._comp = 0.0
        self._ops = 0

    def __len__(self) -> int:
        return len(self._samples)

    @property
    def samples(self) -> tuple[tuple[float, float], ...]:
        """Retained (timestamp, value) pairs, oldest first."""
        return tuple(self._samples)

    def _add(self, x: float) -> None:
        s = self._sum + x
        if abs(self._sum) >= abs(x):
            self._comp += (self._sum - s) + x
        else:
            self._comp += (x - s) + self._sum
        self._sum = s

    def _rebase(self) -> None:
        self._sum = math.fsum(v for _, v in self._samples)
        self._comp = 0.0
        self._ops = 0

    def mean(self) -> float:
        """Mean of retained values; 0.0 while the window is empty."""
        n = len(self._samples)
        if n == 0:
            return 0.0
        return (self._sum + self._comp) / n

    def update(self, t: float, value: float) -> float:
        """Insert (t, value), evict samples older than ``t - duration``, return the mean.

        ``t`` must not precede the newest retained timestamp.
        """
        if self._samples and t < self._samples[-1][0]:
            raise OrderingError(
                f"window timestamp went backwards: {t!r} < {self._samples[-1][0]!r}"
            )
        self._samples.append((t, value))
        self._add(value)
        cutoff = t - self.capacity_duration
        while self._samples[0][0] < cutoff:
            _, old = self._samples.popleft()
            self._add(-old)
        self._ops += 1
        if self._ops >= self.REBASE_INTERVAL:
            self._rebase()
        return self.mean()

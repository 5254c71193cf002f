"""The five discrete engagement states and their total order."""

from __future__ import annotations

from enum import IntEnum

from .errors import ConfigError


class EngagementState(IntEnum):
    """Ordered engagement levels; a larger value means more engaged."""

    HIGHLY_DISENGAGED = 0
    DISENGAGED = 1
    NEUTRAL = 2
    ENGAGED = 3
    HIGHLY_ENGAGED = 4

    @property
    def key(self) -> str:
        """Stable machine identifier used in files and configuration."""
        return self.name.lower()

    @property
    def label(self) -> str:
        """Short human-readable label used in report tables."""
        return _LABELS[self]

    @classmethod
    def from_key(cls, key: str) -> "EngagementState":
        try:
            return cls[str(key).upper()]
        except KeyError:
            raise ConfigError(f"unknown engagement state: {key!r}") from None


_LABELS = {
    EngagementState.HIGHLY_DISENGAGED: "Highly Dis.",
    EngagementState.DISENGAGED: "Disengaged",
    EngagementState.NEUTRAL: "Neutral",
    EngagementState.ENGAGED: "Engaged",
    EngagementState.HIGHLY_ENGAGED: "Highly Eng.",
}

# Column order for report tables: most engaged first.
REPORT_ORDER: tuple[EngagementState, ...] = tuple(reversed(list(EngagementState)))

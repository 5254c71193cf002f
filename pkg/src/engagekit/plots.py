"""Replay figures rendered next to the delimited outputs."""

from __future__ import annotations

from typing import Iterable

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .metrics import SessionMetrics
from .states import REPORT_ORDER, EngagementState

_GATE_COLORS = {"walk_cap": "#f3b65c", "run_force": "#e06666"}


def render_timeline_figure(rows: Iterable[dict], path) -> None:
    """Score curves plus the discrete state track, with gated spans shaded."""
    rows = list(rows)
    t = [r["timestamp"] for r in rows]
    fig, (ax_score, ax_state) = plt.subplots(
        2, 1, figsize=(10, 6), sharex=True, gridspec_kw={"height_ratios": [2, 1]}
    )

    ax_score.plot(t, [r["e_raw"] for r in rows], color="#bbbbbb", lw=0.6, label="raw")
    ax_score.plot(t, [r["e_windowed"] for r in rows], color="#4c72b0", lw=1.2, label="windowed")
    ax_score.plot(t, [r["e_smoothed"] for r in rows], color="#c44e52", lw=1.6, label="smoothed")
    ax_score.set_ylabel("engagement score")
    ax_score.set_ylim(-0.02, 1.02)
    ax_score.legend(loc="upper right", fontsize=8)

    for gate, color in _GATE_COLORS.items():
        span_start = None
        for i, row in enumerate(rows):
            active = row["gate"] == gate
            if active and span_start is None:
                span_start = t[i]
            elif not active and span_start is not None:
                ax_score.axvspan(span_start, t[i], color=color, alpha=0.25, lw=0)
                span_start = None
        if span_start is not None:
            ax_score.axvspan(span_start, t[-1], color=color, alpha=0.25, lw=0)

    state_values = [int(EngagementState.from_key(r["state"])) for r in rows]
    ax_state.step(t, state_values, where="post", color="#55a868", lw=1.4)
    ax_state.set_yticks([int(s) for s in EngagementState])
    ax_state.set_yticklabels([s.label for s in EngagementState], fontsize=8)
    ax_state.set_ylim(-0.3, len(EngagementState) - 0.7)
    ax_state.set_xlabel("time (s)")
    ax_state.set_ylabel("state")

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_distribution_figure(metrics: SessionMetrics, path) -> None:
    """Bar chart of the five-state share of session time."""
    fig, ax = plt.subplots(figsize=(7, 4))
    labels = [s.label for s in REPORT_ORDER]
    if metrics.state_distribution is None:
        shares = [0.0 for _ in REPORT_ORDER]
    else:
        shares = [100.0 * metrics.state_distribution[s] for s in REPORT_ORDER]
    bars = ax.bar(labels, shares, color="#4c72b0")
    for bar, share in zip(bars, shares):
        ax.text(
            bar.get_x() + bar.get_width() / 2,
            bar.get_height() + 0.5,
            f"{share:.1f}%",
            ha="center",
            fontsize=9,
        )
    ax.set_ylabel("% of session time")
    ax.set_ylim(0, max(100.0, max(shares) + 8 if shares else 100.0))
    ax.set_title(f"session {metrics.session_id}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

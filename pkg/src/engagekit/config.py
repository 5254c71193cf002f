"""Engine configuration: every tunable constant, its default, and YAML I/O.

Defaults reproduce the published operating point end to end: 30 deg/s head
threshold, 1.0 s gaze dwell, 1.2 m/s locomotion baseline, 2.0 s reading
dwell, 0.75/0.25 fusion split, 0.35/0.30/0.35 sub-weights, alpha = 0.35,
4 s window, and the 1.2 / 2.0 m/s safety gates. Config files are YAML with
one section per subsystem; command-line ``--set section.key=value``
overrides take precedence over file values.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from . import fusion, gating, signals
from .content import DEFAULT_WORD_BUDGETS, ContentConfig
from .errors import ConfigError
from .fusion import FusionWeights
from .gating import ClassifierBands, GateConfig
from .states import EngagementState


def _coerce_floats(obj, names: tuple[str, ...]) -> None:
    for name in names:
        raw = getattr(obj, name)
        try:
            value = float(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must be a number, got {raw!r}") from None
        object.__setattr__(obj, name, value)


@dataclass(frozen=True)
class NormalizationConfig:
    head_scan_threshold_dps: float = signals.HEAD_SCAN_THRESHOLD_DPS
    gaze_dwell_threshold_s: float = signals.GAZE_DWELL_THRESHOLD_S
    locomotion_baseline_mps: float = signals.LOCOMOTION_BASELINE_MPS
    reading_dwell_threshold_s: float = signals.READING_DWELL_THRESHOLD_S
    gaze_miss_grace_s: float = signals.GAZE_MISS_GRACE_S
    max_frame_dt_factor: float = 3.0

    def __post_init__(self):
        _coerce_floats(self, tuple(f.name for f in dataclasses.fields(self)))
        for name in (
            "head_scan_threshold_dps",
            "gaze_dwell_threshold_s",
            "locomotion_baseline_mps",
            "reading_dwell_threshold_s",
            "max_frame_dt_factor",
        ):
            if getattr(self, name) <= 0.0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if self.gaze_miss_grace_s < 0.0:
            raise ConfigError("gaze_miss_grace_s must be >= 0")


@dataclass(frozen=True)
class FusionConfig:
    w_phys: float = fusion.W_PHYS
    w_read: float = fusion.W_READ
    w_head: float = fusion.W_HEAD
    w_gaze: float = fusion.W_GAZE
    w_loco: float = fusion.W_LOCO
    alpha: float = fusion.SMOOTHING_ALPHA
    window_duration_s: float = fusion.WINDOW_DURATION_S
    state_update_hz: float = fusion.STATE_UPDATE_HZ
    # Which conditioning stage feeds the classifier: by default the raw score
    # is window-averaged first and then interpolated; the swapped order is
    # kept available for comparison runs.
    pipeline_order: str = "window_then_smooth"

    def __post_init__(self):
        numeric = tuple(
            f.name for f in dataclasses.fields(self) if f.name != "pipeline_order"
        )
        _coerce_floats(self, numeric)
        self.weights()  # reject bad weight sets eagerly
        if not (0.0 < self.alpha <= 1.0):
            raise ConfigError(f"alpha out of (0,1]: {self.alpha!r}")
        if self.window_duration_s <= 0.0:
            raise ConfigError("window_duration_s must be > 0")
        if self.state_update_hz <= 0.0:
            raise ConfigError("state_update_hz must be > 0")
        if self.pipeline_order not in ("window_then_smooth", "smooth_then_window"):
            raise ConfigError(
                "pipeline_order must be 'window_then_smooth' or 'smooth_then_window', "
                f"got {self.pipeline_order!r}"
            )

    def weights(self) -> FusionWeights:
        return FusionWeights(
            w_phys=self.w_phys,
            w_read=self.w_read,
            w_head=self.w_head,
            w_gaze=self.w_gaze,
            w_loco=self.w_loco,
        )


@dataclass(frozen=True)
class GatingConfig:
    walk_threshold_mps: float = gating.WALK_GATE_THRESHOLD_MPS
    run_threshold_mps: float = gating.RUN_GATE_THRESHOLD_MPS
    sustain_s: float = gating.GATE_SUSTAIN_S
    release_sustain_s: float = gating.GATE_RELEASE_SUSTAIN_S
    release_hysteresis_mps: float = gating.GATE_RELEASE_HYSTERESIS_MPS
    band_bounds: tuple[float, ...] = gating.DEFAULT_BAND_BOUNDS
    hysteresis_margin: float = gating.HYSTERESIS_MARGIN

    def __post_init__(self):
        _coerce_floats(
            self,
            (
                "walk_threshold_mps",
                "run_threshold_mps",
                "sustain_s",
                "release_sustain_s",
                "release_hysteresis_mps",
                "hysteresis_margin",
            ),
        )
        try:
            bounds = tuple(float(b) for b in self.band_bounds)
        except (TypeError, ValueError):
            raise ConfigError(f"band_bounds must be numbers, got {self.band_bounds!r}") from None
        object.__setattr__(self, "band_bounds", bounds)
        self.gate_config()
        self.bands()

    def gate_config(self) -> GateConfig:
        return GateConfig(
            walk_threshold=self.walk_threshold_mps,
            run_threshold=self.run_threshold_mps,
            sustain_s=self.sustain_s,
            release_sustain_s=self.release_sustain_s,
            release_hysteresis=self.release_hysteresis_mps,
        )

    def bands(self) -> ClassifierBands:
        return ClassifierBands(
            bounds=self.band_bounds, hysteresis_margin=self.hysteresis_margin
        )


@dataclass(frozen=True)
class EngineConfig:
    normalization: NormalizationConfig = field(default_factory=NormalizationConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    gating: GatingConfig = field(default_factory=GatingConfig)
    content: ContentConfig = field(default_factory=ContentConfig)
    nominal_rate: float = 90.0

    def __post_init__(self):
        _coerce_floats(self, ("nominal_rate",))
        if self.nominal_rate <= 0.0:
            raise ConfigError("nominal_rate must be > 0")

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "normalization": dataclasses.asdict(self.normalization),
            "fusion": dataclasses.asdict(self.fusion),
            "gating": dataclasses.asdict(self.gating),
            "content": dataclasses.asdict(self.content),
            "nominal_rate": self.nominal_rate,
        }
        d["gating"]["band_bounds"] = list(self.gating.band_bounds)
        d["content"]["word_budgets"] = {
            state.key: list(self.content.word_budgets[state]) for state in EngagementState
        }
        return d

    def fingerprint(self) -> str:
        """Short stable hash of the effective configuration."""
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


_SECTIONS = ("normalization", "fusion", "gating", "content")


def _check_keys(section: str, data: Mapping[str, Any], allowed: set[str]) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {sorted(unknown)}")


def config_from_dict(data: Mapping[str, Any]) -> EngineConfig:
    """Build an ``EngineConfig`` from a nested plain dict, rejecting typos."""
    if not isinstance(data, Mapping):
        raise ConfigError(f"config root must be a mapping, got {type(data).__name__}")
    _check_keys("config", data, set(_SECTIONS) | {"nominal_rate"})

    def section(name: str) -> dict[str, Any]:
        value = data.get(name, {})
        if not isinstance(value, Mapping):
            raise ConfigError(f"section {name!r} must be a mapping")
        return dict(value)

    norm = section("normalization")
    _check_keys("normalization", norm, {f.name for f in dataclasses.fields(NormalizationConfig)})
    fus = section("fusion")
    _check_keys("fusion", fus, {f.name for f in dataclasses.fields(FusionConfig)})
    gat = section("gating")
    _check_keys("gating", gat, {f.name for f in dataclasses.fields(GatingConfig)})
    if "band_bounds" in gat:
        gat["band_bounds"] = tuple(gat["band_bounds"])
    con = section("content")
    _check_keys("content", con, {f.name for f in dataclasses.fields(ContentConfig)})
    if "word_budgets" in con:
        budgets = {}
        for key, bounds in dict(con["word_budgets"]).items():
            state = key if isinstance(key, EngagementState) else EngagementState.from_key(key)
            lo, hi = bounds
            budgets[state] = (int(lo), int(hi))
        merged = dict(DEFAULT_WORD_BUDGETS)
        merged.update(budgets)
        con["word_budgets"] = merged

    return EngineConfig(
        normalization=NormalizationConfig(**norm),
        fusion=FusionConfig(**fus),
        gating=GatingConfig(**gat),
        content=ContentConfig(**con),
        nominal_rate=float(data.get("nominal_rate", 90.0)),
    )


def load_config(path: str | Path | None) -> EngineConfig:
    """Load a YAML config file; ``None`` yields the defaults."""
    if path is None:
        return EngineConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return config_from_dict(data)


def dump_config(config: EngineConfig) -> str:
    """Render the effective configuration as YAML."""
    return yaml.safe_dump(config.to_dict(), sort_keys=True, default_flow_style=None)


def apply_overrides(config: EngineConfig, overrides: list[str]) -> EngineConfig:
    """Apply ``section.key=value`` overrides (values parsed as YAML scalars)."""
    if not overrides:
        return config
    data = config.to_dict()
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        dotted, raw_value = item.split("=", 1)
        path = dotted.strip().split(".")
        if not all(path):
            raise ConfigError(f"bad override key {dotted!r}")
        try:
            value = yaml.safe_load(raw_value)
        except yaml.YAMLError as exc:
            raise ConfigError(f"bad override value {raw_value!r}: {exc}") from exc
        node: Any = data
        for part in path[:-1]:
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"unknown config path {dotted!r}")
            node = node[part]
        if not isinstance(node, dict) or path[-1] not in node:
            raise ConfigError(f"unknown config path {dotted!r}")
        node[path[-1]] = value
    return config_from_dict(data)

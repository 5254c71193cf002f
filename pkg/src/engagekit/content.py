"""Engagement-paced exhibit content: prompts, caching, and asynchronous delivery.

Content is generated per (exhibit, engagement level) by a pluggable provider
and cached under that composite key so revisits are instant. Dispatch never
blocks the inference loop: providers run behind a dispatcher and completions
are applied as ordered events on a later tick. A provider that times out or
misbehaves is replaced by a static fallback built from the exhibit's curated
facts, so every request resolves to exactly one record.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional

from .errors import ConfigError, TraceFormatError
from .states import EngagementState

log = logging.getLogger(__name__)

DEBOUNCE_S = 2.0
PROVIDER_TIMEOUT_S = 4.0

# Word budgets per level: (min, max) whitespace tokens.
DEFAULT_WORD_BUDGETS: dict[EngagementState, tuple[int, int]] = {
    EngagementState.HIGHLY_DISENGAGED: (6, 20),
    EngagementState.DISENGAGED: (6, 30),
    EngagementState.NEUTRAL: (25, 40),
    EngagementState.ENGAGED: (35, 55),
    EngagementState.HIGHLY_ENGAGED: (40, 70),
}

SYSTEM_INSTRUCTION = (
    "You are a museum guide writing exhibit panel text. "
    "You must stay within the requested word count. "
    "Ground every statement in the curated facts provided; do not invent details."
)

PROMPT_STRATEGIES: dict[EngagementState, str] = {
    EngagementState.HIGHLY_DISENGAGED: "Format as 1-2 short bullet points, each under 10 words.",
    EngagementState.DISENGAGED: "Format as 2-3 short bullet points, each under 10 words.",
    EngagementState.NEUTRAL: "Provide essential historical facts in a clear and concise manner.",
    EngagementState.ENGAGED: "Explain in a friendly narrative tone and include one memorable detail.",
    EngagementState.HIGHLY_ENGAGED: "Scholarly style with rich detail; include contextual anecdotes.",
}


def count_words(text: str) -> int:
    """Whitespace-token count; the word-count contract for all records."""
    return len(text.split())


@dataclass(frozen=True)
class Exhibit:
    """A catalog entry: stable id, display title, and curated source facts."""

    exhibit_id: str
    title: str
    base_facts: str

    def __post_init__(self):
        if not self.exhibit_id:
            raise ConfigError("exhibit_id must be non-empty")
        if not self.base_facts.strip():
            raise ConfigError(f"exhibit {self.exhibit_id!r} needs non-empty base_facts")


@dataclass(frozen=True)
class PromptSpec:
    """Two-part prompt plus the word budget the output must satisfy."""

    system_instruction: str
    user_prompt: str
    word_budget: tuple[int, int]

    def __post_init__(self):
        lo, hi = self.word_budget
        if not (1 <= lo <= hi):
            raise ConfigError(f"invalid word budget: {self.word_budget!r}")


@dataclass(frozen=True)
class ContentRecord:
    """One generated (or fallback) text keyed by exhibit and level."""

    exhibit_id: str
    level: EngagementState
    text: str
    word_count: int
    provenance: str  # mock | remote | static-fallback
    generated_at: float = 0.0

    def __post_init__(self):
        if not self.text:
            raise ValueError("record text must be non-empty")
        actual = count_words(self.text)
        if self.word_count != actual:
            raise ValueError(
                f"word_count {self.word_count} != whitespace token count {actual}"
            )


@dataclass(frozen=True)
class ContentRequest:
    """Staleness bookkeeping for one in-flight generation."""

    request_id: int
    exhibit_id: str
    level: EngagementState
    issued_at_state_seq: int
    issued_at: float


class ApplyOutcome(Enum):
    ACCEPTED = "accepted"
    DISCARDED_STALE = "discarded-stale"


@dataclass(frozen=True)
class DisplayEvent:
    """A panel content change presented to the session."""

    timestamp: float
    exhibit_id: str
    level: EngagementState
    record: ContentRecord


@dataclass(frozen=True)
class ContentConfig:
    """Settings for prompt budgets and pipeline pacing."""

    word_budgets: Mapping[EngagementState, tuple[int, int]] = field(
        default_factory=lambda: dict(DEFAULT_WORD_BUDGETS)
    )
    debounce_s: float = DEBOUNCE_S
    provider_timeout_s: float = PROVIDER_TIMEOUT_S
    provider: str = "mock"
    endpoint: Optional[str] = None
    credential_env: str = "ENGAGEKIT_PROVIDER_TOKEN"
    cache_path: Optional[str] = None
    live_swap: bool = False
    dispatch: str = "auto"  # auto | inline | threaded

    def __post_init__(self):
        for name in ("debounce_s", "provider_timeout_s"):
            raw = getattr(self, name)
            try:
                object.__setattr__(self, name, float(raw))
            except (TypeError, ValueError):
                raise ConfigError(f"{name} must be a number, got {raw!r}") from None
        for state in EngagementState:
            if state not in self.word_budgets:
                raise ConfigError(f"missing word budget for {state.key}")
            try:
                lo, hi = self.word_budgets[state]
                valid = 1 <= int(lo) <= int(hi)
            except (TypeError, ValueError):
                valid = False
            if not valid:
                raise ConfigError(
                    f"invalid word budget for {state.key}: {self.word_budgets[state]!r}"
                )
        if self.provider not in ("mock", "remote"):
            raise ConfigError(f"provider must be 'mock' or 'remote', got {self.provider!r}")
        if self.dispatch not in ("auto", "inline", "threaded"):
            raise ConfigError(f"dispatch must be auto/inline/threaded, got {self.dispatch!r}")
        if self.debounce_s < 0.0:
            raise ConfigError("debounce_s must be >= 0")
        if self.provider_timeout_s <= 0.0:
            raise ConfigError("provider_timeout_s must be > 0")


def build_prompt(
    exhibit: Exhibit,
    level: EngagementState,
    word_budgets: Mapping[EngagementState, tuple[int, int]] = DEFAULT_WORD_BUDGETS,
) -> PromptSpec:
    """Instantiate the level's prompt template for one exhibit."""
    try:
        strategy = PROMPT_STRATEGIES[level]
        lo, hi = word_budgets[level]
    except KeyError:
        raise ConfigError(f"no prompt strategy or word budget for level {level!r}") from None
    user_prompt = (
        f"Exhibit: {exhibit.title}\n"
        f"Curated facts: {exhibit.base_facts}\n"
        f"Task: {strategy}\n"
        f"Write between {lo} and {hi} words in total."
    )
    return PromptSpec(SYSTEM_INSTRUCTION, user_prompt, (int(lo), int(hi)))


def fallback_record(exhibit: Exhibit, level: EngagementState, t: float) -> ContentRecord:
    """Static stand-in served when the provider fails or times out."""
    text = exhibit.base_facts.strip()
    return ContentRecord(
        exhibit_id=exhibit.exhibit_id,
        level=level,
        text=text,
        word_count=count_words(text),
        provenance="static-fallback",
        generated_at=t,
    )


# ---------------------------------------------------------------------------
# Catalog I/O


def load_catalog(path: str | Path) -> dict[str, Exhibit]:
    """Read a line-delimited catalog file into an id-keyed mapping."""
    catalog: dict[str, Exhibit] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                exhibit = Exhibit(
                    exhibit_id=str(obj["exhibit_id"]),
                    title=str(obj.get("title", "")),
                    base_facts=str(obj["base_facts"]),
                )
            except (json.JSONDecodeError, KeyError, TypeError, ConfigError) as exc:
                raise TraceFormatError(f"bad catalog record: {exc}", lineno) from exc
            if exhibit.exhibit_id in catalog:
                raise TraceFormatError(
                    f"duplicate exhibit_id {exhibit.exhibit_id!r}", lineno
                )
            catalog[exhibit.exhibit_id] = exhibit
    return catalog


def save_catalog(catalog: Mapping[str, Exhibit], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for exhibit in catalog.values():
            fh.write(
                json.dumps(
                    {
                        "exhibit_id": exhibit.exhibit_id,
                        "title": exhibit.title,
                        "base_facts": exhibit.base_facts,
                    }
                )
                + "\n"
            )


def builtin_catalog() -> dict[str, Exhibit]:
    """Small built-in exhibit set used by the synthetic scenarios."""
    exhibits = [
        Exhibit(
            "copper-brazier",
            "Copper Brazier with Cover",
            "A lidded copper brazier used as a portable room heater in wealthy "
            "town houses. The engraved floral lid marked the owner's social "
            "standing and the piece was displayed in rooms reserved for guests.",
        ),
        Exhibit(
            "wooden-loom",
            "Household Wooden Loom",
            "A hand-operated wooden loom on which families wove woolen cloth "
            "for clothing and trade. Patterns were passed down within "
            "households and the loom often occupied the main working room.",
        ),
        Exhibit(
            "bridal-costume",
            "Embroidered Bridal Costume",
            "A festive bridal costume with dense gold-thread embroidery sewn "
            "over several months. Each district kept its own motifs, so the "
            "dress identified the bride's home region at a glance.",
        ),
        Exhibit(
            "flintlock-musket",
            "Decorated Flintlock Musket",
            "A long-barreled flintlock musket with silver inlay produced by "
            "local gunsmiths. Such pieces were carried on ceremonial occasions "
            "and their decoration mattered as much as their function.",
        ),
        Exhibit(
            "carved-cradle",
            "Carved Wooden Cradle",
            "A rocking cradle carved from walnut and painted with protective "
            "symbols. Cradles were family heirlooms handed from one generation "
            "to the next and repaired rather than replaced.",
        ),
        Exhibit(
            "stone-hearth",
            "Open Stone Hearth",
            "The open stone hearth formed the center of the household, used "
            "for cooking, heating, and gathering. Its hood and tools show "
            "decades of daily use and continual mending.",
        ),
    ]
    return {e.exhibit_id: e for e in exhibits}


# ---------------------------------------------------------------------------
# Cache


class ContentCache:
    """In-memory record store keyed by (exhibit_id, level).

    Reads may happen from any thread; writes take the lock. Optionally
    persists to a line-delimited file for warm starts across replays.
    """

    def __init__(self, path: str | Path | None = None):
        self._records: dict[tuple[str, EngagementState], ContentRecord] = {}
        self._lock = threading.Lock()
        self._path = Path(path) if path is not None else None
        if self._path is not None and self._path.exists():
            self.load(self._path)

    def __len__(self) -> int:
        return len(self._records)

    def get(self, exhibit_id: str, level: EngagementState) -> Optional[ContentRecord]:
        return self._records.get((exhibit_id, level))

    def put(self, record: ContentRecord) -> None:
        with self._lock:
            self._records[(record.exhibit_id, record.level)] = record

    def load(self, path: str | Path) -> None:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                    record = ContentRecord(
                        exhibit_id=str(obj["exhibit_id"]),
                        level=EngagementState.from_key(obj["level"]),
                        text=str(obj["text"]),
                        word_count=int(obj["word_count"]),
                        provenance=str(obj["provenance"]),
                    )
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise TraceFormatError(f"bad cache record: {exc}", lineno) from exc
                self.put(record)

    def save(self, path: str | Path) -> None:
        with self._lock:
            records = list(self._records.values())
        with open(path, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(
                    json.dumps(
                        {
                            "exhibit_id": record.exhibit_id,
                            "level": record.level.key,
                            "text": record.text,
                            "word_count": record.word_count,
                            "provenance": record.provenance,
                        }
                    )
                    + "\n"
                )


# ---------------------------------------------------------------------------
# Dispatchers


@dataclass(frozen=True)
class CompletedJob:
    request: ContentRequest
    record: Optional[ContentRecord]
    error: Optional[Exception]
    elapsed_s: float


class InlineDispatcher:
    """Runs provider jobs synchronously at dispatch; results surface on the
    next drain. Deterministic, intended for fast providers (mock, replay)."""

    def __init__(self):
        self._done: list[CompletedJob] = []

    def submit(self, request: ContentRequest, job: Callable[[], ContentRecord]) -> None:
        t0 = time.perf_counter()
        record: Optional[ContentRecord] = None
        error: Optional[Exception] = None
        try:
            record = job()
        except Exception as exc:  # provider failures become fallbacks downstream
            error = exc
        self._done.append(CompletedJob(request, record, error, time.perf_counter() - t0))

    def drain(self) -> list[CompletedJob]:
        done, self._done = self._done, []
        return done

    def close(self) -> None:
        pass


class ThreadedDispatcher:
    """Runs each provider job on a daemon thread; completions queue up and are
    drained by the loop thread, keeping provider latency off the tick path."""

    def __init__(self):
        self._queue: "queue.Queue[CompletedJob]" = queue.Queue()

    def submit(self, request: ContentRequest, job: Callable[[], ContentRecord]) -> None:
        def run():
            t0 = time.perf_counter()
            record: Optional[ContentRecord] = None
            error: Optional[Exception] = None
            try:
                record = job()
            except Exception as exc:
                error = exc
            self._queue.put(CompletedJob(request, record, error, time.perf_counter() - t0))

        threading.Thread(
            target=run, daemon=True, name=f"content-req-{request.request_id}"
        ).start()

    def drain(self) -> list[CompletedJob]:
        done: list[CompletedJob] = []
        while True:
            try:
                done.append(self._queue.get_nowait())
            except queue.Empty:
                return done

    def close(self) -> None:
        pass


def make_dispatcher(mode: str, provider) -> "InlineDispatcher | ThreadedDispatcher":
    """Resolve the dispatch mode; 'auto' keeps remote providers off-thread."""
    if mode == "inline":
        return InlineDispatcher()
    if mode == "threaded":
        return ThreadedDispatcher()
    if getattr(provider, "provenance", "mock") == "remote":
        return ThreadedDispatcher()
    return InlineDispatcher()


# ---------------------------------------------------------------------------
# Pipeline


@dataclass
class _Pending:
    request: ContentRequest
    issued_wall: float


class ContentPipeline:
    """Turns engagement-level changes into cached, level-appropriate content.

    Driven once per tick with the current trace time, gazed exhibit, and
    engagement level. A generation request is issued only after the level has
    been stable for the debounce window and only when the (exhibit, level)
    pair is neither cached nor already in flight. Display events are panel
    content changes; with ``live_swap`` off, a swap under an ongoing dwell is
    deferred until the reader moves off the exhibit.
    """

    def __init__(
        self,
        catalog: Mapping[str, Exhibit],
        config: ContentConfig,
        provider,
        dispatcher=None,
        cache: Optional[ContentCache] = None,
        wall_clock: Callable[[], float] = time.monotonic,
    ):
        self._catalog = dict(catalog)
        self._config = config
        self._provider = provider
        self._dispatcher = dispatcher if dispatcher is not None else make_dispatcher(
            config.dispatch, provider
        )
        self._cache = cache if cache is not None else ContentCache(config.cache_path)
        self._wall_clock = wall_clock
        self._level: Optional[EngagementState] = None
        self._level_since = 0.0
        self._state_seq = 0
        self._next_request_id = 1
        self._pending: dict[tuple[str, EngagementState], _Pending] = {}
        self._resolved_ids: set[int] = set()
        self._panel: dict[str, ContentRecord] = {}
        self._pending_panel: dict[str, ContentRecord] = {}
        self._prev_gaze: Optional[str] = None
        self._opened_target: Optional[str] = None
        self._ready_events: list[DisplayEvent] = []
        self.provider_calls = 0

    @property
    def cache(self) -> ContentCache:
        return self._cache

    @property
    def state_seq(self) -> int:
        """State-transition sequence number, bumped on every level change."""
        return self._state_seq

    @property
    def pending_count(self) -> int:
        return len(self._pending)

    def displayed(self, exhibit_id: str) -> Optional[ContentRecord]:
        """The record currently on the exhibit's panel, if any."""
        return self._panel.get(exhibit_id)

    def on_tick(
        self, t: float, gaze_target: Optional[str], level: EngagementState
    ) -> list[DisplayEvent]:
        """Advance the pipeline by one tick and return new display events."""
        if level != self._level:
            self._level = level
            self._level_since = t
            self._state_seq += 1

        # Deferred swaps apply once the reader has moved off the exhibit.
        previous_gaze = self._prev_gaze
        if previous_gaze is not None and gaze_target != previous_gaze:
            pending = self._pending_panel.pop(previous_gaze, None)
            if pending is not None:
                self._panel[previous_gaze] = pending
                self._ready_events.append(
                    DisplayEvent(t, previous_gaze, pending.level, pending)
                )
        # A freshly opened panel may refresh immediately; an ongoing dwell
        # defers swaps (unless live_swap).
        self._opened_target = gaze_target if gaze_target != previous_gaze else None
        self._prev_gaze = gaze_target

        for job in self._dispatcher.drain():
            self._handle_completion(job, t)

        self._sweep_timeouts(t)

        if (
            gaze_target is not None
            and self._level is not None
            and (t - self._level_since) >= self._config.debounce_s
        ):
            self._ensure_content(gaze_target, t)

        events, self._ready_events = self._ready_events, []
        return events

    def apply_response(
        self, record: ContentRecord, request: ContentRequest, t: float
    ) -> ApplyOutcome:
        """Accept one provider response.

        The record is cached unconditionally (and idempotently: a duplicate
        response for an already-resolved request is ignored). It is displayed
        only when the engagement level in force still matches the level the
        request was issued for.
        """
        if request.request_id in self._resolved_ids:
            return ApplyOutcome.DISCARDED_STALE
        self._resolved_ids.add(request.request_id)
        self._pending.pop((request.exhibit_id, request.level), None)
        self._cache.put(record)
        if request.level != self._level:
            return ApplyOutcome.DISCARDED_STALE
        self._display(record, t)
        return ApplyOutcome.ACCEPTED

    def close(self) -> None:
        """Stop dispatching and persist the cache when so configured."""
        self._dispatcher.close()
        if self._config.cache_path is not None:
            self._cache.save(self._config.cache_path)

    # -- internals ----------------------------------------------------------

    def _handle_completion(self, job: CompletedJob, t: float) -> None:
        request = job.request
        if request.request_id in self._resolved_ids:
            # Late arrival after a timeout fallback: keep the real text for
            # revisits, but the request already resolved so nothing displays.
            if job.error is None and job.record is not None:
                self._cache.put(job.record)
            return
        timed_out = job.elapsed_s > self._config.provider_timeout_s
        if job.error is None and not timed_out:
            self.apply_response(job.record, request, t)
            return
        exhibit = self._catalog[request.exhibit_id]
        if job.error is not None:
            log.error(
                "provider failed for (%s, %s): %s; serving static fallback",
                request.exhibit_id,
                request.level.key,
                job.error,
            )
        else:
            log.warning(
                "provider exceeded %.1fs for (%s, %s); serving static fallback",
                self._config.provider_timeout_s,
                request.exhibit_id,
                request.level.key,
            )
            if job.record is not None:
                # The slow-but-valid text is still worth keeping for revisits.
                self._cache.put(job.record)
        self.apply_response(fallback_record(exhibit, request.level, t), request, t)

    def _sweep_timeouts(self, t: float) -> None:
        if not self._pending:
            return
        now = self._wall_clock()
        for key, pend in list(self._pending.items()):
            if now - pend.issued_wall <= self._config.provider_timeout_s:
                continue
            del self._pending[key]
            self._resolved_ids.add(pend.request.request_id)
            log.warning(
                "provider timed out for (%s, %s); serving static fallback",
                key[0],
                key[1].key,
            )
            record = fallback_record(self._catalog[key[0]], key[1], t)
            self._cache.put(record)
            if pend.request.level == self._level:
                self._display(record, t)
            # A late completion for this request is cached by the dispatcher
            # drain path but never displayed (already resolved).

    def _ensure_content(self, exhibit_id: str, t: float) -> None:
        exhibit = self._catalog.get(exhibit_id)
        if exhibit is None:
            return  # gaze hit something that is not a narratable exhibit
        level = self._level
        cached = self._cache.get(exhibit_id, level)
        if cached is not None:
            if self._panel.get(exhibit_id) == cached:
                return
            self._display(cached, t)
            return
        key = (exhibit_id, level)
        if key in self._pending:
            return
        request = ContentRequest(
            request_id=self._next_request_id,
            exhibit_id=exhibit_id,
            level=level,
            issued_at_state_seq=self._state_seq,
            issued_at=t,
        )
        self._next_request_id += 1
        spec = build_prompt(exhibit, level, self._config.word_budgets)
        provider = self._provider
        provenance = getattr(provider, "provenance", "mock")

        def job() -> ContentRecord:
            text = provider.generate(spec, exhibit)
            return ContentRecord(
                exhibit_id=exhibit_id,
                level=level,
                text=text,
                word_count=count_words(text),
                provenance=provenance,
                generated_at=request.issued_at,
            )

        self._pending[key] = _Pending(request, self._wall_clock())
        self.provider_calls += 1
        self._dispatcher.submit(request, job)

    def _display(self, record: ContentRecord, t: float) -> None:
        exhibit_id = record.exhibit_id
        current = self._panel.get(exhibit_id)
        if current == record:
            self._pending_panel.pop(exhibit_id, None)
            return
        mid_dwell = self._prev_gaze == exhibit_id and self._opened_target != exhibit_id
        if current is not None and mid_dwell and not self._config.live_swap:
            if self._pending_panel.get(exhibit_id) != record:
                self._pending_panel[exhibit_id] = record
            return
        self._panel[exhibit_id] = record
        self._pending_panel.pop(exhibit_id, None)
        self._ready_events.append(DisplayEvent(t, exhibit_id, record.level, record))


def catalog_or_builtin(path: str | Path | None) -> dict[str, Exhibit]:
    """Load a catalog file when given, else the built-in exhibit set."""
    if path is None:
        return builtin_catalog()
    return load_catalog(path)

"""Content providers: the deterministic mock and a generic HTTP backend.

A provider turns a ``PromptSpec`` plus an ``Exhibit`` into text. The mock
synthesizes text from the exhibit's curated facts and exactly honors the word
budget and bullet formatting asked for in the prompt; it exists so the whole
pipeline is testable without a network. The remote provider speaks a minimal
JSON POST contract and makes no assumptions about the model behind it.
"""

from __future__ import annotations

import itertools
import os
import re

from .content import ContentConfig, Exhibit, PromptSpec
from .errors import ConfigError, ProviderError

_BULLET_COUNT_RE = re.compile(r"(\d+)\s*-\s*(\d+)\s+short bullet points")
_BULLET_CAP_RE = re.compile(r"each under (\d+) words")


class MockProvider:
    """Deterministic test double: same spec and exhibit, same text, always."""

    provenance = "mock"

    def generate(self, spec: PromptSpec, exhibit: Exhibit) -> str:
        lo, hi = spec.word_budget
        pool = exhibit.base_facts.split() or exhibit.title.split() or ["exhibit"]
        if "bullet" in spec.user_prompt.lower():
            return self._bullets(spec, pool)
        target = (lo + hi) // 2
        words = list(itertools.islice(itertools.cycle(pool), target))
        text = " ".join(words)
        if not text.endswith("."):
            text += "."
        return text[0].upper() + text[1:]

    def _bullets(self, spec: PromptSpec, pool: list[str]) -> str:
        lo, hi = spec.word_budget
        count_match = _BULLET_COUNT_RE.search(spec.user_prompt)
        n_bullets = int(count_match.group(2)) if count_match else 2
        cap_match = _BULLET_CAP_RE.search(spec.user_prompt)
        per_bullet_cap = (int(cap_match.group(1)) if cap_match else 10) - 1
        per_bullet = min(per_bullet_cap, max(2, ((lo + hi) // 2) // n_bullets))
        # Keep the total inside the budget even for unusual configurations.
        while n_bullets * per_bullet > hi and per_bullet > 1:
            per_bullet -= 1
        while n_bullets * per_bullet < lo and per_bullet < per_bullet_cap:
            per_bullet += 1
        stream = itertools.cycle(pool)
        lines = []
        for _ in range(n_bullets):
            words = list(itertools.islice(stream, per_bullet))
            line = " ".join(words)
            if not line.endswith("."):
                line += "."
            lines.append(line[0].upper() + line[1:])
        return "\n".join(lines)


class RemoteProvider:
    """Generic HTTP provider: one JSON POST per generation.

    Request body: ``{"system_instruction", "user_prompt", "min_words",
    "max_words"}``. Expected response: JSON with a non-empty ``"text"``
    field. The bearer credential is read from the configured environment
    variable when present; transport errors and malformed bodies raise
    ``ProviderError`` and are handled by the pipeline's fallback path.
    """

    provenance = "remote"

    def __init__(
        self,
        endpoint: str,
        credential_env: str = "ENGAGEKIT_PROVIDER_TOKEN",
        timeout_s: float = 4.0,
    ):
        if not endpoint:
            raise ConfigError("remote provider requires an endpoint URL")
        import requests  # deferred: mock-only usage never touches the network stack

        self._requests = requests
        self._endpoint = endpoint
        self._timeout_s = timeout_s
        self._session = requests.Session()
        token = os.environ.get(credential_env)
        if token:
            self._session.headers["Authorization"] = f"Bearer {token}"

    def generate(self, spec: PromptSpec, exhibit: Exhibit) -> str:
        lo, hi = spec.word_budget
        payload = {
            "system_instruction": spec.system_instruction,
            "user_prompt": spec.user_prompt,
            "min_words": lo,
            "max_words": hi,
        }
        try:
            response = self._session.post(
                self._endpoint, json=payload, timeout=self._timeout_s
            )
            response.raise_for_status()
            body = response.json()
        except self._requests.RequestException as exc:
            raise ProviderError(f"request to {self._endpoint} failed: {exc}") from exc
        except ValueError as exc:
            raise ProviderError(f"non-JSON response from {self._endpoint}") from exc
        text = body.get("text") if isinstance(body, dict) else None
        if not isinstance(text, str) or not text.strip():
            raise ProviderError(f"malformed response from {self._endpoint}: missing text")
        return text.strip()


def make_provider(config: ContentConfig) -> "MockProvider | RemoteProvider":
    """Build the provider selected by the content configuration."""
    if config.provider == "mock":
        return MockProvider()
    if config.provider == "remote":
        return RemoteProvider(
            endpoint=config.endpoint or "",
            credential_env=config.credential_env,
            timeout_s=config.provider_timeout_s,
        )
    raise ConfigError(f"unknown provider {config.provider!r}")

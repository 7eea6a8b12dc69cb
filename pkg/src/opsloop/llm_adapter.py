"""Remote summarizer speaking to a chat-completion-style HTTP endpoint.

The adapter enforces the summarizer budget on its own side: responses longer
than the budget are truncated, and any transport failure after retries falls
back to the local extractive summarizer rather than aborting the run. The
acceptance suite never needs this module; it exists so a hosted model can be
swapped in via configuration.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass
from typing import Sequence

import httpx

from .compressor import CriticalItem, ExtractiveSummarizer
from .errors import ConfigError

logger = logging.getLogger(__name__)

AUTH_TOKEN_ENV = "OPSLOOP_API_TOKEN"


@dataclass(frozen=True)
class RemoteConfig:
    endpoint: str
    model: str
    timeout_seconds: float = 30.0
    max_retries: int = 2
    max_concurrency: int = 4
    auth_token_env: str = AUTH_TOKEN_ENV


def _build_prompt(
    window_text: str, critical_items: Sequence[CriticalItem], budget: int
) -> str:
    must_keep = "\n".join(f"- [{item.kind.value}] {item.text}" for item in critical_items)
    return (
        "Summarize the following operational log excerpt in at most "
        f"{budget} tokens. Preserve every fact listed under MUST KEEP "
        "verbatim; drop routine chatter.\n"
        f"MUST KEEP:\n{must_keep or '- (none)'}\n"
        f"EXCERPT:\n{window_text}"
    )


class RemoteSummarizer:
    """Summarizer backed by an external service, with extractive fallback.

    ``degraded`` reflects the most recent call: True when the fallback ran or
    the response had to be truncated.
    """

    def __init__(
        self,
        config: RemoteConfig,
        transport: httpx.BaseTransport | None = None,
        sleep=time.sleep,
    ):
        token = os.environ.get(config.auth_token_env, "")
        if not token:
            raise ConfigError(
                f"remote summarizer selected but {config.auth_token_env} is not set"
            )
        self.config = config
        self._token = token
        self._fallback = ExtractiveSummarizer()
        self._sleep = sleep
        self._client = httpx.Client(
            transport=transport,
            timeout=config.timeout_seconds,
            headers={"Authorization": f"Bearer {token}"},
        )
        self.degraded = False

    def close(self) -> None:
        self._client.close()

    def _request(self, prompt: str, budget: int) -> str:
        payload = {
            "model": self.config.model,
            "prompt": prompt,
            "max_output_tokens": budget,
        }
        response = self._client.post(self.config.endpoint, json=payload)
        if response.status_code in (401, 403):
            raise ConfigError(
                f"remote summarizer auth rejected ({response.status_code})"
            )
        response.raise_for_status()
        body = response.json()
        return str(body.get("text", ""))

    def summarize(
        self,
        tokens: Sequence[str],
        critical_items: Sequence[CriticalItem],
        budget: int,
    ) -> str:
        prompt = _build_prompt(" ".join(tokens), critical_items, budget)
        delay = 0.5
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            try:
                text = self._request(prompt, budget)
                words = text.split()
                if len(words) > budget:
                    logger.warning(
                        "remote summary overran budget (%d > %d); truncating",
                        len(words), budget,
                    )
                    self.degraded = True
                    return " ".join(words[:budget])
                self.degraded = False
                return text
            except ConfigError:
                raise
            except (httpx.HTTPError, ValueError) as exc:
                last_error = exc
                if attempt < self.config.max_retries:
                    self._sleep(delay)
                    delay *= 2
        logger.warning(
            "remote summarizer unavailable after %d retries (%s); "
            "falling back to extractive output",
            self.config.max_retries, last_error,
        )
        self.degraded = True
        return self._fallback.summarize(tokens, critical_items, budget)

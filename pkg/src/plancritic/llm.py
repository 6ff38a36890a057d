"""Minimal chat-completions client for OpenAI-compatible endpoints.

One request carries one user message and returns the completion text.
Transport failures and retryable status codes (429, 5xx) are retried up to
three times with exponential backoff; anything else fails fast.  A simple
process-wide rate limiter spaces out request starts when configured.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass

import requests

log = logging.getLogger(__name__)


class TransportError(Exception):
    """Request failed after exhausting retries (or was not retryable)."""


class MalformedResponse(Exception):
    """HTTP succeeded but the body is not a chat completion."""


_RETRYABLE = {429, 500, 502, 503, 504}


class _RateLimiter:
    def __init__(self, requests_per_second: float):
        self._interval = 1.0 / requests_per_second if requests_per_second > 0 else 0.0
        self._lock = threading.Lock()
        self._next_start = 0.0

    def wait(self) -> None:
        if not self._interval:
            return
        with self._lock:
            now = time.monotonic()
            delay = self._next_start - now
            self._next_start = max(now, self._next_start) + self._interval
        if delay > 0:
            time.sleep(delay)


@dataclass
class ChatClient:
    base_url: str
    model: str
    api_key_env: str = "PLANCRITIC_API_KEY"
    timeout: float = 120.0
    max_retries: int = 3
    backoff: float = 1.0
    requests_per_second: float = 0.0
    debug_log: str | None = None

    def __post_init__(self):
        self._limiter = _RateLimiter(self.requests_per_second)
        self._log_lock = threading.Lock()

    def complete(self, prompt: str, temperature: float, max_tokens: int) -> str:
        """Send one user message and return the assistant text."""
        url = self.base_url.rstrip("/") + "/chat/completions"
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
            "max_tokens": max_tokens,
        }

        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            self._limiter.wait()
            try:
                response = requests.post(url, json=payload, headers=headers, timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = exc
                log.warning("request to %s failed (%s), attempt %d", url, exc, attempt + 1)
                time.sleep(self.backoff * 2**attempt)
                continue
            if response.status_code in _RETRYABLE:
                last_error = TransportError(f"HTTP {response.status_code}")
                log.warning("HTTP %d from %s, attempt %d", response.status_code, url, attempt + 1)
                time.sleep(self.backoff * 2**attempt)
                continue
            if response.status_code >= 400:
                raise TransportError(f"HTTP {response.status_code}: {response.text[:200]}")
            text = self._extract(response)
            self._debug(payload, response_text=text)
            return text
        self._debug(payload, error=str(last_error))
        raise TransportError(f"request failed after {self.max_retries} attempts: {last_error}")

    def _extract(self, response) -> str:
        try:
            body = response.json()
            content = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(f"unexpected response body: {exc}") from exc
        if not isinstance(content, str):
            raise MalformedResponse("message content is not text")
        return content

    def _debug(self, payload: dict, response_text: str | None = None, error: str | None = None) -> None:
        if not self.debug_log:
            return
        record = {"request": payload}
        if response_text is not None:
            record["response"] = response_text
        if error is not None:
            record["error"] = error
        with self._log_lock:
            with open(self.debug_log, "a") as fh:
                fh.write(json.dumps(record) + "\n")

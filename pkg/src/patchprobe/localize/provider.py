"""Provider clients: remote chat-completion endpoint, replay directory, or
the offline heuristic."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
import urllib.error
import urllib.request
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from ..errors import (ConfigError, OutOfRangeLines, RateLimited, ReplayMiss,
                      TransportError, UnparseableResponse)
from .heuristic import heuristic_answer
from .prompts import DEFAULT_CONTEXT_TOKENS, RETRY_REMINDER, Prompt

log = logging.getLogger(__name__)

MODES = ("remote", "replay", "heuristic")


@dataclass(frozen=True)
class ProviderConfig:
    mode: str = "heuristic"
    endpoint: str = ""
    model_name: str = ""
    temperature: float = 1.0
    max_retries: int = 3
    api_key_env: str = "PATCHPROBE_API_KEY"
    replay_dir: str | None = None
    timeout_s: float = 120.0
    backoff_s: float = 1.0
    context_tokens: int = DEFAULT_CONTEXT_TOKENS

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"provider mode must be one of {MODES}, got {self.mode!r}")
        if not 0.0 <= float(self.temperature) <= 2.0:
            raise ConfigError(f"temperature {self.temperature} outside [0, 2]")
        if int(self.max_retries) < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.mode == "remote" and not self.endpoint:
            raise ConfigError("remote mode needs an endpoint")
        if self.mode == "replay" and not self.replay_dir:
            raise ConfigError("replay mode needs replay_dir")

    @classmethod
    def from_dict(cls, d: dict) -> "ProviderConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown provider settings: {sorted(extra)}")
        return cls(**d)

    def to_dict(self):
        return asdict(self)

    @property
    def label(self) -> str:
        return f"{self.mode}:{self.model_name}" if self.mode == "remote" else self.mode


def prompt_key(prompt: Prompt | str) -> str:
    text = prompt.rendered_text if isinstance(prompt, Prompt) else prompt
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class Provider:
    """One client per case: counts usage and optionally writes an audit log.

    Safe to call from several threads.
    """

    def __init__(self, cfg: ProviderConfig, audit_path=None):
        self.cfg = cfg
        self.audit_path = Path(audit_path) if audit_path else None
        self.usage = {"prompts": 0, "responses": 0, "retries": 0}
        self._lock = threading.Lock()

    def _count(self, key, n=1):
        with self._lock:
            self.usage[key] += n

    def query(self, prompt: Prompt) -> str:
        self._count("prompts")
        mode = self.cfg.mode
        if mode == "replay":
            raw = self._replay(prompt)
        elif mode == "heuristic":
            raw = heuristic_answer(prompt)
        else:
            raw = self._remote(prompt)
        self._count("responses")
        self._audit(prompt, raw)
        return raw

    def ask(self, prompt: Prompt, parse):
        """Query and parse, re-asking up to max_retries times on a malformed answer."""
        current = prompt
        last = None
        for attempt in range(self.cfg.max_retries + 1):
            if attempt:
                self._count("retries")
                current = prompt.with_suffix(RETRY_REMINDER)
            raw = self.query(current)
            try:
                return parse(raw)
            except (UnparseableResponse, OutOfRangeLines) as exc:
                log.info("unusable response (attempt %d): %s", attempt + 1, exc)
                last = exc
        raise last

    def _replay(self, prompt: Prompt) -> str:
        path = Path(self.cfg.replay_dir) / f"{prompt_key(prompt)}.txt"
        try:
            return path.read_bytes().decode("utf-8")
        except FileNotFoundError:
            raise ReplayMiss(f"no recorded response {path.name}") from None

    def _remote(self, prompt: Prompt) -> str:
        cfg = self.cfg
        body = json.dumps({
            "model": cfg.model_name,
            "temperature": cfg.temperature,
            "messages": [{"role": "user", "content": prompt.rendered_text}],
        }).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(cfg.api_key_env or "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        last_err = "no attempt made"
        limited = False
        for attempt in range(cfg.max_retries + 1):
            if attempt:
                time.sleep(cfg.backoff_s * 2 ** (attempt - 1))
            req = urllib.request.Request(cfg.endpoint, data=body, headers=headers, method="POST")
            try:
                with urllib.request.urlopen(req, timeout=cfg.timeout_s) as resp:
                    payload = json.loads(resp.read().decode("utf-8"))
                return _content(payload)
            except urllib.error.HTTPError as exc:
                if exc.code == 429:
                    limited = True
                    last_err = "HTTP 429"
                    continue
                if exc.code >= 500:
                    limited = False
                    last_err = f"HTTP {exc.code}"
                    continue
                raise TransportError(f"HTTP {exc.code} from provider") from exc
            except (urllib.error.URLError, TimeoutError, OSError) as exc:
                limited = False
                last_err = str(exc)
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise TransportError(f"malformed provider payload: {exc}") from exc
        cls = RateLimited if limited else TransportError
        raise cls(f"provider failed after {cfg.max_retries + 1} attempts: {last_err}")

    def _audit(self, prompt: Prompt, raw: str):
        if self.audit_path is None:
            return
        rec = {"key": prompt_key(prompt), "template": prompt.template_id.value,
               "prompt": prompt.rendered_text, "response": raw}
        with self._lock:
            self.audit_path.parent.mkdir(parents=True, exist_ok=True)
            with self.audit_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(rec) + "\n")


def _content(payload: dict) -> str:
    choice = payload["choices"][0]
    msg = choice.get("message") or {}
    text = msg.get("content", choice.get("text"))
    if not isinstance(text, str):
        raise ValueError("no text content")
    return text


def query_provider(p: Prompt, cfg: ProviderConfig) -> str:
    return Provider(cfg).query(p)

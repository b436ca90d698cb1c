"""Run configuration, loaded from JSON."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace

from ..errors import ConfigError
from ..ingest import DEFAULT_TOKEN_LIMIT
from ..localize.provider import ProviderConfig
from ..verify.equivalence import SolverConfig
from ..verify.verdict import EquivalenceSettings


@dataclass(frozen=True)
class PipelineConfig:
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    token_limit: int = DEFAULT_TOKEN_LIMIT
    solver_path: str = "z3"
    solver_timeout_s: float = 10.0
    width: int = 32
    equivalence_mode: str = "solver"
    workers: int | None = None        # default: processor count
    remote_max_workers: int = 4       # cap when talking to a rate-limited endpoint
    project_globs: tuple = ("*.c", "*.h")
    audit_dir: str | None = None

    def __post_init__(self):
        if self.token_limit <= 0:
            raise ConfigError("token_limit must be positive")
        if self.width < 1 or self.width > 64:
            raise ConfigError("width must be in 1..64")
        if self.equivalence_mode not in ("solver", "exhaustive"):
            raise ConfigError("equivalence_mode must be 'solver' or 'exhaustive'")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.solver_timeout_s <= 0:
            raise ConfigError("solver_timeout_s must be positive")

    @property
    def equivalence(self) -> EquivalenceSettings:
        return EquivalenceSettings(self.width, self.equivalence_mode,
                                   SolverConfig(self.solver_path, self.solver_timeout_s))

    def worker_count(self) -> int:
        n = self.workers or os.cpu_count() or 1
        if self.provider.mode == "remote":
            n = min(n, self.remote_max_workers)
        return max(1, n)

    def with_provider(self, **changes) -> "PipelineConfig":
        merged = {**self.provider.to_dict(), **{k: v for k, v in changes.items() if v is not None}}
        return replace(self, provider=ProviderConfig.from_dict(merged))

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        d = dict(d)
        try:
            if "provider" in d:
                d["provider"] = ProviderConfig.from_dict(d["provider"] or {})
            if "project_globs" in d:
                d["project_globs"] = tuple(d["project_globs"])
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

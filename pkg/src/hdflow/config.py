"""Run configuration: generation parameters, loop bounds, and backend setup.

The CLI reads a single JSON config file shaped like::

    {
      "run": {"model": "gpt-4-turbo", "max_workflow_attempts": 3, ...},
      "backend": {"kind": "http", "base_url": "...", "api_key_env": "HDFLOW_API_KEY"},
      "executor": {"command": ["python", "-m", "hdflow_sandbox"]}
    }

A mock backend is configured with ``{"kind": "mock", "script": [{"contains":
..., "reply": ..., "once": false}, ...]}``.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import HDFlowError
from .gateway import (
    Backend,
    ChatMessage,
    CompletionRequest,
    DEFAULT_API_KEY_ENV,
    HttpBackend,
    RetryPolicy,
    ScriptedBackend,
    ScriptEntry,
)


class ConfigError(HDFlowError):
    pass


@dataclass(frozen=True)
class RunConfig:
    model: str = "default"
    solve_temperature: float = 0.0
    synthesis_temperature: float = 0.7
    max_new_tokens: int = 2048
    max_code_repairs: int = 3  # tool-code repair attempts per expert
    max_workflow_attempts: int = 3  # full-pipeline attempts (first run + reruns)
    tool_timeout_s: float = 10.0
    context_char_budget: int = 24000
    retry_attempts: int = 3
    retry_backoff_s: tuple[float, ...] = (0.5, 1.0, 2.0)

    @property
    def retry(self) -> RetryPolicy:
        return RetryPolicy(self.retry_attempts, tuple(self.retry_backoff_s))

    def request(
        self,
        content: str,
        *,
        history: Sequence[ChatMessage] = (),
        temperature: float | None = None,
        stop: Sequence[str] = (),
    ) -> CompletionRequest:
        """Build a request for one user turn, optionally atop prior history."""
        messages = tuple(history) + (ChatMessage("user", content),)
        return CompletionRequest(
            model=self.model,
            messages=messages,
            temperature=self.solve_temperature if temperature is None else temperature,
            max_new_tokens=self.max_new_tokens,
            stop=tuple(stop),
        )

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown run config keys: {sorted(unknown)}")
        if "retry_backoff_s" in data:
            data = {**data, "retry_backoff_s": tuple(data["retry_backoff_s"])}
        return cls(**data)


DEFAULT_CONFIG = RunConfig()


def load_config_file(path: str | Path) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a JSON object")
    return data


def run_config_from(data: dict) -> RunConfig:
    return RunConfig.from_dict(data.get("run", {}))


def backend_from(data: dict, kind_override: str | None = None) -> Backend:
    settings = dict(data.get("backend", {}))
    kind = kind_override or settings.get("kind", "mock")
    if kind == "mock":
        script = settings.get("script", [])
        entries = [
            ScriptEntry(item.get("contains", ""), item.get("reply", ""), item.get("once", False))
            for item in script
        ]
        if not entries:
            raise ConfigError("mock backend requires a non-empty 'script' list")
        return ScriptedBackend(entries)
    if kind == "http":
        base_url = settings.get("base_url")
        if not base_url:
            raise ConfigError("http backend requires 'base_url'")
        return HttpBackend(
            base_url,
            api_key_env=settings.get("api_key_env", DEFAULT_API_KEY_ENV),
            timeout_s=float(settings.get("timeout_s", 120.0)),
        )
    raise ConfigError(f"unknown backend kind {kind!r}")

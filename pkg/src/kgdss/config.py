"""Runtime configuration: file values overridden one-to-one by env vars.

Unknown keys are rejected by name — a misspelled key silently ignored is a
misconfigured emergency system.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .llm import Backend, HttpChatBackend, load_script
from .orchestrator import AskOptions
from .retrieval import Embedder, HashEmbedder, HttpEmbedder
from .templates import PromptTemplateSet, load_templates

ENV_PREFIX = "KGDSS_"


@dataclass
class Config:
    kb_path: str | None = None
    schema_path: str | None = None
    templates_path: str | None = None

    embedder: str = "test-hash"           # test-hash | http
    embedder_dimension: int = 256
    embedding_url: str | None = None
    embedding_model: str | None = None
    embedding_api_key: str | None = None

    llm_backend: str = "http"             # http | scripted
    llm_url: str | None = None
    llm_model: str | None = None
    llm_api_key: str | None = None
    llm_timeout: float = 60.0
    llm_retries: int = 2
    llm_backoff: float = 0.5
    llm_script_path: str | None = None
    max_inflight: int = 4

    k: int = 4
    expand_depth: int = 2
    mode: str = "native"                  # native | llm-chain
    max_attempts: int = 2
    min_score: float = 0.0
    decomposition: bool = True
    fallback: bool = True
    self_check: bool = False
    synthesis_temperature: float = 0.0

    listen: str = "127.0.0.1:8011"
    write_token: str | None = None
    transcript_path: str | None = None

    def validate(self) -> "Config":
        if self.embedder not in ("test-hash", "http"):
            raise ConfigError(f"embedder must be test-hash or http, got {self.embedder!r}")
        if self.llm_backend not in ("http", "scripted"):
            raise ConfigError(f"llm_backend must be http or scripted, got {self.llm_backend!r}")
        if self.mode not in ("native", "llm-chain"):
            raise ConfigError(f"mode must be native or llm-chain, got {self.mode!r}")
        if self.k < 1 or self.expand_depth < 0 or self.max_attempts < 1:
            raise ConfigError("k >= 1, expand_depth >= 0, max_attempts >= 1 required")
        return self

    # -- component factories -------------------------------------------------

    def make_embedder(self) -> Embedder:
        if self.embedder == "test-hash":
            return HashEmbedder(self.embedder_dimension)
        if not (self.embedding_url and self.embedding_model):
            raise ConfigError("embedder http needs embedding_url and embedding_model")
        return HttpEmbedder(self.embedding_url, self.embedding_model,
                            self.embedder_dimension, self.embedding_api_key,
                            self.llm_timeout, max_inflight=self.max_inflight)

    def make_backend(self) -> Backend:
        if self.llm_backend == "scripted":
            if not self.llm_script_path:
                raise ConfigError("llm_backend scripted needs llm_script_path")
            return load_script(self.llm_script_path)
        if not (self.llm_url and self.llm_model):
            raise ConfigError("llm_backend http needs llm_url and llm_model")
        return HttpChatBackend(self.llm_url, self.llm_model, self.llm_api_key,
                               timeout=self.llm_timeout, max_retries=self.llm_retries,
                               backoff_base=self.llm_backoff,
                               max_inflight=self.max_inflight)

    def make_templates(self) -> PromptTemplateSet:
        if self.templates_path:
            return load_templates(self.templates_path)
        return PromptTemplateSet.defaults()

    def ask_options(self) -> AskOptions:
        return AskOptions(k=self.k, expand_depth=self.expand_depth, mode=self.mode,
                          max_attempts=self.max_attempts, min_score=self.min_score,
                          decomposition=self.decomposition, fallback=self.fallback,
                          self_check=self.self_check,
                          synthesis_temperature=self.synthesis_temperature)


_FIELD_TYPES = {f.name: f.type for f in fields(Config)}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    if kind in ("int",):
        return int(raw)
    if kind in ("float",):
        return float(raw)
    if kind in ("bool",):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: cannot read {raw!r} as a boolean")
    return raw


def load_config(path: str | Path | None = None,
                env: dict[str, str] | None = None) -> Config:
    """Config file (JSON object) plus KGDSS_<KEY> env overrides, validated."""
    values: dict = {}
    if path is not None:
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path}: invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise ConfigError(f"config file {path} must hold one object")
        for key in obj:
            if key not in _FIELD_TYPES:
                raise ConfigError(f"unknown config key {key!r}")
        values.update(obj)

    env = env if env is not None else dict(os.environ)
    for env_key, raw in sorted(env.items()):
        if not env_key.startswith(ENV_PREFIX):
            continue
        key = env_key[len(ENV_PREFIX):].lower()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r} (from {env_key})")
        values[key] = _coerce(key, raw)

    return Config(**values).validate()

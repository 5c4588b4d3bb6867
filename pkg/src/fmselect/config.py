"""Runtime configuration and component wiring.

A JSON config file sets the provider choice and the pipeline knobs;
FMSELECT_* environment variables override individual values. The packaged
seed catalog is the default data source.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Optional

from .catalog import Catalog, load_catalog
from .extraction import ExtractionConfig
from .gateway import HashingEmbedder, LiveProvider, ScriptedProvider
from .orchestrator import MemoryStore, Orchestrator, OrchestratorConfig
from .retrieval import VectorIndex, build_index, load_index

ENV_PREFIX = "FMSELECT_"


@dataclass
class AppConfig:
    provider: str = "offline"            # offline | scripted | live
    scripted_fixture: Optional[str] = None
    embedder: str = "hashing"            # hashing | live
    live_base_url: str = "https://api.openai.com/v1"
    live_chat_model: str = "gpt-4.1"
    live_embed_model: str = "text-embedding-3-small"
    api_key_env: str = "FMSELECT_API_KEY"
    max_concurrency: Optional[int] = None

    catalog_path: Optional[str] = None   # defaults to the packaged seed catalog
    memory_path: Optional[str] = None
    index_cache_path: Optional[str] = None

    retrieval_k: int = 20
    retrieval_min_similarity: float = 0.30
    max_candidates: int = 15
    confidence_threshold: float = 0.60
    rank_repeats: int = 3
    max_clarify: int = 3
    k: int = 3

    extraction_iterations: int = 5
    extraction_tau: float = 0.5
    extraction_w_logprob: float = 0.7
    extraction_w_consistency: float = 0.3
    extraction_threshold: float = 0.75

    cors_origin: str = "*"
    port: int = 8040

    @classmethod
    def load(cls, path: Optional[str] = None) -> "AppConfig":
        config = cls()
        if path:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
            for f in fields(cls):
                if f.name in data:
                    setattr(config, f.name, data[f.name])
        config.apply_env_overrides()
        return config

    def apply_env_overrides(self) -> None:
        for f in fields(self):
            env_name = ENV_PREFIX + f.name.upper()
            raw = os.environ.get(env_name)
            if raw is None:
                continue
            current = getattr(self, f.name)
            if isinstance(current, bool):
                value = raw.lower() in ("1", "true", "yes")
            elif isinstance(current, int):
                value = int(raw)
            elif isinstance(current, float):
                value = float(raw)
            elif current is None and f.name == "max_concurrency":
                value = int(raw)
            else:
                value = raw
            setattr(self, f.name, value)

    def orchestrator_config(self) -> OrchestratorConfig:
        return OrchestratorConfig(
            retrieval_k=self.retrieval_k,
            retrieval_min_similarity=self.retrieval_min_similarity,
            max_candidates=self.max_candidates,
            confidence_threshold=self.confidence_threshold,
            rank_repeats=self.rank_repeats,
            max_clarify=self.max_clarify,
        )

    def extraction_config(self) -> ExtractionConfig:
        return ExtractionConfig(
            iterations=self.extraction_iterations,
            temperature_tau=self.extraction_tau,
            w_logprob=self.extraction_w_logprob,
            w_consistency=self.extraction_w_consistency,
            review_threshold=self.extraction_threshold,
        )


def default_catalog_path() -> Path:
    return Path(resources.files("fmselect").joinpath("data/seed_catalog.jsonl"))


def build_provider(config: AppConfig):
    if config.provider == "offline":
        from .offline import OfflineProvider

        return OfflineProvider()
    if config.provider == "scripted":
        if config.scripted_fixture:
            return ScriptedProvider.from_file(config.scripted_fixture)
        return ScriptedProvider()
    if config.provider == "live":
        return LiveProvider(
            base_url=config.live_base_url,
            chat_model=config.live_chat_model,
            embed_model=config.live_embed_model,
            api_key_env=config.api_key_env,
            max_concurrency=config.max_concurrency,
        )
    raise ValueError(f"unknown provider: {config.provider}")


def build_embedder(config: AppConfig):
    if config.embedder == "hashing":
        return HashingEmbedder()
    if config.embedder == "live":
        return LiveProvider(
            base_url=config.live_base_url,
            chat_model=config.live_chat_model,
            embed_model=config.live_embed_model,
            api_key_env=config.api_key_env,
            max_concurrency=config.max_concurrency,
        )
    raise ValueError(f"unknown embedder: {config.embedder}")


@dataclass
class Stack:
    """Everything a service or CLI invocation needs, wired together."""

    config: AppConfig
    catalog: Catalog
    index: VectorIndex
    embedder: object
    provider: object
    orchestrator: Orchestrator
    memory: Optional[MemoryStore] = field(default=None)


def build_stack(config: Optional[AppConfig] = None) -> Stack:
    config = config or AppConfig.load()
    catalog_path = config.catalog_path or default_catalog_path()
    catalog = load_catalog(catalog_path)
    embedder = build_embedder(config)
    provider = build_provider(config)
    index = None
    if config.index_cache_path and Path(config.index_cache_path).exists():
        cached = load_index(config.index_cache_path)
        if len(cached) == len(catalog):
            index = cached
    if index is None:
        index = build_index(catalog, embedder)
    memory = None
    if config.memory_path:
        memory = (MemoryStore.load(config.memory_path)
                  if Path(config.memory_path).exists() else MemoryStore())
    orchestrator = Orchestrator(
        catalog, index, embedder, provider,
        config=config.orchestrator_config(),
        memory=memory,
        extraction_config=config.extraction_config(),
    )
    return Stack(config=config, catalog=catalog, index=index, embedder=embedder,
                 provider=provider, orchestrator=orchestrator, memory=memory)

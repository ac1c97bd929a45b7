"""Capability registry: resolves plugin names to instances per route.

Configuration comes from ADAPTER_PLUGINS (JSON, e.g.
{"embedder": "clip", "llm": "proxy"}); unset capabilities use the offline
plugins. A plugin that cannot load raises CapabilityUnavailable, which the
app maps to 503 with the capability named.
"""

from __future__ import annotations

import json
import os

CAPABILITIES = ("tagger", "detector", "segmenter", "embedder", "parser", "llm")

ENV_PLUGINS = "ADAPTER_PLUGINS"
ENV_SEED = "ADAPTER_SEED"


class CapabilityUnavailable(Exception):
    def __init__(self, capability: str, reason: str):
        self.capability = capability
        super().__init__(f"{capability}: {reason}")


def _offline_factory(capability: str, seed: int, workdir: str):
    from .plugins import offline

    return {
        "tagger": lambda: offline.OfflineTagger(seed),
        "detector": lambda: offline.OfflineDetector(seed),
        "segmenter": lambda: offline.OfflineSegmenter(workdir),
        "embedder": lambda: offline.OfflineEmbedder(seed),
        "parser": lambda: offline.OfflineParser(workdir),
        "llm": lambda: offline.RuleLlm(),
    }[capability]()


def _model_factory(capability: str, name: str, seed: int, workdir: str):
    if capability == "embedder" and name == "clip":
        from .plugins.clip_embed import ClipEmbedder

        return ClipEmbedder()
    if capability == "llm" and name == "proxy":
        from .plugins.llm_proxy import ProxyLlm

        return ProxyLlm()
    raise CapabilityUnavailable(capability, f"unknown plugin {name!r}")


class Registry:
    def __init__(self, config: dict[str, str] | None = None,
                 seed: int | None = None, workdir: str = "/tmp/adapter"):
        if config is None:
            raw = os.environ.get(ENV_PLUGINS, "{}")
            config = {str(k): str(v) for k, v in json.loads(raw).items()}
        self.config = {cap: config.get(cap, "offline") for cap in CAPABILITIES}
        self.seed = seed if seed is not None else int(os.environ.get(ENV_SEED, "7"))
        self.workdir = workdir
        self._instances: dict[str, object] = {}

    def get(self, capability: str):
        if capability not in CAPABILITIES:
            raise CapabilityUnavailable(capability, "unknown capability")
        if capability not in self._instances:
            name = self.config[capability]
            try:
                if name == "offline":
                    instance = _offline_factory(capability, self.seed, self.workdir)
                else:
                    instance = _model_factory(capability, name, self.seed, self.workdir)
            except CapabilityUnavailable:
                raise
            except Exception as exc:  # plugin import/load failures become 503s
                raise CapabilityUnavailable(capability, f"load failed: {exc}") from exc
            self._instances[capability] = instance
        return self._instances[capability]

    def describe(self) -> dict:
        return {"plugins": dict(self.config), "seed": self.seed}

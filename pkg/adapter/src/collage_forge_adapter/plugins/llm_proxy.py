"""LLM routing to any chat-completion-compatible endpoint. The engine's
prompts pass through unmodified; the model name and endpoint are pure
configuration."""

from __future__ import annotations

import os

import httpx

from ..registry import CapabilityUnavailable

ENV_BASE = "ADAPTER_LLM_BASE_URL"
ENV_KEY = "ADAPTER_LLM_API_KEY"
ENV_MODEL = "ADAPTER_LLM_MODEL"


class ProxyLlm:
    def __init__(self):
        self.base_url = os.environ.get(ENV_BASE, "").rstrip("/")
        if not self.base_url:
            raise CapabilityUnavailable("llm", f"{ENV_BASE} is not configured")
        self.model = os.environ.get(ENV_MODEL, "")
        if not self.model:
            raise CapabilityUnavailable("llm", f"{ENV_MODEL} is not configured")
        self._client = httpx.Client(base_url=self.base_url, timeout=60.0)

    def complete(self, system_prompt: str, user_payload: str) -> str:
        headers = {}
        key = os.environ.get(ENV_KEY)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        response = self._client.post(
            "/chat/completions",
            headers=headers,
            json={
                "model": self.model,
                "messages": [
                    {"role": "system", "content": system_prompt},
                    {"role": "user", "content": user_payload},
                ],
                "response_format": {"type": "json_object"},
            },
        )
        response.raise_for_status()
        return response.json()["choices"][0]["message"]["content"]

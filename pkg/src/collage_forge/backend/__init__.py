"""Model-backend wire protocol: the engine talks to vision/language models
only through this interface, either in-process (deterministic mock) or over
HTTP/JSON (one POST route per operation under /v1/)."""

from __future__ import annotations

import os
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np

from ..types import BoundingBox, CharacterRig, SemanticLabel, SourceImage

ROUTES = {
    "tag": "/v1/tag",
    "detect": "/v1/detect",
    "segment": "/v1/segment",
    "embed_image": "/v1/embed/image",
    "embed_text": "/v1/embed/text",
    "parse_character": "/v1/parse-character",
    "llm_complete": "/v1/llm/complete",
}

ENV_BACKEND_URL = "COLLAGE_BACKEND_URL"
ENV_BACKEND_TIMEOUT = "COLLAGE_BACKEND_TIMEOUT_S"
ENV_MOCK_SEED = "COLLAGE_MOCK_SEED"


class BackendError(Exception):
    """Base class for backend failures."""


class TransportError(BackendError):
    """The backend could not be reached or timed out."""


class ProtocolError(BackendError):
    """The backend answered, but the response violates the protocol contract."""


class NoCharacterDetected(BackendError):
    """Character parsing found nothing humanoid; the element stays rigless."""


@dataclass(frozen=True)
class BackendDescriptor:
    """Where model operations run: the seeded in-repo mock or a remote server."""

    kind: str  # mock | remote
    base_url: Optional[str] = None
    seed: Optional[int] = None
    timeout: float = 30.0

    def __post_init__(self):
        if self.kind == "mock":
            if self.seed is None:
                raise ValueError("mock backend requires a seed")
        elif self.kind == "remote":
            if not self.base_url:
                raise ValueError("remote backend requires a base_url")
        else:
            raise ValueError(f"unknown backend kind: {self.kind!r}")

    @classmethod
    def parse(cls, spec: str, seed: Optional[int] = None,
              timeout: Optional[float] = None) -> "BackendDescriptor":
        """Build a descriptor from a CLI/API string: "mock" or a base URL.

        Falls back to COLLAGE_MOCK_SEED / COLLAGE_BACKEND_TIMEOUT_S when the
        explicit arguments are absent.
        """
        if timeout is None:
            timeout = float(os.environ.get(ENV_BACKEND_TIMEOUT, "30"))
        if spec == "mock":
            if seed is None:
                seed = int(os.environ.get(ENV_MOCK_SEED, "7"))
            return cls(kind="mock", seed=seed, timeout=timeout)
        return cls(kind="remote", base_url=spec, timeout=timeout)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "base_url": self.base_url,
                "seed": self.seed, "timeout": self.timeout}


@dataclass(frozen=True)
class TagResult:
    tags: tuple[SemanticLabel, ...]


@dataclass(frozen=True)
class DetectedBox:
    label: str
    bbox: BoundingBox
    confidence: float


@dataclass(frozen=True)
class DetectResult:
    boxes: tuple[DetectedBox, ...]


@dataclass(frozen=True)
class SegmentResult:
    mask_path: str  # RGBA cutout PNG: RGB pixels + mask as alpha, cropped to tight_bbox
    tight_bbox: BoundingBox


@dataclass(frozen=True)
class EmbedResult:
    vector: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vector", np.asarray(self.vector, dtype=np.float64))


@dataclass(frozen=True)
class ParseCharacterResult:
    rig: CharacterRig


@dataclass(frozen=True)
class LlmStructuredResult:
    raw_text: str
    parsed_json: Optional[Any] = None


class Backend(ABC):
    """One method per protocol operation. Implementations are safe for
    concurrent use; each request is independent."""

    embedding_dim: int

    @abstractmethod
    def tag_image(self, image: SourceImage) -> TagResult: ...

    @abstractmethod
    def detect(self, image: SourceImage, label: str) -> DetectResult: ...

    @abstractmethod
    def segment(self, image: SourceImage, bbox: BoundingBox) -> SegmentResult: ...

    @abstractmethod
    def embed_image(self, cutout_path: str) -> EmbedResult: ...

    @abstractmethod
    def embed_text(self, text: str) -> EmbedResult: ...

    @abstractmethod
    def parse_character(self, cutout_path: str) -> ParseCharacterResult: ...

    @abstractmethod
    def llm_complete(self, system_prompt: str, user_payload: str) -> LlmStructuredResult: ...

    def describe(self) -> dict:
        return {"class": type(self).__name__, "embedding_dim": self.embedding_dim}


def get_backend(descriptor: BackendDescriptor, workdir: Optional[Path] = None) -> Backend:
    """Instantiate the backend a descriptor names.

    ``workdir`` is where a local backend materializes mask/cutout files; it
    defaults to a per-process temp directory.
    """
    if descriptor.kind == "mock":
        from .mock import MockBackend

        return MockBackend(seed=descriptor.seed, workdir=workdir)
    from .client import RemoteBackend

    return RemoteBackend(base_url=descriptor.base_url, timeout=descriptor.timeout,
                         workdir=workdir)

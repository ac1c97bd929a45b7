"""Joint image-text embedder backed by a CLIP checkpoint via transformers.

Loads lazily; any import or download failure surfaces as
CapabilityUnavailable so the route answers 503 and deployments without
weights fall back to configuring the offline embedder.
"""

from __future__ import annotations

import os

from ..registry import CapabilityUnavailable

ENV_MODEL = "ADAPTER_CLIP_MODEL"


class ClipEmbedder:
    dim = 512

    def __init__(self):
        model_name = os.environ.get(ENV_MODEL, "openai/clip-vit-base-patch32")
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor

            self._torch = torch
            self._model = CLIPModel.from_pretrained(model_name)
            self._processor = CLIPProcessor.from_pretrained(model_name)
            self.dim = int(self._model.config.projection_dim)
        except Exception as exc:
            raise CapabilityUnavailable("embedder", f"CLIP load failed: {exc}") from exc

    def embed_text(self, text: str) -> list[float]:
        inputs = self._processor(text=[text], return_tensors="pt", padding=True)
        with self._torch.no_grad():
            features = self._model.get_text_features(**inputs)[0]
        features = features / features.norm()
        return [float(v) for v in features]

    def embed_image(self, path: str) -> list[float]:
        from PIL import Image

        with Image.open(path) as im:
            inputs = self._processor(images=im.convert("RGB"), return_tensors="pt")
        with self._torch.no_grad():
            features = self._model.get_image_features(**inputs)[0]
        features = features / features.norm()
        return [float(v) for v in features]

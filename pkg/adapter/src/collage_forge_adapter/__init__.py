"""Model-backend adapter for the collage-forge /v1 wire protocol.

Each protocol capability (tagging, detection, segmentation, embedding,
character parsing, LLM completion) is served by a configurable plugin. The
bundled offline plugins run on real pixel operations without any model
weights, so the adapter can be protocol-tested anywhere; model-backed
plugins (CLIP embeddings, hosted chat LLM) load lazily and report 503 when
their dependencies or endpoints are unavailable.
"""

__version__ = "0.1.0"

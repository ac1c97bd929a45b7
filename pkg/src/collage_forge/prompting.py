"""Prompt templates and schema-checked structured LLM calls.

Templates are versioned text assets with a ``[labels_list]`` placeholder.
Every call declares a validator for the response document; on a parse or
schema failure the call is re-asked with the error appended, at most
``retries`` times, after which the caller's documented fallback applies.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from importlib import resources
from typing import Any, Callable, Optional

from .backend import Backend

logger = logging.getLogger(__name__)

DEFAULT_RETRIES = 2


class LlmResponseInvalid(Exception):
    """The LLM response never parsed/validated within the retry budget."""

    def __init__(self, stage: str, raw_text: str, reason: str):
        self.stage = stage
        self.raw_text = raw_text
        self.reason = reason
        super().__init__(f"{stage}: {reason}")


@dataclass
class LlmCallResult:
    document: Any
    attempts: int  # total asks, including re-asks


def load_template(name: str) -> str:
    return resources.files("collage_forge.prompts").joinpath(f"{name}.txt").read_text("utf-8")


def render_template(name: str, labels: list[str]) -> str:
    rendered = load_template(name)
    listing = "[" + ", ".join(labels) + "]"
    return rendered.replace("[labels_list]", listing)


def structured_call(
    backend: Backend,
    stage: str,
    system_prompt: str,
    payload: dict,
    validate: Callable[[Any], Optional[str]],
    retries: int = DEFAULT_RETRIES,
) -> LlmCallResult:
    """Ask, validate, and re-ask on failure with the error attached.

    ``validate`` returns None when the document is acceptable, or an error
    string used both for the repair re-ask and the final exception.
    """
    base_payload = dict(payload)
    error: Optional[str] = None
    raw = ""
    for attempt in range(1, retries + 2):
        ask = dict(base_payload)
        if error is not None:
            ask["previous_error"] = error
        result = backend.llm_complete(system_prompt, json.dumps(ask, ensure_ascii=False))
        raw = result.raw_text
        doc = result.parsed_json
        if doc is None:
            try:
                doc = json.loads(raw)
            except (json.JSONDecodeError, TypeError):
                error = "response is not valid JSON"
                logger.warning("%s: attempt %d failed: %s", stage, attempt, error)
                continue
        problem = validate(doc)
        if problem is None:
            return LlmCallResult(document=doc, attempts=attempt)
        error = problem
        logger.warning("%s: attempt %d failed: %s", stage, attempt, problem)
    raise LlmResponseInvalid(stage, raw, error or "no valid response")


# -- response validators -------------------------------------------------------


def _all_strings(items: Any) -> bool:
    return isinstance(items, list) and all(isinstance(i, str) for i in items)


def validate_selection_full(doc: Any) -> Optional[str]:
    if not isinstance(doc, dict):
        return "expected a JSON object with central/related arrays"
    if not _all_strings(doc.get("central")):
        return "field 'central' must be an array of strings"
    if not _all_strings(doc.get("related")):
        return "field 'related' must be an array of strings"
    return None


def validate_selection_keyword(doc: Any) -> Optional[str]:
    if not _all_strings(doc):
        return "expected a JSON array of label strings"
    return None


def make_classification_validator(categories: tuple[str, ...]) -> Callable[[Any], Optional[str]]:
    def validate(doc: Any) -> Optional[str]:
        if not isinstance(doc, dict):
            return "expected a JSON object keyed by category"
        for value in doc.values():
            if not _all_strings(value):
                return "every category value must be an array of label strings"
        return None

    return validate


def validate_cluster_tree(doc: Any) -> Optional[str]:
    def check(node: Any, path: str) -> Optional[str]:
        if not isinstance(node, dict):
            return f"{path}: expected an object"
        if not isinstance(node.get("name"), str) or not node["name"]:
            return f"{path}: field 'name' must be a non-empty string"
        if not _all_strings(node.get("labels", [])):
            return f"{path}: field 'labels' must be an array of strings"
        children = node.get("children", [])
        if not isinstance(children, list):
            return f"{path}: field 'children' must be an array"
        for i, child in enumerate(children):
            problem = check(child, f"{path}.children[{i}]")
            if problem:
                return problem
        return None

    return check(doc, "root")

"""Prompt assembly and chat-completions client for LLM explanations.

The prompt packs everything the model needs: the task, feature glossary, the
whole tree as text, per-step facts for this inference, which steps mattered
most, the emphasized prediction, and audience-tuned closing instructions.
A mock mode keeps the full pipeline runnable offline.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass

import requests

from .data import FeatureSchema
from .explain import Explanation, rule_explain, _now
from .tree import DecisionPath, DecisionTree, to_text, top_gain_steps, validate_path
from ._util import format_sig

SECTION_NAMES = (
    "task",
    "features",
    "tree",
    "path_steps",
    "gain_highlights",
    "prediction",
    "instructions",
)

_SYSTEM_MESSAGE = (
    "You explain the predictions of decision tree classifiers to people. "
    "Base your answer only on the information in the message and follow its "
    "instructions exactly."
)

_AUDIENCE_INSTRUCTIONS = {
    "novice": (
        "Describe in simple terms why the decision tree came to its conclusion "
        "for this input. Assume the reader has no background in machine learning "
        "or networking: avoid jargon, and use everyday language and analogies "
        "where they help."
    ),
    "security": (
        "Describe in simple terms why the decision tree came to its conclusion "
        "for this input. The reader is a security analyst: networking "
        "terminology is fine, but assume no background in machine learning and "
        "explain what the thresholds mean operationally."
    ),
    "ml": (
        "Describe in simple terms why the decision tree came to its conclusion "
        "for this input. The reader is a machine learning practitioner: you may "
        "reference the splits, thresholds, and class distributions directly, "
        "but keep the narrative focused on this one prediction."
    ),
}


@dataclass(frozen=True)
class PromptConfig:
    audience_level: str = "novice"  # novice | security | ml
    top_gain_k: int = 2
    model: str = "gpt-4"
    temperature: float = 0.2
    max_tokens: int = 600
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    api_key_env: str = "OPENAI_API_KEY"
    mock: bool = False
    retries: int = 3
    backoff: float = 0.5
    timeout: float = 60.0

    def __post_init__(self):
        if self.audience_level not in _AUDIENCE_INSTRUCTIONS:
            raise ValueError(f"unknown audience_level: {self.audience_level}")
        if self.top_gain_k < 0:
            raise ValueError("top_gain_k must be >= 0")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.retries < 1:
            raise ValueError("retries must be >= 1")


@dataclass(frozen=True)
class Prompt:
    text: str
    sections: dict[str, tuple[int, int]]  # name -> (start, end) offsets into text
    rule_text: str  # deterministic fallback used by mock mode

    def section_text(self, name: str) -> str:
        start, end = self.sections[name]
        return self.text[start:end]


class CompletionError(RuntimeError):
    """Chat-completions request failed after retries."""

    def __init__(self, message: str, status: int | None = None, body: str | None = None):
        super().__init__(message)
        self.status = status
        self.body = body


def _task_section(schema: FeatureSchema) -> str:
    classes = list(schema.classes)
    if classes == ["Benign", "Threat"]:
        return (
            "Task: A network intrusion detection system monitors network "
            "traffic and labels each traffic flow as either Benign (normal "
            "activity) or Threat (potentially malicious activity). A decision "
            "tree classifier examined one flow, summarized by the features "
            "below, and made a prediction."
        )
    listed = ", ".join(classes[:-1]) + f" or {classes[-1]}"
    return (
        f"Task: A decision tree classifier assigns each input to one of the "
        f"following classes: {listed}. It examined one input, summarized by "
        f"the features below, and made a prediction."
    )


def build_prompt(
    tree: DecisionTree,
    path: DecisionPath,
    schema: FeatureSchema,
    config: PromptConfig,
) -> Prompt:
    """Assemble the seven-section prompt for one inference. Deterministic."""
    validate_path(tree, path)

    feature_lines = ["Features:"]
    for feat in schema.features:
        unit = f", {feat.unit}" if feat.unit else ""
        desc = feat.description or "no description"
        feature_lines.append(f"- {feat.name}{unit}: {desc}")

    step_lines = ["Steps taken for this input:"]
    for i, step in enumerate(path.steps):
        feat = schema.features[step.feature_index]
        unit = feat.unit or ""
        split = ", ".join(
            f"{name}={c}" for name, c in zip(schema.classes, step.class_counts)
        )
        step_lines.append(
            f"{i + 1}. {feat.name} = {format_sig(step.feature_value)}{unit}; "
            f"threshold {format_sig(step.threshold)}{unit}; took the "
            f"{step.branch} branch; training split at this node: {split}."
        )
    if not path.steps:
        step_lines.append("(the tree is a single leaf; no tests were applied)")

    k = min(config.top_gain_k, len(path.steps))
    if k > 0:
        ranked = top_gain_steps(path, tree, k)
        named = ", ".join(
            f"step {i + 1} ({schema.features[path.steps[i].feature_index].name})"
            for i in ranked
        )
        gain_body = (
            "Most informative steps (largest reduction in class mixing): "
            f"{named}. Emphasize these when explaining."
        )
    else:
        gain_body = "Most informative steps: none highlighted."

    predicted = schema.classes[path.prediction]
    sections = [
        ("task", _task_section(schema)),
        ("features", "\n".join(feature_lines)),
        ("tree", "Decision tree structure:\n" + to_text(tree)),
        ("path_steps", "\n".join(step_lines)),
        ("gain_highlights", gain_body),
        ("prediction", f"PREDICTED: {predicted.upper()}"),
        ("instructions", _AUDIENCE_INSTRUCTIONS[config.audience_level]),
    ]

    parts: list[str] = []
    spans: dict[str, tuple[int, int]] = {}
    pos = 0
    for name, body in sections:
        if parts:
            parts.append("\n\n")
            pos += 2
        spans[name] = (pos, pos + len(body))
        parts.append(body)
        pos += len(body)

    rule_text = rule_explain(path, tree, schema).text
    return Prompt(text="".join(parts), sections=spans, rule_text=rule_text)


def llm_explain(
    prompt: Prompt,
    config: PromptConfig,
    sample_id: str | None = None,
) -> Explanation:
    """Obtain an explanation for a built prompt.

    Mock mode is fully offline and deterministic. Otherwise POSTs a
    chat-completions request, retrying transport failures and 5xx responses
    up to `config.retries` total attempts with exponential backoff.
    """
    if config.mock:
        return Explanation(
            text="MOCK: " + prompt.rule_text,
            approach="llm",
            sample_id=sample_id,
            provenance=_provenance(prompt, config, model="mock"),
            created_at=_now(),
        )

    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(config.api_key_env)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    body = {
        "model": config.model,
        "messages": [
            {"role": "system", "content": _SYSTEM_MESSAGE},
            {"role": "user", "content": prompt.text},
        ],
        "temperature": config.temperature,
        "max_tokens": config.max_tokens,
    }

    last_error: CompletionError | None = None
    for attempt in range(config.retries):
        if attempt > 0:
            time.sleep(config.backoff * 2 ** (attempt - 1))
        try:
            resp = requests.post(
                config.endpoint, json=body, headers=headers, timeout=config.timeout
            )
        except requests.RequestException as e:
            last_error = CompletionError(f"transport failure: {e}")
            continue
        excerpt = resp.text[:500]
        if resp.status_code >= 500:
            last_error = CompletionError(
                f"server error {resp.status_code}: {excerpt}",
                status=resp.status_code,
                body=excerpt,
            )
            continue
        if resp.status_code < 200 or resp.status_code >= 300:
            raise CompletionError(
                f"request rejected with status {resp.status_code}: {excerpt}",
                status=resp.status_code,
                body=excerpt,
            )
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise CompletionError(
                "malformed completion response", status=resp.status_code, body=excerpt
            ) from None
        if not content or not content.strip():
            raise CompletionError("empty explanation", status=resp.status_code)
        return Explanation(
            text=content,
            approach="llm",
            sample_id=sample_id,
            provenance=_provenance(prompt, config, model=config.model),
            created_at=_now(),
        )
    raise last_error if last_error is not None else CompletionError("request failed")


def _provenance(prompt: Prompt, config: PromptConfig, model: str) -> dict:
    return {
        "model": model,
        "prompt": prompt.text,
        "endpoint": None if config.mock else config.endpoint,
        "temperature": config.temperature,
        "max_tokens": config.max_tokens,
        "audience_level": config.audience_level,
        "top_gain_k": config.top_gain_k,
    }

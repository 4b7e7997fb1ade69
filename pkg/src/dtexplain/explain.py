"""Template-based explanations: one sentence per traversed node.

These deliberately use nothing beyond the tree and the schema; they are the
baseline that richer generators are compared against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

from .data import FeatureSchema
from .tree import DecisionPath, DecisionTree, validate_path
from ._util import format_sig


@dataclass(frozen=True)
class Explanation:
    text: str
    approach: str  # "rule" | "llm"
    sample_id: str | None = None
    path_nodes: tuple[int, ...] = ()
    provenance: dict = field(default_factory=dict)
    created_at: str = ""

    def __post_init__(self):
        if not self.text:
            raise ValueError("explanation text must be nonempty")
        if self.approach not in ("rule", "llm"):
            raise ValueError(f"unknown explanation approach: {self.approach}")

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "approach": self.approach,
            "sample_id": self.sample_id,
            "path_nodes": list(self.path_nodes),
            "provenance": self.provenance,
            "created_at": self.created_at,
        }


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def step_sentence(step, tree: DecisionTree, schema: FeatureSchema) -> str:
    """One sentence for one traversed internal node."""
    feat = schema.features[step.feature_index]
    unit = feat.unit or ""
    relation = "at most" if step.branch == "left" else "greater than"
    node = tree.nodes[step.node_id]
    child = tree.nodes[node.left if step.branch == "left" else node.right]
    favored = schema.classes[child.majority_class()]
    return (
        f"{feat.name} was {relation} {format_sig(step.threshold)}{unit}, "
        f"so the {step.branch} path was chosen, which favors {favored}."
    )


def rule_explain(
    path: DecisionPath,
    tree: DecisionTree,
    schema: FeatureSchema,
    sample_id: str | None = None,
) -> Explanation:
    """Deterministic templated explanation for one inference.

    Header names the prediction, one sentence per internal step follows, and
    an appendix lists the schema description of each feature the path used.
    """
    validate_path(tree, path)
    predicted = schema.classes[path.prediction]
    sections = [f"Prediction: {predicted}."]
    if path.steps:
        sections.append("\n".join(step_sentence(s, tree, schema) for s in path.steps))
    seen: list[int] = []
    for step in path.steps:
        if step.feature_index not in seen:
            seen.append(step.feature_index)
    bullets = []
    for j in seen:
        feat = schema.features[j]
        unit = f" ({feat.unit})" if feat.unit else ""
        bullets.append(f"- {feat.name}{unit}: {feat.description}")
    appendix = "Feature details:"
    if bullets:
        appendix += "\n" + "\n".join(bullets)
    sections.append(appendix)
    return Explanation(
        text="\n\n".join(sections),
        approach="rule",
        sample_id=sample_id,
        path_nodes=path.nodes,
        provenance={"template_version": "1"},
        created_at=_now(),
    )

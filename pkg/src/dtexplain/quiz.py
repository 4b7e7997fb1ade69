"""Counterfactual quiz generation, scoring, and aggregation.

Questions come from the path's feature intervals: for each tested feature we
probe below, above, and inside its feasible range, re-run inference with only
that feature changed, and record whether the predicted label survives. "Same
outcome" means same label, not same path, so a probe that reroutes to a
different leaf with the same label is a (deliberately tricky) True.
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass

from .constraints import ConstraintSet, feasible_probe
from .tree import DecisionPath, DecisionTree, predict, top_gain_steps
from ._util import format_sig

CHOICES = ("True", "False", "Unsure")
RATING_DIMENSIONS = ("readability", "quality", "background_knowledge")
RATING_LEVELS = ("Low", "Medium", "High")


@dataclass(frozen=True)
class QuizQuestion:
    id: str
    feature_index: int
    true_value: float
    counterfactual_value: float
    relation: str  # smaller | larger | within
    text: str
    correct_answer: bool  # True iff the outcome is unchanged
    oracle_prediction: int
    oracle_path: tuple[int, ...]

    def __post_init__(self):
        if self.counterfactual_value == self.true_value:
            raise ValueError("counterfactual value must differ from the true value")
        if self.relation not in ("smaller", "larger", "within"):
            raise ValueError(f"unknown relation: {self.relation}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "feature_index": self.feature_index,
            "true_value": self.true_value,
            "counterfactual_value": self.counterfactual_value,
            "relation": self.relation,
            "text": self.text,
            "correct_answer": self.correct_answer,
            "oracle": {
                "prediction": self.oracle_prediction,
                "path_nodes": list(self.oracle_path),
            },
        }

    @staticmethod
    def from_dict(doc: dict) -> "QuizQuestion":
        return QuizQuestion(
            id=doc["id"],
            feature_index=doc["feature_index"],
            true_value=doc["true_value"],
            counterfactual_value=doc["counterfactual_value"],
            relation=doc["relation"],
            text=doc["text"],
            correct_answer=doc["correct_answer"],
            oracle_prediction=doc["oracle"]["prediction"],
            oracle_path=tuple(doc["oracle"]["path_nodes"]),
        )

    def wire(self) -> dict:
        """Evaluator-facing form: never includes the answer or oracle fields."""
        return {"id": self.id, "text": self.text}


@dataclass(frozen=True)
class QuizPolicy:
    below: bool = True
    above: bool = True
    within: bool = True
    include_untested: bool = False
    only_label_flipping: bool = False
    max_questions: int | None = None
    seed: int | None = None
    rho: float = 0.1


@dataclass
class AnswerSheet:
    evaluator_id: str
    approach_label: str  # blinded label shown to the evaluator
    choices: dict[str, str]  # question id -> True | False | Unsure
    ratings: dict[str, str]  # dimension -> Low | Medium | High
    started_at: str | None = None
    submitted_at: str | None = None

    def validate_ratings(self) -> None:
        for dim in RATING_DIMENSIONS:
            level = self.ratings.get(dim)
            if level not in RATING_LEVELS:
                raise ValueError(f"missing or invalid rating for {dim}: {level!r}")


@dataclass(frozen=True)
class QuizScore:
    correct: int
    total: int

    def __post_init__(self):
        if not 0 <= self.correct <= self.total:
            raise ValueError("correct must be between 0 and total")


def _question_text(name: str, unit: str, relation: str, value: float) -> str:
    shown = f"{format_sig(value)}{unit}"
    if relation == "within":
        return (
            f"If the {name} had been slightly different (such as {shown}), "
            f"would the outcome have been the same?"
        )
    return (
        f"If the {name} had been significantly {relation} (such as {shown}), "
        f"would the outcome have been the same?"
    )


def gen_quiz(
    tree: DecisionTree,
    path: DecisionPath,
    cs: ConstraintSet,
    x,
    policy: QuizPolicy = QuizPolicy(),
) -> list[QuizQuestion]:
    """Generate counterfactual questions for one inference.

    Features are visited in information-gain order so a `max_questions`
    budget keeps the most decisive ones. Every answer is derived by re-running
    inference with only the probed feature replaced.
    """
    values = [float(v) for v in x]
    if cs.path_nodes != path.nodes:
        raise ValueError("constraint set does not belong to this path")
    if predict(tree, values).nodes != path.nodes:
        raise ValueError("sample does not traverse the given path")
    if tree.feature_domains is None:
        raise ValueError("tree carries no feature domains; train() provides them")
    schema = tree.schema

    ordered_features: list[int] = []
    if path.steps:
        for i in top_gain_steps(path, tree, len(path.steps)):
            j = path.steps[i].feature_index
            if j not in ordered_features:
                ordered_features.append(j)
    untested = [
        j for j in range(schema.n_features) if j not in cs.intervals
    ] if policy.include_untested else []

    original = path.prediction

    def oracle(j: int, value: float) -> tuple[bool, int, tuple[int, ...]]:
        probe_input = list(values)
        probe_input[j] = value
        cf_path = predict(tree, probe_input)
        return cf_path.prediction == original, cf_path.prediction, cf_path.nodes

    drafts: list[dict] = []

    def add(j: int, value: float | None, relation: str, in_interval: bool) -> None:
        if value is None or value == values[j]:
            return
        same, cf_pred, cf_nodes = oracle(j, value)
        if in_interval and not same:
            raise AssertionError("within-interval probe changed the outcome")
        if policy.only_label_flipping and not in_interval and same:
            return
        feat = schema.features[j]
        drafts.append(
            {
                "feature_index": j,
                "true_value": values[j],
                "counterfactual_value": value,
                "relation": relation,
                "text": _question_text(feat.name, feat.unit or "", relation, value),
                "correct_answer": same,
                "oracle_prediction": cf_pred,
                "oracle_path": cf_nodes,
            }
        )

    for j in ordered_features:
        probe = feasible_probe(cs, j, tree.feature_domains[j], rho=policy.rho)
        if policy.below:
            add(j, probe.below, "smaller", in_interval=False)
        if policy.above:
            add(j, probe.above, "larger", in_interval=False)
        if policy.within:
            inside = probe.inside
            if inside == values[j]:
                iv = cs.intervals[j]
                hi_eff = min(iv.hi, tree.feature_domains[j][1])
                inside = float(format_sig((inside + hi_eff) / 2.0))
                if not iv.contains(inside) or inside == values[j]:
                    inside = None
            add(j, inside, "within", in_interval=True)
    for j in untested:
        probe = feasible_probe(cs, j, tree.feature_domains[j], rho=policy.rho)
        add(j, probe.inside, "within", in_interval=True)

    if policy.max_questions is not None:
        drafts = drafts[: policy.max_questions]
    if policy.seed is not None:
        random.Random(policy.seed).shuffle(drafts)
    return [
        QuizQuestion(id=f"q{i + 1:03d}", **draft) for i, draft in enumerate(drafts)
    ]


def score(sheet: AnswerSheet, questions: list[QuizQuestion]) -> QuizScore:
    """Count matches against the oracle; Unsure is never correct."""
    correct = 0
    for q in questions:
        choice = sheet.choices.get(q.id)
        if choice is None:
            raise ValueError(f"missing answer for question {q.id}")
        if choice not in CHOICES:
            raise ValueError(f"invalid choice for question {q.id}: {choice!r}")
        if (choice == "True" and q.correct_answer) or (
            choice == "False" and not q.correct_answer
        ):
            correct += 1
    return QuizScore(correct=correct, total=len(questions))


@dataclass(frozen=True)
class AggregateScore:
    mean: float
    std: float
    total: int

    def render(self) -> str:
        return f"{self.mean:.1f} ± {self.std:.1f} (out of {self.total})"


def aggregate(scores: list[QuizScore]) -> AggregateScore:
    """Mean and sample standard deviation of correct counts across evaluators."""
    if not scores:
        raise ValueError("no scores to aggregate")
    totals = {s.total for s in scores}
    if len(totals) != 1:
        raise ValueError("mixed totals: evaluators must answer the same question set")
    corrects = [s.correct for s in scores]
    mean = sum(corrects) / len(corrects)
    std = statistics.stdev(corrects) if len(corrects) > 1 else 0.0
    return AggregateScore(mean=mean, std=std, total=totals.pop())


def tabulate_ratings(
    sheets_by_approach: dict[str, list[AnswerSheet]],
) -> dict[str, dict[str, dict[str, dict[str, float]]]]:
    """Percentage of items at each rating level, mean +/- std across evaluators.

    Returns approach -> dimension -> level -> {"mean", "std"}. Each
    evaluator's level percentages are computed over their own items first (so
    each row sums to 100), then averaged across evaluators.
    """
    table: dict[str, dict[str, dict[str, dict[str, float]]]] = {}
    for approach, sheets in sheets_by_approach.items():
        if not sheets:
            raise ValueError(f"empty rating group for approach {approach!r}")
        by_evaluator: dict[str, list[AnswerSheet]] = {}
        for sheet in sheets:
            sheet.validate_ratings()
            by_evaluator.setdefault(sheet.evaluator_id, []).append(sheet)
        table[approach] = {}
        for dim in RATING_DIMENSIONS:
            per_level: dict[str, list[float]] = {lvl: [] for lvl in RATING_LEVELS}
            for ev_sheets in by_evaluator.values():
                n = len(ev_sheets)
                for lvl in RATING_LEVELS:
                    hits = sum(1 for s in ev_sheets if s.ratings[dim] == lvl)
                    per_level[lvl].append(100.0 * hits / n)
            table[approach][dim] = {
                lvl: {
                    "mean": sum(vals) / len(vals),
                    "std": statistics.stdev(vals) if len(vals) > 1 else 0.0,
                }
                for lvl, vals in per_level.items()
            }
    return table

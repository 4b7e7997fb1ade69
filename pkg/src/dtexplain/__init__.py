"""Decision-tree explanation workbench with counterfactual quiz evaluation."""

from .data import Dataset, Feature, FeatureSchema, Sample, builtin_iris, load_csv, split
from .tree import (
    DecisionPath,
    DecisionTree,
    TreeNode,
    accuracy,
    from_json,
    impurity_decrease,
    predict,
    to_json,
    to_text,
    top_gain_steps,
    train,
)
from .constraints import ConstraintSet, FeatureInterval, extract_constraints, feasible_probe, satisfies
from .explain import Explanation, rule_explain
from .llm import Prompt, PromptConfig, build_prompt, llm_explain
from .quiz import (
    AnswerSheet,
    QuizPolicy,
    QuizQuestion,
    QuizScore,
    aggregate,
    gen_quiz,
    score,
    tabulate_ratings,
)
from .service import create_app

__version__ = "0.1.0"

__all__ = [
    "AnswerSheet",
    "ConstraintSet",
    "Dataset",
    "DecisionPath",
    "DecisionTree",
    "Explanation",
    "Feature",
    "FeatureInterval",
    "FeatureSchema",
    "Prompt",
    "PromptConfig",
    "QuizPolicy",
    "QuizQuestion",
    "QuizScore",
    "Sample",
    "TreeNode",
    "accuracy",
    "aggregate",
    "build_prompt",
    "builtin_iris",
    "create_app",
    "extract_constraints",
    "feasible_probe",
    "from_json",
    "gen_quiz",
    "impurity_decrease",
    "llm_explain",
    "load_csv",
    "predict",
    "rule_explain",
    "satisfies",
    "score",
    "split",
    "tabulate_ratings",
    "to_json",
    "to_text",
    "top_gain_steps",
    "train",
]

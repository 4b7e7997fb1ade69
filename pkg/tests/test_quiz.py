from __future__ import annotations

import numpy as np
import pytest

from dtexplain.constraints import extract_constraints
from dtexplain.data import Feature, FeatureSchema
from dtexplain.quiz import (
    AggregateScore,
    AnswerSheet,
    QuizPolicy,
    QuizQuestion,
    QuizScore,
    aggregate,
    gen_quiz,
    score,
    tabulate_ratings,
)
from dtexplain.tree import DecisionTree, TreeNode, predict, top_gain_steps, train

from conftest import make_dataset, make_schema


def independent_predict(tree: DecisionTree, values) -> int:
    """Test-side traversal, deliberately separate from the library's."""
    node = tree.nodes[tree.root]
    while not node.is_leaf:
        if values[node.feature_index] <= node.threshold:
            node = tree.nodes[node.left]
        else:
            node = tree.nodes[node.right]
    return node.class_counts.index(max(node.class_counts))


def _quiz_for(tree, values, policy=QuizPolicy()):
    path = predict(tree, values)
    cs = extract_constraints(path)
    return path, cs, gen_quiz(tree, path, cs, values, policy)


def _shared_label_tree():
    """Two leaves carry the same majority label, reachable via different paths."""
    schema = make_schema(1, 2)
    nodes = {
        0: TreeNode(0, (6, 7), 0, 5.0, 1, 2),
        1: TreeNode(1, (5, 0)),
        2: TreeNode(2, (1, 7), 0, 10.0, 3, 4),
        3: TreeNode(3, (0, 4)),
        4: TreeNode(4, (1, 3)),
    }
    return DecisionTree(schema=schema, root=0, nodes=nodes, max_depth=2,
                        feature_domains=((0.0, 20.0),))


def _grid_tree():
    rng = np.random.default_rng(17)
    pts = [(float(a), float(b)) for a in range(10) for b in range(10)]
    labels = [1 if (a > 3.0) != (b > 6.0) else 0 for a, b in pts]
    ds = make_dataset(pts, labels, make_schema(2, 2))
    return train(ds, max_depth=4), pts


# ---------------------------------------------------------------- generation

def test_grid_tree_oracle_matches_brute_force_everywhere():
    tree, pts = _grid_tree()
    policy = QuizPolicy(include_untested=True)
    for x in pts:
        path, cs, questions = _quiz_for(tree, list(x), policy)
        original = independent_predict(tree, x)
        for q in questions:
            probe = list(x)
            probe[q.feature_index] = q.counterfactual_value
            assert q.correct_answer == (independent_predict(tree, probe) == original)
            if q.relation == "within":
                assert q.correct_answer is True


def test_below_probe_that_flips_label_is_false():
    tree = _shared_label_tree()
    _, _, questions = _quiz_for(tree, [7.0])
    smaller = [q for q in questions if q.relation == "smaller"]
    assert len(smaller) == 1
    assert smaller[0].correct_answer is False
    assert "significantly smaller" in smaller[0].text


def test_within_probe_is_true():
    tree = _shared_label_tree()
    _, _, questions = _quiz_for(tree, [7.0])
    within = [q for q in questions if q.relation == "within"]
    assert within and all(q.correct_answer for q in within)
    assert "slightly different" in within[0].text


def test_rerouted_probe_with_same_label_is_true():
    # above 10 the path changes but lands on another leaf with the same label
    tree = _shared_label_tree()
    _, _, questions = _quiz_for(tree, [7.0])
    larger = [q for q in questions if q.relation == "larger"]
    assert len(larger) == 1
    assert larger[0].counterfactual_value > 10.0
    assert larger[0].correct_answer is True
    oracle_path = larger[0].oracle_path
    assert oracle_path != predict(tree, [7.0]).nodes
    assert larger[0].oracle_prediction == 1


def test_only_label_flipping_drops_true_exterior_probes():
    tree = _shared_label_tree()
    _, _, questions = _quiz_for(tree, [7.0], QuizPolicy(only_label_flipping=True))
    exterior = [q for q in questions if q.relation in ("smaller", "larger")]
    assert exterior and all(q.correct_answer is False for q in exterior)
    assert not [q for q in questions if q.relation == "larger"]


def test_question_text_shows_the_probe_value_and_unit():
    schema = FeatureSchema(
        features=(Feature("Petal Width", "petal width", "cm"),),
        classes=("a", "b"),
        target_column="y",
    )
    nodes = {
        0: TreeNode(0, (4, 4), 0, 0.8, 1, 2),
        1: TreeNode(1, (4, 0)),
        2: TreeNode(2, (0, 4)),
    }
    tree = DecisionTree(schema=schema, root=0, nodes=nodes, max_depth=1,
                        feature_domains=((0.1, 2.5),))
    _, _, questions = _quiz_for(tree, [0.9])
    smaller = [q for q in questions if q.relation == "smaller"]
    assert smaller[0].text == (
        "If the Petal Width had been significantly smaller (such as 0.56cm), "
        "would the outcome have been the same?"
    )
    assert smaller[0].correct_answer is False


def test_max_questions_keeps_highest_gain_feature_first(iris_tree):
    x = [6.1, 2.8, 4.7, 1.2]
    path = predict(iris_tree, x)
    cs = extract_constraints(path)
    full = gen_quiz(iris_tree, path, cs, x)
    top_step = top_gain_steps(path, iris_tree, 1)[0]
    top_feature = path.steps[top_step].feature_index
    trimmed = gen_quiz(iris_tree, path, cs, x, QuizPolicy(max_questions=2))
    assert len(trimmed) == 2
    assert all(q.feature_index == top_feature for q in trimmed)
    assert [q.text for q in trimmed] == [q.text for q in full[:2]]


def test_quiz_is_deterministic_and_seed_shuffles(iris_tree):
    x = [6.1, 2.8, 4.7, 1.2]
    path = predict(iris_tree, x)
    cs = extract_constraints(path)
    a = gen_quiz(iris_tree, path, cs, x, QuizPolicy(seed=5))
    b = gen_quiz(iris_tree, path, cs, x, QuizPolicy(seed=5))
    assert a == b
    plain = gen_quiz(iris_tree, path, cs, x)
    assert sorted(q.text for q in a) == sorted(q.text for q in plain)


def test_untested_features_excluded_unless_requested(iris_tree):
    x = [6.1, 2.8, 4.7, 1.2]
    path = predict(iris_tree, x)
    cs = extract_constraints(path)
    tested = set(cs.intervals)
    default = gen_quiz(iris_tree, path, cs, x)
    assert {q.feature_index for q in default} <= tested
    expanded = gen_quiz(iris_tree, path, cs, x, QuizPolicy(include_untested=True))
    assert {q.feature_index for q in expanded} - tested


def test_gen_quiz_rejects_mismatched_inputs(iris_tree):
    x = [6.1, 2.8, 4.7, 1.2]
    other = [5.0, 3.5, 1.4, 0.2]
    path = predict(iris_tree, x)
    cs = extract_constraints(path)
    with pytest.raises(ValueError):
        gen_quiz(iris_tree, path, cs, other)
    other_cs = extract_constraints(predict(iris_tree, other))
    with pytest.raises(ValueError):
        gen_quiz(iris_tree, path, other_cs, x)


def test_question_rejects_equal_counterfactual():
    with pytest.raises(ValueError):
        QuizQuestion(
            id="q1", feature_index=0, true_value=1.0, counterfactual_value=1.0,
            relation="within", text="t", correct_answer=True,
            oracle_prediction=0, oracle_path=(0,),
        )


# ---------------------------------------------------------------- scoring

def _questions(answers):
    return [
        QuizQuestion(
            id=f"q{i}", feature_index=0, true_value=1.0, counterfactual_value=2.0,
            relation="larger", text=f"question {i}", correct_answer=a,
            oracle_prediction=0, oracle_path=(0,),
        )
        for i, a in enumerate(answers)
    ]


def _sheet(choices, ratings=None):
    return AnswerSheet(
        evaluator_id="ev", approach_label="A", choices=choices, ratings=ratings or {}
    )


def test_perfect_sheet_scores_full():
    qs = _questions([True, False, True, False])
    choices = {q.id: ("True" if q.correct_answer else "False") for q in qs}
    assert score(_sheet(choices), qs) == QuizScore(4, 4)


def test_unsure_is_never_correct():
    qs = _questions([True, False, True])
    choices = {q.id: "Unsure" for q in qs}
    assert score(_sheet(choices), qs) == QuizScore(0, 3)


def test_mixed_sheet_example():
    qs = _questions([False, True, False])
    choices = {"q0": "False", "q1": "Unsure", "q2": "True"}
    assert score(_sheet(choices), qs) == QuizScore(1, 3)


def test_missing_answer_names_the_question():
    qs = _questions([True, False])
    with pytest.raises(ValueError, match="q1"):
        score(_sheet({"q0": "True"}), qs)


def test_invalid_choice_rejected():
    qs = _questions([True])
    with pytest.raises(ValueError, match="invalid choice"):
        score(_sheet({"q0": "maybe"}), qs)


def test_score_is_question_order_invariant():
    qs = _questions([True, False, True, False, True])
    choices = {q.id: "True" for q in qs}
    assert score(_sheet(choices), qs) == score(_sheet(choices), list(reversed(qs)))


# ---------------------------------------------------------------- aggregation

def test_aggregate_five_evaluators():
    scores = [QuizScore(c, 25) for c in (5, 8, 12, 17, 20)]
    agg = aggregate(scores)
    assert agg.render() == "12.4 ± 6.2 (out of 25)"
    assert agg.mean == pytest.approx(12.4)
    assert agg.std == pytest.approx(6.188699, abs=1e-6)


def test_aggregate_single_evaluator():
    assert aggregate([QuizScore(17, 25)]).render() == "17.0 ± 0.0 (out of 25)"


def test_render_matches_published_row_format():
    assert AggregateScore(12.4, 6.5, 25).render() == "12.4 ± 6.5 (out of 25)"


def test_aggregate_rejects_mixed_totals():
    with pytest.raises(ValueError, match="mixed totals"):
        aggregate([QuizScore(3, 5), QuizScore(3, 6)])


def test_aggregate_rejects_empty():
    with pytest.raises(ValueError):
        aggregate([])


def test_aggregate_is_order_invariant():
    scores = [QuizScore(c, 25) for c in (5, 8, 12, 17, 20)]
    assert aggregate(scores) == aggregate(list(reversed(scores)))


# ---------------------------------------------------------------- ratings

def _rated_sheet(evaluator, readability, quality="Medium", background="Low"):
    return AnswerSheet(
        evaluator_id=evaluator,
        approach_label="A",
        choices={},
        ratings={
            "readability": readability,
            "quality": quality,
            "background_knowledge": background,
        },
    )


def test_single_evaluator_all_high():
    sheets = [_rated_sheet("e1", "High") for _ in range(10)]
    table = tabulate_ratings({"rule": sheets})
    cell = table["rule"]["readability"]
    assert cell["High"] == {"mean": 100.0, "std": 0.0}
    assert cell["Low"] == {"mean": 0.0, "std": 0.0}
    assert cell["Medium"] == {"mean": 0.0, "std": 0.0}


def test_two_evaluators_forty_sixty():
    e1 = [_rated_sheet("e1", "High")] * 2 + [_rated_sheet("e1", "Low")] * 3
    e2 = [_rated_sheet("e2", "High")] * 3 + [_rated_sheet("e2", "Low")] * 2
    table = tabulate_ratings({"llm": e1 + e2})
    high = table["llm"]["readability"]["High"]
    assert high["mean"] == pytest.approx(50.0)
    assert high["std"] == pytest.approx(14.1421, abs=1e-3)


def test_table_has_exactly_three_dimensions_and_levels():
    table = tabulate_ratings({"rule": [_rated_sheet("e1", "High")]})
    assert set(table["rule"]) == {"readability", "quality", "background_knowledge"}
    for dim in table["rule"].values():
        assert set(dim) == {"Low", "Medium", "High"}


def test_each_evaluator_row_sums_to_hundred():
    rng = np.random.default_rng(8)
    sheets = []
    for e in range(4):
        for _ in range(7):
            levels = [str(rng.choice(["Low", "Medium", "High"])) for _ in range(3)]
            sheets.append(_rated_sheet(f"e{e}", levels[0], levels[1], levels[2]))
    table = tabulate_ratings({"llm": sheets})
    for dim in table["llm"].values():
        total_mean = sum(cell["mean"] for cell in dim.values())
        assert total_mean == pytest.approx(100.0)


def test_empty_rating_group_errors():
    with pytest.raises(ValueError, match="empty rating group"):
        tabulate_ratings({"rule": []})


def test_incomplete_ratings_rejected():
    sheet = AnswerSheet("e1", "A", {}, {"readability": "High"})
    with pytest.raises(ValueError, match="quality"):
        tabulate_ratings({"rule": [sheet]})

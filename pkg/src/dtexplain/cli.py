"""Command-line driver for the whole pipeline: train, explain, quiz, serve, report."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import data as datamod
from .constraints import extract_constraints
from .explain import rule_explain
from .llm import PromptConfig, build_prompt, llm_explain
from .quiz import AnswerSheet, QuizPolicy, QuizQuestion, gen_quiz, score
from .service import EventLog, StudyStore, build_report, create_app, render_report_text
from .tree import accuracy, from_json, predict, to_json, train


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _load_schema_file(path: str) -> tuple[datamod.FeatureSchema, list[str]]:
    doc = json.loads(Path(path).read_text("utf-8"))
    schema = datamod.FeatureSchema.from_dict(doc)
    return schema, list(doc.get("drop_columns", []))


def _load_dataset(data: str, schema: str | None) -> datamod.Dataset:
    if data == "iris":
        return datamod.builtin_iris()
    if schema == "nfbot" or (schema is None and "bot" in Path(data).name.lower()):
        return datamod.load_csv(
            data,
            datamod.nfbot_schema(),
            drop_columns=datamod.NFBOT_DROP_COLUMNS,
            na_policy="drop",
        )
    if schema is None:
        raise ValueError("--schema is required for CSV datasets (or use --schema nfbot)")
    fs, drop = _load_schema_file(schema)
    return datamod.load_csv(data, fs, drop_columns=drop, na_policy="drop")


def _read_tree(path: str):
    return from_json(json.loads(Path(path).read_text("utf-8")))


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help="JSON file of per-subcommand flag defaults, e.g. {\"train\": {\"seed\": 3}}.",
)
@click.pass_context
def main(ctx, config_path):
    """Decision-tree explanation workbench for intrusion detection."""
    if config_path:
        try:
            ctx.default_map = json.loads(Path(config_path).read_text("utf-8"))
        except ValueError as e:
            raise click.UsageError(f"bad config file: {e}") from e


@main.command("train")
@click.option("--data", required=True, help='Dataset: "iris" or a CSV path.')
@click.option("--schema", default=None, help='Schema JSON path, or "nfbot" for NetFlow CSVs.')
@click.option("--max-depth", type=click.IntRange(min=1), default=4, show_default=True)
@click.option("--min-samples-leaf", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--test-fraction", type=click.FloatRange(0, 1, min_open=True, max_open=True), default=0.3, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--stratified/--no-stratified", default=True, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default="tree.json", show_default=True)
def cli_train(data, schema, max_depth, min_samples_leaf, test_fraction, seed, stratified, out):
    """Train a depth-limited tree, report test accuracy, write the tree JSON."""
    try:
        dataset = _load_dataset(data, schema)
        train_set, test_set = datamod.split(dataset, test_fraction, seed, stratified)
        tree = train(train_set, max_depth, min_samples_leaf, seed=seed)
        acc = accuracy(tree, test_set)
        doc = to_json(tree)
        Path(out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", "utf-8")
    except (ValueError, OSError) as e:
        _fail(str(e))
    correct = round(acc * len(test_set))
    click.echo(f"train size: {len(train_set)}  test size: {len(test_set)}")
    click.echo(f"test accuracy: {acc:.4f} ({correct}/{len(test_set)})")
    click.echo(f"tree written to {out}")


@main.command("explain")
@click.option("--tree", "tree_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", required=True, help='Dataset the sample index refers to ("iris" or CSV).')
@click.option("--schema", default=None)
@click.option("--sample-index", type=click.IntRange(min=0), required=True)
@click.option("--mode", type=click.Choice(["rule", "llm"]), default="rule", show_default=True)
@click.option("--mock", is_flag=True, help="Offline deterministic LLM substitute.")
@click.option("--audience", type=click.Choice(["novice", "security", "ml"]), default="novice", show_default=True)
@click.option("--top-gain-k", type=click.IntRange(min=0), default=2, show_default=True)
@click.option("--model", default="gpt-4", show_default=True)
@click.option("--endpoint", default="https://api.openai.com/v1/chat/completions")
@click.option("--api-key-env", default="OPENAI_API_KEY", show_default=True)
def cli_explain(tree_path, data, schema, sample_index, mode, mock, audience, top_gain_k, model, endpoint, api_key_env):
    """Print a rule-based or LLM explanation for one sample."""
    try:
        tree = _read_tree(tree_path)
        dataset = _load_dataset(data, schema)
        if sample_index >= len(dataset):
            raise ValueError(f"sample index {sample_index} out of range (n={len(dataset)})")
        values = dataset.x[sample_index]
        path = predict(tree, values)
        if mode == "rule":
            expl = rule_explain(path, tree, tree.schema, sample_id=str(sample_index))
        else:
            config = PromptConfig(
                audience_level=audience,
                top_gain_k=top_gain_k,
                model=model,
                endpoint=endpoint,
                api_key_env=api_key_env,
                mock=mock,
            )
            prompt = build_prompt(tree, path, tree.schema, config)
            expl = llm_explain(prompt, config, sample_id=str(sample_index))
    except (ValueError, RuntimeError, OSError) as e:
        _fail(str(e))
    click.echo(expl.text)


@main.command("quiz-gen")
@click.option("--tree", "tree_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", required=True)
@click.option("--schema", default=None)
@click.option("--sample-index", type=click.IntRange(min=0), required=True)
@click.option("--max-questions", type=click.IntRange(min=1), default=None)
@click.option("--seed", type=int, default=None, help="Shuffle question order deterministically.")
@click.option("--include-untested", is_flag=True)
@click.option("--only-label-flipping", is_flag=True)
@click.option("--out", type=click.Path(dir_okay=False), default="quiz.json", show_default=True)
def cli_quiz_gen(tree_path, data, schema, sample_index, max_questions, seed, include_untested, only_label_flipping, out):
    """Generate the counterfactual quiz for one sample and write quiz JSON."""
    try:
        tree = _read_tree(tree_path)
        dataset = _load_dataset(data, schema)
        if sample_index >= len(dataset):
            raise ValueError(f"sample index {sample_index} out of range (n={len(dataset)})")
        values = [float(v) for v in dataset.x[sample_index]]
        path = predict(tree, values)
        cs = extract_constraints(path)
        policy = QuizPolicy(
            include_untested=include_untested,
            only_label_flipping=only_label_flipping,
            max_questions=max_questions,
            seed=seed,
        )
        questions = gen_quiz(tree, path, cs, values, policy)
        doc = {
            "version": 1,
            "sample_index": sample_index,
            "sample_values": values,
            "prediction": path.prediction,
            "prediction_name": tree.schema.classes[path.prediction],
            "path_nodes": list(path.nodes),
            "constraints": cs.to_dict(),
            "questions": [q.to_dict() for q in questions],
        }
        Path(out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", "utf-8")
    except (ValueError, OSError) as e:
        _fail(str(e))
    click.echo(f"{len(questions)} questions written to {out}")


@main.command("quiz-take")
@click.option("--quiz", "quiz_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--explanation", "explanation_path", default=None, type=click.Path(exists=True, dir_okay=False))
def cli_quiz_take(quiz_path, explanation_path):
    """Interactive terminal quiz: show the explanation, ask each question, score."""
    try:
        doc = json.loads(Path(quiz_path).read_text("utf-8"))
        questions = [QuizQuestion.from_dict(q) for q in doc["questions"]]
    except (ValueError, KeyError, OSError) as e:
        _fail(f"bad quiz file: {e}")
    if explanation_path:
        click.echo(Path(explanation_path).read_text("utf-8").rstrip())
        click.echo()
    if not questions:
        click.echo("No questions in this quiz.")
        return
    mapping = {"t": "True", "f": "False", "u": "Unsure"}
    choices: dict[str, str] = {}
    for i, q in enumerate(questions):
        click.echo(f"Q{i + 1}. {q.text}")
        answer = click.prompt("Answer (t/f/u)", type=click.Choice(["t", "f", "u"]))
        choices[q.id] = mapping[answer]
    sheet = AnswerSheet(evaluator_id="terminal", approach_label="-", choices=choices, ratings={})
    result = score(sheet, questions)
    click.echo(f"{result.correct} out of {result.total}")


@main.command("serve")
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--store", required=True, type=click.Path(file_okay=True))
@click.option("--ui-dist", default=None, type=click.Path(exists=True, file_okay=False))
@click.option("--token", default=None, help="Bearer token required on admin endpoints.")
def cli_serve(port, host, store, ui_dist, token):
    """Run the blinded study service."""
    import uvicorn

    app = create_app(store, ui_dist=ui_dist, admin_token=token)
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.command("report")
@click.option("--store", required=True, type=click.Path(exists=True, file_okay=True))
@click.option("--study", "study_id", default=None, help="Defaults to the only study in the store.")
@click.option("--json", "as_json", is_flag=True, help="Emit the raw report JSON instead of tables.")
def cli_report(store, study_id, as_json):
    """Print quiz-score and rating tables for a completed study."""
    try:
        store_path = Path(store)
        log_path = store_path / "events.jsonl" if store_path.is_dir() else store_path
        state = StudyStore(EventLog(log_path))
        if study_id is None:
            if len(state.studies) != 1:
                raise ValueError(
                    "store holds %d studies; pass --study" % len(state.studies)
                )
            study_id = next(iter(state.studies))
        report = build_report(state, study_id)
    except (ValueError, KeyError, OSError) as e:
        _fail(str(e))
    if as_json:
        click.echo(json.dumps(report, sort_keys=True, indent=2))
    else:
        click.echo(render_report_text(report))


if __name__ == "__main__":
    main()

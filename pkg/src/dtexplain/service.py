"""HTTP service for blinded explanation studies.

State lives in an append-only JSON Lines event log; replaying the log
reconstructs the service exactly, including reports byte-for-byte. Evaluators
only ever see stripped questions (id + text): answers and counterfactual
oracles stay server-side.
"""

from __future__ import annotations

import json
import random
import threading
import uuid
import zlib
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Header, HTTPException, Response

from . import data as datamod
from .constraints import extract_constraints
from .explain import rule_explain
from .llm import PromptConfig, build_prompt, llm_explain
from .quiz import (
    AnswerSheet,
    CHOICES,
    QuizPolicy,
    QuizQuestion,
    QuizScore,
    RATING_DIMENSIONS,
    RATING_LEVELS,
    aggregate,
    gen_quiz,
    score,
    tabulate_ratings,
)
from .tree import from_json, predict


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class EventLog:
    """Append-only JSONL store; one event object per line."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, event: dict) -> None:
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def replay(self) -> list[dict]:
        if not self.path.exists():
            return []
        events = []
        with self.path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    events.append(json.loads(line))
        return events


class StudyStore:
    """In-memory state rebuilt from the event log; one writer at a time."""

    def __init__(self, log: EventLog):
        self.log = log
        self.lock = threading.Lock()
        self.studies: dict[str, dict] = {}
        self.sessions: dict[str, dict] = {}
        for event in log.replay():
            self._apply(event)

    def _apply(self, event: dict) -> None:
        etype = event["type"]
        if etype == "study_created":
            study = event["study"]
            self.studies[study["id"]] = study
        elif etype == "session_opened":
            session = dict(event["session"])
            session["submitted"] = {}
            self.sessions[session["id"]] = session
        elif etype == "item_submitted":
            session = self.sessions[event["session_id"]]
            session["submitted"][event["item_id"]] = {
                "choices": event["choices"],
                "ratings": event["ratings"],
                "submitted_at": event["submitted_at"],
            }
        else:
            raise ValueError(f"unknown event type: {etype}")

    def record(self, event: dict) -> None:
        # caller must hold self.lock
        self.log.append(event)
        self._apply(event)

    def session_for(self, study_id: str, evaluator_id: str) -> dict | None:
        for session in self.sessions.values():
            if session["study_id"] == study_id and session["evaluator_id"] == evaluator_id:
                return session
        return None


def _load_dataset(spec: dict) -> datamod.Dataset:
    if not isinstance(spec, dict):
        raise ValueError("dataset spec must be an object")
    if spec.get("builtin"):
        name = spec["builtin"]
        if name == "iris":
            return datamod.builtin_iris()
        raise ValueError(f"unknown dataset: {name}")
    if spec.get("csv_path"):
        if spec.get("schema") == "nfbot":
            schema = datamod.nfbot_schema()
            drop = spec.get("drop_columns", list(datamod.NFBOT_DROP_COLUMNS))
        else:
            schema = datamod.FeatureSchema.from_dict(spec.get("schema") or {})
            drop = spec.get("drop_columns", [])
        return datamod.load_csv(
            spec["csv_path"], schema, drop_columns=drop, na_policy=spec.get("na_policy", "drop")
        )
    raise ValueError("dataset spec needs 'builtin' or 'csv_path'")


_CONFIG_DEFAULTS = {
    "seed": 0,
    "num_samples": 10,
    "test_fraction": 0.3,
    "stratified": True,
    "approaches": ["rule", "llm"],
    "audience_level": "novice",
    "top_gain_k": 2,
    "mock": True,
    "model": "gpt-4",
    "endpoint": "https://api.openai.com/v1/chat/completions",
    "api_key_env": "OPENAI_API_KEY",
    "temperature": 0.2,
    "max_tokens": 600,
    "max_questions": None,
    "include_untested": False,
    "only_label_flipping": False,
}


def build_study(tree_doc: dict, dataset_spec: dict, config: dict) -> dict:
    """Assemble a full study document: samples, questions, explanations, blinding.

    Explanations (including LLM calls unless mock) happen here, once; every
    evaluator of the study sees identical text.
    """
    cfg = dict(_CONFIG_DEFAULTS)
    unknown = set(config) - set(cfg)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    cfg.update(config)
    approaches = list(cfg["approaches"])
    if not approaches or len(set(approaches)) != len(approaches):
        raise ValueError("approaches must be a nonempty list without duplicates")
    for ap in approaches:
        if ap not in ("rule", "llm"):
            raise ValueError(f"unknown approach: {ap}")

    tree = from_json(tree_doc)
    dataset = _load_dataset(dataset_spec)
    _, test_set = datamod.split(
        dataset, cfg["test_fraction"], cfg["seed"], stratified=cfg["stratified"]
    )
    rng = random.Random(cfg["seed"])
    n_pick = min(cfg["num_samples"], len(test_set))
    picked = rng.sample(range(len(test_set)), n_pick)

    policy = QuizPolicy(
        include_untested=cfg["include_untested"],
        only_label_flipping=cfg["only_label_flipping"],
        max_questions=cfg["max_questions"],
    )
    prompt_config = PromptConfig(
        audience_level=cfg["audience_level"],
        top_gain_k=cfg["top_gain_k"],
        model=cfg["model"],
        temperature=cfg["temperature"],
        max_tokens=cfg["max_tokens"],
        endpoint=cfg["endpoint"],
        api_key_env=cfg["api_key_env"],
        mock=cfg["mock"],
    )

    samples = []
    explanations: dict[str, list[dict]] = {ap: [] for ap in approaches}
    for i, test_index in enumerate(picked):
        values = [float(v) for v in test_set.x[test_index]]
        path = predict(tree, values)
        cs = extract_constraints(path)
        questions = gen_quiz(tree, path, cs, values, policy)
        samples.append(
            {
                "sample_id": f"s{i + 1:02d}",
                "test_index": test_index,
                "values": values,
                "label": int(test_set.y[test_index]),
                "prediction": path.prediction,
                "prediction_name": tree.schema.classes[path.prediction],
                "path_nodes": list(path.nodes),
                "constraints": cs.to_dict(),
                "questions": [q.to_dict() for q in questions],
            }
        )
        for ap in approaches:
            if ap == "rule":
                expl = rule_explain(path, tree, tree.schema, sample_id=f"s{i + 1:02d}")
            else:
                prompt = build_prompt(tree, path, tree.schema, prompt_config)
                expl = llm_explain(prompt, prompt_config, sample_id=f"s{i + 1:02d}")
            explanations[ap].append(expl.to_dict())

    labels = [chr(ord("A") + i) for i in range(len(approaches))]
    shuffled = approaches[:]
    rng.shuffle(shuffled)
    blinding = {ap: labels[i] for i, ap in enumerate(shuffled)}

    items = []
    n = 1
    for i in range(len(samples)):
        for ap in sorted(approaches, key=lambda a: blinding[a]):
            items.append({"id": f"item{n:03d}", "sample": i, "approach": ap})
            n += 1

    return {
        "id": uuid.uuid4().hex[:12],
        "created_at": _now(),
        "seed": cfg["seed"],
        "config": cfg,
        "tree": tree_doc,
        "blinding": blinding,
        "samples": samples,
        "explanations": explanations,
        "items": items,
        "status": "open",
    }


def _evaluator_order(study: dict, evaluator_id: str) -> list[int]:
    seed = (study["seed"] << 16) ^ zlib.crc32(evaluator_id.encode("utf-8"))
    order = list(range(len(study["items"])))
    random.Random(seed).shuffle(order)
    return order


def _completed_sessions(store: StudyStore, study: dict) -> list[dict]:
    done = []
    for session in store.sessions.values():
        if session["study_id"] == study["id"] and len(session["submitted"]) == len(
            study["items"]
        ):
            done.append(session)
    return sorted(done, key=lambda s: s["evaluator_id"])


def build_report(store: StudyStore, study_id: str) -> dict:
    """Unblinded quiz-score and rating aggregates over completed sessions."""
    study = store.studies.get(study_id)
    if study is None:
        raise KeyError(f"unknown study: {study_id}")
    sessions = _completed_sessions(store, study)
    if not sessions:
        raise ValueError("no completed sessions")

    approaches = list(study["explanations"].keys())
    questions_by_sample = [
        [QuizQuestion.from_dict(q) for q in s["questions"]] for s in study["samples"]
    ]
    items_by_id = {item["id"]: item for item in study["items"]}

    per_eval_scores: dict[str, dict[str, list[int]]] = {
        ap: {} for ap in approaches
    }  # approach -> evaluator -> [correct, total]
    sheets_by_approach: dict[str, list[AnswerSheet]] = {ap: [] for ap in approaches}
    for session in sessions:
        evaluator = session["evaluator_id"]
        for item_id, submission in session["submitted"].items():
            item = items_by_id[item_id]
            ap = item["approach"]
            questions = questions_by_sample[item["sample"]]
            sheet = AnswerSheet(
                evaluator_id=evaluator,
                approach_label=study["blinding"][ap],
                choices=submission["choices"],
                ratings=submission["ratings"],
                submitted_at=submission["submitted_at"],
            )
            s = score(sheet, questions)
            bucket = per_eval_scores[ap].setdefault(evaluator, [0, 0])
            bucket[0] += s.correct
            bucket[1] += s.total
            sheets_by_approach[ap].append(sheet)

    quiz_scores = {}
    for ap in approaches:
        scores = [
            QuizScore(correct=c, total=t)
            for _, (c, t) in sorted(per_eval_scores[ap].items())
        ]
        agg = aggregate(scores)
        quiz_scores[ap] = {
            "mean": agg.mean,
            "std": agg.std,
            "total": agg.total,
            "rendered": agg.render(),
            "per_evaluator": {
                ev: {"correct": c, "total": t}
                for ev, (c, t) in sorted(per_eval_scores[ap].items())
            },
        }

    overall_by_eval: dict[str, list[int]] = {}
    for ap in approaches:
        for ev, (c, t) in per_eval_scores[ap].items():
            bucket = overall_by_eval.setdefault(ev, [0, 0])
            bucket[0] += c
            bucket[1] += t
    overall_scores = [
        QuizScore(correct=c, total=t) for _, (c, t) in sorted(overall_by_eval.items())
    ]
    overall_agg = aggregate(overall_scores)

    return {
        "study_id": study_id,
        "evaluators": [s["evaluator_id"] for s in sessions],
        "blinding": study["blinding"],
        "quiz_scores": quiz_scores,
        "overall": {
            "mean": overall_agg.mean,
            "std": overall_agg.std,
            "total": overall_agg.total,
            "rendered": overall_agg.render(),
        },
        "ratings": tabulate_ratings(sheets_by_approach),
    }


def render_report_text(report: dict) -> str:
    """Plain-text tables: quiz scores per approach, then rating percentages."""
    lines = [f"Study {report['study_id']}", ""]
    lines.append("Quiz scores")
    width = max(len(ap) for ap in report["quiz_scores"]) + 4
    width = max(width, len("Overall") + 4, len("Approach") + 4)
    lines.append(f"{'Approach':<{width}}Quiz Score")
    for ap, entry in report["quiz_scores"].items():
        lines.append(f"{ap:<{width}}{entry['rendered']}")
    lines.append(f"{'Overall':<{width}}{report['overall']['rendered']}")
    lines.append("")
    lines.append("Qualitative ratings (% of items, mean ± std across evaluators)")
    header = f"{'Approach':<12}{'Dimension':<24}" + "".join(
        f"{lvl:<16}" for lvl in RATING_LEVELS
    )
    lines.append(header)
    for ap, dims in report["ratings"].items():
        for dim in RATING_DIMENSIONS:
            cells = ""
            for lvl in RATING_LEVELS:
                cell = dims[dim][lvl]
                cells += f"{round(cell['mean'], 1):g} ± {cell['std']:.1f}".ljust(16)
            lines.append(f"{ap:<12}{dim:<24}{cells}".rstrip())
    return "\n".join(lines)


def create_app(
    store_path: str | Path,
    ui_dist: str | Path | None = None,
    admin_token: str | None = None,
) -> FastAPI:
    """Build the study service app backed by an event log at `store_path`."""
    store_path = Path(store_path)
    log_path = store_path / "events.jsonl" if store_path.suffix == "" else store_path
    store = StudyStore(EventLog(log_path))
    app = FastAPI(title="dtexplain study service")

    def check_admin(authorization: str | None) -> None:
        if admin_token is None:
            return
        if authorization != f"Bearer {admin_token}":
            raise HTTPException(status_code=401, detail="unauthorized")

    @app.post("/api/studies")
    def create_study(payload: dict, authorization: str | None = Header(None)):
        check_admin(authorization)
        for key in ("tree", "dataset"):
            if key not in payload:
                raise HTTPException(status_code=400, detail=f"missing field: {key}")
        try:
            study = build_study(
                payload["tree"], payload["dataset"], payload.get("config", {})
            )
        except (ValueError, KeyError, OSError) as e:
            raise HTTPException(status_code=400, detail=str(e)) from e
        with store.lock:
            store.record({"type": "study_created", "study": study})
        return {
            "study_id": study["id"],
            "item_count": len(study["items"]),
            "samples": len(study["samples"]),
            "blinding": study["blinding"],
        }

    @app.post("/api/studies/{study_id}/sessions")
    def open_session(study_id: str, payload: dict):
        study = store.studies.get(study_id)
        if study is None:
            raise HTTPException(status_code=404, detail="unknown study")
        evaluator_id = payload.get("evaluator_id")
        if not evaluator_id or not isinstance(evaluator_id, str):
            raise HTTPException(status_code=400, detail="evaluator_id required")
        with store.lock:
            existing = store.session_for(study_id, evaluator_id)
            if existing is None:
                session = {
                    "id": uuid.uuid4().hex[:12],
                    "study_id": study_id,
                    "evaluator_id": evaluator_id,
                    "item_order": _evaluator_order(study, evaluator_id),
                    "opened_at": _now(),
                }
                store.record({"type": "session_opened", "session": session})
                existing = store.sessions[session["id"]]
        return {
            "session_id": existing["id"],
            "item_count": len(study["items"]),
            "cursor": len(existing["submitted"]),
        }

    @app.get("/api/sessions/{session_id}/next")
    def next_item(session_id: str):
        session = store.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        study = store.studies[session["study_id"]]
        cursor = len(session["submitted"])
        if cursor >= len(study["items"]):
            return {"done": True, "index": cursor, "total": len(study["items"])}
        item = study["items"][session["item_order"][cursor]]
        sample = study["samples"][item["sample"]]
        explanation = study["explanations"][item["approach"]][item["sample"]]
        questions = [
            QuizQuestion.from_dict(q).wire() for q in sample["questions"]
        ]
        return {
            "done": False,
            "item_id": item["id"],
            "index": cursor,
            "total": len(study["items"]),
            "blinded_label": study["blinding"][item["approach"]],
            "explanation": explanation["text"],
            "questions": questions,
            "rating_dimensions": list(RATING_DIMENSIONS),
            "rating_levels": list(RATING_LEVELS),
            "choices": list(CHOICES),
        }

    @app.post("/api/sessions/{session_id}/items/{item_id}/answers")
    def submit_item(session_id: str, item_id: str, payload: dict):
        session = store.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        study = store.studies[session["study_id"]]
        items_by_id = {item["id"]: item for item in study["items"]}
        item = items_by_id.get(item_id)
        if item is None:
            raise HTTPException(status_code=404, detail="unknown item")
        choices = payload.get("choices") or {}
        ratings = payload.get("ratings") or {}

        with store.lock:
            previous = session["submitted"].get(item_id)
            if previous is not None:
                if previous["choices"] == choices and previous["ratings"] == ratings:
                    return {"accepted": True, "duplicate": True, "complete": _complete(session, study)}
                raise HTTPException(
                    status_code=409, detail="item already submitted with different answers"
                )
            cursor = len(session["submitted"])
            expected = study["items"][session["item_order"][cursor]]["id"]
            if item_id != expected:
                raise HTTPException(
                    status_code=409, detail=f"out of order: expected item {expected}"
                )
            sample = study["samples"][item["sample"]]
            question_ids = [q["id"] for q in sample["questions"]]
            missing = [qid for qid in question_ids if choices.get(qid) not in CHOICES]
            if missing:
                raise HTTPException(
                    status_code=400,
                    detail="incomplete sheet: unanswered or invalid questions: "
                    + ", ".join(missing),
                )
            extra = set(choices) - set(question_ids)
            if extra:
                raise HTTPException(
                    status_code=400,
                    detail="unknown question ids: " + ", ".join(sorted(extra)),
                )
            bad_ratings = [
                dim for dim in RATING_DIMENSIONS if ratings.get(dim) not in RATING_LEVELS
            ]
            if bad_ratings or set(ratings) - set(RATING_DIMENSIONS):
                raise HTTPException(
                    status_code=400,
                    detail="incomplete sheet: ratings must cover exactly "
                    + ", ".join(RATING_DIMENSIONS),
                )
            store.record(
                {
                    "type": "item_submitted",
                    "session_id": session_id,
                    "item_id": item_id,
                    "choices": choices,
                    "ratings": ratings,
                    "submitted_at": _now(),
                }
            )
            return {"accepted": True, "duplicate": False, "complete": _complete(session, study)}

    def _complete(session: dict, study: dict) -> bool:
        return len(session["submitted"]) == len(study["items"])

    @app.get("/api/studies/{study_id}/report")
    def report(study_id: str, authorization: str | None = Header(None)):
        check_admin(authorization)
        try:
            doc = build_report(store, study_id)
        except KeyError as e:
            raise HTTPException(status_code=404, detail=str(e)) from e
        except ValueError as e:
            raise HTTPException(status_code=400, detail=str(e)) from e
        return Response(
            content=json.dumps(doc, sort_keys=True, separators=(",", ":")),
            media_type="application/json",
        )

    if ui_dist is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dist), html=True), name="ui")

    return app

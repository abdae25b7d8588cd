"""Experiment grid orchestration: models x strategies x formats x questions.

A run walks every grid cell, sends the prompt through the configured
backend, parses and scores the reply, and persists a run directory:

    config.json        config snapshot (canonical)
    predictions.jsonl  one validated prediction per cell
    scores.jsonl       one scored cell per line (self-contained for re-scoring)
    failures.jsonl     cells that errored, with the error kind
    report.json/.csv/.txt  aggregate tables and analytics
    meta.json          wall-clock timestamps (excluded from determinism checks)

Cell failures never abort the run; they are excluded from aggregates and
reported separately. In replay mode two runs over the same inputs produce
byte-identical canonical files.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Union

from . import report as report_mod
from .corpus import Corpus, LABELED, load_corpus
from .gateway import (
    Cassette,
    GatewayError,
    ModelConfig,
    PredictionRecord,
    REPLAY,
    Transport,
    complete,
    parse_prediction,
    request_fingerprint,
)
from .metrics import DistanceMode, QuestionScore, score_question
from .prompting import LOFormat, PromptStrategy, build_prompt
from .taxonomy import Taxonomy, load_taxonomy, parse_lo_code


class ConfigInvalid(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    taxonomy_path: str
    corpus_path: str
    models: tuple[ModelConfig, ...]
    strategies: tuple[PromptStrategy, ...] = (
        PromptStrategy.SIMPLE,
        PromptStrategy.EXPLANATION,
        PromptStrategy.COT,
    )
    formats: tuple[LOFormat, ...] = (LOFormat.STRUCTURED, LOFormat.NATURAL_LANGUAGE)
    backend: str = REPLAY
    cassette_path: Optional[str] = None
    output_dir: str = "runs/latest"
    parallelism: int = 1
    distance_mode: DistanceMode = DistanceMode.PAIRWISE_MIN
    samples_per_cell: int = 1

    def validate(self) -> None:
        if not self.models:
            raise ConfigInvalid("at least one model is required")
        if not self.strategies:
            raise ConfigInvalid("at least one strategy is required")
        if not self.formats:
            raise ConfigInvalid("at least one LO format is required")
        if self.parallelism < 1:
            raise ConfigInvalid("parallelism must be >= 1")
        if self.samples_per_cell < 1:
            raise ConfigInvalid("samples_per_cell must be >= 1")
        if self.backend == REPLAY and not self.cassette_path:
            raise ConfigInvalid("replay backend requires cassette_path")

    def to_dict(self) -> dict:
        return {
            "taxonomy_path": self.taxonomy_path,
            "corpus_path": self.corpus_path,
            "models": [m.to_dict() for m in self.models],
            "strategies": [s.value for s in self.strategies],
            "formats": [f.value for f in self.formats],
            "backend": self.backend,
            "cassette_path": self.cassette_path,
            "output_dir": self.output_dir,
            "parallelism": self.parallelism,
            "distance_mode": self.distance_mode.value,
            "samples_per_cell": self.samples_per_cell,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            return cls(
                taxonomy_path=data["taxonomy_path"],
                corpus_path=data["corpus_path"],
                models=tuple(ModelConfig.from_dict(m) for m in data["models"]),
                strategies=tuple(PromptStrategy(s) for s in data.get("strategies", ["simple", "explanation", "cot"])),
                formats=tuple(LOFormat(f) for f in data.get("formats", ["structured", "natural"])),
                backend=data.get("backend", REPLAY),
                cassette_path=data.get("cassette_path"),
                output_dir=data.get("output_dir", "runs/latest"),
                parallelism=data.get("parallelism", 1),
                distance_mode=DistanceMode(data.get("distance_mode", "pairwise_min")),
                samples_per_cell=data.get("samples_per_cell", 1),
            )
        except (KeyError, ValueError) as exc:
            raise ConfigInvalid(f"bad experiment config: {exc}") from exc

    @classmethod
    def from_json_file(cls, path: Union[str, Path]) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class CellFailure:
    question_id: str
    model_name: str
    strategy: str
    format: str
    sample: int
    error_kind: str
    message: str

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "model_name": self.model_name,
            "strategy": self.strategy,
            "format": self.format,
            "sample": self.sample,
            "error_kind": self.error_kind,
            "message": self.message,
        }


@dataclass(frozen=True)
class ScoredCell:
    question_id: str
    chapter: str
    dataset: str
    model_name: str
    strategy: str
    format: str
    sample: int
    predicted: tuple[str, ...]
    truth: tuple[str, ...]
    score: QuestionScore

    def to_dict(self) -> dict:
        out = {
            "question_id": self.question_id,
            "chapter": self.chapter,
            "dataset": self.dataset,
            "model_name": self.model_name,
            "strategy": self.strategy,
            "format": self.format,
            "sample": self.sample,
            "predicted": list(self.predicted),
            "truth": list(self.truth),
        }
        out.update(self.score.to_dict())
        return out


@dataclass(frozen=True)
class RunRecord:
    config: ExperimentConfig
    predictions: tuple[PredictionRecord, ...]
    cells: tuple[ScoredCell, ...]
    failures: tuple[CellFailure, ...]
    started_at: str
    finished_at: str

    @property
    def cell_count(self) -> int:
        return len(self.cells) + len(self.failures)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def run_experiment(
    cfg: ExperimentConfig,
    transport: Optional[Transport] = None,
    persist: bool = True,
) -> RunRecord:
    """Execute the full grid and (by default) persist the run directory."""
    cfg.validate()
    taxonomy = load_taxonomy(cfg.taxonomy_path)
    corpus = load_corpus(cfg.corpus_path, taxonomy, mode=LABELED)
    cassette = Cassette(cfg.cassette_path) if cfg.cassette_path else None

    subsets = {chapter: taxonomy.subset_by_chapter(chapter) for chapter in taxonomy.chapters}
    jobs = [
        (qi, mi, si, fi, sample)
        for qi in range(len(corpus.questions))
        for mi in range(len(cfg.models))
        for si in range(len(cfg.strategies))
        for fi in range(len(cfg.formats))
        for sample in range(cfg.samples_per_cell)
    ]

    started = _now()

    def run_cell(job):
        qi, mi, si, fi, sample = job
        question = corpus.questions[qi]
        model = cfg.models[mi]
        strategy = cfg.strategies[si]
        format = cfg.formats[fi]
        subset = subsets[question.chapter]
        spec = build_prompt(question, subset, strategy, format)
        start = time.monotonic()
        try:
            reply = complete(
                spec.rendered_text,
                model,
                backend=cfg.backend,
                cassette=cassette,
                transport=transport,
            )
        except GatewayError as exc:
            return CellFailure(
                question_id=question.id,
                model_name=model.model_name,
                strategy=strategy.value,
                format=format.value,
                sample=sample,
                error_kind=type(exc).__name__,
                message=str(exc),
            )
        latency = time.monotonic() - start
        predicted, dropped = parse_prediction(reply, [lo.code for lo in subset])
        prediction = PredictionRecord(
            question_id=question.id,
            strategy=strategy.value,
            format=format.value,
            model_name=model.model_name,
            fingerprint=request_fingerprint(model, spec.rendered_text),
            raw_text=reply,
            predicted=predicted,
            dropped_codes=tuple(dropped),
            sample=sample,
            latency=latency,
        )
        score = score_question(predicted, question.ground_truth, taxonomy, cfg.distance_mode)
        cell = ScoredCell(
            question_id=question.id,
            chapter=question.chapter,
            dataset=question.dataset,
            model_name=model.model_name,
            strategy=strategy.value,
            format=format.value,
            sample=sample,
            predicted=tuple(c.render() for c in predicted),
            truth=tuple(c.render() for c in question.ground_truth),
            score=score,
        )
        return prediction, cell

    if cfg.parallelism > 1:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            results = list(pool.map(run_cell, jobs))
    else:
        results = [run_cell(job) for job in jobs]

    predictions: list[PredictionRecord] = []
    cells: list[ScoredCell] = []
    failures: list[CellFailure] = []
    for result in results:  # jobs order is already the deterministic merge order
        if isinstance(result, CellFailure):
            failures.append(result)
        else:
            prediction, cell = result
            predictions.append(prediction)
            cells.append(cell)

    record = RunRecord(
        config=cfg,
        predictions=tuple(predictions),
        cells=tuple(cells),
        failures=tuple(failures),
        started_at=started,
        finished_at=_now(),
    )
    if persist:
        persist_run(record, taxonomy=taxonomy, corpus=corpus)
    return record


def _dump_jsonl(rows: list[dict], path: Path) -> None:
    path.write_text(
        "".join(json.dumps(row, ensure_ascii=False) + "\n" for row in rows),
        encoding="utf-8",
    )


def persist_run(
    record: RunRecord,
    out_dir: Optional[Union[str, Path]] = None,
    taxonomy: Optional[Taxonomy] = None,
    corpus: Optional[Corpus] = None,
) -> Path:
    """Write the run directory. Canonical files carry no timestamps."""
    cfg = record.config
    out = Path(out_dir) if out_dir is not None else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if taxonomy is None:
        taxonomy = load_taxonomy(cfg.taxonomy_path)
    if corpus is None:
        corpus = load_corpus(cfg.corpus_path, taxonomy, mode=LABELED)

    (out / "config.json").write_text(
        json.dumps(cfg.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    _dump_jsonl([p.to_dict() for p in record.predictions], out / "predictions.jsonl")
    _dump_jsonl([c.to_dict() for c in record.cells], out / "scores.jsonl")
    _dump_jsonl([f.to_dict() for f in record.failures], out / "failures.jsonl")

    report = report_mod.build_report(record.cells, record.failures, taxonomy, corpus)
    (out / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    (out / "report.csv").write_text(report_mod.aggregate_csv(report), encoding="utf-8")
    (out / "report.txt").write_text(report_mod.render_report_text(report), encoding="utf-8")
    (out / "meta.json").write_text(
        json.dumps(
            {"started_at": record.started_at, "finished_at": record.finished_at},
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    return out


def load_run_cells(run_dir: Union[str, Path]) -> tuple[ExperimentConfig, list[dict]]:
    """Read back config and raw prediction rows from a persisted run."""
    run_dir = Path(run_dir)
    cfg = ExperimentConfig.from_dict(json.loads((run_dir / "config.json").read_text(encoding="utf-8")))
    rows = [
        json.loads(line)
        for line in (run_dir / "predictions.jsonl").read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    return cfg, rows


def rescore_run(
    run_dir: Union[str, Path],
    distance_mode: Optional[DistanceMode] = None,
) -> RunRecord:
    """Re-score a persisted run from its stored predictions (no model calls),
    e.g. to switch the distance mode. Rewrites scores and reports in place."""
    run_dir = Path(run_dir)
    cfg, rows = load_run_cells(run_dir)
    if distance_mode is not None:
        cfg = replace(cfg, distance_mode=distance_mode)
    taxonomy = load_taxonomy(cfg.taxonomy_path)
    corpus = load_corpus(cfg.corpus_path, taxonomy, mode=LABELED)
    failures = tuple(
        CellFailure(**json.loads(line))
        for line in (run_dir / "failures.jsonl").read_text(encoding="utf-8").splitlines()
        if line.strip()
    ) if (run_dir / "failures.jsonl").exists() else ()

    predictions: list[PredictionRecord] = []
    cells: list[ScoredCell] = []
    for row in rows:
        question = corpus.get(row["question_id"])
        if question is None:
            raise ConfigInvalid(f"prediction references unknown question {row['question_id']!r}")
        predicted = tuple(parse_lo_code(c) for c in row["predicted"])
        score = score_question(predicted, question.ground_truth, taxonomy, cfg.distance_mode)
        predictions.append(
            PredictionRecord(
                question_id=row["question_id"],
                strategy=row["strategy"],
                format=row["format"],
                model_name=row["model_name"],
                fingerprint=row["fingerprint"],
                raw_text=row["raw_text"],
                predicted=predicted,
                dropped_codes=tuple(tuple(pair) for pair in row.get("dropped_codes", [])),
                sample=row.get("sample", 0),
            )
        )
        cells.append(
            ScoredCell(
                question_id=question.id,
                chapter=question.chapter,
                dataset=question.dataset,
                model_name=row["model_name"],
                strategy=row["strategy"],
                format=row["format"],
                sample=row.get("sample", 0),
                predicted=tuple(c.render() for c in predicted),
                truth=tuple(c.render() for c in question.ground_truth),
                score=score,
            )
        )
    now = _now()
    record = RunRecord(
        config=cfg,
        predictions=tuple(predictions),
        cells=tuple(cells),
        failures=failures,
        started_at=now,
        finished_at=now,
    )
    persist_run(record, out_dir=run_dir, taxonomy=taxonomy, corpus=corpus)
    return record

"""Question banks with expert ground-truth label sets.

Corpus files are JSON Lines: one question object per line with fields
``id``, ``chapter``, ``source``, ``dataset``, ``text``, ``ground_truth``
(array of LO codes) and optional ``notes``. A labeled corpus requires every
question to carry a nonempty, chapter-consistent ground truth; an unlabeled
corpus (pre-annotation) may leave it empty.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Union

from .taxonomy import LOCode, Taxonomy, parse_lo_code


class CorpusError(ValueError):
    pass


class UnknownLOCode(CorpusError):
    pass


class ChapterMismatch(CorpusError):
    pass


class DuplicateQuestionId(CorpusError):
    pass


class EmptyGroundTruth(CorpusError):
    pass


class MissingQuestionField(CorpusError):
    pass


LABELED = "labeled"
UNLABELED = "unlabeled"


@dataclass(frozen=True)
class Question:
    id: str
    chapter: str
    source: str
    dataset: str
    text: str
    ground_truth: tuple[LOCode, ...]
    notes: str = ""

    @property
    def ground_truth_codes(self) -> frozenset[str]:
        return frozenset(c.render() for c in self.ground_truth)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "chapter": self.chapter,
            "source": self.source,
            "dataset": self.dataset,
            "text": self.text,
            "ground_truth": [c.render() for c in self.ground_truth],
            "notes": self.notes,
        }


@dataclass(frozen=True)
class Corpus:
    questions: tuple[Question, ...]
    mode: str = LABELED

    def __len__(self) -> int:
        return len(self.questions)

    def __iter__(self):
        return iter(self.questions)

    def get(self, question_id: str) -> Optional[Question]:
        for q in self.questions:
            if q.id == question_id:
                return q
        return None

    def to_jsonl(self) -> str:
        """Canonical serialization: file order, fixed key order, one line per question."""
        return "".join(json.dumps(q.to_dict(), ensure_ascii=False) + "\n" for q in self.questions)


def _question_from_dict(entry: Mapping, taxonomy: Taxonomy, mode: str) -> Question:
    qid = entry.get("id")
    if not isinstance(qid, str) or not qid.strip():
        raise MissingQuestionField("question entry with missing or empty 'id'")
    for key in ("chapter", "source", "dataset", "text"):
        value = entry.get(key)
        if not isinstance(value, str) or not value.strip():
            raise MissingQuestionField(f"question {qid!r}: field {key!r} missing or empty")
    raw_codes = entry.get("ground_truth", [])
    if not isinstance(raw_codes, list):
        raise MissingQuestionField(f"question {qid!r}: 'ground_truth' must be an array")
    if mode == LABELED and not raw_codes:
        raise EmptyGroundTruth(f"question {qid!r}: empty ground_truth in labeled corpus")
    chapter = entry["chapter"]
    codes: list[LOCode] = []
    seen: set[str] = set()
    for raw in raw_codes:
        code = parse_lo_code(raw)
        lo = taxonomy.get(code)
        if lo is None:
            raise UnknownLOCode(f"question {qid!r}: code {code} not in taxonomy")
        if lo.chapter != chapter:
            raise ChapterMismatch(
                f"question {qid!r}: code {code} belongs to chapter {lo.chapter!r}, "
                f"question is in {chapter!r}"
            )
        if code.render() not in seen:
            seen.add(code.render())
            codes.append(code)
    notes = entry.get("notes", "")
    if notes is None:
        notes = ""
    if not isinstance(notes, str):
        raise MissingQuestionField(f"question {qid!r}: 'notes' must be a string")
    return Question(
        id=qid,
        chapter=chapter,
        source=entry["source"],
        dataset=entry["dataset"],
        text=entry["text"],
        ground_truth=tuple(codes),
        notes=notes,
    )


def load_corpus(
    source: Union[str, Path, Iterable[Mapping]],
    taxonomy: Taxonomy,
    mode: str = LABELED,
) -> Corpus:
    """Load and validate a question bank against its companion taxonomy."""
    if mode not in (LABELED, UNLABELED):
        raise CorpusError(f"mode must be {LABELED!r} or {UNLABELED!r}, got {mode!r}")
    if isinstance(source, (str, Path)):
        entries = []
        for line_no, line in enumerate(Path(source).read_text(encoding="utf-8").splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            try:
                entries.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {line_no}: not valid JSON ({exc})") from exc
    else:
        entries = list(source)
    questions: list[Question] = []
    ids: set[str] = set()
    for entry in entries:
        q = _question_from_dict(entry, taxonomy, mode)
        if q.id in ids:
            raise DuplicateQuestionId(f"duplicate question id: {q.id!r}")
        ids.add(q.id)
        questions.append(q)
    return Corpus(questions=tuple(questions), mode=mode)


@dataclass(frozen=True)
class StatsRow:
    chapter: str
    source: str
    dataset: str
    count: int


def corpus_stats(corpus: Corpus) -> list[StatsRow]:
    """Question counts per (chapter, source, dataset), in first-appearance order."""
    counts: dict[tuple[str, str, str], int] = {}
    for q in corpus:
        key = (q.chapter, q.source, q.dataset)
        counts[key] = counts.get(key, 0) + 1
    return [StatsRow(chapter=c, source=s, dataset=d, count=n) for (c, s, d), n in counts.items()]

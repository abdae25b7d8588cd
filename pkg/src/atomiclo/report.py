"""Aggregation tables and analytics over scored runs.

Aggregate rows are keyed by (dataset, model, strategy, format); exact match
is reported as a fraction n/N while the other metrics are means. Rendered
tables round means to 3 decimals; the JSON report keeps full precision.

Analytics mirror the usual diagnostics for this task: mean label-set sizes
per chapter, F1 bucketed by per-question label count, per-LO usage
frequencies (zero-use LOs included deliberately, to surface objectives the
expert never picked), and per-LO recall over ground truth for LOs with
enough support.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .corpus import Corpus
from .taxonomy import Taxonomy

AXIS_HUMAN = "human"
AXIS_MODEL = "model"


@dataclass(frozen=True)
class AggregateRow:
    dataset: str
    model_name: str
    strategy: str
    format: str
    em_hits: int
    em_total: int
    jaccard_mean: float
    f1_mean: float
    distance_mean: float

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "model_name": self.model_name,
            "strategy": self.strategy,
            "format": self.format,
            "em_hits": self.em_hits,
            "em_total": self.em_total,
            "jaccard_mean": self.jaccard_mean,
            "f1_mean": self.f1_mean,
            "distance_mean": self.distance_mean,
        }


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def aggregate_rows(cells: Sequence) -> list[AggregateRow]:
    """One row per (dataset, model, strategy, format), in first-appearance order."""
    order: dict[tuple, int] = {}
    groups: dict[tuple, list] = {}
    for cell in cells:
        key = (cell.dataset, cell.model_name, cell.strategy, cell.format)
        order.setdefault(key, len(order))
        groups.setdefault(key, []).append(cell)
    rows = []
    for key in sorted(groups, key=order.get):
        dataset, model_name, strategy, format = key
        members = groups[key]
        rows.append(
            AggregateRow(
                dataset=dataset,
                model_name=model_name,
                strategy=strategy,
                format=format,
                em_hits=sum(c.score.exact_match for c in members),
                em_total=len(members),
                jaccard_mean=_mean([c.score.jaccard for c in members]),
                f1_mean=_mean([c.score.f1 for c in members]),
                distance_mean=_mean([c.score.distance for c in members]),
            )
        )
    return rows


_TABLE_COLUMNS = ("Dataset", "Model", "Prompting", "Format", "EM", "Jaccard", "F1", "Distance")


def render_aggregate_table(rows: Sequence[AggregateRow]) -> str:
    """Aligned plain-text table: EM as a fraction, means to 3 decimals."""
    body = [
        (
            row.dataset,
            row.model_name,
            row.strategy,
            row.format,
            f"{row.em_hits}/{row.em_total}",
            f"{row.jaccard_mean:.3f}",
            f"{row.f1_mean:.3f}",
            f"{row.distance_mean:.3f}",
        )
        for row in rows
    ]
    widths = [
        max(len(_TABLE_COLUMNS[i]), *(len(line[i]) for line in body)) if body else len(_TABLE_COLUMNS[i])
        for i in range(len(_TABLE_COLUMNS))
    ]
    out = io.StringIO()
    header = "  ".join(name.ljust(widths[i]) for i, name in enumerate(_TABLE_COLUMNS))
    out.write(header.rstrip() + "\n")
    out.write("  ".join("-" * w for w in widths) + "\n")
    for line in body:
        out.write("  ".join(value.ljust(widths[i]) for i, value in enumerate(line)).rstrip() + "\n")
    return out.getvalue()


def aggregate_csv(report: Mapping) -> str:
    lines = ["dataset,model,strategy,format,em_hits,em_total,jaccard_mean,f1_mean,distance_mean"]
    for row in report["aggregate"]:
        lines.append(
            f'{row["dataset"]},{row["model_name"]},{row["strategy"]},{row["format"]},'
            f'{row["em_hits"]},{row["em_total"]},{row["jaccard_mean"]!r},{row["f1_mean"]!r},'
            f'{row["distance_mean"]!r}'
        )
    return "\n".join(lines) + "\n"


def select_slice(
    cells: Sequence,
    model_name: Optional[str] = None,
    strategy: Optional[str] = None,
    format: Optional[str] = None,
    sample: int = 0,
) -> list:
    """Narrow scored cells to a single (model, strategy, format, sample)
    combination so per-question analytics see one cell per question.
    Unspecified dimensions default to the first value present."""
    if not cells:
        return []
    model_name = model_name or cells[0].model_name
    strategy = strategy or cells[0].strategy
    format = format or cells[0].format
    return [
        c
        for c in cells
        if c.model_name == model_name
        and c.strategy == strategy
        and c.format == format
        and c.sample == sample
    ]


def avg_lo_count(label_sets: Mapping[str, Iterable], group_of: Mapping[str, str]) -> dict[str, float]:
    """Mean label-set size per group; groups with no questions stay absent."""
    sums: dict[str, int] = {}
    counts: dict[str, int] = {}
    for qid, labels in label_sets.items():
        group = group_of[qid]
        sums[group] = sums.get(group, 0) + len(tuple(labels))
        counts[group] = counts.get(group, 0) + 1
    return {group: sums[group] / counts[group] for group in sums}


def f1_by_count_buckets(cells: Sequence, axis: str = AXIS_HUMAN) -> list[dict]:
    """Bucket questions by the chosen labeler's LO count; per bucket report
    mean F1 and how many questions landed there. Bucket counts partition the
    question set."""
    if axis not in (AXIS_HUMAN, AXIS_MODEL):
        raise ValueError(f"axis must be {AXIS_HUMAN!r} or {AXIS_MODEL!r}")
    buckets: dict[int, list[float]] = {}
    for cell in cells:
        count = len(cell.truth) if axis == AXIS_HUMAN else len(cell.predicted)
        buckets.setdefault(count, []).append(cell.score.f1)
    return [
        {"lo_count": count, "f1_mean": _mean(scores), "questions": len(scores)}
        for count, scores in sorted(buckets.items())
    ]


def lo_frequency(label_sets: Iterable[Iterable[str]], universe: Iterable[str]) -> dict[str, int]:
    """Per-LO count of label sets containing it; every LO of the universe is
    listed, zero counts included."""
    counts = {code: 0 for code in universe}
    for labels in label_sets:
        for code in set(labels):
            if code in counts:
                counts[code] += 1
    return counts


def per_lo_accuracy(cells: Sequence, min_support: int = 5) -> dict[str, dict]:
    """Per-LO recall over ground truth: of the questions whose ground truth
    contains the LO, the fraction where the prediction picked it up. LOs
    with support below ``min_support`` are omitted."""
    support: dict[str, int] = {}
    hits: dict[str, int] = {}
    for cell in cells:
        predicted = set(cell.predicted)
        for code in cell.truth:
            support[code] = support.get(code, 0) + 1
            if code in predicted:
                hits[code] = hits.get(code, 0) + 1
    return {
        code: {"accuracy": hits.get(code, 0) / n, "support": n}
        for code, n in sorted(support.items())
        if n >= min_support
    }


def build_report(
    cells: Sequence,
    failures: Sequence,
    taxonomy: Taxonomy,
    corpus: Corpus,
    slice_model: Optional[str] = None,
    slice_strategy: Optional[str] = None,
    slice_format: Optional[str] = None,
    min_support: int = 5,
) -> dict:
    """Assemble the machine-readable report: aggregate rows plus analytics
    computed on a single-cell-per-question slice."""
    rows = aggregate_rows(cells)
    sliced = select_slice(cells, slice_model, slice_strategy, slice_format)
    chapter_of = {q.id: q.chapter for q in corpus}
    human_sets = {q.id: [c.render() for c in q.ground_truth] for q in corpus}
    model_sets = {c.question_id: list(c.predicted) for c in sliced}

    frequency: dict[str, dict] = {}
    for chapter in corpus_chapters(corpus):
        universe = [lo.code_text for lo in taxonomy.subset_by_chapter(chapter)]
        human_chapter = [labels for qid, labels in human_sets.items() if chapter_of[qid] == chapter]
        model_chapter = [
            labels for qid, labels in model_sets.items() if chapter_of.get(qid) == chapter
        ]
        human_counts = lo_frequency(human_chapter, universe)
        model_counts = lo_frequency(model_chapter, universe)
        frequency[chapter] = {
            code: {"human": human_counts[code], "model": model_counts[code]} for code in universe
        }

    slice_info = {}
    if sliced:
        slice_info = {
            "model_name": sliced[0].model_name,
            "strategy": sliced[0].strategy,
            "format": sliced[0].format,
            "sample": sliced[0].sample,
        }

    return {
        "aggregate": [row.to_dict() for row in rows],
        "analytics": {
            "slice": slice_info,
            "avg_lo_count": {
                "human": avg_lo_count(human_sets, chapter_of),
                "model": avg_lo_count(model_sets, chapter_of) if model_sets else {},
            },
            "f1_by_count": {
                "human": f1_by_count_buckets(sliced, AXIS_HUMAN),
                "model": f1_by_count_buckets(sliced, AXIS_MODEL),
            },
            "lo_frequency": frequency,
            "per_lo_accuracy": per_lo_accuracy(sliced, min_support=min_support),
        },
        "failures": [f.to_dict() for f in failures],
    }


def corpus_chapters(corpus: Corpus) -> list[str]:
    seen: dict[str, None] = {}
    for q in corpus:
        seen.setdefault(q.chapter, None)
    return list(seen)


def render_report_text(report: Mapping) -> str:
    """Human-readable report: aggregate table plus analytics blocks."""
    rows = [AggregateRow(**row) for row in report["aggregate"]]
    out = io.StringIO()
    out.write("Labeling performance\n")
    out.write("====================\n")
    out.write(render_aggregate_table(rows))
    analytics = report["analytics"]

    out.write("\nAverage LOs per question\n")
    out.write("------------------------\n")
    for labeler in ("human", "model"):
        means = analytics["avg_lo_count"].get(labeler, {})
        for chapter, mean in means.items():
            out.write(f"{labeler:<6}  {chapter:<16}  {mean:.2f}\n")

    out.write("\nF1 by LO count")
    slice_info = analytics.get("slice") or {}
    if slice_info:
        out.write(
            f"  (slice: {slice_info['model_name']} / {slice_info['strategy']}"
            f" / {slice_info['format']})"
        )
    out.write("\n--------------\n")
    for axis in (AXIS_HUMAN, AXIS_MODEL):
        for bucket in analytics["f1_by_count"][axis]:
            out.write(
                f"{axis:<6}  count {bucket['lo_count']:>2}  "
                f"F1 {bucket['f1_mean']:.3f}  questions {bucket['questions']}\n"
            )

    out.write("\nPer-LO accuracy (ground-truth support >= threshold)\n")
    out.write("---------------------------------------------------\n")
    for code, entry in analytics["per_lo_accuracy"].items():
        out.write(f"{code:<12}  accuracy {entry['accuracy']:.3f}  support {entry['support']}\n")

    failures = report.get("failures", [])
    out.write(f"\nFailed cells: {len(failures)}\n")
    for failure in failures:
        out.write(
            f"  {failure['question_id']} {failure['model_name']} {failure['strategy']}"
            f" {failure['format']}: {failure['error_kind']}\n"
        )
    return out.getvalue()

"""Set-based evaluation metrics over LO label sets.

Four metrics compare a predicted label set F against the expert ground truth
G: exact match, Jaccard index, F1, and a hierarchical distance that scores
mismatches at the name / action / code levels.

The hierarchical distance ships in two modes because the two natural
readings of its definition disagree whenever F and G overlap imperfectly:

* ``PAIRWISE_MIN`` (default): every predicted LO contributes its minimum
  pairwise distance to the ground-truth set, plus the unmatched rule for
  ground-truth LOs the prediction missed.
* ``SET_RULE``: only LOs outside the intersection contribute, each scored
  with the unmatched rule (1 if its name appears on the other side, else 2).

Reports always label which mode produced a number; the two are never mixed.

Empty-set conventions: EM = J = F1 = 1 when both sets are empty; any
division by an empty set yields 0. These keep the identity chain
``EM == 1  iff  J == 1  iff  F1 == 1  iff  D == 0`` intact.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Union

from .taxonomy import ActionType, LOCode, LearningObjective, Taxonomy, parse_lo_code


class MetricError(ValueError):
    pass


class UnresolvedCode(MetricError):
    """A label code does not resolve in the companion taxonomy."""


class DistanceMode(enum.Enum):
    PAIRWISE_MIN = "pairwise_min"
    SET_RULE = "set_rule"

    def __str__(self) -> str:
        return self.value


CodeLike = Union[str, LOCode, LearningObjective]


@dataclass(frozen=True)
class LabelSet:
    """A set of LOs resolved against a taxonomy (codes plus name/action)."""

    los: tuple[LearningObjective, ...]

    @classmethod
    def resolve(cls, codes: Iterable[CodeLike], taxonomy: Taxonomy) -> "LabelSet":
        los: list[LearningObjective] = []
        seen: set[str] = set()
        for raw in codes:
            if isinstance(raw, LearningObjective):
                lo = taxonomy.get(raw.code)
            else:
                code = parse_lo_code(raw) if isinstance(raw, str) else raw
                lo = taxonomy.get(code)
            if lo is None:
                raise UnresolvedCode(f"code does not resolve in taxonomy: {raw}")
            if lo.code_text not in seen:
                seen.add(lo.code_text)
                los.append(lo)
        los.sort(key=lambda lo: lo.code_text)
        return cls(los=tuple(los))

    @property
    def codes(self) -> frozenset[str]:
        return frozenset(lo.code_text for lo in self.los)

    @property
    def name_keys(self) -> frozenset[str]:
        return frozenset(lo.name_key for lo in self.los)

    def __len__(self) -> int:
        return len(self.los)

    def __iter__(self):
        return iter(self.los)


def _as_label_set(labels: Union[LabelSet, Iterable[CodeLike]], taxonomy: Taxonomy) -> LabelSet:
    if isinstance(labels, LabelSet):
        return labels
    return LabelSet.resolve(labels, taxonomy)


def exact_match(predicted: LabelSet, truth: LabelSet) -> int:
    return 1 if predicted.codes == truth.codes else 0


def jaccard(predicted: LabelSet, truth: LabelSet) -> float:
    union = predicted.codes | truth.codes
    if not union:
        return 1.0
    return len(predicted.codes & truth.codes) / len(union)


def precision_recall_f1(predicted: LabelSet, truth: LabelSet) -> tuple[float, float, float]:
    """Precision, recall, and their harmonic mean, with 0-division -> 0.

    F1 is computed as 2J/(1+J) from the Jaccard value (the Dice identity),
    so the relation between the two reported numbers is exact rather than
    merely close in floating point.
    """
    if not predicted.codes and not truth.codes:
        return 1.0, 1.0, 1.0
    hits = len(predicted.codes & truth.codes)
    precision = hits / len(predicted.codes) if predicted.codes else 0.0
    recall = hits / len(truth.codes) if truth.codes else 0.0
    j = jaccard(predicted, truth)
    f1 = 2 * j / (1 + j)
    return precision, recall, f1


def lo_distance(lo1: LearningObjective, lo2: LearningObjective) -> int:
    """Pairwise hierarchical distance: 3 name mismatch, 2 action, 1 code, 0 equal."""
    if lo1.code_text == lo2.code_text:
        return 0
    if lo1.name_key != lo2.name_key:
        return 3
    if lo1.action != lo2.action:
        return 2
    return 1


def unmatched_distance(lo: LearningObjective, other: LabelSet) -> int:
    """Distance for an LO present on one side only: 1 if its name appears
    on the other side, else 2 (an empty other side has no names)."""
    return 1 if lo.name_key in other.name_keys else 2


def set_distance(predicted: LabelSet, truth: LabelSet, mode: DistanceMode = DistanceMode.PAIRWISE_MIN) -> int:
    """Total hierarchical distance between label sets; 0 iff the sets are equal."""
    if mode == DistanceMode.PAIRWISE_MIN:
        total = 0
        for lo in predicted:
            if truth.los:
                total += min(lo_distance(lo, other) for other in truth)
            else:
                total += unmatched_distance(lo, truth)
        for lo in truth:
            if lo.code_text not in predicted.codes:
                total += unmatched_distance(lo, predicted)
        return total
    if mode == DistanceMode.SET_RULE:
        total = 0
        for lo in predicted:
            if lo.code_text not in truth.codes:
                total += unmatched_distance(lo, truth)
        for lo in truth:
            if lo.code_text not in predicted.codes:
                total += unmatched_distance(lo, predicted)
        return total
    raise MetricError(f"unknown distance mode: {mode!r}")


@dataclass(frozen=True)
class QuestionScore:
    exact_match: int
    jaccard: float
    precision: float
    recall: float
    f1: float
    distance: int
    distance_mode: DistanceMode

    def to_dict(self) -> dict:
        return {
            "exact_match": self.exact_match,
            "jaccard": self.jaccard,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "distance": self.distance,
            "distance_mode": self.distance_mode.value,
        }


def score_question(
    predicted: Union[LabelSet, Iterable[CodeLike]],
    truth: Union[LabelSet, Iterable[CodeLike]],
    taxonomy: Taxonomy,
    mode: DistanceMode = DistanceMode.PAIRWISE_MIN,
) -> QuestionScore:
    """All five metrics for one question, computed from the same resolved sets."""
    f = _as_label_set(predicted, taxonomy)
    g = _as_label_set(truth, taxonomy)
    precision, recall, f1 = precision_recall_f1(f, g)
    return QuestionScore(
        exact_match=exact_match(f, g),
        jaccard=jaccard(f, g),
        precision=precision,
        recall=recall,
        f1=f1,
        distance=set_distance(f, g, mode),
        distance_mode=mode,
    )

"""Atomic learning-objective labeling toolkit."""

from .taxonomy import (
    ActionType,
    LOCategory,
    LOCode,
    LearningObjective,
    Taxonomy,
    load_taxonomy,
    parse_lo_code,
    search_los,
    subset_by_chapter,
    validate_against_manifest,
)
from .corpus import Corpus, Question, corpus_stats, load_corpus
from .metrics import (
    DistanceMode,
    LabelSet,
    QuestionScore,
    exact_match,
    jaccard,
    lo_distance,
    precision_recall_f1,
    score_question,
    set_distance,
    unmatched_distance,
)
from .prompting import LOFormat, PromptSpec, PromptStrategy, build_prompt, render_lo
from .gateway import (
    Cassette,
    ModelConfig,
    PredictionRecord,
    complete,
    parse_prediction,
    request_fingerprint,
)
from .runner import ExperimentConfig, RunRecord, run_experiment

__all__ = [
    "ActionType",
    "Cassette",
    "Corpus",
    "DistanceMode",
    "ExperimentConfig",
    "LOCategory",
    "LOCode",
    "LOFormat",
    "LabelSet",
    "LearningObjective",
    "ModelConfig",
    "PredictionRecord",
    "PromptSpec",
    "PromptStrategy",
    "Question",
    "QuestionScore",
    "RunRecord",
    "Taxonomy",
    "build_prompt",
    "complete",
    "corpus_stats",
    "exact_match",
    "jaccard",
    "lo_distance",
    "load_corpus",
    "load_taxonomy",
    "parse_lo_code",
    "parse_prediction",
    "precision_recall_f1",
    "render_lo",
    "request_fingerprint",
    "run_experiment",
    "score_question",
    "search_los",
    "set_distance",
    "subset_by_chapter",
    "unmatched_distance",
    "validate_against_manifest",
]

__version__ = "0.1.0"

"""Deterministic prompt assembly for the labeling task.

Three strategies (select only / select + justify / step-by-step reasoning
then select + justify) crossed with two LO renderings (field-labeled
structured lines vs conversational sentences). Templates live as plain-text
assets under ``templates/`` with three placeholders:

    [INSERT FORMAT]                one-line description of the LO rendering
    [INSERT LEARNING OBJECTIVES]   the rendered LO list, one LO per line
    [INSERT THE QUESTION]          the question text

Prompt construction is a pure function of its inputs: same LO subset, same
question, same strategy and format always yield byte-identical text.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from importlib import resources

from .corpus import Question
from .taxonomy import LearningObjective


class PromptError(ValueError):
    pass


class EmptyLOSubset(PromptError):
    pass


class PromptStrategy(enum.Enum):
    SIMPLE = "simple"
    EXPLANATION = "explanation"
    COT = "cot"

    def __str__(self) -> str:
        return self.value


class LOFormat(enum.Enum):
    STRUCTURED = "structured"
    NATURAL_LANGUAGE = "natural"

    def __str__(self) -> str:
        return self.value


# One-line description substituted for [INSERT FORMAT]; mirrors the pattern
# each rendering follows so the model knows how to read the list.
FORMAT_DESCRIPTIONS = {
    LOFormat.STRUCTURED: (
        "[Code]: [LO Name], [Description], Provided: [Given Information], "
        "Outcome: [Expected Outcome]"
    ),
    LOFormat.NATURAL_LANGUAGE: (
        "[Code]: LO Name: [LO Name], Description: [Description], Explanation: "
        "[provided information to a student and the expected outcome]"
    ),
}

FORMAT_PLACEHOLDER = "[INSERT FORMAT]"
LO_PLACEHOLDER = "[INSERT LEARNING OBJECTIVES]"
QUESTION_PLACEHOLDER = "[INSERT THE QUESTION]"

_TEMPLATE_FILES = {
    PromptStrategy.SIMPLE: "prompt_simple.txt",
    PromptStrategy.EXPLANATION: "prompt_explanation.txt",
    PromptStrategy.COT: "prompt_cot.txt",
}


def load_template(strategy: PromptStrategy) -> str:
    return (
        resources.files("atomiclo")
        .joinpath("templates", _TEMPLATE_FILES[strategy])
        .read_text(encoding="utf-8")
    )


def _sentence_case(text: str) -> str:
    """Lowercase a leading capital so the fragment reads mid-sentence;
    leaves acronyms like "KE ..." alone."""
    if len(text) >= 2 and text[0].isupper() and not text[1].isupper():
        return text[0].lower() + text[1:]
    return text


def _ensure_period(text: str) -> str:
    return text if text.endswith((".", "!", "?")) else text + "."


def render_lo(lo: LearningObjective, format: LOFormat) -> str:
    """Render one LO as a single prompt line in the requested format."""
    if format == LOFormat.STRUCTURED:
        return (
            f"{lo.code_text}: {lo.name}, {lo.item}, "
            f"Provided: {lo.provided}, Outcome: {lo.outcome}"
        )
    if format == LOFormat.NATURAL_LANGUAGE:
        explanation = (
            f"Given {_sentence_case(lo.provided)}, the student should be able to "
            f"{_sentence_case(lo.outcome)}"
        )
        return (
            f"{lo.code_text}: LO Name: {lo.name}, Description: {lo.item}, "
            f"Explanation: {_ensure_period(explanation)}"
        )
    raise PromptError(f"unknown LO format: {format!r}")


@dataclass(frozen=True)
class PromptSpec:
    strategy: PromptStrategy
    format: LOFormat
    lo_subset: tuple[LearningObjective, ...]
    question: Question
    rendered_text: str


def build_prompt(
    question: Question,
    lo_subset: tuple[LearningObjective, ...],
    strategy: PromptStrategy,
    format: LOFormat,
) -> PromptSpec:
    """Assemble the full prompt for one (question, strategy, format) cell.

    The LO subset is rendered in the order given (taxonomy order), each LO
    exactly once.
    """
    lo_subset = tuple(lo_subset)
    if not lo_subset:
        raise EmptyLOSubset("prompt needs a nonempty LO subset")
    template = load_template(strategy)
    lo_block = "\n".join(render_lo(lo, format) for lo in lo_subset)
    text = (
        template.replace(FORMAT_PLACEHOLDER, FORMAT_DESCRIPTIONS[format])
        .replace(LO_PLACEHOLDER, lo_block)
        .replace(QUESTION_PLACEHOLDER, question.text)
    )
    return PromptSpec(
        strategy=strategy,
        format=format,
        lo_subset=lo_subset,
        question=question,
        rendered_text=text,
    )

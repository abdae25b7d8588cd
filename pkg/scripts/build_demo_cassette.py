"""Regenerate the bundled demo cassette.

Synthesizes a deterministic reply for every cell of the bundled Energy grid
(9 questions x 3 strategies x 2 formats x 1 model) and writes the cassette
that replay-mode runs and the end-to-end tests consume. Replies are seeded
from the request fingerprint, so regeneration is reproducible; they start
from the ground truth, drop and add a few codes, and occasionally mention
an out-of-chapter code so prediction parsing has something to reject.

Usage: python scripts/build_demo_cassette.py
"""
import json
import random
import sys
from pathlib import Path

from atomiclo import assets
from atomiclo.corpus import load_corpus
from atomiclo.gateway import ModelConfig, request_fingerprint
from atomiclo.prompting import LOFormat, PromptStrategy, build_prompt
from atomiclo.taxonomy import load_taxonomy

DEMO_MODEL = ModelConfig(model_name="demo-labeler", temperature=0.9, top_p=1.0)


def synthesize_reply(rng, strategy, truth_codes, subset_codes):
    codes = [c for c in truth_codes if rng.random() > 0.2]
    if not codes:
        codes = [truth_codes[0]]
    extras = [c for c in subset_codes if c not in truth_codes]
    rng.shuffle(extras)
    codes = codes + extras[: rng.randint(0, 2)]

    lines = []
    if strategy is PromptStrategy.COT:
        lines.append("Step 1: The question describes the physical setup and what is asked.")
        lines.append("Step 2: I compare the setup against each learning objective in the list.")
        lines.append("Step 3: I keep every objective a student would need while solving.")
    lines.append("Selected learning objectives:")
    for code in codes:
        if strategy is PromptStrategy.SIMPLE:
            lines.append(f"- {code}")
        else:
            lines.append(f"- {code}: this objective is needed to work through the question.")
    if rng.random() < 0.15:
        lines.append("Objectives from other chapters, such as NL-F-1, are not applicable here.")
    return "\n".join(lines)


def main():
    taxonomy = load_taxonomy(assets.data_path(assets.TAXONOMY_MECHANICS))
    corpus = load_corpus(assets.data_path(assets.QUESTIONS_ENERGY), taxonomy)
    entries = {}
    for question in corpus:
        subset = taxonomy.subset_by_chapter(question.chapter)
        subset_codes = [lo.code_text for lo in subset]
        truth_codes = [c.render() for c in question.ground_truth]
        for strategy in PromptStrategy:
            for format in LOFormat:
                spec = build_prompt(question, subset, strategy, format)
                fingerprint = request_fingerprint(DEMO_MODEL, spec.rendered_text)
                rng = random.Random(fingerprint)
                entries[fingerprint] = synthesize_reply(rng, strategy, truth_codes, subset_codes)

    out = assets.data_path(assets.CASSETTE_ENERGY_DEMO)
    out.write_text(json.dumps(entries, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    print(f"wrote {out} with {len(entries)} entries")
    return 0


if __name__ == "__main__":
    sys.exit(main())

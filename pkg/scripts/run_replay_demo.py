"""Run the bundled Energy demo grid end to end in replay mode.

Uses the packaged taxonomy, the 9-question Energy bank, and the recorded
demo cassette: 9 questions x 3 strategies x 2 formats x 1 model = 54 cells,
no network. Writes a run directory and prints the rendered report.

Usage: python scripts/run_replay_demo.py [output_dir]
"""
import sys
from pathlib import Path

from atomiclo import assets
from atomiclo.gateway import ModelConfig
from atomiclo.prompting import LOFormat, PromptStrategy
from atomiclo.runner import ExperimentConfig, run_experiment


def main():
    output_dir = sys.argv[1] if len(sys.argv) > 1 else "runs/demo"
    cfg = ExperimentConfig(
        taxonomy_path=str(assets.data_path(assets.TAXONOMY_MECHANICS)),
        corpus_path=str(assets.data_path(assets.QUESTIONS_ENERGY)),
        models=(ModelConfig(model_name="demo-labeler"),),
        strategies=tuple(PromptStrategy),
        formats=tuple(LOFormat),
        backend="replay",
        cassette_path=str(assets.data_path(assets.CASSETTE_ENERGY_DEMO)),
        output_dir=output_dir,
    )
    record = run_experiment(cfg)
    print(f"{len(record.cells)} cells scored, {len(record.failures)} failures")
    print((Path(output_dir) / "report.txt").read_text(encoding="utf-8"))
    return 0


if __name__ == "__main__":
    sys.exit(main())

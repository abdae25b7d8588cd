"""Command-line entry points.

Subcommands:
  validate  check a taxonomy, an optional corpus, and an optional count manifest
  run       execute an experiment grid from a JSON config
  score     re-score a persisted run (e.g. to switch the distance mode)
  report    regenerate report files for a persisted run
  serve     start the annotation HTTP service
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .annotation import make_server
from .corpus import LABELED, UNLABELED, corpus_stats, load_corpus
from .metrics import DistanceMode
from .runner import ExperimentConfig, load_run_cells, persist_run, rescore_run, run_experiment
from .taxonomy import load_taxonomy, validate_against_manifest
from . import report as report_mod


def _cmd_validate(args) -> int:
    taxonomy = load_taxonomy(args.taxonomy)
    print(f"taxonomy: {len(taxonomy)} LOs across {len(taxonomy.chapters)} chapters")
    status = 0
    if args.manifest:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
        mismatches = validate_against_manifest(taxonomy, manifest)
        if mismatches:
            status = 1
            for mismatch in mismatches:
                print(f"manifest mismatch: {mismatch}")
        else:
            print("manifest: all counts match")
    if args.corpus:
        corpus = load_corpus(args.corpus, taxonomy, mode=args.mode)
        print(f"corpus: {len(corpus)} questions ({args.mode})")
        for row in corpus_stats(corpus):
            print(f"  {row.chapter} / {row.source} / {row.dataset}: {row.count}")
    return status


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.from_json_file(args.config)
    if args.output:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "output_dir": args.output})
    record = run_experiment(cfg)
    print(f"run complete: {len(record.cells)} scored cells, {len(record.failures)} failures")
    print(f"outputs in {cfg.output_dir}")
    return 0 if not record.failures else 2


def _cmd_score(args) -> int:
    mode = DistanceMode(args.distance_mode) if args.distance_mode else None
    record = rescore_run(args.run, distance_mode=mode)
    print(
        f"re-scored {len(record.cells)} cells"
        + (f" with distance mode {mode.value}" if mode else "")
    )
    return 0


def _cmd_report(args) -> int:
    run_dir = Path(args.run)
    record = rescore_run(run_dir)  # recomputes scores + reports from stored predictions
    report_path = run_dir / "report.txt"
    if args.model or args.strategy or args.format:
        cfg, _ = load_run_cells(run_dir)
        taxonomy = load_taxonomy(cfg.taxonomy_path)
        corpus = load_corpus(cfg.corpus_path, taxonomy, mode=LABELED)
        report = report_mod.build_report(
            record.cells,
            record.failures,
            taxonomy,
            corpus,
            slice_model=args.model,
            slice_strategy=args.strategy,
            slice_format=args.format,
        )
        (run_dir / "report.json").write_text(
            json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        (run_dir / "report.csv").write_text(report_mod.aggregate_csv(report), encoding="utf-8")
        report_path.write_text(report_mod.render_report_text(report), encoding="utf-8")
    print(report_path.read_text(encoding="utf-8"))
    return 0


def _cmd_serve(args) -> int:
    server = make_server(
        taxonomy_path=args.taxonomy,
        corpus_path=args.corpus,
        store_path=args.store,
        port=args.port,
        static_dir=args.static_dir,
        host=args.host,
    )
    host, port = server.server_address[:2]
    print(f"annotation service listening on http://{host}:{port}/")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atomiclo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate taxonomy, corpus, and manifest files")
    p.add_argument("--taxonomy", required=True)
    p.add_argument("--corpus")
    p.add_argument("--manifest")
    p.add_argument("--mode", choices=[LABELED, UNLABELED], default=LABELED)
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("run", help="run an experiment grid from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="override the config's output directory")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("score", help="re-score a stored run")
    p.add_argument("--run", required=True, help="run directory")
    p.add_argument("--distance-mode", choices=[m.value for m in DistanceMode])
    p.set_defaults(fn=_cmd_score)

    p = sub.add_parser("report", help="regenerate reports for a stored run")
    p.add_argument("--run", required=True, help="run directory")
    p.add_argument("--model", help="analytics slice: model name")
    p.add_argument("--strategy", help="analytics slice: strategy")
    p.add_argument("--format", help="analytics slice: LO format")
    p.set_defaults(fn=_cmd_report)

    p = sub.add_parser("serve", help="start the annotation HTTP service")
    p.add_argument("--taxonomy", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--store", required=True, help="annotation state snapshot path")
    p.add_argument("--port", type=int, default=8777)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static-dir", help="directory with built UI assets")
    p.set_defaults(fn=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())

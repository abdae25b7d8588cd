import json
from pathlib import Path

import pytest

from atomiclo import assets
from atomiclo.gateway import ModelConfig
from atomiclo.metrics import DistanceMode, QuestionScore
from atomiclo.prompting import LOFormat, PromptStrategy
from atomiclo.report import (
    AXIS_HUMAN,
    AXIS_MODEL,
    aggregate_rows,
    avg_lo_count,
    f1_by_count_buckets,
    lo_frequency,
    per_lo_accuracy,
    render_aggregate_table,
    select_slice,
)
from atomiclo.runner import (
    ConfigInvalid,
    ExperimentConfig,
    ScoredCell,
    rescore_run,
    run_experiment,
)

GOLDEN = Path(__file__).parent / "data" / "aggregate_golden.txt"


class ExplodingTransport:
    def __init__(self):
        self.calls = 0

    def __call__(self, url, payload, headers, timeout):
        self.calls += 1
        raise AssertionError("network transport used during replay")


def demo_config(tmp_path, **overrides):
    values = dict(
        taxonomy_path=str(assets.data_path(assets.TAXONOMY_MECHANICS)),
        corpus_path=str(assets.data_path(assets.QUESTIONS_ENERGY)),
        models=(ModelConfig(model_name="demo-labeler"),),
        strategies=tuple(PromptStrategy),
        formats=tuple(LOFormat),
        backend="replay",
        cassette_path=str(assets.data_path(assets.CASSETTE_ENERGY_DEMO)),
        output_dir=str(tmp_path / "run"),
    )
    values.update(overrides)
    return ExperimentConfig(**values)


def make_cell(qid, predicted, truth, score_values, dataset="Energy", strategy="simple",
              format="structured", model="demo-labeler", sample=0, chapter="Energy"):
    em, j, p, r, f1, d = score_values
    return ScoredCell(
        question_id=qid,
        chapter=chapter,
        dataset=dataset,
        model_name=model,
        strategy=strategy,
        format=format,
        sample=sample,
        predicted=tuple(predicted),
        truth=tuple(truth),
        score=QuestionScore(
            exact_match=em, jaccard=j, precision=p, recall=r, f1=f1,
            distance=d, distance_mode=DistanceMode.PAIRWISE_MIN,
        ),
    )


CANONICAL_FILES = ["config.json", "predictions.jsonl", "scores.jsonl", "failures.jsonl",
                   "report.json", "report.csv", "report.txt"]


class TestRunExperiment:
    def test_grid_arithmetic(self, tmp_path):
        record = run_experiment(demo_config(tmp_path), persist=False)
        assert len(record.cells) == 9 * 3 * 2
        assert record.failures == ()

    def test_replay_is_deterministic_byte_for_byte(self, tmp_path):
        cfg_a = demo_config(tmp_path, output_dir=str(tmp_path / "run_a"))
        cfg_b = demo_config(tmp_path, output_dir=str(tmp_path / "run_b"))
        run_experiment(cfg_a, transport=ExplodingTransport())
        run_experiment(cfg_b, transport=ExplodingTransport())
        for name in ["predictions.jsonl", "scores.jsonl", "failures.jsonl",
                     "report.json", "report.csv", "report.txt"]:
            a = (tmp_path / "run_a" / name).read_bytes()
            b = (tmp_path / "run_b" / name).read_bytes()
            assert a == b, name

    def test_replay_uses_no_network(self, tmp_path):
        transport = ExplodingTransport()
        run_experiment(demo_config(tmp_path), transport=transport, persist=False)
        assert transport.calls == 0

    def test_parallel_run_matches_serial(self, tmp_path):
        serial = run_experiment(demo_config(tmp_path), persist=False)
        parallel = run_experiment(demo_config(tmp_path, parallelism=4), persist=False)
        assert [c.to_dict() for c in parallel.cells] == [c.to_dict() for c in serial.cells]

    def test_missing_fingerprint_recorded_not_fatal(self, tmp_path):
        original = json.loads(assets.data_path(assets.CASSETTE_ENERGY_DEMO).read_text())
        partial = dict(original)
        partial.pop(sorted(partial)[0])
        cassette_path = tmp_path / "partial.json"
        cassette_path.write_text(json.dumps(partial))
        record = run_experiment(
            demo_config(tmp_path, cassette_path=str(cassette_path)), persist=False
        )
        assert len(record.cells) == 53
        assert len(record.failures) == 1
        assert record.failures[0].error_kind == "CassetteMiss"

    def test_predictions_stay_inside_chapter_subset(self, taxonomy, tmp_path):
        record = run_experiment(demo_config(tmp_path), persist=False)
        energy = {lo.code_text for lo in taxonomy.subset_by_chapter("Energy")}
        for prediction in record.predictions:
            assert set(c.render() for c in prediction.predicted) <= energy

    def test_out_of_chapter_mentions_are_dropped(self, tmp_path):
        # the demo cassette mentions NL-F-1 in a few replies on purpose
        record = run_experiment(demo_config(tmp_path), persist=False)
        dropped = [pair for p in record.predictions for pair in p.dropped_codes]
        assert ("NL-F-1", "not-in-subset") in dropped

    def test_run_dir_contents(self, tmp_path):
        cfg = demo_config(tmp_path)
        run_experiment(cfg)
        for name in CANONICAL_FILES + ["meta.json"]:
            assert (Path(cfg.output_dir) / name).exists(), name

    def test_config_validation(self, tmp_path):
        with pytest.raises(ConfigInvalid):
            demo_config(tmp_path, models=()).validate()
        with pytest.raises(ConfigInvalid):
            demo_config(tmp_path, parallelism=0).validate()
        with pytest.raises(ConfigInvalid):
            demo_config(tmp_path, cassette_path=None).validate()

    def test_config_json_round_trip(self, tmp_path):
        cfg = demo_config(tmp_path)
        again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert again == cfg


class TestRescore:
    def test_switch_distance_mode(self, tmp_path):
        cfg = demo_config(tmp_path)
        first = run_experiment(cfg)
        rescored = rescore_run(cfg.output_dir, distance_mode=DistanceMode.SET_RULE)
        assert len(rescored.cells) == len(first.cells)
        assert all(c.score.distance_mode == DistanceMode.SET_RULE for c in rescored.cells)
        # jaccard/f1 unchanged by the distance mode
        for before, after in zip(first.cells, rescored.cells):
            assert before.score.jaccard == after.score.jaccard
            assert before.score.f1 == after.score.f1
        report = json.loads((Path(cfg.output_dir) / "report.json").read_text())
        assert report["aggregate"]


class TestAggregate:
    def test_all_perfect(self):
        cells = [
            make_cell(f"q{i}", ["ME-KE-1"], ["ME-KE-1"], (1, 1.0, 1.0, 1.0, 1.0, 0))
            for i in range(4)
        ]
        (row,) = aggregate_rows(cells)
        assert (row.em_hits, row.em_total) == (4, 4)
        assert row.jaccard_mean == 1.0
        assert row.f1_mean == 1.0
        assert row.distance_mean == 0.0

    def test_mean_arithmetic(self):
        cells = [
            make_cell("q1", ["ME-KE-1", "ME-KE-2"], ["ME-KE-1"], (0, 0.5, 0.5, 1.0, 2 / 3, 2)),
            make_cell("q2", ["ME-KE-1"], ["ME-KE-1"], (1, 1.0, 1.0, 1.0, 1.0, 0)),
        ]
        (row,) = aggregate_rows(cells)
        assert row.jaccard_mean == pytest.approx(0.750)
        assert row.f1_mean == pytest.approx(5 / 6)
        assert row.distance_mean == pytest.approx(1.0)
        assert (row.em_hits, row.em_total) == (1, 2)

    def test_rendered_golden(self):
        cells = [
            make_cell("q1", ["ME-KE-1", "ME-KE-2"], ["ME-KE-1"], (0, 0.5, 0.5, 1.0, 2 / 3, 2)),
            make_cell("q2", ["ME-KE-1"], ["ME-KE-1"], (1, 1.0, 1.0, 1.0, 1.0, 0)),
        ]
        rendered = render_aggregate_table(aggregate_rows(cells))
        assert rendered == GOLDEN.read_text()

    def test_one_row_per_group(self):
        cells = [
            make_cell("q1", [], ["ME-KE-1"], (0, 0.0, 0.0, 0.0, 0.0, 2), strategy=s, format=f)
            for s in ("simple", "cot")
            for f in ("structured", "natural")
        ]
        rows = aggregate_rows(cells)
        assert len(rows) == 4
        assert [(r.strategy, r.format) for r in rows] == [
            ("simple", "structured"), ("simple", "natural"),
            ("cot", "structured"), ("cot", "natural"),
        ]


class TestAnalytics:
    def test_avg_lo_count(self):
        sets = {"q1": ["A"], "q2": ["A", "B"], "q3": ["A", "B", "C"]}
        groups = {"q1": "Energy", "q2": "Energy", "q3": "Energy"}
        assert avg_lo_count(sets, groups) == {"Energy": 2.0}

    def test_avg_lo_count_absent_group(self):
        assert avg_lo_count({}, {}) == {}

    def test_heatmap_partition(self, tmp_path):
        record = run_experiment(demo_config(tmp_path), persist=False)
        sliced = select_slice(record.cells)
        assert len(sliced) == 9
        for axis in (AXIS_HUMAN, AXIS_MODEL):
            buckets = f1_by_count_buckets(sliced, axis)
            assert sum(b["questions"] for b in buckets) == 9

    def test_heatmap_single_bucket(self):
        cells = [
            make_cell(f"q{i}", ["ME-KE-1"], ["ME-KE-1", "ME-KE-2"], (0, 0.5, 1.0, 0.5, 2 / 3, 1))
            for i in range(15)
        ]
        buckets = f1_by_count_buckets(cells, AXIS_HUMAN)
        assert buckets == [{"lo_count": 2, "f1_mean": pytest.approx(2 / 3), "questions": 15}]

    def test_heatmap_mean_value(self):
        cells = [
            make_cell(f"q{i}", ["ME-KE-1"], ["ME-KE-1"], (0, 0.5, 0.5, 0.5, 0.5, 1))
            for i in range(15)
        ]
        (bucket,) = f1_by_count_buckets(cells, AXIS_HUMAN)
        assert bucket["f1_mean"] == pytest.approx(0.5)
        assert bucket["questions"] == 15

    def test_lo_frequency_counts(self):
        sets = [["ME-KE-1", "ME-W-1"], ["ME-KE-1"], ["ME-W-1"]]
        counts = lo_frequency(sets, ["ME-KE-1", "ME-W-1", "ME-GPE-1"])
        assert counts == {"ME-KE-1": 2, "ME-W-1": 2, "ME-GPE-1": 0}

    def test_lo_frequency_zero_listed(self, taxonomy, energy_corpus):
        universe = [lo.code_text for lo in taxonomy.subset_by_chapter("Energy")]
        counts = lo_frequency(
            [q.ground_truth_codes for q in energy_corpus], universe
        )
        assert set(counts) == set(universe)
        assert counts["ME-GPE-2"] == 0  # never used by the bundled ground truth

    def test_lo_frequency_empty_corpus(self):
        counts = lo_frequency([], ["ME-KE-1"])
        assert counts == {"ME-KE-1": 0}

    def test_per_lo_accuracy_threshold(self):
        cells = []
        # ME-KE-1: support 5, always hit; ME-W-1: support 4 (below threshold)
        for i in range(5):
            cells.append(make_cell(f"a{i}", ["ME-KE-1"], ["ME-KE-1"], (1, 1, 1, 1, 1, 0)))
        for i in range(4):
            cells.append(make_cell(f"b{i}", [], ["ME-W-1"], (0, 0, 0, 0, 0, 2)))
        table = per_lo_accuracy(cells, min_support=5)
        assert table == {"ME-KE-1": {"accuracy": 1.0, "support": 5}}

    def test_per_lo_accuracy_complete_miss(self):
        cells = [
            make_cell(f"q{i}", [], ["ME-GPE-4"], (0, 0, 0, 0, 0, 2)) for i in range(6)
        ]
        table = per_lo_accuracy(cells, min_support=5)
        assert table == {"ME-GPE-4": {"accuracy": 0.0, "support": 6}}

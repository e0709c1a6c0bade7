import json

import numpy as np
import pytest

from srpca.bench import (
    BenchmarkScenario,
    RunReport,
    bench_run,
    replication_seed,
    synthetic_lowrank,
)
from srpca.errors import InvalidArgumentError
from srpca.fileio import save_csv, save_pgm


def synthetic(**kw):
    base = dict(
        generator="synthetic_lowrank", dims=(40, 30), true_rank=2,
        missing_fractions=[0.5], replications=1, algorithms=["srpca"],
    )
    base.update(kw)
    return BenchmarkScenario(**base)


class TestScenario:
    @pytest.mark.parametrize(
        "kw",
        [
            {"replications": 0},
            {"missing_fractions": [1.0]},
            {"missing_fractions": []},
            {"algorithms": ["pca"]},
            {"generator": "random"},
            {"dims": None},
            {"true_rank": 50},
            {"configs": {"srpca": {"tau": 1.0}}},
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(InvalidArgumentError):
            synthetic(**kw)

    def test_file_generator_needs_path(self):
        with pytest.raises(InvalidArgumentError):
            BenchmarkScenario(generator="csv_file", missing_fractions=[0.5], algorithms=["srpca"], rank=2)

    def test_json_round_trip(self, tmp_path):
        s = synthetic(algorithms=["fast-srpca", "svt"], configs={"svt": {"mode": "soft"}})
        (tmp_path / "s.json").write_text(json.dumps(s.to_dict()))
        assert BenchmarkScenario.from_json(tmp_path / "s.json") == s
        assert s.algorithms == ["fast_srpca", "svt"]

    def test_standardize_default(self):
        assert not synthetic().standardize_default
        assert BenchmarkScenario(
            generator="csv_file", path="x.csv", rank=2, missing_fractions=[0.5], algorithms=["srpca"]
        ).standardize_default


def test_replication_seeds_distinct_and_stable():
    seeds = {replication_seed(7, f, r) for f in range(3) for r in range(20)}
    assert len(seeds) == 60
    assert replication_seed(7, 1, 4) == replication_seed(7, 1, 4)


def test_synthetic_generator_rank():
    assert np.linalg.matrix_rank(synthetic_lowrank(20, 15, 3, 0)) == 3


def test_ground_truth_recovery():
    s = synthetic(dims=(200, 100), true_rank=3, replications=5, tol=1e-8)
    cell = bench_run(s).cell("srpca", 0.5)
    assert len(cell.runs) == 5 and not cell.failures
    for m in cell.metrics():
        assert m.iterations < m.bound
        assert m.full_sq_error < 1e-3


def test_cell_count():
    report = bench_run(synthetic(algorithms=["srpca", "als"]))
    assert len(report.cells) == 2
    assert {c.algorithm for c in report.cells} == {"srpca", "als"}


def test_deterministic_and_worker_independent():
    s = synthetic(algorithms=["srpca", "fast_srpca", "svt"], missing_fractions=[0.3, 0.6], replications=2)
    a = bench_run(s)
    assert a.without_timings() == bench_run(s).without_timings()
    assert a.without_timings() == bench_run(s, workers=3).without_timings()


def test_report_json_round_trip():
    report = bench_run(synthetic(algorithms=["srpca", "svt"], replications=2))
    text = report.to_json()
    back = RunReport.from_json(text)
    assert back.to_dict() == report.to_dict()
    assert back.to_json() == text


def test_summary_mean_std():
    cell = bench_run(synthetic(replications=3)).cells[0]
    errors = [r["metrics"]["full_sq_error"] for r in cell.runs]
    summary = cell.summary()["full_sq_error"]
    assert summary["mean"] == pytest.approx(np.mean(errors))
    assert summary["std"] == pytest.approx(np.std(errors))


def test_failures_recorded_per_cell():
    s = synthetic(algorithms=["srpca", "svt"], configs={"svt": {"step": 5.0}}, replications=2)
    report = bench_run(s)
    assert len(report.cell("svt", 0.5).failures) == 2
    assert report.cell("svt", 0.5).failures[0]["error"] == "DivergenceError"
    assert len(report.cell("srpca", 0.5).runs) == 2


def test_csv_generator_scores_holdout(tmp_path):
    save_csv(synthetic_lowrank(30, 20, 2, 1), tmp_path / "x.csv")
    s = BenchmarkScenario(
        generator="csv_file", path=str(tmp_path / "x.csv"), rank=2,
        missing_fractions=[0.4], algorithms=["srpca"], standardize=False, tol=1e-8,
    )
    report = bench_run(s)
    run = report.cells[0].runs[0]
    assert run["metrics"]["nmae"] < 1e-3
    assert run["metrics"]["full_sq_error"] is not None
    assert report.dataset["observed"] == 600


def test_image_generator(tmp_path):
    img = np.clip(synthetic_lowrank(16, 12, 2, 2) * 20 + 128, 0, 255).round()
    save_pgm(img, tmp_path / "img.pgm")
    s = BenchmarkScenario(
        generator="image_file", path=str(tmp_path / "img.pgm"), rank=2,
        missing_fractions=[0.5], algorithms=["srpca", "als"],
    )
    report = bench_run(s)
    assert all(not c.failures for c in report.cells)

from __future__ import annotations

import os

import pytest

from scripts.graphenc.bsp import bench
from scripts.graphenc.errors import BenchParameterError


def test_report_shape() -> None:
    report = bench(400, 6, 8, 4, [1, 2], repeats=2, seed=3)
    assert report.config == {
        "n_nodes": 400,
        "n_edges": report.config["n_edges"],
        "avg_degree": 6,
        "feature_dim": 8,
        "n_tiles": 4,
        "workers": [1, 2],
        "repeats": 2,
        "seed": 3,
        "kernel": "fused",
        "precision": "f32",
    }
    assert 0 < report.config["n_edges"] <= 1200
    assert len(report.timings_ms) == 2
    assert all(timing > 0 for timing in report.timings_ms)
    assert report.speedup[0] == 1.0
    assert [len(runs) for runs in report.raw_ms] == [2, 2]
    assert set(report.to_dict()) == {"config", "timings_ms", "speedup", "output_sha256"}
    assert len(report.output_sha256) == 64


def test_baseline_is_single_worker_run() -> None:
    report = bench(200, 4, 4, 2, [2, 1], repeats=1, seed=0, kernel="unfused", precision="f64")
    assert report.speedup[1] == 1.0
    assert report.config["kernel"] == "unfused"


def test_same_seed_same_output() -> None:
    first = bench(300, 4, 4, 3, [1], repeats=1, seed=11)
    again = bench(300, 4, 4, 3, [1], repeats=1, seed=11)
    other = bench(300, 4, 4, 3, [1], repeats=1, seed=12)
    assert first.config == again.config
    assert first.output_sha256 == again.output_sha256
    assert first.output_sha256 != other.output_sha256


def test_output_does_not_depend_on_tiling() -> None:
    one = bench(300, 4, 4, 1, [1], repeats=1, seed=5)
    many = bench(300, 4, 4, 7, [3], repeats=1, seed=5)
    assert one.output_sha256 == many.output_sha256


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n_nodes": 0},
        {"avg_degree": 0},
        {"feature_dim": 0},
        {"n_tiles": 0},
        {"repeats": 0},
        {"workers_list": []},
        {"workers_list": [1, 0]},
        {"precision": "f16"},
    ],
)
def test_invalid_parameters(kwargs: dict) -> None:
    params = {"n_nodes": 100, "avg_degree": 4, "feature_dim": 4, "n_tiles": 2, "workers_list": [1], "repeats": 1, "seed": 0}
    params.update(kwargs)
    with pytest.raises(BenchParameterError):
        bench(**params)


@pytest.mark.slow
@pytest.mark.skipif((os.cpu_count() or 1) < 8, reason="needs at least 8 CPUs")
def test_eight_workers_scale() -> None:
    report = bench(100_000, 8, 16, 8, [1, 8], repeats=5, seed=0)
    assert report.speedup[1] >= 2.5

from __future__ import annotations

import hashlib
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ..errors import BenchParameterError
from ..gcnmath import OutputActivation, init_gcn_params, seeded_rng
from .engine import BspEngine
from .plan import SparseGraph, partition, plan_exchange


LOG_PREFIX = "[BSP]"
PRECISIONS = {"f32": np.float32, "f64": np.float64}

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BenchReport:
    config: dict[str, Any]
    timings_ms: list[float]  # median wall time per worker count
    speedup: list[float]  # baseline wall time / wall time
    output_sha256: str = ""
    raw_ms: list[list[float]] = field(default_factory=list, compare=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": dict(self.config),
            "timings_ms": list(self.timings_ms),
            "speedup": list(self.speedup),
            "output_sha256": self.output_sha256,
        }


def _validate(**params: Any) -> None:
    problems = [f"{name} must be positive, got {value}" for name, value in params.items() if value < 1]
    if problems:
        raise BenchParameterError("; ".join(problems))


def bench(
    n_nodes: int,
    avg_degree: int,
    feature_dim: int,
    n_tiles: int,
    workers_list: Sequence[int],
    repeats: int,
    seed: int,
    *,
    kernel: str = "fused",
    precision: str = "f32",
    memory_budget: int | None = None,
) -> BenchReport:
    """Time the tile engine per worker count; the baseline is the 1-worker run when present."""
    if not workers_list:
        raise BenchParameterError("workers list is empty")
    _validate(n_nodes=n_nodes, avg_degree=avg_degree, feature_dim=feature_dim, n_tiles=n_tiles, repeats=repeats)
    _validate(**{f"workers[{index}]": value for index, value in enumerate(workers_list)})
    if precision not in PRECISIONS:
        raise BenchParameterError(f"precision must be one of {', '.join(PRECISIONS)}, got {precision!r}")

    dtype = PRECISIONS[precision]
    graph = SparseGraph.random_graph(n_nodes, avg_degree, seed)
    rng = seeded_rng(seed + 1)
    X = rng.standard_normal((n_nodes, feature_dim)).astype(dtype)
    params = init_gcn_params(
        feature_dim, feature_dim, feature_dim, rng, output_activation=OutputActivation.SOFTMAX_ROWS
    ).astype(dtype)

    plan = partition(graph, n_tiles, memory_budget)
    engine = BspEngine(graph, plan, plan_exchange(plan, graph), kernel=kernel)

    digest = ""
    timings: list[float] = []
    raw: list[list[float]] = []
    for workers in workers_list:
        output = engine.forward(X, params, workers)  # warm-up
        if not digest:
            digest = hashlib.sha256(np.ascontiguousarray(output).tobytes()).hexdigest()

        runs = []
        for _ in range(repeats):
            started = time.perf_counter()
            engine.forward(X, params, workers)
            runs.append(max((time.perf_counter() - started) * 1000.0, 1e-6))
        raw.append(runs)
        timings.append(float(np.median(runs)))
        logger.info("%s %d worker(s): median %.3f ms over %d run(s)", LOG_PREFIX, workers, timings[-1], repeats)

    baseline = timings[list(workers_list).index(1)] if 1 in workers_list else timings[0]
    config = {
        "n_nodes": n_nodes,
        "n_edges": graph.n_edges,
        "avg_degree": avg_degree,
        "feature_dim": feature_dim,
        "n_tiles": n_tiles,
        "workers": list(workers_list),
        "repeats": repeats,
        "seed": seed,
        "kernel": engine.kernel.name,
        "precision": precision,
    }
    return BenchReport(
        config=config,
        timings_ms=timings,
        speedup=[baseline / timing for timing in timings],
        output_sha256=digest,
        raw_ms=raw,
    )

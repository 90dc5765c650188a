from __future__ import annotations

import numpy as np
import pytest

from scripts.graphenc.bsp import (
    KERNEL_REGISTRY,
    Access,
    AccessEvent,
    BspEngine,
    PhaseTracer,
    Region,
    SparseGraph,
    assert_race_free,
    bsp_forward,
    partition,
    plan_exchange,
)
from scripts.graphenc.errors import ShapeMismatchError, TileBudgetError
from scripts.graphenc.gcnmath import OutputActivation, gcn_forward, init_gcn_params, seeded_rng
from scripts.graphenc.syngraph import build_sequence_graph


def workload(seed: int, n_nodes: int = 1000, avg_degree: int = 8, dim: int = 8):
    graph = SparseGraph.random_graph(n_nodes, avg_degree, seed)
    rng = seeded_rng(seed + 1)
    X = rng.standard_normal((n_nodes, dim))
    params = init_gcn_params(dim, dim, dim, rng, output_activation=OutputActivation.SOFTMAX_ROWS)
    return graph, X, params


def test_single_tile_matches_serial_forward() -> None:
    graph, X, params = workload(0, n_nodes=200)
    out = bsp_forward(X, graph, params, partition(graph, 1))
    np.testing.assert_array_equal(out, gcn_forward(X, graph.matrix, params))


def test_tiled_forward_is_bit_identical_to_serial() -> None:
    for seed in range(20):
        graph, X, params = workload(seed)
        serial = gcn_forward(X, graph.matrix, params)
        for n_tiles in (1, 2, 4, 8):
            engine = BspEngine(graph, partition(graph, n_tiles))
            for workers in (1, 2, 4):
                np.testing.assert_array_equal(engine.forward(X, params, workers), serial, err_msg=f"{seed}/{n_tiles}/{workers}")


def test_unfused_kernel_matches_fused() -> None:
    graph, X, params = workload(5, n_nodes=400)
    plan = partition(graph, 6)
    fused = bsp_forward(X, graph, params, plan, 3, kernel="fused")
    unfused = bsp_forward(X, graph, params, plan, 3, kernel=KERNEL_REGISTRY["unfused"])
    np.testing.assert_array_equal(fused, unfused)


def test_more_tiles_than_nodes() -> None:
    graph = SparseGraph.from_edges(3, [(0, 1), (1, 2)])
    rng = seeded_rng(2)
    X = rng.standard_normal((3, 2))
    params = init_gcn_params(2, 3, 2, rng)
    out = bsp_forward(X, graph, params, partition(graph, 8), workers=4)
    np.testing.assert_array_equal(out, gcn_forward(X, graph.matrix, params))


def test_syntax_graph_input() -> None:
    syn = build_sequence_graph(7)
    rng = seeded_rng(3)
    X = rng.standard_normal((7, 4))
    params = init_gcn_params(4, 4, 4, rng, output_activation=OutputActivation.NONE)
    out = bsp_forward(X, syn, params, partition(syn, 3), workers=2)
    np.testing.assert_array_equal(out, gcn_forward(X, syn.A_hat, params))


def test_single_precision() -> None:
    graph, X, params = workload(4, n_nodes=300)
    X32 = X.astype(np.float32)
    params32 = params.astype(np.float32)
    out = BspEngine(graph, partition(graph, 4)).forward(X32, params32, workers=2)
    assert out.dtype == np.float32
    np.testing.assert_array_equal(out, gcn_forward(X32, graph.matrix, params32))
    np.testing.assert_allclose(out, gcn_forward(X, graph.matrix, params), rtol=0, atol=1e-4)


@pytest.mark.parametrize("kernel", ["fused", "unfused"])
def test_traced_run_is_race_free(kernel: str) -> None:
    graph, X, params = workload(6, n_nodes=300)
    tracer = PhaseTracer()
    engine = BspEngine(graph, partition(graph, 4), kernel=kernel)
    engine.forward(X, params, workers=4, tracer=tracer)

    events = tracer.events
    assert_race_free(events)
    phases = {event.phase for event in events}
    assert {"load", "exchange"} <= phases
    assert set(KERNEL_REGISTRY[kernel].phases) <= phases
    # Halo rows only ever arrive by reading another tile's output during the exchange.
    remote = [event for event in events if event.actor != event.owner]
    assert remote
    assert all(event.phase == "exchange" and event.access is Access.READ for event in remote)


def test_race_checker_flags_conflicts() -> None:
    cross_write = [AccessEvent("compute", 0, actor=0, owner=1, region=Region.OUTPUT, access=Access.WRITE)]
    with pytest.raises(AssertionError, match="wrote"):
        assert_race_free(cross_write)

    read_while_written = [
        AccessEvent("compute", 0, actor=1, owner=1, region=Region.OUTPUT, access=Access.WRITE),
        AccessEvent("compute", 0, actor=0, owner=1, region=Region.OUTPUT, access=Access.READ),
    ]
    with pytest.raises(AssertionError, match="while tile 1 writes"):
        assert_race_free(read_while_written)

    # The same accesses in different phases are separated by a barrier.
    separated = [
        AccessEvent("compute", 0, actor=1, owner=1, region=Region.OUTPUT, access=Access.WRITE),
        AccessEvent("exchange", 1, actor=0, owner=1, region=Region.OUTPUT, access=Access.READ),
    ]
    assert_race_free(separated)


def test_schedule_is_reused_when_given() -> None:
    graph, X, params = workload(7, n_nodes=200)
    plan = partition(graph, 4)
    schedule = plan_exchange(plan, graph)
    engine = BspEngine(graph, plan, schedule)
    assert engine.schedule is schedule
    np.testing.assert_array_equal(engine.forward(X, params, 2), gcn_forward(X, graph.matrix, params))


def test_memory_budget_enforced() -> None:
    graph, X, params = workload(8, n_nodes=200)
    engine = BspEngine(graph, partition(graph, 2, memory_budget=64))
    with pytest.raises(TileBudgetError):
        engine.forward(X, params)


def test_invalid_calls() -> None:
    graph, X, params = workload(9, n_nodes=50)
    engine = BspEngine(graph, partition(graph, 2))
    with pytest.raises(ValueError):
        engine.forward(X, params, workers=0)
    with pytest.raises(ShapeMismatchError):
        engine.forward(X[:10], params)
    with pytest.raises(ValueError, match="unknown kernel"):
        BspEngine(graph, partition(graph, 2), kernel="warp")
    with pytest.raises(ShapeMismatchError):
        BspEngine(graph, partition(SparseGraph.from_edges(10, []), 2), plan_exchange(partition(graph, 2), graph))

"""Bulk-synchronous execution of the two-layer GCN over tiles.

One superstep per layer. Within a superstep every tile runs the kernel's
compute phases on its owned rows; a barrier separates phases. Between
supersteps each tile pulls the rows it needs from the tiles that own them,
again delimited by barriers. Workers map onto tiles round-robin.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np
import scipy.sparse

from ..errors import ShapeMismatchError
from ..gcnmath import GcnParams
from ..syngraph import SynGraph
from .base import Access, PhaseTracer, Region, TileKernel, TileState
from .plan import ExchangeSchedule, SparseGraph, TilePlan, check_memory_budget, partition, plan_exchange


LOG_PREFIX = "[BSP]"

logger = logging.getLogger(__name__)


def resolve_kernel(kernel: TileKernel | str) -> TileKernel:
    if isinstance(kernel, TileKernel):
        return kernel

    from . import KERNEL_REGISTRY

    resolved = KERNEL_REGISTRY.get(str(kernel))
    if resolved is None:
        raise ValueError(f"unknown kernel {kernel!r}; expected one of {', '.join(sorted(KERNEL_REGISTRY))}")
    return resolved


def build_tiles(graph: SparseGraph, plan: TilePlan, schedule: ExchangeSchedule) -> list[TileState]:
    if plan.n_nodes != graph.n:
        raise ShapeMismatchError(f"plan covers {plan.n_nodes} nodes, graph has {graph.n}")

    tiles: list[TileState] = []
    for tile, owned in enumerate(plan.tile_nodes):
        halo = schedule.halo(tile)
        lookup = np.full(graph.n, -1, dtype=np.int64)
        lookup[owned] = np.arange(len(owned))
        lookup[halo] = len(owned) + np.arange(len(halo))

        # Row slicing keeps ascending global column order per row; local indices keep that order.
        rows = graph.matrix[owned]
        local_matrix = scipy.sparse.csr_matrix(
            (rows.data, lookup[rows.indices], rows.indptr),
            shape=(len(owned), len(owned) + len(halo)),
        )

        receives = []
        for message in schedule.incoming(tile):
            nodes = np.asarray(message.nodes, dtype=np.int64)
            src_positions = np.searchsorted(plan.tile_nodes[message.src_tile], nodes)
            receives.append((message.src_tile, src_positions, lookup[nodes]))

        tiles.append(TileState(tile=tile, owned=owned, halo=halo, local_matrix=local_matrix, receives=receives))
    return tiles


class BspEngine:
    """Prepared tile layout for one (graph, plan); drive from a single thread."""

    def __init__(
        self,
        graph: SparseGraph,
        plan: TilePlan,
        schedule: ExchangeSchedule | None = None,
        kernel: TileKernel | str = "fused",
    ):
        self.graph = graph
        self.plan = plan
        self.schedule = schedule if schedule is not None else plan_exchange(plan, graph)
        self.kernel = resolve_kernel(kernel)
        self.tiles = build_tiles(graph, plan, self.schedule)

    def _run(self, pool: ThreadPoolExecutor | None, workers: int, fn: Callable[[TileState], None]) -> None:
        active = [tile for tile in self.tiles if tile.n_owned]
        if pool is None:
            for tile in active:
                fn(tile)
            return

        def run_group(group: Sequence[TileState]) -> None:
            for tile in group:
                fn(tile)

        futures = [pool.submit(run_group, active[w::workers]) for w in range(workers) if active[w::workers]]
        # Waiting on every future is the barrier; result() re-raises worker errors.
        for future in futures:
            future.result()

    def _tag(self, phase: str, superstep: int, tracer: PhaseTracer | None) -> None:
        for tile in self.tiles:
            tile.phase = phase
            tile.superstep = superstep
            tile.tracer = tracer

    def _load(self, tile: TileState, X: np.ndarray) -> None:
        tile.buffer = X[np.concatenate([tile.owned, tile.halo])]
        tile.output = None
        tile.scratch.clear()
        tile.touch(Region.OWNED, Access.WRITE)
        if len(tile.halo):
            tile.touch(Region.HALO, Access.WRITE)

    def _exchange(self, tile: TileState) -> None:
        buffer = np.empty((tile.n_owned + len(tile.halo), tile.output.shape[1]), dtype=tile.output.dtype)
        buffer[: tile.n_owned] = tile.output
        tile.touch(Region.OUTPUT, Access.READ)
        tile.touch(Region.OWNED, Access.WRITE)
        for src, src_positions, dst_positions in tile.receives:
            buffer[dst_positions] = self.tiles[src].output[src_positions]
            tile.touch(Region.OUTPUT, Access.READ, owner=src)
            tile.touch(Region.HALO, Access.WRITE)
        tile.buffer = buffer

    def forward(
        self,
        X: np.ndarray,
        params: GcnParams,
        workers: int = 1,
        tracer: PhaseTracer | None = None,
    ) -> np.ndarray:
        if workers < 1:
            raise ValueError("workers must be >= 1")
        if X.ndim != 2 or X.shape[0] != self.graph.n:
            raise ShapeMismatchError(f"X must have {self.graph.n} rows, got shape {X.shape}")
        if X.shape[1] != params.in_dim:
            raise ShapeMismatchError(f"X has {X.shape[1]} columns but W0 expects {params.in_dim}")
        if self.plan.memory_budget is not None:
            dims = (params.in_dim, params.hidden_dim, params.out_dim)
            check_memory_budget(self.plan, self.schedule, dims, X.dtype.itemsize)

        layers = (
            (params.W0.astype(X.dtype, copy=False), params.hidden_activation),
            (params.W1.astype(X.dtype, copy=False), params.output_activation),
        )

        pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
        try:
            self._tag("load", 0, tracer)
            self._run(pool, workers, lambda tile: self._load(tile, X))

            for superstep, (W, activation) in enumerate(layers):
                started = time.perf_counter()
                if superstep > 0:
                    self._tag("exchange", superstep, tracer)
                    self._run(pool, workers, self._exchange)
                for phase in self.kernel.phases:
                    self._tag(phase, superstep, tracer)
                    self._run(pool, workers, lambda tile: self.kernel.run_phase(phase, tile, W, activation))
                logger.debug(
                    "%s Superstep %d (%s, %d tiles, %d workers) took %.3f ms",
                    LOG_PREFIX,
                    superstep,
                    self.kernel.name,
                    self.plan.n_tiles,
                    workers,
                    (time.perf_counter() - started) * 1000.0,
                )
        finally:
            if pool is not None:
                pool.shutdown(wait=True)

        out = np.zeros((self.graph.n, params.out_dim), dtype=X.dtype)
        for tile in self.tiles:
            if tile.n_owned:
                out[tile.owned] = tile.output
        return out


def bsp_forward(
    X: np.ndarray,
    graph: SparseGraph | SynGraph,
    params: GcnParams,
    plan: TilePlan,
    workers: int = 1,
    *,
    kernel: TileKernel | str = "fused",
    schedule: ExchangeSchedule | None = None,
    tracer: PhaseTracer | None = None,
) -> np.ndarray:
    if isinstance(graph, SynGraph):
        graph = SparseGraph.from_syngraph(graph)
    return BspEngine(graph, plan, schedule=schedule, kernel=kernel).forward(X, params, workers, tracer=tracer)


def make_gcn_runner(
    n_tiles: int,
    workers: int,
    kernel: TileKernel | str = "fused",
    memory_budget: int | None = None,
) -> Callable[[np.ndarray, SynGraph, GcnParams], np.ndarray]:
    """GCN runner for the encoder that routes the forward pass through tiles."""

    def run(X: np.ndarray, graph: SynGraph, params: GcnParams) -> np.ndarray:
        sparse = SparseGraph.from_syngraph(graph)
        return bsp_forward(X, sparse, params, partition(sparse, n_tiles, memory_budget), workers, kernel=kernel)

    return run

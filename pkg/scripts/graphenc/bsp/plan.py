"""Sparse graphs, tile partitions and the exchange schedule between tiles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Protocol, Sequence

import numpy as np
import scipy.sparse

from ..errors import TileBudgetError, ZeroTilesError
from ..gcnmath import seeded_rng
from ..syngraph import SynGraph, normalization_values


# Local memory of one physical tile on the reference accelerator.
REFERENCE_TILE_MEMORY = 642 * 1024


class HasNodeCount(Protocol):
    n: int


@dataclass(frozen=True)
class SparseGraph:
    """CSR of the normalized adjacency (self-connections included), indices sorted per row."""

    n: int
    matrix: scipy.sparse.csr_matrix

    @property
    def n_edges(self) -> int:
        return (self.matrix.nnz - self.n) // 2

    def neighbours(self, node: int) -> np.ndarray:
        start, end = self.matrix.indptr[node], self.matrix.indptr[node + 1]
        return self.matrix.indices[start:end]

    @classmethod
    def from_edges(cls, n: int, edges: np.ndarray | Iterable[tuple[int, int]]) -> SparseGraph:
        if n < 1:
            raise ValueError("a graph needs at least one node")

        pairs = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        pairs = pairs.reshape(-1, 2)
        if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
            raise ValueError(f"edge endpoint outside node range [0, {n})")
        pairs = pairs[pairs[:, 0] != pairs[:, 1]]
        if len(pairs):
            pairs = np.unique(np.sort(pairs, axis=1), axis=0)

        nodes = np.arange(n, dtype=np.int64)
        rows = np.concatenate([pairs[:, 0], pairs[:, 1], nodes])
        cols = np.concatenate([pairs[:, 1], pairs[:, 0], nodes])
        pattern = scipy.sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        pattern.sum_duplicates()
        pattern.sort_indices()

        degrees = np.diff(pattern.indptr).astype(np.float64)
        row_of_slot = np.repeat(nodes, np.diff(pattern.indptr))
        pattern.data = normalization_values(degrees, row_of_slot, pattern.indices)
        return cls(n=n, matrix=pattern)

    @classmethod
    def from_syngraph(cls, graph: SynGraph) -> SparseGraph:
        return cls.from_edges(graph.n, np.asarray(graph.edges, dtype=np.int64).reshape(-1, 2))

    @classmethod
    def random_graph(cls, n_nodes: int, avg_degree: int, seed: int) -> SparseGraph:
        """Uniform random endpoints; roughly n * avg_degree / 2 undirected edges."""
        rng = seeded_rng(seed)
        n_draws = (n_nodes * avg_degree) // 2
        edges = rng.integers(0, n_nodes, size=(n_draws, 2), dtype=np.int64)
        return cls.from_edges(n_nodes, edges)


@dataclass(frozen=True)
class TilePlan:
    n_tiles: int
    owner: np.ndarray  # tile index per node
    tile_nodes: tuple[np.ndarray, ...]  # ascending node ids per tile
    memory_budget: int | None = None

    @property
    def n_nodes(self) -> int:
        return int(len(self.owner))

    def sizes(self) -> list[int]:
        return [len(nodes) for nodes in self.tile_nodes]


def partition(graph: HasNodeCount, n_tiles: int, memory_budget: int | None = None) -> TilePlan:
    """Contiguous balanced ranges: node i goes to tile floor(i * n_tiles / n)."""
    if n_tiles < 1:
        raise ZeroTilesError()

    n = int(graph.n)
    owner = (np.arange(n, dtype=np.int64) * n_tiles) // n
    bounds = np.searchsorted(owner, np.arange(n_tiles + 1))
    tile_nodes = tuple(np.arange(bounds[k], bounds[k + 1], dtype=np.int64) for k in range(n_tiles))
    owner.setflags(write=False)
    return TilePlan(n_tiles=n_tiles, owner=owner, tile_nodes=tile_nodes, memory_budget=memory_budget)


@dataclass(frozen=True)
class Message:
    src_tile: int
    dst_tile: int
    nodes: tuple[int, ...]


@dataclass(frozen=True)
class ExchangeSchedule:
    messages: tuple[Message, ...]  # sorted by (src_tile, dst_tile)

    def superstep(self, index: int) -> tuple[Message, ...]:
        # Every layer reads the same neighbourhoods, so every superstep reuses one message list.
        return self.messages

    def incoming(self, tile: int) -> tuple[Message, ...]:
        return tuple(message for message in self.messages if message.dst_tile == tile)

    def halo(self, tile: int) -> np.ndarray:
        received = [node for message in self.incoming(tile) for node in message.nodes]
        return np.unique(np.asarray(received, dtype=np.int64))


def plan_exchange(plan: TilePlan, graph: SparseGraph) -> ExchangeSchedule:
    matrix = graph.matrix
    rows = np.repeat(np.arange(graph.n, dtype=np.int64), np.diff(matrix.indptr))
    cols = matrix.indices.astype(np.int64)

    dst = plan.owner[rows]
    src = plan.owner[cols]
    crossing = src != dst
    triples = np.stack([src[crossing], dst[crossing], cols[crossing]], axis=1)
    messages: list[Message] = []
    if len(triples):
        triples = np.unique(triples, axis=0)  # lexicographic: (src, dst, node)
        boundaries = np.flatnonzero(np.any(np.diff(triples[:, :2], axis=0) != 0, axis=1)) + 1
        for group in np.split(triples, boundaries):
            messages.append(
                Message(
                    src_tile=int(group[0, 0]),
                    dst_tile=int(group[0, 1]),
                    nodes=tuple(int(node) for node in group[:, 2]),
                )
            )
    return ExchangeSchedule(messages=tuple(messages))


def tile_memory_bytes(plan: TilePlan, schedule: ExchangeSchedule, feature_dims: Sequence[int], itemsize: int) -> list[int]:
    """Bytes per tile: a local buffer (owned + halo rows) plus an owned-row output, at the widest layer."""
    width = max(feature_dims)
    usage = []
    for tile, owned in enumerate(plan.tile_nodes):
        n_halo = len(schedule.halo(tile))
        usage.append(((len(owned) + n_halo) + len(owned)) * width * itemsize)
    return usage


def check_memory_budget(
    plan: TilePlan,
    schedule: ExchangeSchedule,
    feature_dims: Sequence[int],
    itemsize: int,
    budget: int | None = None,
) -> list[int]:
    usage = tile_memory_bytes(plan, schedule, feature_dims, itemsize)
    limit = budget if budget is not None else plan.memory_budget
    if limit is None:
        return usage

    for tile, used in enumerate(usage):
        if used > limit:
            raise TileBudgetError(f"tile {tile} needs {used} bytes of local memory, budget is {limit}")
    return usage

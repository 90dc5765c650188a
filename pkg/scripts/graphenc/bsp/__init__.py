from .base import Access, AccessEvent, PhaseTracer, Region, TileKernel, TileState, assert_race_free
from .fused import FusedKernel
from .unfused import UnfusedKernel


KERNEL_REGISTRY: dict[str, TileKernel] = {
    "fused": FusedKernel(),
    "unfused": UnfusedKernel(),
}


from .bench import BenchReport, bench  # noqa: E402
from .engine import BspEngine, bsp_forward, make_gcn_runner  # noqa: E402
from .plan import (  # noqa: E402
    REFERENCE_TILE_MEMORY,
    ExchangeSchedule,
    Message,
    SparseGraph,
    TilePlan,
    check_memory_budget,
    partition,
    plan_exchange,
    tile_memory_bytes,
)


__all__ = [
    "Access",
    "AccessEvent",
    "PhaseTracer",
    "Region",
    "TileKernel",
    "TileState",
    "assert_race_free",
    "FusedKernel",
    "UnfusedKernel",
    "KERNEL_REGISTRY",
    "BenchReport",
    "bench",
    "BspEngine",
    "bsp_forward",
    "make_gcn_runner",
    "REFERENCE_TILE_MEMORY",
    "ExchangeSchedule",
    "Message",
    "SparseGraph",
    "TilePlan",
    "check_memory_budget",
    "partition",
    "plan_exchange",
    "tile_memory_bytes",
]

from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse

from ..gcnmath import Activation


class Region(str, Enum):
    OWNED = "owned"  # owned rows of the local buffer
    HALO = "halo"  # received neighbour rows of the local buffer
    SCRATCH = "scratch"  # intermediates between unfused phases
    OUTPUT = "output"  # owned rows produced by the current layer


class Access(str, Enum):
    READ = "read"
    WRITE = "write"


@dataclass(frozen=True)
class AccessEvent:
    phase: str
    superstep: int
    actor: int  # tile doing the access
    owner: int  # tile whose memory is accessed
    region: Region
    access: Access


class PhaseTracer:
    """Thread-safe recorder of logical memory accesses, tagged by phase."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._events: list[AccessEvent] = []

    def record(self, event: AccessEvent) -> None:
        with self._lock:
            self._events.append(event)

    @property
    def events(self) -> list[AccessEvent]:
        with self._lock:
            return list(self._events)


def assert_race_free(events: list[AccessEvent]) -> None:
    """Within one (phase, superstep): a tile writes only its own memory, and
    memory that some tile writes is touched by no other tile."""
    writers: dict[tuple[str, int, int, Region], int] = {}
    for event in events:
        if event.access is Access.WRITE:
            if event.actor != event.owner:
                raise AssertionError(
                    f"{event.phase}/{event.superstep}: tile {event.actor} wrote {event.region.value} of tile {event.owner}"
                )
            writers[(event.phase, event.superstep, event.owner, event.region)] = event.actor

    for event in events:
        writer = writers.get((event.phase, event.superstep, event.owner, event.region))
        if writer is not None and writer != event.actor:
            raise AssertionError(
                f"{event.phase}/{event.superstep}: tile {event.actor} {event.access.value}s "
                f"{event.region.value} of tile {event.owner} while tile {writer} writes it"
            )


@dataclass
class TileState:
    tile: int
    owned: np.ndarray  # global ids of owned nodes, ascending
    halo: np.ndarray  # global ids of received nodes, ascending
    local_matrix: scipy.sparse.csr_matrix  # owned rows x (owned + halo) local columns
    # (src tile, row positions in src output, row positions in this buffer) per incoming message
    receives: list[tuple[int, np.ndarray, np.ndarray]] = field(default_factory=list)
    buffer: np.ndarray | None = None  # owned rows, then halo rows
    output: np.ndarray | None = None
    scratch: dict[str, np.ndarray] = field(default_factory=dict)
    tracer: PhaseTracer | None = None
    phase: str = ""
    superstep: int = 0

    @property
    def n_owned(self) -> int:
        return int(len(self.owned))

    def touch(self, region: Region, access: Access, owner: int | None = None) -> None:
        if self.tracer is None:
            return
        self.tracer.record(
            AccessEvent(
                phase=self.phase,
                superstep=self.superstep,
                actor=self.tile,
                owner=self.tile if owner is None else owner,
                region=region,
                access=access,
            )
        )

    def read_buffer(self) -> np.ndarray:
        self.touch(Region.OWNED, Access.READ)
        if len(self.halo):
            self.touch(Region.HALO, Access.READ)
        return self.buffer


class TileKernel(ABC):
    name: str = ""

    @property
    @abstractmethod
    def phases(self) -> tuple[str, ...]:
        """Compute phases of one layer, each followed by a barrier."""

    @abstractmethod
    def run_phase(self, phase: str, state: TileState, W: np.ndarray, activation: Activation | str) -> None:
        """Run one phase for one tile, writing only that tile's memory."""

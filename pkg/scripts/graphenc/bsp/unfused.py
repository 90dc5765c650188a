from __future__ import annotations

import numpy as np

from ..gcnmath import Activation, apply_activation, propagate, transform
from .base import Access, Region, TileKernel, TileState


class UnfusedKernel(TileKernel):
    """Aggregate, transform and activate as separate barrier-delimited phases."""

    name = "unfused"

    @property
    def phases(self) -> tuple[str, ...]:
        return ("aggregate", "transform", "activate")

    def run_phase(self, phase: str, state: TileState, W: np.ndarray, activation: Activation | str) -> None:
        if phase == "aggregate":
            state.scratch["aggregated"] = propagate(state.local_matrix, state.read_buffer())
            state.touch(Region.SCRATCH, Access.WRITE)
        elif phase == "transform":
            state.touch(Region.SCRATCH, Access.READ)
            state.scratch["transformed"] = transform(state.scratch.pop("aggregated"), W)
            state.touch(Region.SCRATCH, Access.WRITE)
        elif phase == "activate":
            state.touch(Region.SCRATCH, Access.READ)
            state.output = apply_activation(state.scratch.pop("transformed"), activation)
            state.touch(Region.OUTPUT, Access.WRITE)
        else:
            raise ValueError(f"unknown phase {phase!r} for the unfused kernel")

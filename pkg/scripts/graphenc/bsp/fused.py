from __future__ import annotations

import numpy as np

from ..gcnmath import Activation, apply_activation, propagate, transform
from .base import Access, Region, TileKernel, TileState


class FusedKernel(TileKernel):
    """Normalize, transform and activate in a single pass per tile."""

    name = "fused"

    @property
    def phases(self) -> tuple[str, ...]:
        return ("compute",)

    def run_phase(self, phase: str, state: TileState, W: np.ndarray, activation: Activation | str) -> None:
        if phase != "compute":
            raise ValueError(f"unknown phase {phase!r} for the fused kernel")

        aggregated = propagate(state.local_matrix, state.read_buffer())
        state.output = apply_activation(transform(aggregated, W), activation)
        state.touch(Region.OUTPUT, Access.WRITE)

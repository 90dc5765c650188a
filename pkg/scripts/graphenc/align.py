"""Monotonic alignment search between per-token Gaussian statistics and frames.

Lattices are indexed ``L[s, t]``: frame ``s`` scored against token ``t``.
An alignment assigns every frame to one token, never moves backwards, never
skips a token, and gives every token at least one frame.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveSigmaError, ShapeMismatchError, TooFewFramesError


LOG_PREFIX = "[ALIGN]"
HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FrameMatrix:
    frames: np.ndarray  # S x D

    def __post_init__(self) -> None:
        if self.frames.ndim != 2 or self.frames.shape[0] < 1:
            raise ShapeMismatchError(f"frames must be an S x D matrix with S >= 1, got shape {self.frames.shape}")

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])


@dataclass(frozen=True)
class AlignmentPath:
    assign: tuple[int, ...]  # token index per frame
    n_tokens: int

    def __post_init__(self) -> None:
        if not self.assign:
            raise ValueError("an alignment path needs at least one frame")
        if self.assign[0] != 0:
            raise ValueError(f"path must start on token 0, starts on {self.assign[0]}")
        if self.assign[-1] != self.n_tokens - 1:
            raise ValueError(f"path must end on token {self.n_tokens - 1}, ends on {self.assign[-1]}")
        for s in range(1, len(self.assign)):
            step = self.assign[s] - self.assign[s - 1]
            if step not in (0, 1):
                raise ValueError(f"path moves by {step} tokens at frame {s}")

    @property
    def n_frames(self) -> int:
        return len(self.assign)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.assign, dtype=np.int64)


@dataclass(frozen=True)
class DurationVector:
    d: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(count < 1 for count in self.d):
            raise ValueError(f"every token needs at least one frame, got {list(self.d)}")

    @property
    def total(self) -> int:
        return sum(self.d)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.d, dtype=np.int64)


@dataclass(frozen=True)
class AlignmentResult:
    path: AlignmentPath
    durations: DurationVector
    score: float


def _check_stats(mu: np.ndarray, sigma: np.ndarray) -> None:
    if mu.ndim != 2 or mu.shape != sigma.shape:
        raise ShapeMismatchError(f"mu {mu.shape} and sigma {sigma.shape} must be matching T x D matrices")
    if mu.shape[0] < 1:
        raise ShapeMismatchError("statistics need at least one token")


def loglik_lattice(mu: np.ndarray, sigma: np.ndarray, frames: np.ndarray) -> np.ndarray:
    """S x T diagonal-Gaussian log-likelihoods of each frame under each token."""
    _check_stats(mu, sigma)
    FrameMatrix(frames)
    if frames.shape[1] != mu.shape[1]:
        raise ShapeMismatchError(f"frames have width {frames.shape[1]}, statistics have width {mu.shape[1]}")
    if np.any(sigma <= 0):
        raise NonPositiveSigmaError("sigma must be strictly positive")

    residual = frames[:, None, :] - mu[None, :, :]
    per_dim = -np.log(sigma)[None] - HALF_LOG_2PI - residual**2 / (2.0 * sigma[None] ** 2)
    return per_dim.sum(axis=2)


def mas(L: np.ndarray) -> AlignmentPath:
    S, T = L.shape
    if S < T:
        raise TooFewFramesError(S, T)

    Q = np.full((S, T), -np.inf)
    Q[0, 0] = L[0, 0]
    for s in range(1, S):
        previous = Q[s - 1]
        advanced = np.concatenate(([-np.inf], previous[:-1]))
        Q[s] = L[s] + np.maximum(previous, advanced)

    # Backtrack; on ties stay on the current token.
    assign = [T - 1] * S
    t = T - 1
    for s in range(S - 1, 0, -1):
        if t > 0 and Q[s - 1, t - 1] > Q[s - 1, t]:
            t -= 1
        assign[s - 1] = t

    return AlignmentPath(assign=tuple(assign), n_tokens=T)


def path_score(L: np.ndarray, path: AlignmentPath) -> float:
    total = 0.0
    for s, t in enumerate(path.assign):
        total += L[s, t]
    return float(total)


def durations(path: AlignmentPath, n_tokens: int) -> DurationVector:
    counts = np.bincount(path.as_array(), minlength=n_tokens)
    return DurationVector(d=tuple(int(count) for count in counts))


def align(mu: np.ndarray, sigma: np.ndarray, frames: np.ndarray) -> AlignmentResult:
    L = loglik_lattice(mu, sigma, frames)
    path = mas(L)
    result = AlignmentResult(path=path, durations=durations(path, mu.shape[0]), score=path_score(L, path))
    logger.debug(
        "%s Aligned %d frames to %d tokens, log-likelihood %.6f",
        LOG_PREFIX,
        path.n_frames,
        path.n_tokens,
        result.score,
    )
    return result


def expand_stats(stats: np.ndarray, d: DurationVector) -> np.ndarray:
    """Repeat each token's row d[t] times (token rate -> frame rate)."""
    if stats.shape[0] != len(d.d):
        raise ShapeMismatchError(f"{stats.shape[0]} token rows but {len(d.d)} durations")
    return np.repeat(stats, d.as_array(), axis=0)


def synthesize_frames(
    mu: np.ndarray,
    sigma: np.ndarray,
    d: DurationVector,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw frames from the expanded token Gaussians."""
    _check_stats(mu, sigma)
    means = expand_stats(mu, d)
    scales = expand_stats(sigma, d)
    return means + scales * rng.standard_normal(means.shape)

"""Graph encoder: phoneme embedding -> word pooling -> GCN over the syntax
graph -> combine + projection -> broadcast to phonemes -> fusion with the
phoneme embedding -> mean / log-sigma statistics head.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import EmptySpanError, ShapeMismatchError, WordCountMismatchError
from .gcnmath import GcnParams, OutputActivation, gcn_forward, init_weight, seeded_rng
from .syngraph import DependencyParse, GraphKind, SynGraph, build_graph
from .textfront import Utterance


LOG_PREFIX = "[ENCODER]"

logger = logging.getLogger(__name__)

# Public tensor names inside weight containers.
PHONEME_EMBEDDING = "phoneme_embedding"
GCN_W0 = "gcn.W0"
GCN_W1 = "gcn.W1"
COMBINE_W = "combine.W"
COMBINE_B = "combine.b"
STATS_W = "stats.W"
STATS_B = "stats.b"

WEIGHT_NAMES = (PHONEME_EMBEDDING, GCN_W0, GCN_W1, COMBINE_W, COMBINE_B, STATS_W, STATS_B)

OUTPUT_NAMES = ("g_text", "p_text", "mu", "sigma")

# exp stays finite and strictly positive in float64 on this range.
LOG_SIGMA_MIN = -700.0
LOG_SIGMA_MAX = 700.0

GcnRunner = Callable[[np.ndarray, SynGraph, GcnParams], np.ndarray]


@dataclass(frozen=True)
class EncoderDims:
    E: int  # phoneme embedding width
    F: int  # GCN width (hidden and output)
    G: int  # graph embedding width after projection
    D: int  # statistics width

    def __post_init__(self) -> None:
        for name in ("E", "F", "G", "D"):
            if int(getattr(self, name)) <= 0:
                raise ShapeMismatchError(f"dimension {name} must be positive, got {getattr(self, name)}")

    @classmethod
    def parse(cls, text: str) -> EncoderDims:
        parts = [part.strip() for part in str(text).split(",")]
        if len(parts) != 4:
            raise ValueError(f"dims must be E,F,G,D, got {text!r}")
        E, F, G, D = (int(part) for part in parts)
        return cls(E=E, F=F, G=G, D=D)


@dataclass(frozen=True)
class EncoderWeights:
    phoneme_embedding: np.ndarray  # V x E
    gcn: GcnParams  # E -> F -> F, output_activation none
    combine_W: np.ndarray  # (E + F) x G
    combine_b: np.ndarray  # G
    stats_W: np.ndarray  # (G + E) x 2D
    stats_b: np.ndarray  # 2D

    def __post_init__(self) -> None:
        V, E = self.phoneme_embedding.shape
        F = self.gcn.out_dim
        G = self.combine_W.shape[1]
        problems: list[str] = []
        if self.gcn.in_dim != E:
            problems.append(f"{GCN_W0} expects {self.gcn.in_dim} inputs, embedding width is {E}")
        if self.combine_W.shape[0] != E + F:
            problems.append(f"{COMBINE_W} has {self.combine_W.shape[0]} rows, expected E+F={E + F}")
        if self.combine_b.shape != (G,):
            problems.append(f"{COMBINE_B} has shape {self.combine_b.shape}, expected ({G},)")
        if self.stats_W.shape[0] != G + E:
            problems.append(f"{STATS_W} has {self.stats_W.shape[0]} rows, expected G+E={G + E}")
        if self.stats_W.shape[1] % 2 != 0 or self.stats_W.shape[1] == 0:
            problems.append(f"{STATS_W} needs an even, positive column count, got {self.stats_W.shape[1]}")
        if self.stats_b.shape != (self.stats_W.shape[1],):
            problems.append(f"{STATS_B} has shape {self.stats_b.shape}, expected ({self.stats_W.shape[1]},)")
        if problems:
            raise ShapeMismatchError("; ".join(problems))

    @property
    def vocab_size(self) -> int:
        return int(self.phoneme_embedding.shape[0])

    @property
    def dims(self) -> EncoderDims:
        return EncoderDims(
            E=int(self.phoneme_embedding.shape[1]),
            F=self.gcn.out_dim,
            G=int(self.combine_W.shape[1]),
            D=int(self.stats_W.shape[1] // 2),
        )

    def to_tensors(self) -> dict[str, np.ndarray]:
        return {
            PHONEME_EMBEDDING: self.phoneme_embedding,
            GCN_W0: self.gcn.W0,
            GCN_W1: self.gcn.W1,
            COMBINE_W: self.combine_W,
            COMBINE_B: self.combine_b,
            STATS_W: self.stats_W,
            STATS_B: self.stats_b,
        }

    @classmethod
    def from_tensors(cls, tensors: Mapping[str, np.ndarray]) -> EncoderWeights:
        missing = [name for name in WEIGHT_NAMES if name not in tensors]
        if missing:
            raise ShapeMismatchError(f"weights container lacks tensor(s): {', '.join(missing)}")

        def f64(name: str) -> np.ndarray:
            return np.asarray(tensors[name], dtype=np.float64)

        return cls(
            phoneme_embedding=f64(PHONEME_EMBEDDING),
            gcn=GcnParams(W0=f64(GCN_W0), W1=f64(GCN_W1), output_activation=OutputActivation.NONE),
            combine_W=f64(COMBINE_W),
            combine_b=f64(COMBINE_B),
            stats_W=f64(STATS_W),
            stats_b=f64(STATS_B),
        )


@dataclass(frozen=True)
class EncoderOutput:
    g_text: np.ndarray  # T x G
    p_text: np.ndarray  # T x E
    mu: np.ndarray  # T x D
    sigma: np.ndarray  # T x D, strictly positive

    def to_tensors(self, suffix: str = "") -> dict[str, np.ndarray]:
        return {f"{name}{suffix}": getattr(self, name) for name in OUTPUT_NAMES}


def init_encoder_weights(vocab_size: int, dims: EncoderDims, seed: int, zero: bool = False) -> EncoderWeights:
    if vocab_size <= 0:
        raise ShapeMismatchError(f"vocabulary size must be positive, got {vocab_size}")

    E, F, G, D = dims.E, dims.F, dims.G, dims.D
    if zero:
        make = lambda fan_in, fan_out: np.zeros((fan_in, fan_out))  # noqa: E731
    else:
        rng = seeded_rng(seed)
        make = lambda fan_in, fan_out: init_weight(fan_in, fan_out, rng)  # noqa: E731

    # Draw order is part of the seeded contract; do not reorder. Biases start at zero.
    embedding = make(vocab_size, E)
    W0 = make(E, F)
    W1 = make(F, F)
    combine_W = make(E + F, G)
    stats_W = make(G + E, 2 * D)

    return EncoderWeights(
        phoneme_embedding=embedding,
        gcn=GcnParams(W0=W0, W1=W1, output_activation=OutputActivation.NONE),
        combine_W=combine_W,
        combine_b=np.zeros(G),
        stats_W=stats_W,
        stats_b=np.zeros(2 * D),
    )


# ---------------------------------------------------------------------------
# Pipeline stages
# ---------------------------------------------------------------------------


def embed(phoneme_ids: Sequence[int], table: np.ndarray) -> np.ndarray:
    ids = np.asarray(phoneme_ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise ShapeMismatchError(f"phoneme ID outside embedding table of {table.shape[0]} rows")
    return table[ids]


def word_pool(phoneme_features: np.ndarray, spans: Sequence[tuple[int, int]]) -> np.ndarray:
    pooled = np.zeros((len(spans), phoneme_features.shape[1]), dtype=phoneme_features.dtype)
    for index, (start, end) in enumerate(spans):
        if end <= start:
            raise EmptySpanError(f"span {index} [{start}, {end}) is empty")
        if end > phoneme_features.shape[0]:
            raise ShapeMismatchError(f"span {index} ends at {end}, only {phoneme_features.shape[0]} rows")
        pooled[index] = phoneme_features[start:end].mean(axis=0)
    return pooled


def combine(wp_out: np.ndarray, gcn_out: np.ndarray) -> np.ndarray:
    if wp_out.shape[0] != gcn_out.shape[0]:
        raise ShapeMismatchError(f"WP output has {wp_out.shape[0]} rows, GCN output has {gcn_out.shape[0]}")
    return np.concatenate([wp_out, gcn_out], axis=1)


def broadcast_to_phonemes(word_features: np.ndarray, spans: Sequence[tuple[int, int]]) -> np.ndarray:
    lengths = np.array([end - start for start, end in spans], dtype=np.int64)
    return np.repeat(word_features, lengths, axis=0)


def _linear(M: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    if M.shape[1] != W.shape[0]:
        raise ShapeMismatchError(f"input has {M.shape[1]} columns but projection expects {W.shape[0]}")
    return M @ W + b


def stats_head(fused: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project to 2D columns: first D are mu, last D are log sigma."""
    if weights.shape[1] % 2 != 0:
        raise ShapeMismatchError(f"statistics head needs an even column count, got {weights.shape[1]}")
    projected = _linear(fused, weights, bias)
    D = weights.shape[1] // 2
    log_sigma = np.clip(projected[:, D:], LOG_SIGMA_MIN, LOG_SIGMA_MAX)
    return projected[:, :D], np.exp(log_sigma)


def _serial_gcn(X: np.ndarray, graph: SynGraph, params: GcnParams) -> np.ndarray:
    return gcn_forward(X, graph.A_hat, params)


def encode_utterance(
    utterance: Utterance,
    parse: DependencyParse,
    weights: EncoderWeights,
    *,
    graph_kind: GraphKind = GraphKind.SYNTAX,
    gcn_runner: GcnRunner | None = None,
) -> EncoderOutput:
    if parse.n_words != utterance.n_words:
        raise WordCountMismatchError(utterance.n_words, parse.n_words)

    graph = build_graph(parse, graph_kind)
    run_gcn = gcn_runner or _serial_gcn

    p_text = embed(utterance.phoneme_ids, weights.phoneme_embedding)
    wp_out = word_pool(p_text, utterance.spans)
    gcn_out = run_gcn(wp_out, graph, weights.gcn.with_output_activation(OutputActivation.NONE))
    word_embedding = _linear(combine(wp_out, gcn_out), weights.combine_W, weights.combine_b)
    g_text = broadcast_to_phonemes(word_embedding, utterance.spans)
    mu, sigma = stats_head(np.concatenate([g_text, p_text], axis=1), weights.stats_W, weights.stats_b)

    logger.debug(
        "%s Encoded %d words / %d phonemes over %d %s edges",
        LOG_PREFIX,
        utterance.n_words,
        utterance.n_phonemes,
        len(graph.edges),
        GraphKind(graph_kind).value,
    )
    return EncoderOutput(g_text=g_text, p_text=p_text, mu=mu, sigma=sigma)

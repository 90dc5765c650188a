"""Dependency parses and the bidirectional syntax graph built from them.

Parses arrive as CoNLL-U. Each word becomes a graph node; every head link
becomes one undirected edge. Self-connections are added through
``A_tilde = A + I`` and the propagation matrix is the symmetric
normalization ``D^-1/2 A_tilde D^-1/2``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import CyclicParseError, MalformedLineError, MultipleRootsError


LOG_PREFIX = "[SYNGRAPH]"
CONLLU_COLUMNS = 10
PUNCT_RELATION = "punct"

logger = logging.getLogger(__name__)


class GraphKind(str, Enum):
    SYNTAX = "syntax"  # dependency head links
    SEQUENCE = "sequence"  # neighbouring words only


# ---------------------------------------------------------------------------
# Parses
# ---------------------------------------------------------------------------


def validate_heads(heads: tuple[int, ...], *, sentence_no: int | None) -> None:
    n_words = len(heads)
    roots = [index for index, head in enumerate(heads) if head == 0]
    if len(roots) > 1:
        raise MultipleRootsError(sentence_no, len(roots))

    for index, head in enumerate(heads):
        if head < 0 or head > n_words:
            raise ValueError(f"head {head} of word {index + 1} outside [0, {n_words}]")

    # Every word must reach the root; zero roots always implies a cycle.
    reaches_root = [False] * n_words
    for start in range(n_words):
        seen: set[int] = set()
        current = start
        while not reaches_root[current]:
            if current in seen:
                raise CyclicParseError(sentence_no)
            seen.add(current)
            head = heads[current]
            if head == 0:
                break
            current = head - 1
        for index in seen:
            reaches_root[index] = True


@dataclass(frozen=True)
class DependencyParse:
    heads: tuple[int, ...]
    relations: tuple[str, ...]
    forms: tuple[str, ...]

    def __post_init__(self) -> None:
        if not (len(self.heads) == len(self.relations) == len(self.forms)):
            raise ValueError("heads, relations and forms must have equal length")
        if not self.heads:
            raise ValueError("a parse needs at least one word")
        validate_heads(self.heads, sentence_no=None)

    @property
    def n_words(self) -> int:
        return len(self.heads)

    @property
    def root(self) -> int:
        """0-based index of the root word."""
        return self.heads.index(0)

    def without_punctuation(self) -> DependencyParse:
        keep = [index for index, relation in enumerate(self.relations) if relation != PUNCT_RELATION]
        if len(keep) == len(self.heads) or not keep:
            return self

        new_position = {old: new for new, old in enumerate(keep)}

        def kept_ancestor(index: int) -> int | None:
            head = self.heads[index]
            while head != 0 and (head - 1) not in new_position:
                head = self.heads[head - 1]
            return None if head == 0 else head - 1

        root = self.root
        promoted: int | None = None
        if root not in new_position:
            # First kept word whose nearest kept ancestor is "none" takes over.
            promoted = next(old for old in keep if kept_ancestor(old) is None)

        heads: list[int] = []
        for old in keep:
            if old == promoted:
                heads.append(0)
                continue
            ancestor = kept_ancestor(old)
            if ancestor is None:
                ancestor = promoted if old != root else None
            heads.append(0 if ancestor is None else new_position[ancestor] + 1)

        return DependencyParse(
            heads=tuple(heads),
            relations=tuple(self.relations[old] for old in keep),
            forms=tuple(self.forms[old] for old in keep),
        )


def _finish_sentence(rows: list[tuple[int, int, str, str, int]], sentence_no: int) -> DependencyParse:
    n_words = len(rows)
    for _, head, _, _, line_no in rows:
        if head > n_words:
            raise MalformedLineError(line_no, f"head {head} exceeds sentence length {n_words}")

    heads = tuple(row[1] for row in rows)
    validate_heads(heads, sentence_no=sentence_no)
    return DependencyParse(
        heads=heads,
        relations=tuple(row[3] for row in rows),
        forms=tuple(row[2] for row in rows),
    )


def parse_conllu(text: str) -> list[DependencyParse]:
    parses: list[DependencyParse] = []
    rows: list[tuple[int, int, str, str, int]] = []

    def flush() -> None:
        if rows:
            parses.append(_finish_sentence(rows, sentence_no=len(parses) + 1))
            rows.clear()

    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.rstrip("\r\n")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            continue

        columns = line.split("\t")
        if len(columns) != CONLLU_COLUMNS:
            raise MalformedLineError(line_no, f"expected {CONLLU_COLUMNS} tab-separated columns, got {len(columns)}")

        token_id = columns[0]
        if "-" in token_id or "." in token_id:
            # Multiword-token ranges and empty nodes carry no head of their own.
            continue

        try:
            word_id = int(token_id)
            head = int(columns[6])
        except ValueError:
            raise MalformedLineError(line_no, f"non-integer ID {columns[0]!r} or HEAD {columns[6]!r}") from None

        if word_id != len(rows) + 1:
            raise MalformedLineError(line_no, f"word ID {word_id} out of sequence, expected {len(rows) + 1}")
        if head < 0:
            raise MalformedLineError(line_no, f"negative head {head}")

        rows.append((word_id, head, columns[1], columns[7], line_no))

    flush()
    logger.debug("%s Parsed %d sentence(s)", LOG_PREFIX, len(parses))
    return parses


def load_conllu(path: str | Path) -> list[DependencyParse]:
    data = Path(path).read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        line_no = data.count(b"\n", 0, e.start) + 1
        raise MalformedLineError(line_no, f"invalid UTF-8 byte 0x{data[e.start]:02x}") from e
    return parse_conllu(text)


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def normalization_values(degrees: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Entries of D^-1/2 A_tilde D^-1/2 for the given (row, col) pairs of A_tilde.

    Dense and sparse builders both go through here so their values agree bit for bit.
    """
    return 1.0 / np.sqrt(degrees[rows] * degrees[cols])


@dataclass(frozen=True)
class SynGraph:
    n: int
    edges: tuple[tuple[int, int], ...]
    A: np.ndarray
    A_tilde: np.ndarray
    D_tilde: np.ndarray
    A_hat: np.ndarray

    @property
    def degrees(self) -> np.ndarray:
        """Diagonal of D_tilde (self-connection included)."""
        return np.diag(self.D_tilde)


@dataclass(frozen=True)
class LaplacianMatrix:
    delta: np.ndarray


def graph_from_edges(n: int, edges: Iterable[tuple[int, int]]) -> SynGraph:
    if n < 1:
        raise ValueError("a graph needs at least one node")

    pairs: set[tuple[int, int]] = set()
    for u, v in edges:
        if u == v:
            continue
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u}, {v}) outside node range [0, {n})")
        pairs.add((min(u, v), max(u, v)))
    ordered = tuple(sorted(pairs))

    adjacency = np.zeros((n, n), dtype=np.int64)
    for u, v in ordered:
        adjacency[u, v] = 1
        adjacency[v, u] = 1

    a_tilde_int = adjacency + np.eye(n, dtype=np.int64)
    degrees = a_tilde_int.sum(axis=1).astype(np.float64)

    rows, cols = np.nonzero(a_tilde_int)
    a_hat = np.zeros((n, n), dtype=np.float64)
    a_hat[rows, cols] = normalization_values(degrees, rows, cols)

    return SynGraph(
        n=n,
        edges=ordered,
        A=_readonly(adjacency.astype(np.float64)),
        A_tilde=_readonly(a_tilde_int.astype(np.float64)),
        D_tilde=_readonly(np.diag(degrees)),
        A_hat=_readonly(a_hat),
    )


def build_syntax_graph(parse: DependencyParse) -> SynGraph:
    edges = [(index, head - 1) for index, head in enumerate(parse.heads) if head != 0]
    return graph_from_edges(parse.n_words, edges)


def build_sequence_graph(n_words: int) -> SynGraph:
    return graph_from_edges(n_words, [(index, index + 1) for index in range(n_words - 1)])


def build_graph(parse: DependencyParse, kind: GraphKind) -> SynGraph:
    if GraphKind(kind) is GraphKind.SEQUENCE:
        return build_sequence_graph(parse.n_words)
    return build_syntax_graph(parse)


def normalized_adjacency(graph: SynGraph) -> np.ndarray:
    return graph.A_hat.copy()


def unnormalized_laplacian(graph: SynGraph) -> LaplacianMatrix:
    adjacency = graph.A.astype(np.int64)
    delta = np.diag(adjacency.sum(axis=1)) - adjacency
    return LaplacianMatrix(delta=_readonly(delta.astype(np.float64)))

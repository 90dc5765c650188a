"""GCN numerics: layer propagation, the two-layer forward model, mean
aggregation, the Laplacian smoothness penalty and analytic gradients.

Row-vector convention throughout: node features are rows, so a layer is
``act(A_hat @ H @ W)`` with ``W`` of shape (in, out).

``propagate`` and ``transform`` fix the floating-point accumulation order
per output row (ascending neighbour index, then ascending input column).
A row's result therefore never depends on which other rows are computed
alongside it, and the tile engine reproduces the serial result exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse

from .errors import ShapeMismatchError
from .syngraph import SynGraph


class HiddenActivation(str, Enum):
    RELU = "relu"


class OutputActivation(str, Enum):
    SOFTMAX_ROWS = "softmax_rows"
    NONE = "none"


Activation = HiddenActivation | OutputActivation


@dataclass(frozen=True)
class GcnParams:
    W0: np.ndarray  # C x H, input-to-hidden
    W1: np.ndarray  # H x F, hidden-to-output
    hidden_activation: HiddenActivation = HiddenActivation.RELU
    output_activation: OutputActivation = OutputActivation.SOFTMAX_ROWS

    def __post_init__(self) -> None:
        if self.W0.ndim != 2 or self.W1.ndim != 2:
            raise ShapeMismatchError("GCN weights must be matrices")
        if self.W0.shape[1] != self.W1.shape[0]:
            raise ShapeMismatchError(
                f"W0 is {self.W0.shape[0]}x{self.W0.shape[1]} but W1 is {self.W1.shape[0]}x{self.W1.shape[1]}"
            )
        object.__setattr__(self, "hidden_activation", HiddenActivation(self.hidden_activation))
        object.__setattr__(self, "output_activation", OutputActivation(self.output_activation))

    @property
    def in_dim(self) -> int:
        return int(self.W0.shape[0])

    @property
    def hidden_dim(self) -> int:
        return int(self.W0.shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.W1.shape[1])

    def with_output_activation(self, activation: OutputActivation) -> GcnParams:
        return GcnParams(
            W0=self.W0,
            W1=self.W1,
            hidden_activation=self.hidden_activation,
            output_activation=OutputActivation(activation),
        )

    def astype(self, dtype: np.dtype | type) -> GcnParams:
        return GcnParams(
            W0=self.W0.astype(dtype),
            W1=self.W1.astype(dtype),
            hidden_activation=self.hidden_activation,
            output_activation=self.output_activation,
        )


@dataclass(frozen=True)
class RegConfig:
    lam: float
    base_loss: float = 0.0

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")


@dataclass(frozen=True)
class GcnGradients:
    W0: np.ndarray
    W1: np.ndarray
    X: np.ndarray


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------


def seeded_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


def init_weight(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)]."""
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init_gcn_params(
    in_dim: int,
    hidden_dim: int,
    out_dim: int,
    rng: np.random.Generator,
    output_activation: OutputActivation = OutputActivation.SOFTMAX_ROWS,
) -> GcnParams:
    return GcnParams(
        W0=init_weight(in_dim, hidden_dim, rng),
        W1=init_weight(hidden_dim, out_dim, rng),
        output_activation=output_activation,
    )


# ---------------------------------------------------------------------------
# Deterministic kernels
# ---------------------------------------------------------------------------


def as_propagation_matrix(A_hat: np.ndarray | scipy.sparse.spmatrix) -> scipy.sparse.csr_matrix:
    matrix = scipy.sparse.csr_matrix(A_hat, dtype=np.float64)
    if matrix.shape[0] != matrix.shape[1]:
        raise ShapeMismatchError(f"propagation matrix must be square, got {matrix.shape}")
    matrix.sum_duplicates()
    matrix.sort_indices()
    return matrix


def propagate(
    matrix: scipy.sparse.csr_matrix,
    H: np.ndarray,
    rows: np.ndarray | None = None,
) -> np.ndarray:
    """Rows of ``matrix @ H``, each accumulated in ascending column order."""
    if matrix.shape[1] != H.shape[0]:
        raise ShapeMismatchError(f"matrix has {matrix.shape[1]} columns but H has {H.shape[0]} rows")

    if rows is None:
        rows = np.arange(matrix.shape[0])
    starts = matrix.indptr[rows]
    counts = matrix.indptr[rows + 1] - starts
    values = matrix.data.astype(H.dtype, copy=False)

    out = np.zeros((len(rows), H.shape[1]), dtype=H.dtype)
    for slot in range(int(counts.max(initial=0))):
        active = np.flatnonzero(counts > slot)
        positions = starts[active] + slot
        out[active] += values[positions, None] * H[matrix.indices[positions]]
    return out


def transform(H: np.ndarray, W: np.ndarray) -> np.ndarray:
    """``H @ W`` accumulated column by column of ``H``."""
    if H.shape[1] != W.shape[0]:
        raise ShapeMismatchError(f"features have {H.shape[1]} columns but W has {W.shape[0]} rows")

    W = W.astype(H.dtype, copy=False)
    out = np.zeros((H.shape[0], W.shape[1]), dtype=H.dtype)
    for k in range(W.shape[0]):
        out += H[:, k, None] * W[k]
    return out


def relu(M: np.ndarray) -> np.ndarray:
    return np.maximum(M, 0)


def softmax_rows(M: np.ndarray) -> np.ndarray:
    shifted = M - M.max(axis=1, keepdims=True)
    exps = np.exp(shifted)
    # Column-ordered sum keeps each row's normaliser independent of the batch shape.
    total = np.zeros(M.shape[0], dtype=exps.dtype)
    for k in range(M.shape[1]):
        total += exps[:, k]
    return exps / total[:, None]


def apply_activation(M: np.ndarray, activation: Activation | str) -> np.ndarray:
    # str-valued enums compare equal to their plain string values.
    if activation == HiddenActivation.RELU:
        return relu(M)
    if activation == OutputActivation.SOFTMAX_ROWS:
        return softmax_rows(M)
    if activation == OutputActivation.NONE:
        return M
    raise ValueError(f"unknown activation {activation!r}")


# ---------------------------------------------------------------------------
# Propagation rules
# ---------------------------------------------------------------------------


def _check_features(H: np.ndarray, n: int, name: str) -> None:
    if H.ndim != 2:
        raise ShapeMismatchError(f"{name} must be a matrix, got {H.ndim} dimension(s)")
    if H.shape[0] != n:
        raise ShapeMismatchError(f"{name} has {H.shape[0]} rows but the graph has {n} nodes")


def gcn_layer(
    H_in: np.ndarray,
    A_hat: np.ndarray | scipy.sparse.spmatrix,
    W: np.ndarray,
    activation: Activation | str,
) -> np.ndarray:
    matrix = as_propagation_matrix(A_hat)
    _check_features(H_in, matrix.shape[0], "H_in")
    return apply_activation(transform(propagate(matrix, H_in), W), activation)


def gcn_forward(
    X: np.ndarray,
    A_hat: np.ndarray | scipy.sparse.spmatrix,
    params: GcnParams,
) -> np.ndarray:
    """Z = out_act(A_hat relu(A_hat X W0) W1)."""
    matrix = as_propagation_matrix(A_hat)
    _check_features(X, matrix.shape[0], "X")
    if X.shape[1] != params.in_dim:
        raise ShapeMismatchError(f"X has {X.shape[1]} columns but W0 expects {params.in_dim}")

    hidden = apply_activation(transform(propagate(matrix, X), params.W0), params.hidden_activation)
    return apply_activation(transform(propagate(matrix, hidden), params.W1), params.output_activation)


def mean_aggregate_layer(H_in: np.ndarray, graph: SynGraph, W: np.ndarray) -> np.ndarray:
    """h_v = relu(W . mean of h_u over N(v)), with v itself in N(v)."""
    _check_features(H_in, graph.n, "H_in")
    mean_matrix = scipy.sparse.csr_matrix(graph.A_tilde / graph.degrees[:, None])
    return relu(transform(propagate(as_propagation_matrix(mean_matrix), H_in), W))


# ---------------------------------------------------------------------------
# Laplacian regularization
# ---------------------------------------------------------------------------


def _check_adjacency(F_out: np.ndarray, A: np.ndarray) -> np.ndarray:
    F = F_out[:, None] if F_out.ndim == 1 else F_out
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeMismatchError(f"adjacency must be square, got {A.shape}")
    if F.shape[0] != A.shape[0]:
        raise ShapeMismatchError(f"F_out has {F.shape[0]} rows but A has {A.shape[0]} nodes")
    return F


def laplacian_penalty(F_out: np.ndarray, A: np.ndarray, cfg: RegConfig) -> tuple[float, float]:
    """Return (total, penalty) with penalty summed over ordered pairs (i, j)."""
    F = _check_adjacency(F_out, A)
    rows, cols = np.nonzero(A)
    differences = F[rows] - F[cols]
    penalty = float(np.sum(A[rows, cols] * np.sum(differences * differences, axis=1)))
    return cfg.base_loss + cfg.lam * penalty, penalty


def laplacian_quadratic_form(F_out: np.ndarray, delta: np.ndarray) -> float:
    """trace(F^T delta F); half the ordered-pair penalty for symmetric A."""
    F = _check_adjacency(F_out, delta)
    return float(np.trace(F.T @ delta @ F))


def laplacian_penalty_gradient(F_out: np.ndarray, A: np.ndarray, cfg: RegConfig) -> np.ndarray:
    """d total / d F_out = 4 lambda (D - A) F for symmetric A."""
    F = _check_adjacency(F_out, A)
    delta = np.diag(A.sum(axis=1)) - A
    gradient = 4.0 * cfg.lam * (delta @ F)
    return gradient[:, 0] if F_out.ndim == 1 else gradient


# ---------------------------------------------------------------------------
# Gradients
# ---------------------------------------------------------------------------


def gcn_gradients(
    X: np.ndarray,
    A_hat: np.ndarray | scipy.sparse.spmatrix,
    params: GcnParams,
    upstream: np.ndarray,
) -> GcnGradients:
    """Reverse-mode gradients of sum(upstream * gcn_forward(X, A_hat, params))."""
    P = as_propagation_matrix(A_hat).toarray()
    _check_features(X, P.shape[0], "X")
    if X.shape[1] != params.in_dim:
        raise ShapeMismatchError(f"X has {X.shape[1]} columns but W0 expects {params.in_dim}")
    if upstream.shape != (P.shape[0], params.out_dim):
        raise ShapeMismatchError(f"upstream must be {P.shape[0]}x{params.out_dim}, got {upstream.shape}")

    S0 = P @ X
    U0 = S0 @ params.W0
    H1 = relu(U0)
    S1 = P @ H1
    U1 = S1 @ params.W1

    if params.output_activation is OutputActivation.SOFTMAX_ROWS:
        Z = softmax_rows(U1)
        dU1 = Z * (upstream - np.sum(upstream * Z, axis=1, keepdims=True))
    else:
        dU1 = upstream

    dW1 = S1.T @ dU1
    dH1 = P.T @ (dU1 @ params.W1.T)
    dU0 = dH1 * (U0 > 0)
    dW0 = S0.T @ dU0
    dX = P.T @ (dU0 @ params.W0.T)
    return GcnGradients(W0=dW0, W1=dW1, X=dX)

"""Analytic GCN gradients against central finite differences."""

from __future__ import annotations

from typing import Callable

import numpy as np
import pytest

from scripts.graphenc.errors import ShapeMismatchError
from scripts.graphenc.gcnmath import (
    GcnParams,
    OutputActivation,
    gcn_forward,
    gcn_gradients,
    init_gcn_params,
    seeded_rng,
)
from scripts.graphenc.syngraph import graph_from_edges


H = 1e-5
# Smallest |pre-activation| allowed, so a step of H never crosses the ReLU kink.
KINK_MARGIN = 1e-3


def close(analytic: float, numeric: float) -> bool:
    return abs(analytic - numeric) <= 1e-4 * max(abs(analytic), abs(numeric), 1e-2)


def numeric_gradient(loss: Callable[[np.ndarray], float], point: np.ndarray) -> np.ndarray:
    gradient = np.zeros_like(point)
    for index in np.ndindex(point.shape):
        plus, minus = point.copy(), point.copy()
        plus[index] += H
        minus[index] -= H
        gradient[index] = (loss(plus) - loss(minus)) / (2 * H)
    return gradient


def smooth_instance(seed: int, activation: OutputActivation):
    """Random small graph and parameters whose hidden pre-activations stay clear of zero."""
    rng = seeded_rng(seed)
    while True:
        n = int(rng.integers(2, 8))
        edges = [(int(u), int(v)) for u, v in rng.integers(0, n, size=(n + 1, 2))]
        A_hat = graph_from_edges(n, edges).A_hat
        X = rng.standard_normal((n, 3))
        params = init_gcn_params(3, 4, 3, rng, output_activation=activation)
        upstream = rng.standard_normal((n, 3))
        if np.min(np.abs(A_hat @ X @ params.W0)) > KINK_MARGIN:
            return A_hat, X, params, upstream


@pytest.mark.parametrize("activation", [OutputActivation.SOFTMAX_ROWS, OutputActivation.NONE])
def test_gradients_match_finite_differences(activation: OutputActivation) -> None:
    for seed in range(20):
        A_hat, X, params, upstream = smooth_instance(seed, activation)
        grads = gcn_gradients(X, A_hat, params, upstream)

        def loss_w0(W0: np.ndarray) -> float:
            swapped = GcnParams(W0=W0, W1=params.W1, output_activation=activation)
            return float(np.sum(upstream * gcn_forward(X, A_hat, swapped)))

        def loss_w1(W1: np.ndarray) -> float:
            swapped = GcnParams(W0=params.W0, W1=W1, output_activation=activation)
            return float(np.sum(upstream * gcn_forward(X, A_hat, swapped)))

        def loss_x(X_: np.ndarray) -> float:
            return float(np.sum(upstream * gcn_forward(X_, A_hat, params)))

        for analytic, loss, point in (
            (grads.W0, loss_w0, params.W0),
            (grads.W1, loss_w1, params.W1),
            (grads.X, loss_x, X),
        ):
            numeric = numeric_gradient(loss, point)
            assert analytic.shape == point.shape
            for index in np.ndindex(point.shape):
                assert close(analytic[index], numeric[index]), (seed, index, analytic[index], numeric[index])


def test_upstream_shape_checked() -> None:
    A_hat, X, params, _ = smooth_instance(0, OutputActivation.SOFTMAX_ROWS)
    with pytest.raises(ShapeMismatchError):
        gcn_gradients(X, A_hat, params, np.zeros((X.shape[0], params.out_dim + 1)))


@pytest.mark.parametrize("activation", [OutputActivation.SOFTMAX_ROWS, OutputActivation.NONE])
def test_zero_upstream_gives_zero_gradients(activation: OutputActivation) -> None:
    A_hat, X, params, _ = smooth_instance(4, activation)
    grads = gcn_gradients(X, A_hat, params, np.zeros((X.shape[0], params.out_dim)))
    np.testing.assert_array_equal(grads.W0, np.zeros_like(params.W0))
    np.testing.assert_array_equal(grads.W1, np.zeros_like(params.W1))
    np.testing.assert_array_equal(grads.X, np.zeros_like(X))


def test_zero_features_give_zero_weight_gradients() -> None:
    A_hat, X, params, upstream = smooth_instance(5, OutputActivation.SOFTMAX_ROWS)
    grads = gcn_gradients(np.zeros_like(X), A_hat, params, upstream)
    np.testing.assert_array_equal(grads.W1, np.zeros_like(params.W1))
    np.testing.assert_array_equal(grads.W0, np.zeros_like(params.W0))

from __future__ import annotations

from itertools import combinations

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, strategies as st

from scripts.graphenc.align import (
    AlignmentPath,
    DurationVector,
    align,
    durations,
    expand_stats,
    loglik_lattice,
    mas,
    path_score,
    synthesize_frames,
)
from scripts.graphenc.errors import NonPositiveSigmaError, ShapeMismatchError, TooFewFramesError
from scripts.graphenc.gcnmath import seeded_rng


def all_paths(S: int, T: int):
    """Every monotonic path, from the frames at which the token index steps up."""
    for steps in combinations(range(1, S), T - 1):
        yield tuple(sum(1 for step in steps if step <= s) for s in range(S))


def brute_force_best(L: np.ndarray) -> float:
    S, T = L.shape
    best = -np.inf
    for assign in all_paths(S, T):
        total = 0.0
        for s, t in enumerate(assign):
            total += L[s, t]
        best = max(best, total)
    return best


def test_loglik_of_exact_match() -> None:
    L = loglik_lattice(np.zeros((1, 1)), np.ones((1, 1)), np.zeros((1, 1)))
    assert L.shape == (1, 1)
    assert L[0, 0] == pytest.approx(-0.5 * np.log(2 * np.pi), abs=1e-15)

    wider = loglik_lattice(np.zeros((1, 1)), np.full((1, 1), 2.0), np.zeros((1, 1)))
    assert L[0, 0] - wider[0, 0] == pytest.approx(np.log(2.0), abs=1e-15)


def test_loglik_matches_scipy() -> None:
    rng = seeded_rng(3)
    mu = rng.standard_normal((3, 2))
    sigma = rng.uniform(0.2, 2.0, size=(3, 2))
    frames = rng.standard_normal((5, 2))

    L = loglik_lattice(mu, sigma, frames)
    expected = scipy.stats.norm.logpdf(frames[:, None, :], loc=mu[None], scale=sigma[None]).sum(axis=2)
    assert L.shape == (5, 3)
    np.testing.assert_allclose(L, expected, rtol=0, atol=1e-12)


def test_loglik_input_errors() -> None:
    with pytest.raises(NonPositiveSigmaError):
        loglik_lattice(np.zeros((2, 1)), np.array([[1.0], [0.0]]), np.zeros((3, 1)))
    with pytest.raises(ShapeMismatchError):
        loglik_lattice(np.zeros((2, 1)), np.ones((2, 2)), np.zeros((3, 1)))
    with pytest.raises(ShapeMismatchError):
        loglik_lattice(np.zeros((2, 1)), np.ones((2, 1)), np.zeros((3, 2)))


def test_mas_small_examples() -> None:
    L = np.array([[0.0, -5.0], [-1.0, 0.0], [-2.0, 0.0]])
    assert mas(L).assign == (0, 1, 1)

    assert mas(np.zeros((4, 4))).assign == (0, 1, 2, 3)
    assert mas(np.zeros((5, 1))).assign == (0, 0, 0, 0, 0)
    # Ties keep the later token.
    assert mas(np.zeros((3, 2))).assign == (0, 1, 1)


def test_too_few_frames() -> None:
    with pytest.raises(TooFewFramesError) as excinfo:
        mas(np.zeros((2, 3)))
    assert str(excinfo.value) == "frames fewer than tokens"
    assert excinfo.value.format() == "[align] frames fewer than tokens"


def test_mas_is_optimal_against_enumeration() -> None:
    rng = seeded_rng(10)
    for _ in range(200):
        S = int(rng.integers(1, 9))
        T = int(rng.integers(1, min(S, 5) + 1))
        L = rng.normal(scale=3.0, size=(S, T))

        path = mas(L)
        assert abs(path_score(L, path) - brute_force_best(L)) <= 1e-12
        d = durations(path, T)
        assert d.total == S
        assert min(d.d) >= 1


def test_mas_ignores_constant_shift() -> None:
    rng = seeded_rng(12)
    for _ in range(50):
        S = int(rng.integers(2, 12))
        T = int(rng.integers(1, S + 1))
        # Quarter-integers keep every shifted path score exact.
        L = rng.integers(-40, 40, size=(S, T)) / 4.0
        for shift in (3.0, -2.5):
            assert mas(L + shift) == mas(L)


@given(
    st.integers(1, 12),
    st.integers(1, 12),
    st.integers(0, 2**32 - 1),
)
def test_mas_path_is_always_valid(a: int, b: int, seed: int) -> None:
    S, T = max(a, b), min(a, b)
    L = seeded_rng(seed).normal(size=(S, T))
    path = mas(L)
    assert path.n_frames == S
    assert path.n_tokens == T
    assert durations(path, T).total == S


def test_path_and_duration_validation() -> None:
    with pytest.raises(ValueError):
        AlignmentPath(assign=(1, 1), n_tokens=2)
    with pytest.raises(ValueError):
        AlignmentPath(assign=(0, 2), n_tokens=3)
    with pytest.raises(ValueError):
        AlignmentPath(assign=(0, 0), n_tokens=2)
    with pytest.raises(ValueError):
        DurationVector(d=(2, 0, 1))

    path = AlignmentPath(assign=(0, 0, 1, 2, 2, 2), n_tokens=3)
    assert durations(path, 3) == DurationVector(d=(2, 1, 3))
    assert path_score(np.arange(18.0).reshape(6, 3), path) == 0.0 + 3.0 + 7.0 + 11.0 + 14.0 + 17.0


def test_expand_stats() -> None:
    stats = np.array([[1.0], [2.0], [3.0]])
    np.testing.assert_array_equal(expand_stats(stats, DurationVector(d=(1, 2, 1))), [[1.0], [2.0], [2.0], [3.0]])
    with pytest.raises(ShapeMismatchError):
        expand_stats(stats, DurationVector(d=(1, 1)))


def test_align_recovers_synthetic_durations() -> None:
    mu = np.array([[0.0, 0.0], [10.0, -10.0], [20.0, 5.0]])
    sigma = np.full((3, 2), 0.01)
    d = DurationVector(d=(2, 3, 1))
    frames = synthesize_frames(mu, sigma, d, seeded_rng(99))

    assert frames.shape == (6, 2)
    result = align(mu, sigma, frames)
    assert result.durations == d
    assert result.path.assign == (0, 0, 1, 1, 1, 2)
    assert result.score == path_score(loglik_lattice(mu, sigma, frames), result.path)


def test_align_single_token() -> None:
    result = align(np.zeros((1, 1)), np.ones((1, 1)), np.zeros((7, 1)))
    assert result.durations == DurationVector(d=(7,))
    assert result.score == pytest.approx(-7 * 0.5 * np.log(2 * np.pi), abs=1e-12)

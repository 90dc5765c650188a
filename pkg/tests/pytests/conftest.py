from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from scripts.graphenc.gcnmath import seeded_rng


FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("ci", max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


def pytest_configure() -> None:
    # Allow tests to import `scripts.*` as a package.
    repo_root = Path(__file__).parents[2]
    sys.path.append(str(repo_root))


def random_heads(n_words: int, rng: np.random.Generator) -> tuple[int, ...]:
    """A random valid dependency tree: a random root, every other word hangs off an earlier-placed word."""
    order = rng.permutation(n_words)
    heads = [0] * n_words
    for position in range(1, n_words):
        parent = order[rng.integers(0, position)]
        heads[order[position]] = int(parent) + 1
    return tuple(heads)


def conllu_block(forms: list[str], heads: tuple[int, ...], relations: list[str] | None = None) -> str:
    relations = relations or ["root" if head == 0 else "dep" for head in heads]
    lines = []
    for index, (form, head, relation) in enumerate(zip(forms, heads, relations), start=1):
        lines.append("\t".join([str(index), form, form, "X", "_", "_", str(head), relation, "_", "_"]))
    return "\n".join(lines) + "\n"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def lexicon_path() -> Path:
    return FIXTURES / "lexicon.tsv"


@pytest.fixture
def corpus_path() -> Path:
    return FIXTURES / "corpus.conllu"


@pytest.fixture(scope="session")
def random_corpus() -> str:
    """50 seeded random sentences of 1-12 lowercase words."""
    rng = seeded_rng(2024)
    letters = np.array(list("abcdefghijklmnopqrstuvwxyz"))
    blocks = []
    for sentence in range(50):
        n_words = int(rng.integers(1, 13))
        forms = ["".join(rng.choice(letters, size=int(rng.integers(1, 7)))) for _ in range(n_words)]
        blocks.append(f"# sent_id = {sentence + 1}\n" + conllu_block(forms, random_heads(n_words, rng)))
    return "\n".join(blocks)

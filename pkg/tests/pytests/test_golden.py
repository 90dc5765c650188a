"""Byte-level reference containers for the zero and seeded networks."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from scripts.graphenc.cli import main
from scripts.graphenc.tensorio import load_tensors


def test_zero_weights_match_reference(tmp_path: Path, lexicon_path: Path, fixtures_dir: Path) -> None:
    out = tmp_path / "w.fgt"
    argv = ["init-weights", "--lexicon", str(lexicon_path), "--dims", "2,2,2,1", "--zero-init", "--out", str(out)]
    assert main(argv) == 0
    assert out.read_bytes() == (fixtures_dir / "golden" / "weights_zero_2221.fgt").read_bytes()


def test_zero_network_encoding_matches_reference(tmp_path: Path, fixtures_dir: Path) -> None:
    out = tmp_path / "enc.fgt"
    argv = [
        "encode",
        "--lexicon", str(fixtures_dir / "lexicon.tsv"),
        "--conllu", str(fixtures_dir / "hello.conllu"),
        "--weights", str(fixtures_dir / "golden" / "weights_zero_2221.fgt"),
        "--out", str(out),
    ]
    assert main(argv) == 0
    assert out.read_bytes() == (fixtures_dir / "golden" / "encode_hello_zero_2221.fgt").read_bytes()


def test_seeded_weights_match_reference(tmp_path: Path, lexicon_path: Path, fixtures_dir: Path) -> None:
    out = tmp_path / "w.fgt"
    argv = ["init-weights", "--lexicon", str(lexicon_path), "--dims", "2,2,2,1", "--seed", "12345", "--out", str(out)]
    assert main(argv) == 0
    assert out.read_bytes() == (fixtures_dir / "golden" / "weights_seed12345_2221.fgt").read_bytes()

    # first draw of seed 12345 is 0.22733602246716966, scaled to U(-b, b) with b = 1/sqrt(33)
    bound = 1.0 / np.sqrt(33)
    first = load_tensors(out)["phoneme_embedding"][0, 0]
    assert first == pytest.approx(-bound + 2 * bound * 0.22733602246716966, abs=1e-15)


def test_seeded_pipeline_is_reproducible(tmp_path: Path, lexicon_path: Path, corpus_path: Path) -> None:
    outputs = []
    for run in range(2):
        weights = tmp_path / f"w{run}.fgt"
        encoded = tmp_path / f"enc{run}.fgt"
        assert main(["init-weights", "--lexicon", str(lexicon_path), "--seed", "12345", "--out", str(weights)]) == 0
        argv = ["encode", "--lexicon", str(lexicon_path), "--conllu", str(corpus_path), "--weights", str(weights), "--out", str(encoded)]
        assert main(argv) == 0
        outputs.append((weights.read_bytes(), encoded.read_bytes()))
    assert outputs[0] == outputs[1]

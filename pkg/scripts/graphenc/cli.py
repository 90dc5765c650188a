#!/usr/bin/env python3
"""graphenc command line.

Usage:
  python -m scripts.graphenc init-weights --lexicon lex.tsv --dims 8,8,8,4 --seed 7 --out weights.fgt
  python -m scripts.graphenc encode --lexicon lex.tsv --conllu corpus.conllu --weights weights.fgt --out enc.fgt
  python -m scripts.graphenc align --stats enc.fgt --frames frames.fgt --out align.fgt
  python -m scripts.graphenc bench --nodes 100000 --degree 8 --workers 1,8

Exit codes:
- 0 success
- 1 domain error (diagnostic names the failing stage) or unreadable input
- 2 usage / configuration error
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

import numpy as np

from .align import align
from .bsp import bench, make_gcn_runner
from .config import CliConfig, ConfigValidationError, Subcommand, load_cli_config
from .encoder import EncoderDims, EncoderWeights, encode_utterance, init_encoder_weights
from .errors import GraphEncError, ShapeMismatchError
from .syngraph import GraphKind, load_conllu
from .tensorio import load_tensors, save_tensors
from .textfront import build_utterance, load_lexicon, utterance_from_forms


LOG_PREFIX = "[CLI]"

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def run_encode(config: CliConfig) -> int:
    lexicon = load_lexicon(config.lexicon)
    parses = load_conllu(config.conllu)
    weights = EncoderWeights.from_tensors(load_tensors(config.weights))

    if config.text is not None and len(parses) != 1:
        raise ConfigValidationError(
            context=Subcommand.ENCODE.value,
            problems=[f"--text needs a single-sentence CoNLL-U file, got {len(parses)} sentences"],
        )

    runner = None
    if config.workers is not None:
        runner = make_gcn_runner(config.tiles, config.workers[0], config.kernel, config.tile_memory_bytes)

    tensors: dict[str, np.ndarray] = {}
    for index, parse in enumerate(parses):
        if not config.keep_punct:
            parse = parse.without_punctuation()
        if config.text is not None:
            utterance = build_utterance(config.text, lexicon)
        else:
            utterance = utterance_from_forms(parse.forms, lexicon)

        output = encode_utterance(
            utterance,
            parse,
            weights,
            graph_kind=GraphKind(config.graph),
            gcn_runner=runner,
        )
        tensors.update(output.to_tensors(f".{index}"))

    save_tensors(config.out, tensors)
    logger.info("%s Encoded %d sentence(s) into %s", LOG_PREFIX, len(parses), config.out)
    return 0


def _pick(tensors: dict[str, np.ndarray], name: str, sentence: int, source: Path) -> np.ndarray:
    for candidate in (f"{name}.{sentence}", name):
        if candidate in tensors:
            return tensors[candidate]
    raise ShapeMismatchError(f"{source} has no tensor {name}.{sentence} or {name}")


def run_align(config: CliConfig) -> int:
    stats = load_tensors(config.stats)
    mu = _pick(stats, "mu", config.sentence, config.stats)
    sigma = _pick(stats, "sigma", config.sentence, config.stats)

    frame_tensors = load_tensors(config.frames)
    if "frames" not in frame_tensors and len(frame_tensors) == 1:
        frames = next(iter(frame_tensors.values()))
    else:
        frames = _pick(frame_tensors, "frames", config.sentence, config.frames)

    result = align(mu, sigma, np.asarray(frames, dtype=np.float64))
    save_tensors(
        config.out,
        {
            "durations": result.durations.as_array().astype(np.float64),
            "path": result.path.as_array().astype(np.float64),
        },
    )
    print(f"{result.score:.6f}")
    return 0


def run_bench(config: CliConfig) -> int:
    report = bench(
        config.nodes,
        config.degree,
        config.feature_dim,
        config.tiles,
        config.workers,
        config.repeats,
        config.seed,
        kernel=config.kernel,
        precision=config.precision,
        memory_budget=config.tile_memory_bytes,
    )
    document = json.dumps(report.to_dict(), indent=2)
    if config.out is None:
        print(document)
    else:
        config.out.write_text(document + "\n", encoding="utf-8")
        logger.info("%s Wrote bench report to %s", LOG_PREFIX, config.out)
    return 0


def run_init_weights(config: CliConfig) -> int:
    vocab_size = config.vocab if config.vocab is not None else load_lexicon(config.lexicon).size
    dims = EncoderDims(*config.dims)
    weights = init_encoder_weights(vocab_size, dims, config.seed, zero=config.zero_init)
    save_tensors(config.out, weights.to_tensors())
    logger.info(
        "%s Wrote %s weights (V=%d, dims=%s) to %s",
        LOG_PREFIX,
        "zero" if config.zero_init else "seeded",
        vocab_size,
        ",".join(str(dim) for dim in config.dims),
        config.out,
    )
    return 0


RUNNERS = {
    Subcommand.ENCODE: run_encode,
    Subcommand.ALIGN: run_align,
    Subcommand.BENCH: run_bench,
    Subcommand.INIT_WEIGHTS: run_init_weights,
}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="YAML file with defaults for this command")
    parser.add_argument("--log-level", dest="log_level", default=None, help="Logging level (default: WARNING)")
    parser.add_argument("--out", default=None, help="Output path")


def _tiles(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tiles", default=None, help="Number of tiles (default: 8)")
    parser.add_argument("--tile-memory", dest="tile_memory_bytes", default=None, help="Per-tile memory budget in bytes")
    fusion = parser.add_mutually_exclusive_group()
    fusion.add_argument("--fused", dest="fused", action="store_const", const=True, default=None, help="Fused tile kernel (default)")
    fusion.add_argument("--unfused", dest="fused", action="store_const", const=False, help="Separate aggregate/transform/activate phases")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphenc", description="Syntax-aware graph encoder toolkit")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    encode = sub.add_parser("encode", help="Encode sentences into g_text/p_text/mu/sigma tensors")
    _common(encode)
    encode.add_argument("--lexicon", default=None, help="Lexicon file (TSV with #inventory: header)")
    encode.add_argument("--conllu", default=None, help="CoNLL-U dependency parses, one block per sentence")
    encode.add_argument("--weights", default=None, help="Encoder weights container (.fgt)")
    encode.add_argument("--text", default=None, help="Raw text for a single-sentence CoNLL-U file")
    encode.add_argument("--graph", default=None, help="Word graph: syntax (default) or sequence")
    encode.add_argument("--keep-punct", dest="keep_punct", action="store_const", const=True, default=None, help="Keep punct rows as graph nodes")
    encode.add_argument("--workers", default=None, help="Run the GCN on the tile engine with N workers")
    _tiles(encode)

    align_parser = sub.add_parser("align", help="Monotonic alignment of frames to token statistics")
    _common(align_parser)
    align_parser.add_argument("--stats", default=None, help="Container with mu/sigma (e.g. encode output)")
    align_parser.add_argument("--frames", default=None, help="Container with an S x D 'frames' tensor")
    align_parser.add_argument("--sentence", default=None, help="Sentence index inside --stats (default: 0)")

    bench_parser = sub.add_parser("bench", help="Benchmark the tile engine on a random graph")
    _common(bench_parser)
    bench_parser.add_argument("--nodes", default=None, help="Node count (default: 1000)")
    bench_parser.add_argument("--degree", default=None, help="Average degree (default: 8)")
    bench_parser.add_argument("--dim", dest="feature_dim", default=None, help="Feature width (default: 16)")
    bench_parser.add_argument("--workers", default=None, help="Comma-separated worker counts (default: 1,8)")
    bench_parser.add_argument("--repeats", default=None, help="Timed runs per worker count (default: 5)")
    bench_parser.add_argument("--seed", default=None, help="Graph/feature seed (default: 0)")
    bench_parser.add_argument("--precision", default=None, help="f32 (default) or f64")
    _tiles(bench_parser)

    init = sub.add_parser("init-weights", help="Write a seeded encoder weights container")
    _common(init)
    init.add_argument("--lexicon", default=None, help="Lexicon whose inventory size sets V")
    init.add_argument("--vocab", default=None, help="Embedding rows V (overrides --lexicon)")
    init.add_argument("--dims", default=None, help="E,F,G,D (default: 8,8,8,4)")
    init.add_argument("--seed", default=None, help="Unsigned 64-bit seed (default: 0)")
    init.add_argument("--zero-init", dest="zero_init", action="store_const", const=True, default=None, help="All-zero weights")

    return parser


def _flags(args: argparse.Namespace) -> dict[str, Any]:
    skip = {"subcommand", "config"}
    return {key: value for key, value in vars(args).items() if key not in skip}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    subcommand = Subcommand(args.subcommand)

    try:
        config = load_cli_config(subcommand, _flags(args), args.config)
    except ConfigValidationError as e:
        print(e.format(), file=sys.stderr)
        return 2
    except OSError as e:
        print(f"[io] cannot read config: {e}", file=sys.stderr)
        return 2

    logging.basicConfig(level=config.log_level, format="%(levelname)s %(name)s: %(message)s")

    try:
        return RUNNERS[subcommand](config)
    except ConfigValidationError as e:
        print(e.format(), file=sys.stderr)
        return 2
    except GraphEncError as e:
        print(e.format(), file=sys.stderr)
        return 1
    except OSError as e:
        print(f"[io] {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())

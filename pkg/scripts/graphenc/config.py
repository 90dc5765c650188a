"""Deterministic configuration schema for the graphenc command line.

This module is the single source of truth for:
- which configuration keys exist and which subcommands read them
- which keys are mandatory per subcommand, and their defaults
- how raw values (flags or YAML) become a typed ``CliConfig``

Sources, lowest precedence first: schema defaults, the YAML file given by
``--config``, explicit command-line flags. Environment variables are never
read. Unknown keys fail; keys that belong only to other subcommands are
ignored so one file can serve every subcommand.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping

import yaml


U64_MAX = 2**64 - 1


class Subcommand(str, Enum):
    ENCODE = "encode"
    ALIGN = "align"
    BENCH = "bench"
    INIT_WEIGHTS = "init-weights"


class ConfigKey(str, Enum):
    # Inputs / outputs
    LEXICON = "lexicon"
    CONLLU = "conllu"
    WEIGHTS = "weights"
    FRAMES = "frames"
    STATS = "stats"
    OUT = "out"

    # Model
    SEED = "seed"
    DIMS = "dims"
    VOCAB = "vocab"
    ZERO_INIT = "zero_init"

    # Encoding
    TEXT = "text"
    GRAPH = "graph"
    KEEP_PUNCT = "keep_punct"
    SENTENCE = "sentence"

    # Tile engine / benchmark
    NODES = "nodes"
    DEGREE = "degree"
    FEATURE_DIM = "feature_dim"
    TILES = "tiles"
    WORKERS = "workers"
    REPEATS = "repeats"
    FUSED = "fused"
    PRECISION = "precision"
    TILE_MEMORY_BYTES = "tile_memory_bytes"

    # Runtime
    LOG_LEVEL = "log_level"


ALL = frozenset(Subcommand)
ENCODE = frozenset({Subcommand.ENCODE})
ALIGN = frozenset({Subcommand.ALIGN})
BENCH = frozenset({Subcommand.BENCH})
INIT = frozenset({Subcommand.INIT_WEIGHTS})


@dataclass(frozen=True)
class ConfigKeySpec:
    key: ConfigKey
    subcommands: frozenset[Subcommand]
    mandatory: frozenset[Subcommand] = frozenset()
    default: Any = None


class ConfigValidationError(ValueError):
    def __init__(self, *, context: str, problems: list[str]):
        super().__init__("; ".join(problems))
        self.context = context
        self.problems = problems

    def format(self) -> str:
        lines = [f"[config] validation failed: {self.context}"]
        for p in self.problems:
            lines.append(f"- {p}")
        return "\n".join(lines)


CONFIG_SCHEMA: tuple[ConfigKeySpec, ...] = (
    ConfigKeySpec(ConfigKey.LEXICON, ENCODE | INIT, mandatory=ENCODE),
    ConfigKeySpec(ConfigKey.CONLLU, ENCODE, mandatory=ENCODE),
    ConfigKeySpec(ConfigKey.WEIGHTS, ENCODE, mandatory=ENCODE),
    ConfigKeySpec(ConfigKey.FRAMES, ALIGN, mandatory=ALIGN),
    ConfigKeySpec(ConfigKey.STATS, ALIGN, mandatory=ALIGN),
    ConfigKeySpec(ConfigKey.OUT, ALL, mandatory=ENCODE | ALIGN | INIT),
    ConfigKeySpec(ConfigKey.SEED, BENCH | INIT, default=0),
    ConfigKeySpec(ConfigKey.DIMS, INIT, default="8,8,8,4"),
    ConfigKeySpec(ConfigKey.VOCAB, INIT),
    ConfigKeySpec(ConfigKey.ZERO_INIT, INIT, default=False),
    ConfigKeySpec(ConfigKey.TEXT, ENCODE),
    ConfigKeySpec(ConfigKey.GRAPH, ENCODE, default="syntax"),
    ConfigKeySpec(ConfigKey.KEEP_PUNCT, ENCODE, default=False),
    ConfigKeySpec(ConfigKey.SENTENCE, ALIGN, default=0),
    ConfigKeySpec(ConfigKey.NODES, BENCH, default=1000),
    ConfigKeySpec(ConfigKey.DEGREE, BENCH, default=8),
    ConfigKeySpec(ConfigKey.FEATURE_DIM, BENCH, default=16),
    ConfigKeySpec(ConfigKey.TILES, ENCODE | BENCH, default=8),
    ConfigKeySpec(ConfigKey.WORKERS, ENCODE | BENCH),
    ConfigKeySpec(ConfigKey.REPEATS, BENCH, default=5),
    ConfigKeySpec(ConfigKey.FUSED, ENCODE | BENCH, default=True),
    ConfigKeySpec(ConfigKey.PRECISION, BENCH, default="f32"),
    ConfigKeySpec(ConfigKey.TILE_MEMORY_BYTES, ENCODE | BENCH),
    ConfigKeySpec(ConfigKey.LOG_LEVEL, ALL, default="WARNING"),
)

GRAPH_KINDS = ("syntax", "sequence")
PRECISIONS = ("f32", "f64")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
DEFAULT_BENCH_WORKERS = (1, 8)


@dataclass(frozen=True)
class CliConfig:
    subcommand: Subcommand
    lexicon: Path | None = None
    conllu: Path | None = None
    weights: Path | None = None
    frames: Path | None = None
    stats: Path | None = None
    out: Path | None = None
    seed: int = 0
    dims: tuple[int, int, int, int] = (8, 8, 8, 4)
    vocab: int | None = None
    zero_init: bool = False
    text: str | None = None
    graph: str = "syntax"
    keep_punct: bool = False
    sentence: int = 0
    nodes: int = 1000
    degree: int = 8
    feature_dim: int = 16
    tiles: int = 8
    workers: tuple[int, ...] | None = None
    repeats: int = 5
    fused: bool = True
    precision: str = "f32"
    tile_memory_bytes: int | None = None
    log_level: str = "WARNING"

    @property
    def kernel(self) -> str:
        return "fused" if self.fused else "unfused"


# ---------------------------------------------------------------------------
# Schema helpers
# ---------------------------------------------------------------------------


def schema_for(subcommand: Subcommand) -> list[ConfigKeySpec]:
    return [spec for spec in CONFIG_SCHEMA if subcommand in spec.subcommands]


def _schema_keys(schema: Iterable[ConfigKeySpec]) -> set[str]:
    return {spec.key.value for spec in schema}


def parse_config_file(path: Path) -> dict[str, Any]:
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigValidationError(context=str(path), problems=[f"invalid YAML: {exc}"]) from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigValidationError(context=str(path), problems=["top level must be a mapping"])
    return {str(key): value for key, value in data.items()}


def validate_known_keys(schema: Iterable[ConfigKeySpec], kv: Mapping[str, Any], *, context: str) -> None:
    allowed = _schema_keys(schema)
    unknown = sorted([k for k in kv.keys() if k not in allowed])
    if unknown:
        raise ConfigValidationError(
            context=context,
            problems=["Unknown key(s): " + ", ".join(unknown)],
        )


def apply_defaults(schema: Iterable[ConfigKeySpec], kv: dict[str, Any]) -> dict[str, Any]:
    out = dict(kv)
    for spec in schema:
        if out.get(spec.key.value) is not None:
            continue
        if spec.default is None:
            continue
        out[spec.key.value] = spec.default
    return out


def validate_required(
    schema: Iterable[ConfigKeySpec],
    kv: Mapping[str, Any],
    subcommand: Subcommand,
    *,
    context: str,
) -> None:
    missing: list[str] = []
    for spec in schema:
        if subcommand not in spec.mandatory:
            continue
        val = kv.get(spec.key.value)
        if val is None or not str(val).strip():
            missing.append(spec.key.value)
    if missing:
        raise ConfigValidationError(context=context, problems=["Missing mandatory key(s): " + ", ".join(sorted(missing))])


def truthy(val: Any) -> bool:
    if isinstance(val, bool):
        return val
    v = str(val or "").strip().lower()
    return v in {"1", "true", "yes", "y", "on"}


def validate_cross_field_rules(subcommand: Subcommand, kv: Mapping[str, Any], *, context: str) -> None:
    """Extra validation for rules that can't be expressed with (mandatory/default) alone."""
    problems: list[str] = []

    if subcommand is Subcommand.INIT_WEIGHTS and kv.get("lexicon") is None and kv.get("vocab") is None:
        problems.append("init-weights needs --lexicon or --vocab to size the phoneme embedding")

    if problems:
        raise ConfigValidationError(context=context, problems=problems)


# ---------------------------------------------------------------------------
# Typed conversion
# ---------------------------------------------------------------------------


def _int_list(text: Any, key: str, problems: list[str]) -> tuple[int, ...] | None:
    if isinstance(text, int) and not isinstance(text, bool):
        return (text,)
    if isinstance(text, (list, tuple)):
        parts = [str(part) for part in text]
    else:
        parts = [part.strip() for part in str(text).split(",")]
    try:
        return tuple(int(part) for part in parts)
    except ValueError:
        problems.append(f"{key} must be a comma-separated list of integers, got {text!r}")
        return None


def _int(value: Any, key: str, problems: list[str]) -> int | None:
    if value is None:
        return None
    if isinstance(value, bool):
        problems.append(f"{key} must be an integer, got {value!r}")
        return None
    try:
        return int(str(value).strip())
    except ValueError:
        problems.append(f"{key} must be an integer, got {value!r}")
        return None


def _path(value: Any) -> Path | None:
    return None if value is None else Path(str(value)).expanduser()


def _choice(value: Any, key: str, choices: tuple[str, ...], problems: list[str]) -> str:
    text = str(value)
    if text not in choices:
        problems.append(f"{key} must be one of {', '.join(choices)}, got {text!r}")
    return text


def build_cli_config(subcommand: Subcommand, kv: Mapping[str, Any], *, context: str) -> CliConfig:
    problems: list[str] = []
    ints: dict[str, int | None] = {
        key: _int(kv.get(key), key, problems)
        for key in ("seed", "vocab", "sentence", "nodes", "degree", "feature_dim", "tiles", "repeats", "tile_memory_bytes")
    }

    seed = ints["seed"] if ints["seed"] is not None else 0
    if not 0 <= seed <= U64_MAX:
        problems.append(f"seed must be an unsigned 64-bit integer, got {seed}")
    if ints["sentence"] is not None and ints["sentence"] < 0:
        problems.append(f"sentence must be >= 0, got {ints['sentence']}")

    dims = _int_list(kv.get("dims", "8,8,8,4"), "dims", problems) or (8, 8, 8, 4)
    if len(dims) != 4:
        problems.append(f"dims must be E,F,G,D (four integers), got {kv.get('dims')!r}")
        dims = (8, 8, 8, 4)

    workers = None
    if kv.get("workers") is not None:
        workers = _int_list(kv["workers"], "workers", problems)
    if subcommand is Subcommand.ENCODE and workers is not None and (len(workers) != 1 or workers[0] < 1):
        problems.append(f"encode takes a single positive worker count, got {kv['workers']!r}")
    if subcommand is Subcommand.BENCH and workers is None:
        workers = DEFAULT_BENCH_WORKERS

    graph = _choice(kv.get("graph", "syntax"), "graph", GRAPH_KINDS, problems)
    precision = _choice(kv.get("precision", "f32"), "precision", PRECISIONS, problems)
    log_level = _choice(str(kv.get("log_level", "WARNING")).upper(), "log_level", LOG_LEVELS, problems)

    if problems:
        raise ConfigValidationError(context=context, problems=problems)

    text = kv.get("text")
    return CliConfig(
        subcommand=subcommand,
        lexicon=_path(kv.get("lexicon")),
        conllu=_path(kv.get("conllu")),
        weights=_path(kv.get("weights")),
        frames=_path(kv.get("frames")),
        stats=_path(kv.get("stats")),
        out=_path(kv.get("out")),
        seed=seed,
        dims=dims,  # type: ignore[arg-type]
        vocab=ints["vocab"],
        zero_init=truthy(kv.get("zero_init")),
        text=None if text is None else str(text),
        graph=graph,
        keep_punct=truthy(kv.get("keep_punct")),
        sentence=ints["sentence"] or 0,
        nodes=ints["nodes"] if ints["nodes"] is not None else 1000,
        degree=ints["degree"] if ints["degree"] is not None else 8,
        feature_dim=ints["feature_dim"] if ints["feature_dim"] is not None else 16,
        tiles=ints["tiles"] if ints["tiles"] is not None else 8,
        workers=workers,
        repeats=ints["repeats"] if ints["repeats"] is not None else 5,
        fused=truthy(kv.get("fused", True)),
        precision=precision,
        tile_memory_bytes=ints["tile_memory_bytes"],
        log_level=log_level,
    )


def load_cli_config(
    subcommand: Subcommand,
    flags: Mapping[str, Any],
    config_path: Path | None = None,
) -> CliConfig:
    """Merge defaults, the YAML file and explicit flags, then validate."""
    subcommand = Subcommand(subcommand)
    context = f"{subcommand.value} ({config_path})" if config_path is not None else subcommand.value
    schema = schema_for(subcommand)

    file_kv: dict[str, Any] = {}
    if config_path is not None:
        file_kv = parse_config_file(config_path)
        validate_known_keys(CONFIG_SCHEMA, file_kv, context=context)
        own_keys = _schema_keys(schema)
        file_kv = {k: v for k, v in file_kv.items() if k in own_keys}

    merged = dict(file_kv)
    merged.update({k: v for k, v in flags.items() if v is not None})
    validate_known_keys(schema, merged, context=context)

    merged = apply_defaults(schema, merged)
    validate_required(schema, merged, subcommand, context=context)
    validate_cross_field_rules(subcommand, merged, context=context)
    return build_cli_config(subcommand, merged, context=context)

"""Domain errors raised by the graph encoder toolkit.

Every error names the pipeline stage that failed so the CLI can print a
one-line diagnostic (``[parse] ...``) and exit with status 1.
"""

from __future__ import annotations


class GraphEncError(ValueError):
    stage = "graphenc"

    def format(self) -> str:
        return f"[{self.stage}] {self}"


# ---------------------------------------------------------------------------
# Text front-end
# ---------------------------------------------------------------------------


class EmptyInputError(GraphEncError):
    stage = "text"

    def __init__(self, raw_text: str):
        super().__init__(f"no word survives tokenization of {raw_text!r}")
        self.raw_text = raw_text


class UnknownSymbolError(GraphEncError):
    stage = "lexicon"

    def __init__(self, word: str, char: str):
        super().__init__(f"cannot spell {word!r}: character {char!r} is not in the phoneme inventory")
        self.word = word
        self.char = char


class LexiconFormatError(GraphEncError):
    stage = "lexicon"

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


# ---------------------------------------------------------------------------
# Dependency parses
# ---------------------------------------------------------------------------


class MalformedLineError(GraphEncError):
    stage = "parse"

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


class CyclicParseError(GraphEncError):
    stage = "parse"

    def __init__(self, sentence_no: int | None):
        where = f"sentence {sentence_no}" if sentence_no is not None else "parse"
        super().__init__(f"{where}: head links contain a cycle")
        self.sentence_no = sentence_no


class MultipleRootsError(GraphEncError):
    stage = "parse"

    def __init__(self, sentence_no: int | None, n_roots: int):
        where = f"sentence {sentence_no}" if sentence_no is not None else "parse"
        super().__init__(f"{where}: expected exactly one root, found {n_roots}")
        self.sentence_no = sentence_no
        self.n_roots = n_roots


# ---------------------------------------------------------------------------
# Numerics / encoder / alignment
# ---------------------------------------------------------------------------


class ShapeMismatchError(GraphEncError):
    stage = "shape"


class EmptySpanError(GraphEncError):
    stage = "shape"


class WordCountMismatchError(GraphEncError):
    stage = "encode"

    def __init__(self, text_words: int, parse_words: int):
        super().__init__(f"word count mismatch: text has {text_words} words, parse has {parse_words}")
        self.text_words = text_words
        self.parse_words = parse_words


class NonPositiveSigmaError(GraphEncError):
    stage = "align"


class TooFewFramesError(GraphEncError):
    stage = "align"

    def __init__(self, n_frames: int, n_tokens: int):
        super().__init__("frames fewer than tokens")
        self.n_frames = n_frames
        self.n_tokens = n_tokens


# ---------------------------------------------------------------------------
# Tile engine
# ---------------------------------------------------------------------------


class ZeroTilesError(GraphEncError):
    stage = "bsp"

    def __init__(self) -> None:
        super().__init__("n_tiles must be >= 1")


class TileBudgetError(GraphEncError):
    stage = "bsp"


class BenchParameterError(GraphEncError):
    stage = "bsp"


# ---------------------------------------------------------------------------
# Tensor containers
# ---------------------------------------------------------------------------


class DuplicateNameError(GraphEncError):
    stage = "tensorio"

    def __init__(self, name: str):
        super().__init__(f"duplicate tensor name {name!r}")
        self.name = name


class ShapePayloadMismatchError(GraphEncError):
    stage = "tensorio"


class TensorNameError(GraphEncError):
    stage = "tensorio"


class BadMagicError(GraphEncError):
    stage = "tensorio"


class UnsupportedVersionError(GraphEncError):
    stage = "tensorio"


class TruncatedPayloadError(GraphEncError):
    stage = "tensorio"


class MalformedHeaderError(GraphEncError):
    stage = "tensorio"

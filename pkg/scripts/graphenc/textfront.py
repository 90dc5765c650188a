"""Text front-end: raw text -> phoneme IDs plus word-to-phoneme spans.

The lexicon file is UTF-8, one entry per line::

    #inventory: a b c ... AH OW
    hello<TAB>h AH l OW

The first line defines the phoneme inventory; IDs are the 0-based positions
in that list. Words missing from the lexicon are spelled character by
character using single-character inventory symbols.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .errors import EmptyInputError, EmptySpanError, LexiconFormatError, UnknownSymbolError


LOG_PREFIX = "[TEXTFRONT]"
INVENTORY_PREFIX = "#inventory:"

# Stripped from word edges only; inner apostrophes/hyphens survive.
PUNCTUATION = ".,!?;:"

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Lexicon:
    entries: Mapping[str, tuple[str, ...]]
    phoneme_inventory: tuple[str, ...]
    _ids: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ids: dict[str, int] = {}
        for index, symbol in enumerate(self.phoneme_inventory):
            if symbol in ids:
                raise ValueError(f"phoneme {symbol!r} listed twice in inventory")
            ids[symbol] = index

        for word, phonemes in self.entries.items():
            for symbol in phonemes:
                if symbol not in ids:
                    raise ValueError(f"entry {word!r} uses phoneme {symbol!r} missing from inventory")

        object.__setattr__(self, "_ids", ids)

    @property
    def size(self) -> int:
        return len(self.phoneme_inventory)

    def phoneme_id(self, symbol: str) -> int:
        return self._ids[symbol]

    def has_symbol(self, symbol: str) -> bool:
        return symbol in self._ids


@dataclass(frozen=True)
class Utterance:
    words: tuple[str, ...]
    phoneme_ids: tuple[int, ...]
    spans: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if len(self.spans) != len(self.words):
            raise EmptySpanError(f"{len(self.words)} words but {len(self.spans)} spans")

        cursor = 0
        for index, (start, end) in enumerate(self.spans):
            if start != cursor:
                raise EmptySpanError(f"span {index} starts at {start}, expected {cursor}")
            if end <= start:
                raise EmptySpanError(f"span {index} for word {self.words[index]!r} is empty")
            cursor = end

        if cursor != len(self.phoneme_ids):
            raise EmptySpanError(f"spans cover {cursor} phonemes, utterance has {len(self.phoneme_ids)}")

    @property
    def n_words(self) -> int:
        return len(self.words)

    @property
    def n_phonemes(self) -> int:
        return len(self.phoneme_ids)


def parse_lexicon(text: str) -> Lexicon:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(INVENTORY_PREFIX):
        raise LexiconFormatError(1, f"first line must start with {INVENTORY_PREFIX!r}")

    inventory = tuple(lines[0][len(INVENTORY_PREFIX):].split())
    if not inventory:
        raise LexiconFormatError(1, "phoneme inventory is empty")

    entries: dict[str, tuple[str, ...]] = {}
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.startswith("#"):
            continue
        if "\t" not in line:
            raise LexiconFormatError(line_no, "expected word<TAB>phonemes")

        word, _, phonemes = line.partition("\t")
        word = word.strip().lower()
        symbols = tuple(phonemes.split())
        if not word or not symbols:
            raise LexiconFormatError(line_no, "entry needs a word and at least one phoneme")
        unknown = [symbol for symbol in symbols if symbol not in inventory]
        if unknown:
            raise LexiconFormatError(line_no, f"unknown phoneme(s): {', '.join(unknown)}")
        entries[word] = symbols

    return Lexicon(entries=entries, phoneme_inventory=inventory)


def load_lexicon(path: str | Path) -> Lexicon:
    data = Path(path).read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        line_no = data.count(b"\n", 0, e.start) + 1
        raise LexiconFormatError(line_no, f"invalid UTF-8 byte 0x{data[e.start]:02x}") from e

    lexicon = parse_lexicon(text)
    logger.debug(
        "%s Loaded %d entries, %d phonemes from %s",
        LOG_PREFIX,
        len(lexicon.entries),
        lexicon.size,
        path,
    )
    return lexicon


def normalize_word(token: str) -> str:
    """Lower-case and strip edge punctuation; may return an empty string."""
    return token.strip(PUNCTUATION).lower()


def tokenize(raw_text: str) -> list[str]:
    words: list[str] = []
    for chunk in raw_text.split():
        word = normalize_word(chunk)
        if word:
            words.append(word)

    if not words:
        raise EmptyInputError(raw_text)
    return words


def phonemize(word: str, lexicon: Lexicon) -> list[int]:
    key = word.lower()
    listed = lexicon.entries.get(key)
    if listed is not None:
        return [lexicon.phoneme_id(symbol) for symbol in listed]

    ids: list[int] = []
    for char in key:
        if not lexicon.has_symbol(char):
            raise UnknownSymbolError(word, char)
        ids.append(lexicon.phoneme_id(char))
    return ids


def utterance_from_words(words: Sequence[str], lexicon: Lexicon) -> Utterance:
    phoneme_ids: list[int] = []
    spans: list[tuple[int, int]] = []
    for word in words:
        start = len(phoneme_ids)
        phoneme_ids.extend(phonemize(word, lexicon))
        spans.append((start, len(phoneme_ids)))

    return Utterance(words=tuple(words), phoneme_ids=tuple(phoneme_ids), spans=tuple(spans))


def build_utterance(raw_text: str, lexicon: Lexicon) -> Utterance:
    return utterance_from_words(tokenize(raw_text), lexicon)


def utterance_from_forms(forms: Sequence[str], lexicon: Lexicon) -> Utterance:
    """One word per parse token. A token that is all edge punctuation keeps its lower-cased form."""
    return utterance_from_words([normalize_word(form) or form.lower() for form in forms], lexicon)

"""Streaming parser for POS-tagged 5-gram corpus files.

Input lines follow the flat Google Books V2 convention: five underscore-tagged
tokens, then year, match count and volume count, tab-separated::

    the_DET gold_NOUN mine_NOUN was_VERB deep_ADJ<TAB>1850<TAB>12<TAB>7

Files may be gzip-compressed (detected by the ``.gz`` suffix).
"""

from __future__ import annotations

import gzip
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Iterator


class Pos(Enum):
    """Coarse part-of-speech tag set used by the tagged ngram corpus."""

    NOUN = "NOUN"
    VERB = "VERB"
    ADJ = "ADJ"
    ADV = "ADV"
    PRON = "PRON"
    DET = "DET"
    ADP = "ADP"
    NUM = "NUM"
    CONJ = "CONJ"
    PRT = "PRT"
    X = "X"
    PUNCT = "PUNCT"


# The corpus tags punctuation as "."; every other unrecognized tag maps to X.
_TAG_MAP = {p.value: p for p in Pos}
_TAG_MAP["."] = Pos.PUNCT


@dataclass(frozen=True)
class Token:
    surface: str
    pos: Pos


@dataclass(frozen=True)
class NgramRecord:
    tokens: tuple[Token, ...]
    year: int
    match_count: int


class MalformedLineError(ValueError):
    """Raised for lines that do not parse as a 5-gram record."""


@dataclass
class IngestStats:
    """Line-level accounting for one or more streamed corpus files."""

    lines: int = 0
    records: int = 0
    blank: int = 0
    malformed: int = 0
    files: list[str] = field(default_factory=list)

    def add(self, other: "IngestStats") -> None:
        self.lines += other.lines
        self.records += other.records
        self.blank += other.blank
        self.malformed += other.malformed
        self.files.extend(other.files)

    def summary(self) -> str:
        return (
            f"{self.lines} lines read from {len(self.files)} file(s): "
            f"{self.records} records, {self.blank} blank, {self.malformed} malformed"
        )


def _parse_token(raw: str) -> Token:
    surface, sep, tag = raw.rpartition("_")
    if not sep:
        # Bare word without a tag suffix: keep it, POS unknown.
        surface, tag = raw, ""
    if not surface:
        raise MalformedLineError(f"token {raw!r} has an empty word")
    return Token(surface.lower(), _TAG_MAP.get(tag, Pos.X))


def parse_ngram_line(line: str) -> NgramRecord:
    """Parse one corpus line into a record.

    Surfaces are lowercased; unknown POS tags become X; the trailing
    volume count is validated but discarded.  Raises MalformedLineError
    for wrong field counts, non-5-gram token lists, or bad integers.
    """
    fields = line.rstrip("\r\n").split("\t")
    if len(fields) != 4:
        raise MalformedLineError(f"expected 4 tab-separated fields, got {len(fields)}")
    raw_tokens = fields[0].split()
    if len(raw_tokens) != 5:
        raise MalformedLineError(f"expected 5 tokens, got {len(raw_tokens)}")
    try:
        year = int(fields[1])
        match_count = int(fields[2])
        int(fields[3])  # volume count: must be an integer, value unused
    except ValueError as exc:
        raise MalformedLineError(f"bad integer field: {exc}") from None
    if match_count < 1:
        raise MalformedLineError(f"match count must be positive, got {match_count}")
    return NgramRecord(tuple(_parse_token(t) for t in raw_tokens), year, match_count)


def _open_text(path: Path) -> IO[str]:
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, "r", encoding="utf-8")


def stream_corpus(
    paths: Iterable[str | Path],
    stats: IngestStats | None = None,
) -> Iterator[NgramRecord]:
    """Yield records from corpus files in order, skipping malformed lines.

    Pass an IngestStats to collect per-line accounting while consuming
    the stream.  An unreadable file aborts the stream with the usual
    OSError naming the offending path.
    """
    for path in paths:
        path = Path(path)
        with _open_text(path) as handle:
            if stats is not None:
                stats.files.append(str(path))
            for line in handle:
                if stats is not None:
                    stats.lines += 1
                if not line.strip():
                    if stats is not None:
                        stats.blank += 1
                    continue
                try:
                    record = parse_ngram_line(line)
                except MalformedLineError:
                    if stats is not None:
                        stats.malformed += 1
                    continue
                if stats is not None:
                    stats.records += 1
                yield record

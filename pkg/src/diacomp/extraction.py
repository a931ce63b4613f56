"""Noun-noun compound detection and time-bucketed co-occurrence counting.

Counting is compound-centric: a context token is credited to the compound
and, separately, to the first noun in its modifier role and the second noun
in its head role.  The same lemma used as a modifier and as a head yields
two distinct targets.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable

from .ingest import NgramRecord, Pos

SPAN_LENGTHS = (None, 1, 10, 20, 50, 100)

# Compounds must be attested in every span from this year on to be retained.
RETENTION_START_YEAR = 1800


class TargetKind(Enum):
    COMPOUND = "compound"
    MODIFIER = "modifier"
    HEAD = "head"


@dataclass(frozen=True, order=True)
class Compound:
    modifier: str
    head: str

    def __post_init__(self) -> None:
        if not self.modifier or not self.head:
            raise ValueError("compound constituents must be non-empty")

    @property
    def key(self) -> str:
        return f"{self.modifier} {self.head}"

    @classmethod
    def from_key(cls, key: str) -> "Compound":
        modifier, _, head = key.partition(" ")
        return cls(modifier, head)


@dataclass(frozen=True)
class Target:
    """A row identity in the semantic space: a compound or one role of a constituent."""

    kind: TargetKind
    key: str

    def sort_key(self) -> tuple[str, str]:
        return (self.kind.value, self.key)


def compound_targets(compound: Compound) -> tuple[Target, Target, Target]:
    return (
        Target(TargetKind.COMPOUND, compound.key),
        Target(TargetKind.MODIFIER, compound.modifier),
        Target(TargetKind.HEAD, compound.head),
    )


@dataclass(frozen=True)
class TimeSpanConfig:
    """Bucketing of calendar years into consecutive spans.

    ``span_length`` of None collapses all years in [start_year, end_year)
    into a single bucket.
    """

    span_length: int | None = 20
    start_year: int = 1800
    end_year: int = 2000

    def __post_init__(self) -> None:
        if self.span_length not in SPAN_LENGTHS:
            raise ValueError(
                f"span_length must be one of {SPAN_LENGTHS}, got {self.span_length}"
            )
        if self.start_year >= self.end_year:
            raise ValueError(
                f"start_year {self.start_year} must precede end_year {self.end_year}"
            )

    @property
    def num_spans(self) -> int:
        if self.span_length is None:
            return 1
        width = self.end_year - self.start_year
        return -(-width // self.span_length)

    def span_of_year(self, year: int) -> int | None:
        """Span index for a year, or None when the year falls outside the window."""
        if year < self.start_year or year >= self.end_year:
            return None
        if self.span_length is None:
            return 0
        return (year - self.start_year) // self.span_length

    def span_bounds(self, index: int) -> tuple[int, int]:
        """Calendar [start, end) of one span; the last span is clipped to end_year."""
        if not 0 <= index < self.num_spans:
            raise ValueError(f"span index {index} out of range")
        if self.span_length is None:
            return (self.start_year, self.end_year)
        start = self.start_year + index * self.span_length
        return (start, min(start + self.span_length, self.end_year))

    def required_spans(self) -> tuple[int, ...]:
        """Span indices covering [RETENTION_START_YEAR, end_year)."""
        anchor = max(self.start_year, RETENTION_START_YEAR)
        first = self.span_of_year(anchor)
        if first is None:
            return tuple(range(self.num_spans))
        return tuple(range(first, self.num_spans))


@dataclass
class CoocCounts:
    """Sparse context counts and frequency tables, bucketed by span index.

    ``contexts[span][target]`` is a Counter of context words.  The three
    frequency tables and ``nn_total`` are match-count masses over detected
    noun-noun occurrences.  ``out_of_range`` tallies records dropped for
    falling outside the configured year window.
    """

    contexts: dict[int, dict[Target, Counter]] = field(default_factory=dict)
    compound_freq: dict[int, Counter] = field(default_factory=dict)
    modifier_freq: dict[int, Counter] = field(default_factory=dict)
    head_freq: dict[int, Counter] = field(default_factory=dict)
    nn_total: Counter = field(default_factory=Counter)
    out_of_range: int = 0

    def spans(self) -> list[int]:
        seen = set(self.contexts) | set(self.compound_freq) | set(self.nn_total)
        return sorted(seen)

    def is_empty(self) -> bool:
        return not any(self.contexts.values())

    def merge(self, other: "CoocCounts") -> None:
        """Add another shard in place; commutative and associative."""
        for span, targets in other.contexts.items():
            store = self.contexts.setdefault(span, {})
            for target, ctx in targets.items():
                store.setdefault(target, Counter()).update(ctx)
        for ours, theirs in (
            (self.compound_freq, other.compound_freq),
            (self.modifier_freq, other.modifier_freq),
            (self.head_freq, other.head_freq),
        ):
            for span, table in theirs.items():
                ours.setdefault(span, Counter()).update(table)
        self.nn_total.update(other.nn_total)
        self.out_of_range += other.out_of_range

    def verify_marginals(self) -> None:
        """Check the role-frequency and total identities.

        Holds for accumulation output; apply_cutoff keeps surviving targets'
        frequencies verbatim, so the identities may no longer hold afterwards.
        """
        for span in self.spans():
            comp = self.compound_freq.get(span, Counter())
            mods: Counter = Counter()
            heads: Counter = Counter()
            for compound, freq in comp.items():
                mods[compound.modifier] += freq
                heads[compound.head] += freq
            if mods != self.modifier_freq.get(span, Counter()):
                raise ValueError(f"modifier_freq inconsistent in span {span}")
            if heads != self.head_freq.get(span, Counter()):
                raise ValueError(f"head_freq inconsistent in span {span}")
            if sum(comp.values()) != self.nn_total.get(span, 0):
                raise ValueError(f"nn_total inconsistent in span {span}")


def merge_counts(parts: Iterable[CoocCounts]) -> CoocCounts:
    merged = CoocCounts()
    for part in parts:
        merged.merge(part)
    return merged


def detect_noun_noun(record: NgramRecord) -> list[tuple[Compound, tuple[int, int]]]:
    """All adjacent NOUN-NOUN token pairs, as (compound, (i, i+1)).

    Overlapping noun runs emit every adjacent pair, so N N N yields two
    compounds.
    """
    found = []
    for i in range(4):
        left, right = record.tokens[i], record.tokens[i + 1]
        if left.pos is Pos.NOUN and right.pos is Pos.NOUN:
            found.append((Compound(left.surface, right.surface), (i, i + 1)))
    return found


def contexts_for_occurrence(
    record: NgramRecord, positions: tuple[int, int]
) -> Counter:
    """The three tokens outside the pair, each weighted by match_count."""
    ctx: Counter = Counter()
    for i, token in enumerate(record.tokens):
        if i not in positions:
            ctx[token.surface] += record.match_count
    return ctx


def accumulate_counts(
    records: Iterable[NgramRecord], cfg: TimeSpanConfig
) -> CoocCounts:
    """Build CoocCounts from a record stream.

    Each detected occurrence credits its context multiset to the compound
    and to both role-specific constituents, and adds match_count to the
    three frequency tables and to the span's noun-noun total.
    """
    counts = CoocCounts()
    for record in records:
        span = cfg.span_of_year(record.year)
        if span is None:
            counts.out_of_range += 1
            continue
        detected = detect_noun_noun(record)
        if not detected:
            continue
        store = counts.contexts.setdefault(span, {})
        comp_freq = counts.compound_freq.setdefault(span, Counter())
        mod_freq = counts.modifier_freq.setdefault(span, Counter())
        head_freq = counts.head_freq.setdefault(span, Counter())
        for compound, positions in detected:
            ctx = contexts_for_occurrence(record, positions)
            for target in compound_targets(compound):
                store.setdefault(target, Counter()).update(ctx)
            comp_freq[compound] += record.match_count
            mod_freq[compound.modifier] += record.match_count
            head_freq[compound.head] += record.match_count
            counts.nn_total[span] += record.match_count
    return counts


def apply_cutoff(counts: CoocCounts, cutoff: int) -> CoocCounts:
    """Drop targets below the per-span frequency cutoff (frequency >= cutoff retained).

    Removed targets disappear from the span's context store and frequency
    tables; surviving targets keep their frequencies verbatim and nn_total
    is not rescaled.
    """
    if cutoff < 1:
        raise ValueError(f"cutoff must be a positive integer, got {cutoff}")
    out = CoocCounts(nn_total=Counter(counts.nn_total), out_of_range=counts.out_of_range)
    for span in counts.spans():
        comp = {c: f for c, f in counts.compound_freq.get(span, {}).items() if f >= cutoff}
        mods = {m: f for m, f in counts.modifier_freq.get(span, {}).items() if f >= cutoff}
        heads = {h: f for h, f in counts.head_freq.get(span, {}).items() if f >= cutoff}
        if comp:
            out.compound_freq[span] = Counter(comp)
        if mods:
            out.modifier_freq[span] = Counter(mods)
        if heads:
            out.head_freq[span] = Counter(heads)
        survivors = {}
        for target, ctx in counts.contexts.get(span, {}).items():
            if target.kind is TargetKind.COMPOUND:
                kept = Compound.from_key(target.key) in comp
            elif target.kind is TargetKind.MODIFIER:
                kept = target.key in mods
            else:
                kept = target.key in heads
            if kept:
                survivors[target] = Counter(ctx)
        if survivors:
            out.contexts[span] = survivors
    return out


def retain_all_spans(counts: CoocCounts, cfg: TimeSpanConfig) -> set[Compound]:
    """Compounds present, with both constituents, in every required span.

    Expects cutoff-filtered counts; presence means the compound and its
    role-specific constituents all survive in the span.
    """
    retained: set[Compound] | None = None
    for span in cfg.required_spans():
        comp = counts.compound_freq.get(span, Counter())
        mods = counts.modifier_freq.get(span, Counter())
        heads = counts.head_freq.get(span, Counter())
        present = {c for c in comp if c.modifier in mods and c.head in heads}
        retained = present if retained is None else retained & present
        if not retained:
            return set()
    return retained or set()


def restrict_to_compounds(counts: CoocCounts, compounds: set[Compound]) -> CoocCounts:
    """Keep only the given compounds and their role-specific constituents."""
    mods = {c.modifier for c in compounds}
    heads = {c.head for c in compounds}
    out = CoocCounts(nn_total=Counter(counts.nn_total), out_of_range=counts.out_of_range)
    for span in counts.spans():
        comp = {c: f for c, f in counts.compound_freq.get(span, {}).items() if c in compounds}
        mod = {m: f for m, f in counts.modifier_freq.get(span, {}).items() if m in mods}
        head = {h: f for h, f in counts.head_freq.get(span, {}).items() if h in heads}
        if comp:
            out.compound_freq[span] = Counter(comp)
        if mod:
            out.modifier_freq[span] = Counter(mod)
        if head:
            out.head_freq[span] = Counter(head)
        kept = {}
        for target, ctx in counts.contexts.get(span, {}).items():
            if (
                (target.kind is TargetKind.COMPOUND and Compound.from_key(target.key) in compounds)
                or (target.kind is TargetKind.MODIFIER and target.key in mods)
                or (target.kind is TargetKind.HEAD and target.key in heads)
            ):
                kept[target] = Counter(ctx)
        if kept:
            out.contexts[span] = kept
    return out


def save_counts(counts: CoocCounts, contexts_path: str | Path, freq_path: str | Path) -> None:
    """Persist counts as two sorted TSV files (contexts + frequency sidecar)."""
    with open(contexts_path, "w", encoding="utf-8") as f:
        for span in counts.spans():
            rows = []
            for target, ctx in counts.contexts.get(span, {}).items():
                for word, count in ctx.items():
                    rows.append((target.kind.value, target.key, word, count))
            for kind, key, word, count in sorted(rows):
                f.write(f"{kind}\t{key}\t{span}\t{word}\t{count}\n")
    with open(freq_path, "w", encoding="utf-8") as f:
        f.write(f"out_of_range\t\t\t{counts.out_of_range}\n")
        for span in counts.spans():
            rows = [("total", "", counts.nn_total.get(span, 0))]
            rows += sorted(
                ("compound", c.key, n) for c, n in counts.compound_freq.get(span, {}).items()
            )
            rows += sorted(
                ("modifier", m, n) for m, n in counts.modifier_freq.get(span, {}).items()
            )
            rows += sorted(("head", h, n) for h, n in counts.head_freq.get(span, {}).items())
            for kind, key, value in rows:
                f.write(f"{kind}\t{key}\t{span}\t{value}\n")


def load_counts(contexts_path: str | Path, freq_path: str | Path) -> CoocCounts:
    counts = CoocCounts()
    with open(contexts_path, encoding="utf-8") as f:
        for line in f:
            kind, key, span, word, count = line.rstrip("\n").split("\t")
            target = Target(TargetKind(kind), key)
            store = counts.contexts.setdefault(int(span), {})
            store.setdefault(target, Counter())[word] = int(count)
    with open(freq_path, encoding="utf-8") as f:
        for line in f:
            kind, key, span, value = line.rstrip("\n").split("\t")
            if kind == "out_of_range":
                counts.out_of_range = int(value)
            elif kind == "total":
                counts.nn_total[int(span)] = int(value)
            elif kind == "compound":
                table = counts.compound_freq.setdefault(int(span), Counter())
                table[Compound.from_key(key)] = int(value)
            elif kind == "modifier":
                counts.modifier_freq.setdefault(int(span), Counter())[key] = int(value)
            elif kind == "head":
                counts.head_freq.setdefault(int(span), Counter())[key] = int(value)
            else:
                raise ValueError(f"unknown row kind {kind!r} in {freq_path}")
    return counts

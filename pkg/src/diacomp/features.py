"""Per-compound, per-span compositionality features.

Three similarity features come from the embedding space (compound vs. its
constituents in the same span); three association features come from the
per-span noun-noun bigram counts.  A feature that cannot be computed is
recorded as None and serialized as an empty CSV field -- never as zero.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from .extraction import Compound, CoocCounts, TimeSpanConfig, compound_targets
from .space import EmbeddingSpace

FEATURE_NAMES = (
    "sim_bw_constituents",
    "sim_with_head",
    "sim_with_mod",
    "llr",
    "ppmi",
    "lmi",
)

CSV_HEADER = ("modifier", "head", "span_start", "span_end") + FEATURE_NAMES


@dataclass(frozen=True)
class ContingencyTable:
    """2x2 observed counts for a modifier/head pair within one span.

    o11 = c(m, h), o12 = c(m, *h), o21 = c(*m, h), o22 = the rest; the
    universe is the span's noun-noun bigram occurrence mass.
    """

    o11: int
    o12: int
    o21: int
    o22: int

    def __post_init__(self) -> None:
        for name in ("o11", "o12", "o21", "o22"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def from_counts(
        cls, joint: int, modifier_total: int, head_total: int, total: int
    ) -> "ContingencyTable":
        o12 = modifier_total - joint
        o21 = head_total - joint
        o22 = total - modifier_total - head_total + joint
        if min(o12, o21, o22) < 0:
            raise ValueError(
                "inconsistent marginals: "
                f"joint={joint} modifier={modifier_total} head={head_total} total={total}"
            )
        return cls(joint, o12, o21, o22)

    @property
    def total(self) -> int:
        return self.o11 + self.o12 + self.o21 + self.o22


def pmi(joint: int, modifier_total: int, head_total: int, total: int) -> float | None:
    """Pointwise mutual information, log base 2; None when undefined."""
    if joint <= 0 or modifier_total <= 0 or head_total <= 0 or total <= 0:
        return None
    return math.log2(joint * total / (modifier_total * head_total))


def ppmi_score(joint: int, modifier_total: int, head_total: int, total: int) -> float | None:
    value = pmi(joint, modifier_total, head_total, total)
    if value is None:
        return None
    return max(0.0, value)


def lmi(joint: int, modifier_total: int, head_total: int, total: int) -> float | None:
    """Local mutual information: joint count times (unclipped) PMI."""
    value = pmi(joint, modifier_total, head_total, total)
    if value is None:
        return None
    return joint * value


def llr(table: ContingencyTable) -> float | None:
    """Dunning's log-likelihood ratio, 2 * sum O * ln(O / E), natural log.

    Zero observed cells contribute nothing; tiny negative rounding noise is
    clamped so the statistic is never below zero.
    """
    n = table.total
    if n == 0:
        return None
    observed = (table.o11, table.o12, table.o21, table.o22)
    row1 = table.o11 + table.o12
    row2 = table.o21 + table.o22
    col1 = table.o11 + table.o21
    col2 = table.o12 + table.o22
    expected = (
        row1 * col1 / n,
        row1 * col2 / n,
        row2 * col1 / n,
        row2 * col2 / n,
    )
    value = 0.0
    for o, e in zip(observed, expected):
        if o > 0:
            value += o * math.log(o / e)
    return max(0.0, 2.0 * value)


def sim_features(
    space: EmbeddingSpace, compound: Compound, span: int
) -> tuple[float | None, float | None, float | None]:
    """(sim between constituents, sim compound-head, sim compound-mod)."""
    comp, mod, head = compound_targets(compound)
    return (
        space.similarity((mod, span), (head, span)),
        space.similarity((comp, span), (head, span)),
        space.similarity((comp, span), (mod, span)),
    )


@dataclass(frozen=True)
class FeatureRow:
    compound: Compound
    span: int
    sim_bw_constituents: float | None
    sim_with_head: float | None
    sim_with_mod: float | None
    llr: float | None
    ppmi: float | None
    lmi: float | None

    def value(self, feature: str) -> float | None:
        if feature not in FEATURE_NAMES:
            raise ValueError(f"unknown feature {feature!r}")
        return getattr(self, feature)


def build_feature_table(
    space: EmbeddingSpace,
    counts: CoocCounts,
    compounds: set[Compound],
    cfg: TimeSpanConfig,
) -> list[FeatureRow]:
    """One row per (compound, span) over every span of the configuration."""
    rows: list[FeatureRow] = []
    for compound in sorted(compounds, key=lambda c: c.key):
        for span in range(cfg.num_spans):
            s_bw, s_head, s_mod = sim_features(space, compound, span)
            joint = counts.compound_freq.get(span, {}).get(compound, 0)
            mod_total = counts.modifier_freq.get(span, {}).get(compound.modifier, 0)
            head_total = counts.head_freq.get(span, {}).get(compound.head, 0)
            total = counts.nn_total.get(span, 0)
            if total > 0:
                llr_value = llr(ContingencyTable.from_counts(joint, mod_total, head_total, total))
            else:
                llr_value = None
            rows.append(
                FeatureRow(
                    compound=compound,
                    span=span,
                    sim_bw_constituents=s_bw,
                    sim_with_head=s_head,
                    sim_with_mod=s_mod,
                    llr=llr_value,
                    ppmi=ppmi_score(joint, mod_total, head_total, total),
                    lmi=lmi(joint, mod_total, head_total, total),
                )
            )
    return rows


def _format(value: float | None) -> str:
    return "" if value is None else repr(value)


def write_feature_csv(rows: list[FeatureRow], cfg: TimeSpanConfig, path: str | Path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            start, end = cfg.span_bounds(row.span)
            writer.writerow(
                [row.compound.modifier, row.compound.head, start, end]
                + [_format(row.value(name)) for name in FEATURE_NAMES]
            )


def read_feature_csv(path: str | Path, cfg: TimeSpanConfig) -> list[FeatureRow]:
    """Inverse of write_feature_csv; span indices recovered from start years."""
    rows: list[FeatureRow] = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != list(CSV_HEADER):
            raise ValueError(f"unexpected feature CSV header in {path}")
        for record in reader:
            if len(record) != len(CSV_HEADER):
                raise ValueError(f"malformed feature CSV row: {record!r}")
            compound = Compound(record[0], record[1])
            span = cfg.span_of_year(int(record[2]))
            if span is None:
                raise ValueError(f"span start {record[2]} outside configured window")
            values = [float(cell) if cell else None for cell in record[4:]]
            rows.append(FeatureRow(compound, span, *values))
    return rows

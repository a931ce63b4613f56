"""Evaluation against human compositionality ratings.

Covers rank correlation of features with ratings, a cross-validated ridge
regression that predicts ratings from the full temporal feature set, and
group-level trajectories (mean plus 95% confidence band per time span).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.stats import rankdata, t as student_t
from sklearn.impute import SimpleImputer
from sklearn.linear_model import Ridge
from sklearn.metrics import r2_score
from sklearn.model_selection import KFold
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from .extraction import Compound
from .features import FEATURE_NAMES, FeatureRow

log = logging.getLogger(__name__)

RATING_COLUMNS = ("modifier_mean", "head_mean", "compound_mean")
RATING_MIN = 0.0
RATING_MAX = 5.0

GROUP_LABELS = ("low", "med", "high")
# Half-open [0, 2) and [2, 4); the top group is closed at 5.
GROUP_BOUNDS = {"low": (0.0, 2.0), "med": (2.0, 4.0), "high": (4.0, 5.0)}


@dataclass(frozen=True)
class RatingsRecord:
    compound: Compound
    modifier_mean: float
    head_mean: float
    compound_mean: float

    def __post_init__(self) -> None:
        for name in RATING_COLUMNS:
            value = getattr(self, name)
            if not (RATING_MIN <= value <= RATING_MAX):
                raise ValueError(
                    f"{name}={value} outside [{RATING_MIN}, {RATING_MAX}] "
                    f"for {self.compound.key!r}"
                )

    def value(self, column: str) -> float:
        if column not in RATING_COLUMNS:
            raise ValueError(f"unknown rating column {column!r}")
        return getattr(self, column)


def load_ratings(path: str | Path) -> list[RatingsRecord]:
    """Read a ratings CSV with columns compound,modifier_mean,head_mean,compound_mean.

    The compound column holds "modifier head" with a single space.  Duplicate
    compounds are an error.
    """
    records: list[RatingsRecord] = []
    seen: set[Compound] = set()
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        expected = ["compound", *RATING_COLUMNS]
        if reader.fieldnames != expected:
            raise ValueError(f"ratings header must be {expected}, got {reader.fieldnames}")
        for i, row in enumerate(reader, start=2):
            try:
                compound = Compound.from_key(row["compound"])
                record = RatingsRecord(
                    compound,
                    float(row["modifier_mean"]),
                    float(row["head_mean"]),
                    float(row["compound_mean"]),
                )
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{i}: bad ratings row: {exc}") from exc
            if compound in seen:
                raise ValueError(f"{path}:{i}: duplicate compound {compound.key!r}")
            seen.add(compound)
            records.append(record)
    if not records:
        raise ValueError(f"{path}: no ratings found")
    return records


def _is_missing(value: float | None) -> bool:
    return value is None or (isinstance(value, float) and math.isnan(value))


def spearman_rho(x, y) -> float | None:
    """Spearman correlation as Pearson over average ranks.

    Pairs with a missing member are dropped first.  Fewer than three
    surviving pairs, or zero rank variance on either side, yields None.
    """
    pairs = [
        (float(a), float(b))
        for a, b in zip(x, y, strict=True)
        if not _is_missing(a) and not _is_missing(b)
    ]
    if len(pairs) < 3:
        return None
    rx = rankdata([a for a, _ in pairs], method="average")
    ry = rankdata([b for _, b in pairs], method="average")
    if np.ptp(rx) == 0 or np.ptp(ry) == 0:
        return None
    return float(np.corrcoef(rx, ry)[0, 1])


def _per_compound_scalars(rows: list[FeatureRow]) -> dict[Compound, dict[str, float | None]]:
    """Reduce temporal features to one scalar per compound: the mean over
    the spans where the feature is defined (None when it never is)."""
    collected: dict[Compound, dict[str, list[float]]] = {}
    for row in rows:
        slot = collected.setdefault(row.compound, {name: [] for name in FEATURE_NAMES})
        for name in FEATURE_NAMES:
            value = row.value(name)
            if not _is_missing(value):
                slot[name].append(value)
    return {
        compound: {
            name: (sum(vals) / len(vals) if vals else None)
            for name, vals in slots.items()
        }
        for compound, slots in collected.items()
    }


def correlation_table(
    rows: list[FeatureRow], ratings: list[RatingsRecord]
) -> dict[str, dict[str, float | None]]:
    """Spearman rho of every feature against every rating column.

    Compounds present on only one side are excluded (and logged); a cell is
    None when too few matched pairs remain.
    """
    scalars = _per_compound_scalars(rows)
    matched = [r for r in ratings if r.compound in scalars]
    unmatched = sorted(r.compound.key for r in ratings if r.compound not in scalars)
    if unmatched:
        log.warning(
            "%d rated compounds have no features (e.g. %s)",
            len(unmatched),
            ", ".join(unmatched[:5]),
        )
    table: dict[str, dict[str, float | None]] = {}
    for name in FEATURE_NAMES:
        xs = [scalars[r.compound][name] for r in matched]
        table[name] = {
            column: spearman_rho(xs, [r.value(column) for r in matched])
            for column in RATING_COLUMNS
        }
    return table


def feature_matrix(
    rows: list[FeatureRow],
    compounds: list[Compound],
    num_spans: int,
) -> np.ndarray:
    """Concatenate the six features over all spans into one row per compound.

    Missing values become NaN; downstream imputation handles them.
    """
    index = {compound: i for i, compound in enumerate(compounds)}
    x = np.full((len(compounds), num_spans * len(FEATURE_NAMES)), np.nan)
    for row in rows:
        i = index.get(row.compound)
        if i is None or not 0 <= row.span < num_spans:
            continue
        base = row.span * len(FEATURE_NAMES)
        for j, name in enumerate(FEATURE_NAMES):
            value = row.value(name)
            if not _is_missing(value):
                x[i, base + j] = value
    return x


def regression_r2(
    rows: list[FeatureRow],
    ratings: list[RatingsRecord],
    num_spans: int,
    target: str = "compound_mean",
    folds: int = 5,
    repeats: int = 10,
    alpha: float = 1.0,
    seed: int = 0,
) -> tuple[float, float]:
    """Repeated k-fold CV of a ridge regression from features to a rating.

    Predictors are mean-imputed and standardized inside each training fold.
    Returns (mean, sd) where both are taken over the per-repeat mean R2.
    """
    scalars = {row.compound for row in rows}
    matched = sorted(
        (r for r in ratings if r.compound in scalars), key=lambda r: r.compound.key
    )
    if len(matched) < 2 * folds:
        raise ValueError(
            f"need at least {2 * folds} rated compounds with features, have {len(matched)}"
        )
    compounds = [r.compound for r in matched]
    x = feature_matrix(rows, compounds, num_spans)
    y = np.array([r.value(target) for r in matched])

    states = np.random.SeedSequence(seed).generate_state(repeats)
    repeat_means = []
    for r in range(repeats):
        splitter = KFold(n_splits=folds, shuffle=True, random_state=int(states[r]))
        fold_scores = []
        for train, test in splitter.split(x):
            model = make_pipeline(
                SimpleImputer(strategy="mean", keep_empty_features=True),
                StandardScaler(),
                Ridge(alpha=alpha),
            )
            model.fit(x[train], y[train])
            fold_scores.append(r2_score(y[test], model.predict(x[test])))
        repeat_means.append(float(np.mean(fold_scores)))
    mean = float(np.mean(repeat_means))
    sd = float(np.std(repeat_means, ddof=1)) if repeats > 1 else 0.0
    return mean, sd


@dataclass(frozen=True)
class CompositionGroup:
    label: str
    members: frozenset[Compound]


def group_compounds(ratings: list[RatingsRecord]) -> list[CompositionGroup]:
    """Partition by compound_mean into low [0,2), med [2,4), high [4,5]."""
    buckets: dict[str, set[Compound]] = {label: set() for label in GROUP_LABELS}
    for record in ratings:
        score = record.compound_mean
        if score < 2.0:
            buckets["low"].add(record.compound)
        elif score < 4.0:
            buckets["med"].add(record.compound)
        else:
            buckets["high"].add(record.compound)
    return [CompositionGroup(label, frozenset(buckets[label])) for label in GROUP_LABELS]


@dataclass(frozen=True)
class TrajectoryPoint:
    group: str
    feature: str
    span: int
    mean: float
    ci_low: float
    ci_high: float
    n: int


@dataclass(frozen=True)
class TrajectoryDelta:
    group: str
    feature: str
    span_from: int
    span_to: int
    delta: float


def trajectory_stats(
    rows: list[FeatureRow],
    groups: list[CompositionGroup],
    feature: str,
    confidence: float = 0.95,
) -> tuple[list[TrajectoryPoint], list[TrajectoryDelta]]:
    """Group means over time with Student-t confidence intervals.

    Spans where a group has no defined values are omitted with a warning;
    singleton spans get a degenerate interval equal to the mean.  The delta
    series records consecutive-span changes of the group mean.
    """
    if feature not in FEATURE_NAMES:
        raise ValueError(f"unknown feature {feature!r}")
    if not 0 < confidence < 1:
        raise ValueError("confidence must be in (0, 1)")
    values: dict[tuple[str, int], list[float]] = {}
    for group in groups:
        for row in rows:
            if row.compound not in group.members:
                continue
            value = row.value(feature)
            if not _is_missing(value):
                values.setdefault((group.label, row.span), []).append(value)

    spans = sorted({span for _, span in values})
    points: list[TrajectoryPoint] = []
    deltas: list[TrajectoryDelta] = []
    for group in groups:
        means: dict[int, float] = {}
        for span in spans:
            sample = values.get((group.label, span))
            if not sample:
                if group.members:
                    log.warning(
                        "group %r has no %s values in span %d", group.label, feature, span
                    )
                continue
            n = len(sample)
            mean = float(np.mean(sample))
            means[span] = mean
            if n == 1:
                log.warning(
                    "group %r span %d: single observation, degenerate interval",
                    group.label,
                    span,
                )
                half = 0.0
            else:
                sd = float(np.std(sample, ddof=1))
                half = float(
                    student_t.ppf(0.5 + confidence / 2.0, n - 1) * sd / math.sqrt(n)
                )
            points.append(
                TrajectoryPoint(group.label, feature, span, mean, mean - half, mean + half, n)
            )
        for span in spans:
            if span in means and span + 1 in means:
                deltas.append(
                    TrajectoryDelta(
                        group.label, feature, span, span + 1, means[span + 1] - means[span]
                    )
                )
    return points, deltas


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(value)


def write_correlations_csv(
    table: dict[str, dict[str, float | None]], path: str | Path
) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["feature", *RATING_COLUMNS])
        for name in FEATURE_NAMES:
            writer.writerow([name] + [_fmt(table[name][col]) for col in RATING_COLUMNS])


def write_r2_grid_csv(
    grid: list[tuple[str, int, float | None, float | None]], path: str | Path
) -> None:
    """Rows are (span label, cutoff, mean R2, sd); None marks a config that
    could not be evaluated."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["span", "cutoff", "mean_r2", "sd"])
        for span, cutoff, mean, sd in grid:
            writer.writerow([span, cutoff, _fmt(mean), _fmt(sd)])


def write_trajectories_csv(points, cfg, path: str | Path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["group", "feature", "span_start", "mean", "ci_low", "ci_high", "n"])
        for p in points:
            start, _ = cfg.span_bounds(p.span)
            writer.writerow(
                [p.group, p.feature, start, repr(p.mean), repr(p.ci_low), repr(p.ci_high), p.n]
            )


def write_deltas_csv(deltas, cfg, path: str | Path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["group", "feature", "span_start", "next_span_start", "delta"])
        for d in deltas:
            start_from, _ = cfg.span_bounds(d.span_from)
            start_to, _ = cfg.span_bounds(d.span_to)
            writer.writerow([d.group, d.feature, start_from, start_to, repr(d.delta)])

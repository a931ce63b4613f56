"""End-to-end experiment runs with deterministic artifacts and a manifest.

A run is described by a RunConfig; ``run_pipeline`` executes the requested
experiments, writes CSV/NPZ artifacts into the output directory, and records
a manifest.json from which ``replay`` can reproduce the run byte for byte.
Any stage failure removes the partial outputs and surfaces the stage name.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from itertools import repeat
from pathlib import Path

from matplotlib import rc_context
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from .evaluation import (
    GROUP_LABELS,
    RATING_COLUMNS,
    RatingsRecord,
    correlation_table,
    group_compounds,
    load_ratings,
    regression_r2,
    trajectory_stats,
    write_correlations_csv,
    write_deltas_csv,
    write_r2_grid_csv,
    write_trajectories_csv,
)
from .extraction import (
    SPAN_LENGTHS,
    CoocCounts,
    TimeSpanConfig,
    accumulate_counts,
    apply_cutoff,
    merge_counts,
    restrict_to_compounds,
    retain_all_spans,
    save_counts,
)
from .features import FEATURE_NAMES, build_feature_table, write_feature_csv
from .ingest import IngestStats, stream_corpus
from .space import (
    SV_EXPONENTS,
    assemble_matrix,
    ppmi_transform,
    row_normalize,
    save_space,
    truncated_svd,
)

log = logging.getLogger(__name__)

EXPERIMENTS = ("space", "features", "correlations", "trajectories", "grid")
GRID_CUTOFFS = (20, 50, 100)


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name and the cause."""

    def __init__(self, stage: str, cause: BaseException | str):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


@dataclass(frozen=True)
class RunConfig:
    corpus: tuple[str, ...]
    out_dir: str
    ratings: str | None = None
    experiments: tuple[str, ...] = ("space", "features")
    span_length: int | None = 20
    cutoff: int = 100
    dim: int = 300
    seed: int = 0
    start_year: int = 1800
    end_year: int = 2000
    threads: int = 1
    sv_exponent: float = 0.0
    folds: int = 5
    repeats: int = 10
    ridge_alpha: float = 1.0
    target_rating: str = "compound_mean"

    def validate(self) -> None:
        if not self.corpus:
            raise ValueError("corpus: at least one input file is required")
        if not self.out_dir:
            raise ValueError("out_dir: an output directory is required")
        for name in self.experiments:
            if name not in EXPERIMENTS:
                raise ValueError(f"experiments: unknown experiment {name!r}")
        if not self.experiments:
            raise ValueError("experiments: nothing to run")
        if self.span_length not in SPAN_LENGTHS:
            raise ValueError(
                f"span_length: must be one of {SPAN_LENGTHS}, got {self.span_length}"
            )
        if self.cutoff < 1:
            raise ValueError(f"cutoff: must be at least 1, got {self.cutoff}")
        if self.dim < 1:
            raise ValueError(f"dim: must be at least 1, got {self.dim}")
        if self.start_year >= self.end_year:
            raise ValueError(
                f"start_year: {self.start_year} must precede end_year {self.end_year}"
            )
        if self.threads < 1:
            raise ValueError(f"threads: must be at least 1, got {self.threads}")
        if self.sv_exponent not in SV_EXPONENTS:
            raise ValueError(
                f"sv_exponent: must be one of {SV_EXPONENTS}, got {self.sv_exponent}"
            )
        if self.folds < 2:
            raise ValueError(f"folds: must be at least 2, got {self.folds}")
        if self.repeats < 1:
            raise ValueError(f"repeats: must be at least 1, got {self.repeats}")
        if self.ridge_alpha <= 0:
            raise ValueError(f"ridge_alpha: must be positive, got {self.ridge_alpha}")
        if self.target_rating not in RATING_COLUMNS:
            raise ValueError(
                f"target_rating: must be one of {RATING_COLUMNS}, got {self.target_rating!r}"
            )
        needs_ratings = {"correlations", "trajectories", "grid"}
        if needs_ratings & set(self.experiments) and self.ratings is None:
            raise ValueError(
                "ratings: a ratings file is required for "
                + ", ".join(sorted(needs_ratings & set(self.experiments)))
            )

    def span_config(self) -> TimeSpanConfig:
        return TimeSpanConfig(self.span_length, self.start_year, self.end_year)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["corpus"] = list(self.corpus)
        d["experiments"] = list(self.experiments)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        prepared = dict(data)
        for key in ("corpus", "experiments"):
            if key in prepared:
                prepared[key] = tuple(prepared[key])
        return cls(**prepared)


def _count_file(path: str, span_cfg: TimeSpanConfig) -> tuple[CoocCounts, IngestStats]:
    stats = IngestStats()
    counts = accumulate_counts(stream_corpus([path], stats), span_cfg)
    return counts, stats


def _count_corpus(
    paths: tuple[str, ...], span_cfg: TimeSpanConfig, threads: int
) -> tuple[CoocCounts, IngestStats]:
    if threads <= 1 or len(paths) <= 1:
        stats = IngestStats()
        counts = accumulate_counts(stream_corpus(paths, stats), span_cfg)
        return counts, stats
    stats = IngestStats()
    with ProcessPoolExecutor(max_workers=min(threads, len(paths))) as pool:
        parts = list(pool.map(_count_file, paths, repeat(span_cfg)))
    counts = merge_counts(part for part, _ in parts)
    for _, part_stats in parts:
        stats.add(part_stats)
    return counts, stats


def _build_space(restricted: CoocCounts, cfg: RunConfig):
    matrix = ppmi_transform(assemble_matrix(restricted))
    space = truncated_svd(
        matrix, dim=cfg.dim, seed=cfg.seed, sv_exponent=cfg.sv_exponent
    )
    return matrix, row_normalize(space)


def _grid_rows(
    cfg: RunConfig, ratings: list[RatingsRecord]
) -> list[tuple[str, int, float | None, float | None]]:
    """R2 of the ridge regression for every span-length/cutoff combination.

    A configuration that cannot be evaluated (nothing retained, or too few
    rated compounds left) contributes a row with empty values rather than
    breaking the sweep.  The factorization rank is capped by the matrix
    shape so small corpora remain sweepable.
    """
    rows: list[tuple[str, int, float | None, float | None]] = []
    for span_length in SPAN_LENGTHS:
        label = "none" if span_length is None else str(span_length)
        span_cfg = TimeSpanConfig(span_length, cfg.start_year, cfg.end_year)
        counts, _ = _count_corpus(cfg.corpus, span_cfg, cfg.threads)
        for cutoff in GRID_CUTOFFS:
            try:
                filtered = apply_cutoff(counts, cutoff)
                retained = retain_all_spans(filtered, span_cfg)
                if not retained:
                    raise ValueError("no compounds retained")
                restricted = restrict_to_compounds(filtered, retained)
                matrix = ppmi_transform(assemble_matrix(restricted))
                dim = min(cfg.dim, min(matrix.matrix.shape))
                space = row_normalize(
                    truncated_svd(matrix, dim=dim, seed=cfg.seed, sv_exponent=cfg.sv_exponent)
                )
                feature_rows = build_feature_table(space, restricted, retained, span_cfg)
                mean, sd = regression_r2(
                    feature_rows,
                    ratings,
                    span_cfg.num_spans,
                    target=cfg.target_rating,
                    folds=cfg.folds,
                    repeats=cfg.repeats,
                    alpha=cfg.ridge_alpha,
                    seed=cfg.seed,
                )
                rows.append((label, cutoff, mean, sd))
            except ValueError as exc:
                log.warning("grid span=%s cutoff=%d not evaluable: %s", label, cutoff, exc)
                rows.append((label, cutoff, None, None))
    return rows


_GROUP_COLORS = {"low": "tab:red", "med": "tab:gray", "high": "tab:blue"}


def emit_plot(points, cfg: TimeSpanConfig, feature: str, path: str | Path) -> None:
    """Trajectory plot: one line per group with its confidence band, SVG out."""
    if feature not in FEATURE_NAMES:
        raise ValueError(f"unknown feature {feature!r}")
    relevant = [p for p in points if p.feature == feature]
    spans = sorted({p.span for p in relevant})
    fig = Figure(figsize=(7.0, 4.0))
    FigureCanvasSVG(fig)
    ax = fig.add_subplot()
    for group in GROUP_LABELS:
        by_span = {p.span: p for p in relevant if p.group == group}
        if not by_span:
            continue
        xs = [cfg.span_bounds(s)[0] for s in spans]
        means = [by_span[s].mean if s in by_span else float("nan") for s in spans]
        lows = [by_span[s].ci_low if s in by_span else float("nan") for s in spans]
        highs = [by_span[s].ci_high if s in by_span else float("nan") for s in spans]
        color = _GROUP_COLORS[group]
        ax.plot(xs, means, marker="o", markersize=3, color=color, label=group)
        ax.fill_between(xs, lows, highs, color=color, alpha=0.2, linewidth=0)
    ax.set_xlabel("span start year")
    ax.set_ylabel(feature)
    ax.legend(title="composition group")
    fig.tight_layout()
    with rc_context({"svg.hashsalt": "trajectories"}):
        fig.savefig(path, format="svg", metadata={"Date": None})


def run_pipeline(cfg: RunConfig) -> dict:
    """Execute the configured experiments; returns the manifest."""
    cfg.validate()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    span_cfg = cfg.span_config()
    wants = set(cfg.experiments)
    main_needed = bool(wants - {"grid"})
    needs_features = bool(wants & {"features", "correlations", "trajectories"})

    written: list[Path] = []
    outputs: dict[str, str] = {}

    def emit(name: str, filename: str) -> Path:
        path = out / filename
        written.append(path)
        outputs[name] = filename
        return path

    stage = "config"
    try:
        ratings = None
        if cfg.ratings is not None:
            stage = "ratings"
            ratings = load_ratings(cfg.ratings)

        stats = IngestStats()
        manifest_stats: dict = {}
        if main_needed:
            stage = "ingest"
            counts, stats = _count_corpus(cfg.corpus, span_cfg, cfg.threads)
            stage = "cutoff"
            filtered = apply_cutoff(counts, cfg.cutoff)
            stage = "retention"
            retained = retain_all_spans(filtered, span_cfg)
            if not retained:
                raise ValueError(
                    f"no compounds retained at cutoff {cfg.cutoff} "
                    f"over spans of {cfg.span_length}"
                )
            restricted = restrict_to_compounds(filtered, retained)
            stage = "counts"
            save_counts(restricted, emit("counts", "counts.tsv"), emit("freqs", "freqs.tsv"))

            stage = "space"
            matrix, space = _build_space(restricted, cfg)
            if "space" in wants:
                save_space(space, emit("space", "space.npz"))
            manifest_stats.update(
                {
                    "out_of_range": counts.out_of_range,
                    "retained_compounds": len(retained),
                    "matrix_shape": list(matrix.matrix.shape),
                    "spans": span_cfg.num_spans,
                }
            )

            if needs_features:
                stage = "features"
                feature_rows = build_feature_table(space, restricted, retained, span_cfg)
                write_feature_csv(feature_rows, span_cfg, emit("features", "features.csv"))

            if "correlations" in wants:
                stage = "correlations"
                table = correlation_table(feature_rows, ratings)
                write_correlations_csv(table, emit("correlations", "correlations.csv"))

            if "trajectories" in wants:
                stage = "trajectories"
                groups = group_compounds(ratings)
                all_points = []
                all_deltas = []
                for feature in FEATURE_NAMES:
                    points, deltas = trajectory_stats(feature_rows, groups, feature)
                    all_points.extend(points)
                    all_deltas.extend(deltas)
                write_trajectories_csv(
                    all_points, span_cfg, emit("trajectories", "trajectories.csv")
                )
                write_deltas_csv(
                    all_deltas, span_cfg, emit("trajectory_deltas", "trajectory_deltas.csv")
                )
                for feature in FEATURE_NAMES:
                    emit_plot(
                        all_points,
                        span_cfg,
                        feature,
                        emit(f"plot_{feature}", f"trajectory_{feature}.svg"),
                    )

        if "grid" in wants:
            stage = "grid"
            grid = _grid_rows(cfg, ratings)
            write_r2_grid_csv(grid, emit("r2_grid", "r2_grid.csv"))

        stage = "manifest"
        manifest = {
            "config": cfg.to_dict(),
            "outputs": dict(sorted(outputs.items())),
            "stats": {
                "files": list(stats.files),
                "lines": stats.lines,
                "records": stats.records,
                "blank": stats.blank,
                "malformed": stats.malformed,
                **manifest_stats,
            },
        }
        manifest_path = out / "manifest.json"
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return manifest
    except StageError:
        raise
    except Exception as exc:
        for path in written:
            path.unlink(missing_ok=True)
        raise StageError(stage, exc) from exc


def replay(manifest_path: str | Path) -> dict:
    """Re-run a recorded configuration; outputs land in the same directory."""
    with open(manifest_path) as handle:
        manifest = json.load(handle)
    if "config" not in manifest:
        raise ValueError(f"{manifest_path} has no config section")
    cfg = RunConfig.from_dict(manifest["config"])
    return run_pipeline(cfg)

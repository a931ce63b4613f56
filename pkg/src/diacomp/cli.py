"""Command-line interface.

Every corpus-consuming subcommand funnels into the same pipeline; the
subcommand only selects which experiments run.  ``synth`` generates a
self-contained test corpus with known compositionality scores.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .extraction import SPAN_LENGTHS, TimeSpanConfig, detect_noun_noun
from .ingest import IngestStats, stream_corpus
from .pipeline import RunConfig, StageError, run_pipeline
from .synth import SyntheticSpec, generate_synthetic_corpus

_COMMAND_EXPERIMENTS = {
    "build-space": ("space",),
    "features": ("features",),
    "evaluate": ("features", "correlations"),
    "trajectories": ("features", "trajectories"),
    "grid": ("grid",),
}


def _span_length(value: str) -> int | None:
    if value == "none":
        return None
    try:
        parsed = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid span length {value!r}")
    if parsed not in SPAN_LENGTHS:
        raise argparse.ArgumentTypeError(
            f"span length must be one of none, 1, 10, 20, 50, 100; got {value}"
        )
    return parsed


def _add_run_flags(parser: argparse.ArgumentParser, ratings_required: bool) -> None:
    parser.add_argument("corpus", nargs="+", help="5-gram TSV files (.gz accepted)")
    parser.add_argument(
        "--ratings",
        required=ratings_required,
        help="CSV of human compositionality ratings",
    )
    parser.add_argument(
        "--spans",
        type=_span_length,
        default=20,
        metavar="{none,1,10,20,50,100}",
        help="time span length in years, or 'none' for a single span (default 20)",
    )
    parser.add_argument("--cutoff", type=int, default=100, help="per-span frequency cutoff")
    parser.add_argument("--dim", type=int, default=300, help="embedding dimensionality")
    parser.add_argument("--seed", type=int, default=0, help="master random seed")
    parser.add_argument("--start-year", type=int, default=1800)
    parser.add_argument("--end-year", type=int, default=2000)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="parallel corpus shards")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diacomp",
        description="Diachronic noun-compound compositionality toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-stats", help="parse a corpus and report stream statistics")
    p.add_argument("corpus", nargs="+")
    p.set_defaults(func=_cmd_ingest_stats)

    for command, help_text in (
        ("build-space", "build and save the joint embedding space"),
        ("features", "compute per-span compositionality features"),
        ("evaluate", "correlate features with human ratings"),
        ("trajectories", "group trajectories over time with confidence bands"),
        ("grid", "R2 sweep over span lengths and frequency cutoffs"),
    ):
        p = sub.add_parser(command, help=help_text)
        _add_run_flags(p, ratings_required=command in ("evaluate", "trajectories", "grid"))
        p.set_defaults(func=_cmd_run, experiments=_COMMAND_EXPERIMENTS[command])

    p = sub.add_parser("synth", help="generate a synthetic corpus with planted scores")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--compounds", type=int, default=90)
    p.add_argument("--tokens-per-span", type=int, default=200)
    p.add_argument("--cutoff", type=int, default=100)
    p.add_argument(
        "--divergence-span",
        default="5",
        help="span index where schedules diverge, or 'none' (default 5)",
    )
    p.add_argument(
        "--spans", type=_span_length, default=20, metavar="{none,1,10,20,50,100}"
    )
    p.add_argument("--start-year", type=int, default=1800)
    p.add_argument("--end-year", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    return parser


def _cmd_ingest_stats(args: argparse.Namespace) -> int:
    stats = IngestStats()
    year_min = None
    year_max = None
    mass = 0
    occurrences = 0
    compounds = set()
    try:
        for record in stream_corpus(args.corpus, stats):
            year_min = record.year if year_min is None else min(year_min, record.year)
            year_max = record.year if year_max is None else max(year_max, record.year)
            mass += record.match_count
            for compound, _ in detect_noun_noun(record):
                occurrences += 1
                compounds.add(compound)
    except OSError as exc:
        raise StageError("ingest", exc) from exc
    print(stats.summary())
    years = f"{year_min}..{year_max}" if year_min is not None else "none"
    print(f"years: {years}")
    print(f"match_count mass: {mass}")
    print(f"noun-noun occurrences: {occurrences} ({len(compounds)} distinct compounds)")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = RunConfig(
        corpus=tuple(args.corpus),
        out_dir=args.out,
        ratings=args.ratings,
        experiments=tuple(args.experiments),
        span_length=args.spans,
        cutoff=args.cutoff,
        dim=args.dim,
        seed=args.seed,
        start_year=args.start_year,
        end_year=args.end_year,
        threads=args.threads,
    )
    manifest = run_pipeline(cfg)
    for name in sorted(manifest["outputs"]):
        print(f"{name}: {manifest['outputs'][name]}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    if args.divergence_span == "none":
        divergence = None
    else:
        try:
            divergence = int(args.divergence_span)
        except ValueError:
            raise StageError(
                "config", f"invalid --divergence-span {args.divergence_span!r}"
            )
    spec = SyntheticSpec(
        n_compounds=args.compounds,
        spans=TimeSpanConfig(args.spans, args.start_year, args.end_year),
        tokens_per_span=args.tokens_per_span,
        cutoff=args.cutoff,
        divergence_span=divergence,
        seed=args.seed,
    )
    result = generate_synthetic_corpus(spec, args.out)
    for path in result.corpus_paths:
        print(f"corpus: {path}")
    print(f"ratings: {result.ratings_path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error [config]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error [io]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

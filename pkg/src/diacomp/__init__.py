"""Diachronic noun-compound compositionality toolkit.

Streams POS-tagged 5-gram corpora, tracks noun-noun compounds across time
spans, factorizes all spans into one embedding space, and evaluates
compositionality features against human ratings.
"""

from .evaluation import (
    CompositionGroup,
    RatingsRecord,
    correlation_table,
    group_compounds,
    load_ratings,
    regression_r2,
    spearman_rho,
    trajectory_stats,
)
from .extraction import (
    Compound,
    CoocCounts,
    Target,
    TargetKind,
    TimeSpanConfig,
    accumulate_counts,
    apply_cutoff,
    detect_noun_noun,
    merge_counts,
    restrict_to_compounds,
    retain_all_spans,
)
from .features import (
    FEATURE_NAMES,
    ContingencyTable,
    FeatureRow,
    build_feature_table,
    llr,
    lmi,
    pmi,
    ppmi_score,
)
from .ingest import (
    IngestStats,
    MalformedLineError,
    NgramRecord,
    Pos,
    Token,
    parse_ngram_line,
    stream_corpus,
)
from .pipeline import RunConfig, StageError, replay, run_pipeline
from .space import (
    CoocMatrix,
    EmbeddingSpace,
    assemble_matrix,
    cosine,
    load_space,
    ppmi_transform,
    randomized_svd,
    row_normalize,
    save_space,
    truncated_svd,
)
from .synth import SyntheticSpec, SynthResult, generate_synthetic_corpus

__version__ = "0.1.0"

__all__ = [
    "Compound",
    "CompositionGroup",
    "ContingencyTable",
    "CoocCounts",
    "CoocMatrix",
    "EmbeddingSpace",
    "FEATURE_NAMES",
    "FeatureRow",
    "IngestStats",
    "MalformedLineError",
    "NgramRecord",
    "Pos",
    "RatingsRecord",
    "RunConfig",
    "StageError",
    "SyntheticSpec",
    "SynthResult",
    "Target",
    "TargetKind",
    "TimeSpanConfig",
    "Token",
    "accumulate_counts",
    "apply_cutoff",
    "assemble_matrix",
    "build_feature_table",
    "correlation_table",
    "cosine",
    "detect_noun_noun",
    "generate_synthetic_corpus",
    "group_compounds",
    "llr",
    "lmi",
    "load_ratings",
    "load_space",
    "merge_counts",
    "parse_ngram_line",
    "pmi",
    "ppmi_score",
    "ppmi_transform",
    "randomized_svd",
    "regression_r2",
    "replay",
    "restrict_to_compounds",
    "retain_all_spans",
    "row_normalize",
    "run_pipeline",
    "save_space",
    "spearman_rho",
    "stream_corpus",
    "trajectory_stats",
    "truncated_svd",
]

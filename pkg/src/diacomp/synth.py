"""Deterministic synthetic 5-gram corpus with a planted compositionality signal.

Each synthetic compound carries a score in [0, 5].  Two mechanisms encode it:

* context mixing -- a compound's context tokens come from its constituents'
  signature vocabularies with probability score/5, otherwise from a
  compound-private vocabulary, so similarity features rise with the score;
* marginal inflation -- every constituent also occurs in decoy compounds
  whose mass shrinks as the score grows, so association features (PMI-family,
  LLR) rise with the score as well.

Before an optional divergence span the schedule is identical for all
compounds; from that span on it follows the scores.  Output is one TSV file
per span plus a ratings CSV, byte-stable for a given spec.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

from .extraction import Compound, TimeSpanConfig

SIGNATURE_WORDS = 50  # per constituent role
PRIVATE_WORDS = 50  # per compound
NOISE_WORDS = 500  # shared by everything
NOISE_RATE = 0.2
DECOY_MIN_MASS = 40
DECOY_MASS_RANGE = 600
FILLER_POOL = 8
MAX_MATCH_COUNT = 3

# Context tokens never get NOUN, so the planted pair is the only compound
# on its line.
_CONTEXT_TAGS = ("ADJ", "VERB", "ADV", "ADP", "DET")


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the generated corpus.

    ``tokens_per_span`` is the exact match-count mass each scored compound
    receives per span; decoy mass comes on top of it.  ``divergence_span``
    of None plants the score-dependent schedule from the first span.
    """

    n_compounds: int = 90
    scores: tuple[float, ...] | None = None
    spans: TimeSpanConfig = field(default_factory=TimeSpanConfig)
    tokens_per_span: int = 200
    cutoff: int = 100
    divergence_span: int | None = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_compounds < 1:
            raise ValueError("n_compounds must be at least 1")
        if self.cutoff < 1:
            raise ValueError("cutoff must be at least 1")
        if self.tokens_per_span < self.cutoff:
            raise ValueError(
                f"tokens_per_span={self.tokens_per_span} cannot survive "
                f"cutoff={self.cutoff}; no compound would be retained"
            )
        if self.scores is not None:
            if len(self.scores) != self.n_compounds:
                raise ValueError(
                    f"got {len(self.scores)} scores for {self.n_compounds} compounds"
                )
            for s in self.scores:
                if not 0.0 <= s <= 5.0:
                    raise ValueError(f"score {s} outside [0, 5]")
        if self.divergence_span is not None and not (
            0 <= self.divergence_span < self.spans.num_spans
        ):
            raise ValueError(
                f"divergence_span {self.divergence_span} outside "
                f"[0, {self.spans.num_spans})"
            )

    def resolved_scores(self) -> tuple[float, ...]:
        if self.scores is not None:
            return self.scores
        n = self.n_compounds
        if n == 1:
            return (2.5,)
        return tuple(5.0 * i / (n - 1) for i in range(n))


@dataclass(frozen=True)
class SynthResult:
    corpus_paths: tuple[Path, ...]
    ratings_path: Path
    scores: dict[Compound, float]


def _tagged(words: list[str]) -> list[str]:
    return [f"{w}_{_CONTEXT_TAGS[k % len(_CONTEXT_TAGS)]}" for k, w in enumerate(words)]


def _decoy_mass(score: float, diverged: bool) -> int:
    if not diverged:
        return DECOY_MIN_MASS + DECOY_MASS_RANGE // 2
    return DECOY_MIN_MASS + round(DECOY_MASS_RANGE * (1.0 - score / 5.0))


class _Vocab:
    """Index-derived word lists; naming is arbitrary but stable."""

    def __init__(self, n: int) -> None:
        self.mod_tok = [f"mod{i:03d}_NOUN" for i in range(n)]
        self.head_tok = [f"head{i:03d}_NOUN" for i in range(n)]
        self.sig_mod = [
            _tagged([f"sm{i:03d}w{k:02d}" for k in range(SIGNATURE_WORDS)]) for i in range(n)
        ]
        self.sig_head = [
            _tagged([f"sh{i:03d}w{k:02d}" for k in range(SIGNATURE_WORDS)]) for i in range(n)
        ]
        self.sig_both = [self.sig_mod[i] + self.sig_head[i] for i in range(n)]
        self.private = [
            _tagged([f"pv{i:03d}w{k:02d}" for k in range(PRIVATE_WORDS)]) for i in range(n)
        ]
        self.noise = _tagged([f"nz{k:03d}" for k in range(NOISE_WORDS)])
        self.filler_mod = [f"fmod{j}_NOUN" for j in range(FILLER_POOL)]
        self.filler_head = [f"fhead{j}_NOUN" for j in range(FILLER_POOL)]


def _emit_pair(
    out: list[str],
    rng: random.Random,
    left: str,
    right: str,
    mass: int,
    p_signal: float,
    signal: list[str],
    private: list[str],
    noise: list[str],
    year_lo: int,
    year_hi: int,
) -> None:
    """Append 5-gram lines for one pair until its match-count mass is spent."""
    remaining = mass
    while remaining > 0:
        mc = min(rng.randint(1, MAX_MATCH_COUNT), remaining)
        remaining -= mc
        ctx = []
        for _ in range(3):
            if rng.random() < NOISE_RATE:
                ctx.append(noise[rng.randrange(len(noise))])
            elif rng.random() < p_signal:
                ctx.append(signal[rng.randrange(len(signal))])
            else:
                ctx.append(private[rng.randrange(len(private))])
        pos = rng.randrange(4)
        tokens = ctx[:pos] + [left, right] + ctx[pos:]
        year = rng.randint(year_lo, year_hi - 1)
        out.append(f"{' '.join(tokens)}\t{year}\t{mc}\t1\n")


def generate_synthetic_corpus(spec: SyntheticSpec, out_dir: str | Path) -> SynthResult:
    """Write one 5-gram TSV per span plus ratings.csv; fully seed-determined."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scores = spec.resolved_scores()
    vocab = _Vocab(spec.n_compounds)
    cfg = spec.spans

    paths = []
    for span in range(cfg.num_spans):
        rng = random.Random(spec.seed * 1_000_003 + span)
        year_lo, year_hi = cfg.span_bounds(span)
        diverged = spec.divergence_span is None or span >= spec.divergence_span
        lines: list[str] = []
        for i, score in enumerate(scores):
            p_signal = score / 5.0 if diverged else 0.5
            decoy = _decoy_mass(score, diverged)
            j = i % FILLER_POOL
            _emit_pair(
                lines, rng, vocab.mod_tok[i], vocab.head_tok[i], spec.tokens_per_span,
                p_signal, vocab.sig_both[i], vocab.private[i], vocab.noise,
                year_lo, year_hi,
            )
            # Decoys anchor each constituent to its own signature vocabulary
            # and inflate its marginal frequency.
            _emit_pair(
                lines, rng, vocab.mod_tok[i], vocab.filler_head[j], decoy,
                1.0, vocab.sig_mod[i], vocab.private[i], vocab.noise,
                year_lo, year_hi,
            )
            _emit_pair(
                lines, rng, vocab.filler_mod[j], vocab.head_tok[i], decoy,
                1.0, vocab.sig_head[i], vocab.private[i], vocab.noise,
                year_lo, year_hi,
            )
        path = out / f"ngrams-{span:02d}.tsv"
        with open(path, "w", encoding="utf-8") as handle:
            handle.writelines(lines)
        paths.append(path)

    score_map = {
        Compound(f"mod{i:03d}", f"head{i:03d}"): score for i, score in enumerate(scores)
    }
    ratings_path = out / "ratings.csv"
    with open(ratings_path, "w", encoding="utf-8", newline="") as handle:
        handle.write("compound,modifier_mean,head_mean,compound_mean\n")
        for compound in sorted(score_map, key=lambda c: c.key):
            s = repr(score_map[compound])
            handle.write(f"{compound.key},{s},{s},{s}\n")

    return SynthResult(tuple(paths), ratings_path, score_map)

import random
from collections import Counter

import pytest

from diacomp.extraction import (
    Compound,
    CoocCounts,
    Target,
    TargetKind,
    TimeSpanConfig,
    accumulate_counts,
    apply_cutoff,
    compound_targets,
    contexts_for_occurrence,
    detect_noun_noun,
    load_counts,
    merge_counts,
    restrict_to_compounds,
    retain_all_spans,
    save_counts,
)
from diacomp.ingest import NgramRecord, Pos, Token, parse_ngram_line

CFG = TimeSpanConfig(20, 1800, 2000)


def rec(tagged: str, year: int = 1850, match_count: int = 1) -> NgramRecord:
    return parse_ngram_line(f"{tagged}\t{year}\t{match_count}\t1")


# --- compound detection -----------------------------------------------------


def test_detects_overlapping_pairs():
    record = rec("tax_NOUN law_NOUN reform_NOUN is_VERB near_ADV", 1899, 12)
    assert detect_noun_noun(record) == [
        (Compound("tax", "law"), (0, 1)),
        (Compound("law", "reform"), (1, 2)),
    ]


def test_detects_pair_in_last_position():
    record = rec("the_DET man_NOUN saw_VERB tax_NOUN law_NOUN")
    assert detect_noun_noun(record) == [(Compound("tax", "law"), (3, 4))]


def test_all_nouns_yield_four_pairs():
    record = rec("a_NOUN b_NOUN c_NOUN d_NOUN e_NOUN")
    assert [c.key for c, _ in detect_noun_noun(record)] == ["a b", "b c", "c d", "d e"]


def test_no_nouns_no_pairs():
    assert detect_noun_noun(rec("a_DET b_VERB c_ADJ d_ADV e_ADP")) == []


def test_single_noun_no_pairs():
    assert detect_noun_noun(rec("a_DET b_NOUN c_ADJ d_ADV e_ADP")) == []


def test_contexts_exclude_pair_and_weight_by_match_count():
    record = rec("tax_NOUN law_NOUN reform_NOUN is_VERB near_ADV", 1899, 12)
    assert contexts_for_occurrence(record, (0, 1)) == Counter(
        {"reform": 12, "is": 12, "near": 12}
    )
    assert contexts_for_occurrence(record, (1, 2)) == Counter(
        {"tax": 12, "is": 12, "near": 12}
    )


def test_contexts_merge_repeated_surfaces():
    record = rec("red_ADJ tax_NOUN law_NOUN red_ADJ red_ADJ", 1850, 3)
    assert contexts_for_occurrence(record, (1, 2)) == Counter({"red": 9})


def test_compound_requires_non_empty_parts():
    with pytest.raises(ValueError):
        Compound("", "law")


def test_compound_key_round_trip():
    compound = Compound("tax", "law")
    assert Compound.from_key(compound.key) == compound


def test_compound_targets_roles():
    comp, mod, head = compound_targets(Compound("tax", "law"))
    assert (comp.kind, comp.key) == (TargetKind.COMPOUND, "tax law")
    assert (mod.kind, mod.key) == (TargetKind.MODIFIER, "tax")
    assert (head.kind, head.key) == (TargetKind.HEAD, "law")
    # Role targets are distinct even for the same lemma.
    assert Target(TargetKind.MODIFIER, "tax") != Target(TargetKind.HEAD, "tax")


# --- time spans ---------------------------------------------------------------


def test_span_of_year_boundaries():
    assert CFG.span_of_year(1799) is None
    assert CFG.span_of_year(1800) == 0
    assert CFG.span_of_year(1819) == 0
    assert CFG.span_of_year(1820) == 1
    assert CFG.span_of_year(1999) == 9
    assert CFG.span_of_year(2000) is None


def test_span_bounds():
    assert CFG.num_spans == 10
    assert CFG.span_bounds(0) == (1800, 1820)
    assert CFG.span_bounds(9) == (1980, 2000)
    with pytest.raises(ValueError):
        CFG.span_bounds(10)


def test_last_span_clipped_to_end_year():
    cfg = TimeSpanConfig(50, 1800, 1990)
    assert cfg.num_spans == 4
    assert cfg.span_bounds(3) == (1950, 1990)
    assert cfg.span_of_year(1989) == 3


def test_none_span_length_single_bucket():
    cfg = TimeSpanConfig(None, 1800, 2000)
    assert cfg.num_spans == 1
    assert cfg.span_of_year(1801) == 0
    assert cfg.span_of_year(1999) == 0
    assert cfg.span_bounds(0) == (1800, 2000)


def test_invalid_span_length_rejected():
    with pytest.raises(ValueError):
        TimeSpanConfig(30, 1800, 2000)


def test_invalid_year_order_rejected():
    with pytest.raises(ValueError):
        TimeSpanConfig(20, 2000, 1800)


def test_required_spans_anchor_at_1800():
    assert TimeSpanConfig(20, 1700, 2000).required_spans() == tuple(range(5, 15))
    assert TimeSpanConfig(20, 1900, 2000).required_spans() == tuple(range(5))
    assert TimeSpanConfig(None, 1800, 2000).required_spans() == (0,)


# --- accumulation -------------------------------------------------------------


def test_accumulate_hand_example():
    records = [
        rec("tax_NOUN law_NOUN reform_NOUN is_VERB near_ADV", 1899, 12),
        rec("the_DET tax_NOUN law_NOUN was_VERB old_ADJ", 1905, 5),
    ]
    counts = accumulate_counts(records, CFG)

    tl = Compound("tax", "law")
    lr = Compound("law", "reform")
    assert counts.compound_freq == {
        4: Counter({tl: 12, lr: 12}),
        5: Counter({tl: 5}),
    }
    assert counts.modifier_freq == {
        4: Counter({"tax": 12, "law": 12}),
        5: Counter({"tax": 5}),
    }
    assert counts.head_freq == {
        4: Counter({"law": 12, "reform": 12}),
        5: Counter({"law": 5}),
    }
    assert counts.nn_total == Counter({4: 24, 5: 5})
    assert counts.contexts[4][Target(TargetKind.COMPOUND, "tax law")] == Counter(
        {"reform": 12, "is": 12, "near": 12}
    )
    assert counts.contexts[4][Target(TargetKind.MODIFIER, "law")] == Counter(
        {"tax": 12, "is": 12, "near": 12}
    )
    assert counts.contexts[5][Target(TargetKind.HEAD, "law")] == Counter(
        {"the": 5, "was": 5, "old": 5}
    )
    assert counts.out_of_range == 0


def test_out_of_range_records_tallied_not_counted():
    records = [
        rec("tax_NOUN law_NOUN a_DET b_DET c_DET", 1799),
        rec("tax_NOUN law_NOUN a_DET b_DET c_DET", 2000),
        rec("tax_NOUN law_NOUN a_DET b_DET c_DET", 1950),
    ]
    counts = accumulate_counts(records, CFG)
    assert counts.out_of_range == 2
    assert counts.nn_total == Counter({7: 1})


def _random_records(seed: int, n: int) -> list[NgramRecord]:
    rng = random.Random(seed)
    nouns = ["alpha", "beta", "gamma", "delta", "epsilon"]
    fillers = [("the", Pos.DET), ("ran", Pos.VERB), ("big", Pos.ADJ), ("up", Pos.ADP)]
    records = []
    for _ in range(n):
        tokens = []
        for _ in range(5):
            if rng.random() < 0.5:
                tokens.append(Token(rng.choice(nouns), Pos.NOUN))
            else:
                tokens.append(Token(*rng.choice(fillers)))
        records.append(
            NgramRecord(tuple(tokens), rng.randint(1780, 2010), rng.randint(1, 9))
        )
    return records


def test_marginal_identities_on_random_stream():
    records = _random_records(11, 400)
    counts = accumulate_counts(records, CFG)
    # Independent reconstruction of role marginals and the span total.
    for span in counts.spans():
        mods = Counter()
        heads = Counter()
        for compound, freq in counts.compound_freq[span].items():
            mods[compound.modifier] += freq
            heads[compound.head] += freq
        assert mods == counts.modifier_freq[span]
        assert heads == counts.head_freq[span]
        assert sum(counts.compound_freq[span].values()) == counts.nn_total[span]
    counts.verify_marginals()


def test_accumulation_order_independent():
    records = _random_records(12, 300)
    shuffled = records[:]
    random.Random(99).shuffle(shuffled)
    assert accumulate_counts(records, CFG) == accumulate_counts(shuffled, CFG)


def test_shard_merge_equals_whole():
    records = _random_records(13, 300)
    whole = accumulate_counts(records, CFG)
    parts = [accumulate_counts(records[i::3], CFG) for i in range(3)]
    assert merge_counts(parts) == whole
    assert merge_counts(reversed(parts)) == whole


# --- cutoff and retention -----------------------------------------------------


def test_cutoff_drops_below_threshold_keeps_verbatim():
    records = [
        rec("tax_NOUN law_NOUN a_DET b_DET c_DET", 1850, 7),
        rec("car_NOUN park_NOUN a_DET b_DET c_DET", 1850, 3),
    ]
    counts = accumulate_counts(records, CFG)
    cut = apply_cutoff(counts, 5)
    assert set(cut.compound_freq[2]) == {Compound("tax", "law")}
    assert cut.compound_freq[2][Compound("tax", "law")] == 7
    assert cut.nn_total == counts.nn_total  # totals never rescaled
    kinds = {t for t in cut.contexts[2]}
    assert Target(TargetKind.COMPOUND, "car park") not in kinds
    assert Target(TargetKind.MODIFIER, "car") not in kinds


def test_cutoff_is_per_span():
    records = [
        rec("tax_NOUN law_NOUN a_DET b_DET c_DET", 1850, 7),
        rec("tax_NOUN law_NOUN a_DET b_DET c_DET", 1950, 3),
    ]
    cut = apply_cutoff(accumulate_counts(records, CFG), 5)
    assert 2 in cut.compound_freq
    assert 7 not in cut.compound_freq


def test_cutoff_composition_and_idempotence():
    counts = accumulate_counts(_random_records(14, 500), CFG)
    via_fifty = apply_cutoff(apply_cutoff(counts, 5), 9)
    direct = apply_cutoff(counts, 9)
    assert via_fifty == direct
    assert apply_cutoff(direct, 9) == direct


def test_cutoff_rejects_non_positive():
    with pytest.raises(ValueError):
        apply_cutoff(CoocCounts(), 0)


def test_retention_requires_every_required_span():
    cfg = TimeSpanConfig(100, 1800, 2000)  # two spans
    records = [
        rec("tax_NOUN law_NOUN a_DET b_DET c_DET", 1850, 9),
        rec("tax_NOUN law_NOUN a_DET b_DET c_DET", 1950, 9),
        rec("car_NOUN park_NOUN a_DET b_DET c_DET", 1850, 9),
    ]
    counts = apply_cutoff(accumulate_counts(records, cfg), 1)
    assert retain_all_spans(counts, cfg) == {Compound("tax", "law")}


def test_retention_ignores_spans_before_1800():
    cfg = TimeSpanConfig(100, 1700, 2000)  # spans start at 1700, anchor at 1800
    records = [
        rec("tax_NOUN law_NOUN a_DET b_DET c_DET", 1850, 9),
        rec("tax_NOUN law_NOUN a_DET b_DET c_DET", 1950, 9),
    ]
    counts = apply_cutoff(accumulate_counts(records, cfg), 1)
    assert retain_all_spans(counts, cfg) == {Compound("tax", "law")}


def test_retention_applies_cutoff_per_span():
    cfg = TimeSpanConfig(100, 1800, 2000)
    records = [
        rec("tax_NOUN law_NOUN a_DET b_DET c_DET", 1850, 9),
        rec("tax_NOUN law_NOUN a_DET b_DET c_DET", 1950, 2),
    ]
    counts = apply_cutoff(accumulate_counts(records, cfg), 5)
    assert retain_all_spans(counts, cfg) == set()


def test_restrict_keeps_compound_and_role_constituents():
    records = [
        rec("tax_NOUN law_NOUN a_DET b_DET c_DET", 1850, 4),
        rec("car_NOUN park_NOUN a_DET b_DET c_DET", 1850, 4),
    ]
    counts = accumulate_counts(records, CFG)
    restricted = restrict_to_compounds(counts, {Compound("tax", "law")})
    assert set(restricted.compound_freq[2]) == {Compound("tax", "law")}
    assert set(restricted.modifier_freq[2]) == {"tax"}
    assert set(restricted.head_freq[2]) == {"law"}
    assert restricted.nn_total == counts.nn_total
    assert Target(TargetKind.HEAD, "park") not in restricted.contexts[2]


# --- persistence ---------------------------------------------------------------


def test_counts_round_trip(tmp_path):
    counts = accumulate_counts(_random_records(15, 200), CFG)
    contexts_path = tmp_path / "counts.tsv"
    freq_path = tmp_path / "freqs.tsv"
    save_counts(counts, contexts_path, freq_path)
    assert load_counts(contexts_path, freq_path) == counts


def test_saved_counts_are_sorted_and_stable(tmp_path):
    counts = accumulate_counts(_random_records(16, 200), CFG)
    save_counts(counts, tmp_path / "a.tsv", tmp_path / "af.tsv")
    save_counts(counts, tmp_path / "b.tsv", tmp_path / "bf.tsv")
    assert (tmp_path / "a.tsv").read_bytes() == (tmp_path / "b.tsv").read_bytes()
    assert (tmp_path / "af.tsv").read_bytes() == (tmp_path / "bf.tsv").read_bytes()
    lines = (tmp_path / "a.tsv").read_text().splitlines()
    assert lines == sorted(lines, key=lambda ln: (int(ln.split("\t")[2]), ln))

import math
from collections import Counter

import numpy as np
import pytest
from scipy import sparse

from diacomp.extraction import CoocCounts, Target, TargetKind, compound_targets, Compound
from diacomp.space import (
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


def dense_cooc(array: np.ndarray) -> CoocMatrix:
    rows = [(Target(TargetKind.COMPOUND, f"r{i:02d} x"), 0) for i in range(array.shape[0])]
    vocab = [f"c{j:03d}" for j in range(array.shape[1])]
    return CoocMatrix(sparse.csr_array(np.asarray(array, dtype=float)), rows, vocab)


# --- assembly ------------------------------------------------------------------


def test_assemble_small_counts():
    counts = CoocCounts()
    comp, mod, head = compound_targets(Compound("tax", "law"))
    counts.contexts[0] = {
        comp: Counter({"x": 2, "y": 1}),
        mod: Counter({"x": 2}),
        head: Counter({"y": 3}),
    }
    counts.contexts[1] = {comp: Counter({"z": 4})}
    m = assemble_matrix(counts)
    assert m.vocab == ["x", "y", "z"]
    # Rows sorted by (kind, key, span): compound rows first, then head, then modifier.
    assert m.rows == [(comp, 0), (comp, 1), (head, 0), (mod, 0)]
    expected = np.array(
        [
            [2, 1, 0],
            [0, 0, 4],
            [0, 3, 0],
            [2, 0, 0],
        ],
        dtype=float,
    )
    np.testing.assert_array_equal(m.matrix.toarray(), expected)
    assert m.row_index[(comp, 1)] == 1


def test_assemble_empty_counts_rejected():
    with pytest.raises(ValueError):
        assemble_matrix(CoocCounts())


# --- PPMI ----------------------------------------------------------------------


def test_ppmi_single_cell_value():
    # n(r,c)=4, row sum 8, col sum 4, N=16 -> log2(4*16/(8*4)) = 1.
    m = dense_cooc(np.array([[4.0, 4.0], [0.0, 8.0]]))
    out = ppmi_transform(m).matrix.toarray()
    assert out[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_ppmi_matches_naive_oracle():
    rng = np.random.default_rng(7)
    for _ in range(25):
        array = rng.integers(0, 6, size=(8, 11)).astype(float)
        array[0] += 1  # keep at least one nonzero row
        n = array.sum()
        rows = array.sum(axis=1)
        cols = array.sum(axis=0)
        expected = np.zeros_like(array)
        for i in range(array.shape[0]):
            for j in range(array.shape[1]):
                if array[i, j] > 0 and rows[i] > 0 and cols[j] > 0:
                    expected[i, j] = max(
                        0.0, math.log2(array[i, j] * n / (rows[i] * cols[j]))
                    )
        got = ppmi_transform(dense_cooc(array)).matrix.toarray()
        np.testing.assert_allclose(got, expected, atol=1e-12)


def test_ppmi_stores_no_nonpositive_cells():
    rng = np.random.default_rng(8)
    array = rng.integers(0, 4, size=(10, 10)).astype(float)
    array[0, 0] += 2
    weighted = ppmi_transform(dense_cooc(array)).matrix
    assert (weighted.data > 0).all()


def test_ppmi_rejects_empty_matrix():
    with pytest.raises(ValueError):
        ppmi_transform(dense_cooc(np.zeros((3, 3))))


# --- randomized SVD -------------------------------------------------------------


def test_svd_exact_on_low_rank():
    rng = np.random.default_rng(9)
    a = rng.standard_normal((60, 5)) @ rng.standard_normal((5, 40))
    u, s, vt = randomized_svd(sparse.csr_array(a), dim=5, seed=0)
    np.testing.assert_allclose(u @ np.diag(s) @ vt, a, atol=1e-9)
    assert u.shape == (60, 5) and s.shape == (5,) and vt.shape == (5, 40)


def test_svd_singular_values_match_dense_oracle():
    rng = np.random.default_rng(10)
    a = rng.standard_normal((30, 30))
    _, s, _ = randomized_svd(sparse.csr_array(a), dim=30, seed=1)
    expected = np.linalg.svd(a, compute_uv=False)
    np.testing.assert_allclose(s, expected, atol=1e-10)


def test_svd_orthonormal_factors():
    rng = np.random.default_rng(11)
    dense = np.where(rng.random((40, 60)) < 0.2, rng.standard_normal((40, 60)) * 10, 0.0)
    u, s, vt = randomized_svd(sparse.csr_array(dense), dim=12, seed=2)
    np.testing.assert_allclose(u.T @ u, np.eye(12), atol=1e-10)
    np.testing.assert_allclose(vt @ vt.T, np.eye(12), atol=1e-10)
    assert (np.diff(s) <= 1e-12).all()  # non-increasing spectrum


def test_svd_sign_convention():
    rng = np.random.default_rng(12)
    a = rng.standard_normal((20, 15))
    _, _, vt = randomized_svd(sparse.csr_array(a), dim=8, seed=3)
    for k in range(vt.shape[0]):
        assert vt[k, np.argmax(np.abs(vt[k]))] > 0


def test_svd_deterministic_per_seed():
    rng = np.random.default_rng(13)
    a = sparse.csr_array(rng.standard_normal((25, 30)))
    first = randomized_svd(a, dim=6, seed=42)
    second = randomized_svd(a, dim=6, seed=42)
    for x, y in zip(first, second):
        np.testing.assert_array_equal(x, y)


def test_svd_rejects_bad_dim_and_nan():
    a = sparse.csr_array(np.ones((4, 6)))
    with pytest.raises(ValueError, match="dim"):
        randomized_svd(a, dim=5)
    with pytest.raises(ValueError, match="dim"):
        randomized_svd(a, dim=0)
    bad = sparse.csr_array(np.array([[1.0, np.nan], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="finite"):
        randomized_svd(bad, dim=1)


def test_duplicate_rows_get_identical_embeddings():
    rng = np.random.default_rng(14)
    base = rng.integers(0, 5, size=(12, 30)).astype(float)
    stacked = np.vstack([base, base[3]])
    space = truncated_svd(dense_cooc(stacked), dim=6, seed=0)
    np.testing.assert_allclose(space.vectors[3], space.vectors[12], atol=1e-12)


def test_same_distribution_across_spans_aligns():
    # Joint factorization: a target with identical context profiles in two
    # spans must land on (essentially) the same vector without alignment.
    counts = CoocCounts()
    comp = Target(TargetKind.COMPOUND, "tax law")
    other = Target(TargetKind.COMPOUND, "car park")
    profile = Counter({"x": 5, "y": 2, "z": 1})
    counts.contexts[0] = {comp: Counter(profile), other: Counter({"w": 4, "x": 1})}
    counts.contexts[1] = {comp: Counter(profile), other: Counter({"w": 2, "z": 3})}
    space = row_normalize(truncated_svd(assemble_matrix(counts), dim=2, seed=0))
    va = space.vector(comp, 0)
    vb = space.vector(comp, 1)
    assert cosine(va, vb) >= 1 - 1e-9


def test_sv_exponent_scales_columns():
    rng = np.random.default_rng(15)
    m = dense_cooc(rng.integers(1, 5, size=(10, 12)).astype(float))
    plain = truncated_svd(m, dim=4, seed=0, sv_exponent=0.0)
    weighted = truncated_svd(m, dim=4, seed=0, sv_exponent=1.0)
    u, s, _ = randomized_svd(m.matrix, dim=4, seed=0)
    np.testing.assert_allclose(plain.vectors, u, atol=1e-12)
    np.testing.assert_allclose(weighted.vectors, u * s, atol=1e-12)
    with pytest.raises(ValueError, match="sv_exponent"):
        truncated_svd(m, dim=4, sv_exponent=0.25)


def test_scaling_matrix_preserves_cosines():
    rng = np.random.default_rng(16)
    array = rng.integers(0, 5, size=(9, 14)).astype(float)
    s1 = row_normalize(truncated_svd(dense_cooc(array), dim=4, seed=5))
    s2 = row_normalize(truncated_svd(dense_cooc(array * 3.0), dim=4, seed=5))
    for i in range(4):
        for j in range(4):
            a = cosine(s1.vectors[i], s1.vectors[j])
            b = cosine(s2.vectors[i], s2.vectors[j])
            assert a == pytest.approx(b, abs=1e-10)


# --- normalization and lookup ----------------------------------------------------


def test_row_normalize_unit_norms_and_absent_rows():
    rows = [(Target(TargetKind.COMPOUND, f"r{i} x"), 0) for i in range(2)]
    raw = EmbeddingSpace(np.array([[3.0, 4.0], [0.0, 0.0]]), rows, np.array([True, True]))
    normalized = row_normalize(raw)
    np.testing.assert_allclose(normalized.vectors[0], [0.6, 0.8], atol=1e-15)
    assert normalized.present[0]
    assert not normalized.present[1]
    assert normalized.vector(*rows[1]) is None
    assert not np.isnan(normalized.vectors).any()


def test_similarity_missing_rows_is_none():
    rows = [(Target(TargetKind.COMPOUND, "a b"), 0)]
    space = EmbeddingSpace(np.array([[1.0, 0.0]]), rows, np.array([True]))
    assert space.similarity(rows[0], (Target(TargetKind.COMPOUND, "c d"), 0)) is None
    assert space.vector(Target(TargetKind.COMPOUND, "a b"), 3) is None


def test_cosine_values():
    assert cosine(np.array([1.0, 0.0]), np.array([1.0, 1.0])) == pytest.approx(
        0.7071067811865475, abs=1e-15
    )
    assert cosine(np.array([1.0, 0.0]), np.array([0.0, 2.0])) == 0.0
    v = np.array([0.3, -0.4, 1.1])
    assert cosine(v, v) == 1.0
    assert cosine(v, -v) == -1.0
    with pytest.raises(ValueError):
        cosine(v, np.zeros(3))


def test_space_round_trip(tmp_path):
    counts = CoocCounts()
    comp, mod, head = compound_targets(Compound("tax", "law"))
    counts.contexts[0] = {
        comp: Counter({"x": 3, "y": 1}),
        mod: Counter({"y": 2}),
        head: Counter({"x": 1, "z": 2}),
    }
    space = row_normalize(truncated_svd(assemble_matrix(counts), dim=2, seed=0))
    path = tmp_path / "space.npz"
    save_space(space, path)
    loaded = load_space(path)
    np.testing.assert_array_equal(loaded.vectors, space.vectors)
    np.testing.assert_array_equal(loaded.present, space.present)
    assert loaded.rows == space.rows
    assert loaded.vector(comp, 0) is not None

"""Jointly-factorized semantic space over (target, span) rows.

All spans share one sparse matrix and one truncated SVD, so the resulting
slices live in a common coordinate system and need no post-hoc alignment.
Rows are PPMI-weighted counts; embeddings are the left singular vectors,
optionally scaled by a power of the singular values, then L2-normalized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from .extraction import CoocCounts, Target, TargetKind

RowKey = tuple[Target, int]  # (target, span index)

SV_EXPONENTS = (0.0, 0.5, 1.0)


@dataclass
class CoocMatrix:
    """Sparse (target, span) x shared-context-vocabulary matrix."""

    matrix: sparse.csr_array
    rows: list[RowKey]
    vocab: list[str]
    row_index: dict[RowKey, int] = field(init=False)

    def __post_init__(self) -> None:
        self.row_index = {key: i for i, key in enumerate(self.rows)}


@dataclass
class EmbeddingSpace:
    """Dense row-per-(target, span) embeddings with an absence mask.

    Rows whose sparse counterpart carried no mass are flagged absent and
    never returned as vectors.  Immutable by convention after construction.
    """

    vectors: np.ndarray
    rows: list[RowKey]
    present: np.ndarray
    row_index: dict[RowKey, int] = field(init=False)

    def __post_init__(self) -> None:
        self.row_index = {key: i for i, key in enumerate(self.rows)}

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def vector(self, target: Target, span: int) -> np.ndarray | None:
        i = self.row_index.get((target, span))
        if i is None or not self.present[i]:
            return None
        return self.vectors[i]

    def similarity(self, a: tuple[Target, int], b: tuple[Target, int]) -> float | None:
        """Cosine between two rows; None when either row is missing."""
        va = self.vector(*a)
        vb = self.vector(*b)
        if va is None or vb is None:
            return None
        return cosine(va, vb)


def assemble_matrix(counts: CoocCounts) -> CoocMatrix:
    """One row per surviving (target, span), one shared column space.

    Cells are raw co-occurrence counts.  Row and column orders are sorted,
    so assembly is reproducible regardless of accumulation order.
    """
    if counts.is_empty():
        raise ValueError("no co-occurrence counts to factorize")
    row_keys: list[RowKey] = []
    vocab_set: set[str] = set()
    for span in counts.spans():
        for target, ctx in counts.contexts.get(span, {}).items():
            row_keys.append((target, span))
            vocab_set.update(ctx)
    row_keys.sort(key=lambda rk: (rk[0].sort_key(), rk[1]))
    vocab = sorted(vocab_set)
    col_index = {word: j for j, word in enumerate(vocab)}

    data: list[int] = []
    indices: list[int] = []
    indptr = [0]
    for target, span in row_keys:
        ctx = counts.contexts[span][target]
        for word in sorted(ctx):
            indices.append(col_index[word])
            data.append(ctx[word])
        indptr.append(len(indices))
    matrix = sparse.csr_array(
        (np.asarray(data, dtype=np.float64), np.asarray(indices), np.asarray(indptr)),
        shape=(len(row_keys), len(vocab)),
    )
    return CoocMatrix(matrix, row_keys, vocab)


def ppmi_transform(m: CoocMatrix) -> CoocMatrix:
    """Positive PMI weighting over the whole joint matrix.

    cell := max(0, log2(n_rc * N / (n_r * n_c))) with marginals taken over
    all rows of all spans; zero cells stay zero and negatives are dropped
    from the sparse structure.
    """
    mat = m.matrix
    total = mat.sum()
    if total <= 0:
        raise ValueError("matrix has no mass")
    row_sums = np.asarray(mat.sum(axis=1)).ravel()
    col_sums = np.asarray(mat.sum(axis=0)).ravel()
    coo = mat.tocoo()
    pmi = np.log2(coo.data * total / (row_sums[coo.row] * col_sums[coo.col]))
    weighted = sparse.csr_array(
        (np.maximum(pmi, 0.0), (coo.row, coo.col)), shape=mat.shape
    )
    weighted.eliminate_zeros()
    return CoocMatrix(weighted, list(m.rows), list(m.vocab))


def randomized_svd(
    a,
    dim: int,
    seed: int = 0,
    oversample: int = 10,
    power_iterations: int = 2,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Seeded randomized truncated SVD of a sparse (or dense) matrix.

    Returns (u, s, vt) with ``dim`` components.  A Gaussian sketch of
    dim + oversample columns is refined by QR-stabilized power iterations,
    so the factors are near-exact for matrices whose effective rank fits
    the sketch.  Signs are fixed by making the largest-magnitude component
    of each right singular vector positive, which removes the remaining
    solver freedom and keeps results reproducible for a given seed.
    """
    n_rows, n_cols = a.shape
    if not 1 <= dim <= min(n_rows, n_cols):
        raise ValueError(
            f"dim must be in [1, min(rows, cols)] = [1, {min(n_rows, n_cols)}], got {dim}"
        )
    data = a.data if sparse.issparse(a) else a
    if not np.all(np.isfinite(data)):
        raise ValueError("matrix contains non-finite entries")

    rng = np.random.default_rng(seed)
    sketch = min(n_cols, dim + oversample)
    y = a @ rng.standard_normal((n_cols, sketch))
    q, _ = np.linalg.qr(y)
    for _ in range(power_iterations):
        z, _ = np.linalg.qr(a.T @ q)
        q, _ = np.linalg.qr(a @ z)
    b = (a.T @ q).T
    try:
        u_b, sv, vt = np.linalg.svd(b, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"SVD failed to converge on a {n_rows}x{n_cols} matrix: {exc}")
    u = (q @ u_b)[:, :dim]
    sv = sv[:dim]
    vt = vt[:dim]
    for k in range(dim):
        j = int(np.argmax(np.abs(vt[k])))
        if vt[k, j] < 0:
            u[:, k] = -u[:, k]
            vt[k] = -vt[k]
    return np.ascontiguousarray(u), sv, np.ascontiguousarray(vt)


def truncated_svd(
    m: CoocMatrix,
    dim: int = 300,
    seed: int = 0,
    oversample: int = 10,
    power_iterations: int = 2,
    sv_exponent: float = 0.0,
) -> EmbeddingSpace:
    """Embed rows as U_d scaled by sigma^sv_exponent (default exponent 0,
    i.e. plain left singular vectors)."""
    if sv_exponent not in SV_EXPONENTS:
        raise ValueError(f"sv_exponent must be one of {SV_EXPONENTS}, got {sv_exponent}")
    u, sv, _ = randomized_svd(
        m.matrix, dim, seed=seed, oversample=oversample, power_iterations=power_iterations
    )
    vectors = u * sv**sv_exponent if sv_exponent else u
    norms = np.linalg.norm(vectors, axis=1)
    return EmbeddingSpace(vectors, list(m.rows), norms > 0)


def row_normalize(space: EmbeddingSpace) -> EmbeddingSpace:
    """Scale nonzero rows to unit L2 norm; zero rows become absent, never NaN."""
    norms = np.linalg.norm(space.vectors, axis=1)
    present = norms > 0
    scale = np.where(present, norms, 1.0)
    return EmbeddingSpace(space.vectors / scale[:, None], list(space.rows), present)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine undefined for zero vectors")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def save_space(space: EmbeddingSpace, path: str | Path) -> None:
    """Binary round-trip of vectors plus the (kind, key, span) row index."""
    kinds = np.array([t.kind.value for t, _ in space.rows])
    keys = np.array([t.key for t, _ in space.rows])
    spans = np.array([span for _, span in space.rows], dtype=np.int64)
    np.savez_compressed(
        path,
        vectors=space.vectors,
        present=space.present,
        kinds=kinds,
        keys=keys,
        spans=spans,
    )


def load_space(path: str | Path) -> EmbeddingSpace:
    with np.load(path, allow_pickle=False) as data:
        rows = [
            (Target(TargetKind(str(kind)), str(key)), int(span))
            for kind, key, span in zip(data["kinds"], data["keys"], data["spans"])
        ]
        return EmbeddingSpace(data["vectors"], rows, data["present"])

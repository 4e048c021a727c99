"""Exhaustive cosine ranking of candidate articles for webpage queries.

Every query is scored against the full candidate pool (no approximate
indexing), similarities are rounded to 12 decimal digits so tie behavior is
stable across platforms, and ties are resolved pessimistically: candidates
tied with the true article count against it.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .vectorspace import SparseVector

TIE_DECIMALS = 12
DEFAULT_TOP_K = 50
_BLOCK_ROWS = 16384

NEG_INF = float("-inf")


@dataclass(eq=False)
class CandidatePool:
    """An immutable set of candidate articles under one representation."""

    ids: list[str]
    matrix: "sp.csr_matrix | np.ndarray"
    representation: str
    norms: np.ndarray
    id_array: np.ndarray

    @classmethod
    def from_vectors(
        cls, ids: list[str], vectors: list[SparseVector], representation: str
    ) -> "CandidatePool":
        from .vectorspace import to_csr
        if len(ids) != len(vectors):
            raise ValueError("one id per vector required")
        matrix = to_csr(vectors)
        return cls._build(ids, matrix, representation)

    @classmethod
    def from_matrix(
        cls, ids: list[str], matrix: "sp.spmatrix | np.ndarray", representation: str
    ) -> "CandidatePool":
        if sp.issparse(matrix):
            matrix = matrix.tocsr()
        else:
            matrix = np.asarray(matrix, dtype=np.float64)
        if len(ids) != matrix.shape[0]:
            raise ValueError("one id per matrix row required")
        return cls._build(ids, matrix, representation)

    @classmethod
    def _build(cls, ids, matrix, representation) -> "CandidatePool":
        if len(set(ids)) != len(ids):
            raise ValueError("candidate ids must be unique")
        if sp.issparse(matrix):
            norms = np.sqrt(np.asarray(matrix.multiply(matrix).sum(axis=1)).ravel())
        else:
            norms = np.sqrt(np.sum(matrix * matrix, axis=1))
        return cls(
            ids=list(ids),
            matrix=matrix,
            representation=representation,
            norms=norms,
            id_array=np.asarray(ids, dtype=object),
        )

    def index_of(self, candidate_id: str) -> int:
        index = getattr(self, "_index", None)
        if index is None:
            index = {cid: i for i, cid in enumerate(self.ids)}
            self._index = index
        try:
            return index[candidate_id]
        except KeyError:
            raise ValueError(f"id {candidate_id!r} is not in the candidate pool") from None

    @property
    def size(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


@dataclass(eq=False)
class RankedResult:
    """Where the true source article landed for one query webpage."""

    query_id: str
    true_id: str
    true_rank: int
    pool_size: int
    top_k: list[tuple[str, float]]


def _dense_query(query, dim: int) -> np.ndarray:
    if isinstance(query, SparseVector):
        if query.dim != dim:
            raise ValueError(f"query dimension {query.dim} does not match pool {dim}")
        dense = np.zeros(dim, dtype=np.float64)
        dense[query.indices] = query.values
        return dense
    dense = np.asarray(query, dtype=np.float64).ravel()
    if dense.shape[0] != dim:
        raise ValueError(f"query dimension {dense.shape[0]} does not match pool {dim}")
    return dense


def cosine(u, v) -> float:
    """Cosine similarity; returns -inf when either vector has zero norm,
    so degenerate documents always rank last."""
    dim = u.dim if isinstance(u, SparseVector) else np.asarray(u).ravel().shape[0]
    a = _dense_query(u, dim)
    b = _dense_query(v, dim)
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        return NEG_INF
    return float(a @ b / (norm_a * norm_b))


def pool_similarities(query, pool: CandidatePool) -> np.ndarray:
    """Cosine similarities of one query against every pool candidate,
    rounded to TIE_DECIMALS.  Zero-norm rows (or a zero-norm query) get -inf.
    """
    dense = _dense_query(query, pool.dim)
    query_norm = float(np.linalg.norm(dense))
    scores = np.empty(pool.size, dtype=np.float64)
    for start in range(0, pool.size, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, pool.size)
        block = pool.matrix[start:stop]
        scores[start:stop] = block @ dense
    if query_norm == 0.0:
        return np.full(pool.size, NEG_INF)
    with np.errstate(divide="ignore", invalid="ignore"):
        sims = scores / (pool.norms * query_norm)
    sims[pool.norms == 0.0] = NEG_INF
    return np.round(sims, TIE_DECIMALS)


def rank_candidates(
    query, pool: CandidatePool, true_id: str, k: int = DEFAULT_TOP_K
) -> RankedResult:
    """Rank the pool for one query and locate the true article.

    true_rank counts every strictly-better candidate plus every candidate
    tied with the true article (pessimistic ties).  top_k is ordered by
    similarity descending, id ascending.
    """
    true_index = pool.index_of(true_id)
    sims = pool_similarities(query, pool)
    true_sim = sims[true_index]
    better = int(np.count_nonzero(sims > true_sim))
    tied = int(np.count_nonzero(sims == true_sim)) - 1
    rank = 1 + better + tied

    order = np.lexsort((pool.id_array, -sims))
    top = [(pool.ids[i], float(sims[i])) for i in order[:k]]
    return RankedResult(
        query_id="", true_id=true_id, true_rank=rank,
        pool_size=pool.size, top_k=top,
    )


def rank_all(
    queries: "list[tuple[str, object, str]]",
    pool: CandidatePool,
    k: int = DEFAULT_TOP_K,
    n_workers: int = 1,
) -> list[RankedResult]:
    """Rank every (query_id, vector, true_id) triple, preserving input order.

    With ``n_workers > 1`` queries are scored on a thread pool; results are
    identical to the serial path.
    """
    def one(item: "tuple[str, object, str]") -> RankedResult:
        query_id, vector, true_id = item
        result = rank_candidates(vector, pool, true_id, k=k)
        result.query_id = query_id
        return result

    if n_workers <= 1:
        return [one(item) for item in queries]
    with ThreadPoolExecutor(max_workers=n_workers) as executor:
        return list(executor.map(one, queries))


def write_rankings(path: "str | Path", results: list[RankedResult]) -> None:
    """Write one JSON object per ranked query (non-finite similarities
    become null)."""
    with Path(path).open("w", encoding="utf-8") as handle:
        for result in results:
            handle.write(json.dumps({
                "query_id": result.query_id,
                "true_id": result.true_id,
                "true_rank": result.true_rank,
                "pool_size": result.pool_size,
                "topk": [
                    [cid, sim if np.isfinite(sim) else None]
                    for cid, sim in result.top_k
                ],
            }))
            handle.write("\n")


def read_rankings(path: "str | Path") -> list[RankedResult]:
    results = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            results.append(RankedResult(
                query_id=record["query_id"],
                true_id=record["true_id"],
                true_rank=record["true_rank"],
                pool_size=record["pool_size"],
                top_k=[
                    (cid, NEG_INF if sim is None else float(sim))
                    for cid, sim in record["topk"]
                ],
            ))
    return results

"""Shared-vocabulary construction and sparse binary / TF / TF-IDF vectors.

The vocabulary keeps only terms present in at least one article and at
least one webpage of the fitted corpus, then applies a maximum document
frequency cutoff over the combined collection.  Column indices are dense
and assigned in sorted term order, so identical corpora always produce
identical matrices.
"""

from __future__ import annotations

import json
import math
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .corpus import Document

BINARY = "binary"
TF = "tf"
TFIDF = "tfidf"
SCHEMES = (BINARY, TF, TFIDF)

IDF_SMOOTH = "smooth"
IDF_RAW = "raw"
IDF_VARIANTS = (IDF_SMOOTH, IDF_RAW)

_VECTOR_MAGIC = b"EVSP1"


class EmptyVocabularyError(ValueError):
    """No term survived the intersection and document-frequency filters."""


@dataclass(frozen=True, eq=False)
class Vocabulary:
    """Term-to-column mapping with document frequencies over the fitted corpus."""

    term_to_index: dict[str, int]
    doc_freq: np.ndarray
    n_docs: int
    max_df: float
    idf_variant: str = IDF_SMOOTH

    def __post_init__(self) -> None:
        if self.idf_variant not in IDF_VARIANTS:
            raise ValueError(f"unknown idf variant {self.idf_variant!r}")
        if len(self.doc_freq) != len(self.term_to_index):
            raise ValueError("doc_freq length must match vocabulary size")

    def __len__(self) -> int:
        return len(self.term_to_index)

    def terms(self) -> list[str]:
        ordered = [""] * len(self.term_to_index)
        for term, index in self.term_to_index.items():
            ordered[index] = term
        return ordered

    def idf(self) -> np.ndarray:
        """Per-column inverse document frequency under the configured variant."""
        df = self.doc_freq.astype(np.float64)
        if self.idf_variant == IDF_SMOOTH:
            return np.log((1.0 + self.n_docs) / (1.0 + df)) + 1.0
        return np.log(self.n_docs / df)

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with (directory / "vocab.tsv").open("w", encoding="utf-8") as handle:
            for index, term in enumerate(self.terms()):
                handle.write(f"{term}\t{index}\t{int(self.doc_freq[index])}\n")
        meta = {"n_docs": self.n_docs, "max_df": self.max_df, "idf_variant": self.idf_variant}
        with (directory / "vocab.meta.json").open("w", encoding="utf-8") as handle:
            json.dump(meta, handle, indent=2, sort_keys=True)
            handle.write("\n")

    @classmethod
    def load(cls, directory: str | Path) -> "Vocabulary":
        directory = Path(directory)
        term_to_index: dict[str, int] = {}
        freqs: list[int] = []
        with (directory / "vocab.tsv").open("r", encoding="utf-8") as handle:
            for line in handle:
                term, index, df = line.rstrip("\n").split("\t")
                term_to_index[term] = int(index)
                freqs.append(int(df))
        with (directory / "vocab.meta.json").open("r", encoding="utf-8") as handle:
            meta = json.load(handle)
        return cls(
            term_to_index=term_to_index,
            doc_freq=np.asarray(freqs, dtype=np.int64),
            n_docs=int(meta["n_docs"]),
            max_df=float(meta["max_df"]),
            idf_variant=meta.get("idf_variant", IDF_SMOOTH),
        )


@dataclass(frozen=True, eq=False)
class SparseVector:
    """A document in term space: sorted (index, value) pairs plus dimension."""

    dim: int
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values must have equal length")
        if len(self.indices):
            if not np.all(np.diff(self.indices) > 0):
                raise ValueError("indices must be strictly increasing")
            if self.indices[0] < 0 or self.indices[-1] >= self.dim:
                raise ValueError("indices must lie in [0, dim)")
            if not np.all(np.isfinite(self.values)):
                raise ValueError("values must be finite")

    @property
    def nnz(self) -> int:
        return len(self.indices)


def build_vocabulary(
    articles: list[Document],
    webpages: list[Document],
    max_df: float = 0.85,
    idf_variant: str = IDF_SMOOTH,
) -> Vocabulary:
    """Fit the shared vocabulary over both collections.

    Keeps terms occurring in at least one article and at least one webpage
    whose combined document frequency does not exceed ``max_df``.
    """
    if not articles or not webpages:
        raise ValueError("both document collections must be non-empty")
    if not 0 < max_df <= 1:
        raise ValueError(f"max_df must be in (0, 1], got {max_df}")

    df_articles: Counter[str] = Counter()
    df_webpages: Counter[str] = Counter()
    for doc in articles:
        df_articles.update(set(doc.tokens))
    for doc in webpages:
        df_webpages.update(set(doc.tokens))

    n_docs = len(articles) + len(webpages)
    kept = sorted(
        term for term in df_articles.keys() & df_webpages.keys()
        if (df_articles[term] + df_webpages[term]) / n_docs <= max_df
    )
    if not kept:
        raise EmptyVocabularyError(
            "no term passed the article/webpage intersection and max_df filters"
        )
    doc_freq = np.asarray(
        [df_articles[t] + df_webpages[t] for t in kept], dtype=np.int64
    )
    return Vocabulary(
        term_to_index={term: i for i, term in enumerate(kept)},
        doc_freq=doc_freq,
        n_docs=n_docs,
        max_df=max_df,
        idf_variant=idf_variant,
    )


def vectorize(doc: Document, vocab: Vocabulary, scheme: str) -> SparseVector:
    """Vectorize one document; out-of-vocabulary tokens are ignored.

    binary: 1 per present term; tf: raw term count;
    tfidf: (1 + ln tf) * idf with the vocabulary's idf variant.
    A document sharing no terms with the vocabulary yields the zero vector.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown weighting scheme {scheme!r}")
    counts = Counter(doc.tokens)
    pairs = sorted(
        (vocab.term_to_index[t], c) for t, c in counts.items() if t in vocab.term_to_index
    )
    indices = np.asarray([i for i, _ in pairs], dtype=np.int64)
    if scheme == BINARY:
        values = np.ones(len(pairs), dtype=np.float64)
    elif scheme == TF:
        values = np.asarray([c for _, c in pairs], dtype=np.float64)
    else:
        tf = np.asarray([c for _, c in pairs], dtype=np.float64)
        idf = vocab.idf()[indices] if len(indices) else np.empty(0)
        values = (1.0 + np.log(tf)) * idf
    return SparseVector(dim=len(vocab), indices=indices, values=values)


def vectorize_corpus(
    docs: list[Document], vocab: Vocabulary, scheme: str
) -> list[SparseVector]:
    """Vectorize a collection, preserving document order."""
    return [vectorize(doc, vocab, scheme) for doc in docs]


def to_csr(vectors: list[SparseVector], dim: int | None = None) -> sp.csr_matrix:
    """Stack sparse vectors into a CSR matrix (rows in input order)."""
    if dim is None:
        if not vectors:
            raise ValueError("cannot infer dimension from an empty collection")
        dim = vectors[0].dim
    for v in vectors:
        if v.dim != dim:
            raise ValueError(f"dimension mismatch: {v.dim} != {dim}")
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, v in enumerate(vectors):
        indptr[i + 1] = indptr[i] + v.nnz
    indices = (
        np.concatenate([v.indices for v in vectors])
        if vectors else np.empty(0, dtype=np.int64)
    )
    data = (
        np.concatenate([v.values for v in vectors])
        if vectors else np.empty(0, dtype=np.float64)
    )
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), dim))


def from_csr(matrix: sp.spmatrix) -> list[SparseVector]:
    """Split a sparse matrix back into per-row vectors."""
    csr = matrix.tocsr()
    csr.sort_indices()
    out = []
    for i in range(csr.shape[0]):
        lo, hi = csr.indptr[i], csr.indptr[i + 1]
        out.append(SparseVector(
            dim=csr.shape[1],
            indices=csr.indices[lo:hi].astype(np.int64),
            values=csr.data[lo:hi].astype(np.float64),
        ))
    return out


def save_vectors(path: str | Path, vectors: list[SparseVector]) -> None:
    """Write vectors in the EVSP1 binary format (little-endian)."""
    if not vectors:
        raise ValueError("refusing to write an empty vector set")
    dim = vectors[0].dim
    with Path(path).open("wb") as handle:
        handle.write(_VECTOR_MAGIC)
        handle.write(struct.pack("<II", len(vectors), dim))
        for v in vectors:
            if v.dim != dim:
                raise ValueError(f"dimension mismatch: {v.dim} != {dim}")
            handle.write(struct.pack("<I", v.nnz))
            handle.write(v.indices.astype("<u4").tobytes())
            handle.write(v.values.astype("<f8").tobytes())


def load_vectors(path: str | Path) -> list[SparseVector]:
    """Read an EVSP1 vector set."""
    with Path(path).open("rb") as handle:
        magic = handle.read(5)
        if magic != _VECTOR_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {_VECTOR_MAGIC!r}")
        n_rows, dim = struct.unpack("<II", handle.read(8))
        vectors = []
        for _ in range(n_rows):
            (nnz,) = struct.unpack("<I", handle.read(4))
            indices = np.frombuffer(handle.read(4 * nnz), dtype="<u4").astype(np.int64)
            values = np.frombuffer(handle.read(8 * nnz), dtype="<f8").astype(np.float64)
            vectors.append(SparseVector(dim=dim, indices=indices, values=values))
    return vectors


def save_vectors_jsonl(path: str | Path, vectors: list[SparseVector]) -> None:
    """Write vectors in a human-inspectable JSONL debug format."""
    with Path(path).open("w", encoding="utf-8") as handle:
        for v in vectors:
            handle.write(json.dumps({
                "dim": v.dim,
                "indices": v.indices.tolist(),
                "values": v.values.tolist(),
            }))
            handle.write("\n")


def tfidf_weight(tf: float, doc_freq: int, n_docs: int, idf_variant: str = IDF_SMOOTH) -> float:
    """Scalar TF-IDF weight for one term occurrence count (tf >= 1)."""
    if tf < 1:
        raise ValueError("tf must be at least 1 for a present term")
    if idf_variant == IDF_SMOOTH:
        idf = math.log((1.0 + n_docs) / (1.0 + doc_freq)) + 1.0
    elif idf_variant == IDF_RAW:
        idf = math.log(n_docs / doc_freq)
    else:
        raise ValueError(f"unknown idf variant {idf_variant!r}")
    return (1.0 + math.log(tf)) * idf

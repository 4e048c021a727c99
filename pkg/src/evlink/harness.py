"""End-to-end experiment execution.

Wires the corpus, vector space, decomposition, alignment, and ranking
stages into single experiments and experiment grids, computes the outcome
measures, and writes machine-readable CSV reports.  Everything downstream
of the manifest is a pure function of (manifest contents, config), so
repeated runs are byte-identical.
"""

from __future__ import annotations

import configparser
import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import align, decompose, metrics, ranker, vectorspace
from .corpus import CorpusManifest

THRESHOLD_ONLY = "threshold_only"
TSVD = "tsvd"
REDUCTIONS = (THRESHOLD_ONLY, TSVD)

STATUS_OK = "ok"
STATUS_CCA_FAILED = "cca_failed"
STATUS_ERROR = "error"

GRID_CSV_HEADER = (
    "scheme,reduction,tsvd_k,cca_dims,status,n_queries,"
    "median_rank,iqr_low,iqr_high,recall_at_1,recall_at_50"
)

PHASE1_TSVD_COMPONENTS = (100, 200, 400, 800, 1600)
PHASE2_CCA_DIMENSIONS = (50, 100, 200, 400, 800, 1600)


@dataclass(frozen=True)
class ExperimentConfig:
    """One cell of the experiment grid."""

    scheme: str
    reduction: str
    manifest_path: str
    tsvd_k: "int | None" = None
    cca_dims: "int | None" = None
    max_df: float = 0.85
    train_fraction: float = 0.7
    seed: int = 0

    def __post_init__(self) -> None:
        if self.scheme not in vectorspace.SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.reduction not in REDUCTIONS:
            raise ValueError(f"unknown reduction {self.reduction!r}")
        if (self.reduction == TSVD) != (self.tsvd_k is not None):
            raise ValueError("tsvd_k is required exactly when reduction is 'tsvd'")
        if self.cca_dims is not None:
            if self.reduction != TSVD:
                raise ValueError("cca_dims requires the tsvd reduction")
            if self.cca_dims > self.tsvd_k:
                raise ValueError(
                    f"cca_dims ({self.cca_dims}) cannot exceed tsvd_k ({self.tsvd_k})"
                )
        if not 0 < self.max_df <= 1:
            raise ValueError(f"max_df must be in (0, 1], got {self.max_df}")
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")

    def experiment_id(self) -> str:
        if self.reduction == THRESHOLD_ONLY:
            tag = f"{self.scheme}_threshold"
        else:
            tag = f"{self.scheme}_tsvd{self.tsvd_k}"
        if self.cca_dims is not None:
            tag += f"_cca{self.cca_dims}"
        return tag


@dataclass
class EvalSummary:
    """Outcome measures for one experiment (metric fields are None when the
    run failed)."""

    config: ExperimentConfig
    status: str
    n_queries: int
    pool_size: "int | None" = None
    median_rank: "float | None" = None
    iqr: "tuple[float, float] | None" = None
    recall_at_1: "float | None" = None
    recall_at_50: "float | None" = None
    curve: "list[tuple[int, float]] | None" = None


class ExperimentContext:
    """Shared manifest plus caches for vocabularies, matrices, and T-SVD
    models, so grids do not refit identical stages."""

    def __init__(self, manifest: CorpusManifest) -> None:
        manifest.validate()
        if not manifest.split:
            raise ValueError("manifest has no train/test split; run the split stage first")
        self.manifest = manifest
        self._lock = threading.Lock()
        self._vocabularies: dict = {}
        self._matrices: dict = {}
        self._tsvd_models: dict = {}
        self._article_row = {doc.id: i for i, doc in enumerate(manifest.articles)}
        self._webpage_row = {doc.id: i for i, doc in enumerate(manifest.webpages)}

    @classmethod
    def from_path(cls, manifest_path: "str | Path") -> "ExperimentContext":
        return cls(CorpusManifest.load(manifest_path))

    def vocabulary(self, max_df: float) -> vectorspace.Vocabulary:
        with self._lock:
            if max_df not in self._vocabularies:
                train_page_ids = {l.webpage_id for l in self.manifest.train_links()}
                train_pages = [d for d in self.manifest.webpages if d.id in train_page_ids]
                self._vocabularies[max_df] = vectorspace.build_vocabulary(
                    self.manifest.articles, train_pages, max_df=max_df
                )
            return self._vocabularies[max_df]

    def matrices(self, scheme: str, max_df: float) -> "tuple[sp.csr_matrix, sp.csr_matrix]":
        """(articles, webpages) CSR matrices in manifest document order."""
        vocab = self.vocabulary(max_df)
        key = (scheme, max_df)
        with self._lock:
            if key not in self._matrices:
                articles = vectorspace.to_csr(
                    vectorspace.vectorize_corpus(self.manifest.articles, vocab, scheme),
                    dim=len(vocab),
                )
                webpages = vectorspace.to_csr(
                    vectorspace.vectorize_corpus(self.manifest.webpages, vocab, scheme),
                    dim=len(vocab),
                )
                self._matrices[key] = (articles, webpages)
            return self._matrices[key]

    def tsvd_model(self, scheme: str, max_df: float, k: int, seed: int) -> decompose.TsvdModel:
        articles, webpages = self.matrices(scheme, max_df)
        key = (scheme, max_df, k, seed)
        with self._lock:
            if key not in self._tsvd_models:
                train = self.manifest.train_links()
                stack = sp.vstack([
                    articles[[self._article_row[l.article_id] for l in train]],
                    webpages[[self._webpage_row[l.webpage_id] for l in train]],
                ]).tocsr()
                self._tsvd_models[key] = decompose.fit_tsvd(stack, k=k, seed=seed)
            return self._tsvd_models[key]

    def article_rows(self, ids: "list[str]") -> "list[int]":
        return [self._article_row[i] for i in ids]

    def webpage_rows(self, ids: "list[str]") -> "list[int]":
        return [self._webpage_row[i] for i in ids]


def run_experiment(
    config: ExperimentConfig,
    context: "ExperimentContext | None" = None,
    top_k: int = ranker.DEFAULT_TOP_K,
    n_workers: int = 1,
) -> EvalSummary:
    """Run one experiment: vectorize, optionally reduce and align, rank the
    test webpages against the candidate pool, and summarize.

    The candidate pool is the test-pair articles plus all distractors;
    training-pair articles are excluded.  A CCA that cannot be fitted
    (requested dimensions above the training data's effective rank) yields
    status ``cca_failed`` with metric fields absent.
    """
    if context is None:
        context = ExperimentContext.from_path(config.manifest_path)
    manifest = context.manifest
    train = manifest.train_links()
    test = manifest.test_links()
    if not train or not test:
        raise ValueError("manifest split must contain both train and test links")

    pool_ids = sorted({l.article_id for l in test} | set(manifest.distractor_ids()))
    articles_csr, webpages_csr = context.matrices(config.scheme, config.max_df)
    test_page_rows = context.webpage_rows([l.webpage_id for l in test])
    pool_rows = context.article_rows(pool_ids)

    if config.reduction == THRESHOLD_ONLY:
        queries = webpages_csr[test_page_rows]
        pool_matrix: "sp.csr_matrix | np.ndarray" = articles_csr[pool_rows]
        representation = f"{config.scheme}/threshold"
    else:
        model = context.tsvd_model(config.scheme, config.max_df, config.tsvd_k, config.seed)
        queries = decompose.project(model, webpages_csr[test_page_rows])
        pool_matrix = decompose.project(model, articles_csr[pool_rows])
        representation = f"{config.scheme}/tsvd{config.tsvd_k}"
        if config.cca_dims is not None:
            train_pages = decompose.project(
                model, webpages_csr[context.webpage_rows([l.webpage_id for l in train])]
            )
            train_articles = decompose.project(
                model, articles_csr[context.article_rows([l.article_id for l in train])]
            )
            try:
                cca = align.fit_cca(train_pages, train_articles, d=config.cca_dims)
            except align.CcaConvergenceError:
                return EvalSummary(
                    config=config, status=STATUS_CCA_FAILED, n_queries=len(test)
                )
            queries = align.project_side(cca, align.WEBPAGE_SIDE, queries)
            pool_matrix = align.project_side(cca, align.ARTICLE_SIDE, pool_matrix)
            representation += f"/cca{config.cca_dims}"

    pool = ranker.CandidatePool.from_matrix(pool_ids, pool_matrix, representation)
    if sp.issparse(queries):
        query_items = [
            (link.webpage_id, row, link.article_id)
            for link, row in zip(test, vectorspace.from_csr(queries))
        ]
    else:
        query_items = [
            (link.webpage_id, queries[i], link.article_id)
            for i, link in enumerate(test)
        ]
    results = ranker.rank_all(query_items, pool, k=top_k, n_workers=n_workers)
    ranks = [r.true_rank for r in results]

    median, q1, q3 = metrics.median_and_iqr(ranks)
    return EvalSummary(
        config=config,
        status=STATUS_OK,
        n_queries=len(ranks),
        pool_size=pool.size,
        median_rank=median,
        iqr=(q1, q3),
        recall_at_1=metrics.recall_at_k(ranks, 1),
        recall_at_50=metrics.recall_at_k(ranks, 50),
        curve=metrics.recall_curve(ranks, pool.size),
    )


def run_grid(
    configs: "list[ExperimentConfig]",
    out_dir: "str | Path | None" = None,
    context: "ExperimentContext | None" = None,
    parallel: bool = False,
    n_workers: int = 4,
) -> "list[EvalSummary]":
    """Run each config (sharing caches), optionally writing ``grid.csv`` and
    per-experiment ``curve_<id>.csv`` files to ``out_dir``.

    Per-config failures never drop a row: unexpected errors are recorded
    with status ``error`` and empty metric cells, and the grid continues.
    """
    if not configs:
        raise ValueError("need at least one experiment config")
    contexts: dict[str, ExperimentContext] = {}
    lock = threading.Lock()

    def context_for(config: ExperimentConfig) -> ExperimentContext:
        if context is not None:
            return context
        with lock:
            if config.manifest_path not in contexts:
                contexts[config.manifest_path] = ExperimentContext.from_path(config.manifest_path)
            return contexts[config.manifest_path]

    def one(config: ExperimentConfig) -> EvalSummary:
        try:
            return run_experiment(config, context=context_for(config))
        except Exception:
            return EvalSummary(config=config, status=STATUS_ERROR, n_queries=0)

    if parallel:
        with ThreadPoolExecutor(max_workers=n_workers) as executor:
            summaries = list(executor.map(one, configs))
    else:
        summaries = [one(config) for config in configs]

    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_grid_csv(out_dir / "grid.csv", summaries)
        for summary in summaries:
            if summary.status == STATUS_OK:
                write_curve_csv(
                    out_dir / f"curve_{summary.config.experiment_id()}.csv",
                    summary.curve,
                )
    return summaries


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return format(value, ".12g")


def write_grid_csv(path: "str | Path", summaries: "list[EvalSummary]") -> None:
    lines = [GRID_CSV_HEADER]
    for s in summaries:
        iqr_low, iqr_high = s.iqr if s.iqr is not None else (None, None)
        lines.append(",".join([
            s.config.scheme,
            s.config.reduction,
            _fmt(s.config.tsvd_k),
            _fmt(s.config.cca_dims),
            s.status,
            _fmt(s.n_queries),
            _fmt(s.median_rank),
            _fmt(iqr_low),
            _fmt(iqr_high),
            _fmt(s.recall_at_1),
            _fmt(s.recall_at_50),
        ]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_curve_csv(path: "str | Path", curve: "list[tuple[int, float]]") -> None:
    lines = ["k,recall"]
    lines.extend(f"{k},{_fmt(recall)}" for k, recall in curve)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def summary_to_dict(summary: EvalSummary) -> dict:
    """Flat JSON-friendly view of a summary (curve excluded; it has its own
    CSV format)."""
    iqr_low, iqr_high = summary.iqr if summary.iqr is not None else (None, None)
    return {
        "experiment_id": summary.config.experiment_id(),
        "scheme": summary.config.scheme,
        "reduction": summary.config.reduction,
        "tsvd_k": summary.config.tsvd_k,
        "cca_dims": summary.config.cca_dims,
        "max_df": summary.config.max_df,
        "train_fraction": summary.config.train_fraction,
        "seed": summary.config.seed,
        "manifest": summary.config.manifest_path,
        "status": summary.status,
        "n_queries": summary.n_queries,
        "pool_size": summary.pool_size,
        "median_rank": summary.median_rank,
        "iqr_low": iqr_low,
        "iqr_high": iqr_high,
        "recall_at_1": summary.recall_at_1,
        "recall_at_50": summary.recall_at_50,
    }


def default_phase1_grid(
    manifest_path: "str | Path",
    seed: int = 0,
    schemes: "tuple[str, ...]" = vectorspace.SCHEMES,
    tsvd_components: "tuple[int, ...]" = PHASE1_TSVD_COMPONENTS,
    max_df: float = 0.85,
    train_fraction: float = 0.7,
) -> "list[ExperimentConfig]":
    """Phase 1: every weighting scheme under threshold-only and under each
    T-SVD component count."""
    configs = []
    for scheme in schemes:
        configs.append(ExperimentConfig(
            scheme=scheme, reduction=THRESHOLD_ONLY, manifest_path=str(manifest_path),
            max_df=max_df, train_fraction=train_fraction, seed=seed,
        ))
        for k in tsvd_components:
            configs.append(ExperimentConfig(
                scheme=scheme, reduction=TSVD, tsvd_k=k, manifest_path=str(manifest_path),
                max_df=max_df, train_fraction=train_fraction, seed=seed,
            ))
    return configs


def default_phase2_grid(
    manifest_path: "str | Path",
    seed: int = 0,
    scheme: str = vectorspace.TFIDF,
    tsvd_components: "tuple[int, ...]" = PHASE1_TSVD_COMPONENTS,
    cca_dimensions: "tuple[int, ...]" = PHASE2_CCA_DIMENSIONS,
    max_df: float = 0.85,
    train_fraction: float = 0.7,
) -> "list[ExperimentConfig]":
    """Phase 2: the best scheme with T-SVD and CCA dimensions capped at the
    component count."""
    configs = []
    for k in tsvd_components:
        for d in cca_dimensions:
            if d > k:
                continue
            configs.append(ExperimentConfig(
                scheme=scheme, reduction=TSVD, tsvd_k=k, cca_dims=d,
                manifest_path=str(manifest_path),
                max_df=max_df, train_fraction=train_fraction, seed=seed,
            ))
    return configs


# -- config files -------------------------------------------------------------

_EXPERIMENT_KEYS = {
    "scheme", "reduction", "tsvd_k", "cca_dims", "max_df",
    "train_fraction", "seed", "manifest",
}
_GRID_KEYS = {
    "schemes", "reductions", "tsvd_k", "cca_dims", "max_df",
    "train_fraction", "seed", "manifest",
}


def load_config_file(path: "str | Path") -> "list[ExperimentConfig]":
    """Parse an experiment or grid config file (INI-style key/value text).

    ``[experiment]`` describes a single run; ``[grid]`` expands the cross
    product of its schemes, reductions, T-SVD component counts, and CCA
    dimensions (CCA rows are added per component count for each dimension
    not exceeding it).  Unknown sections or keys are rejected.
    """
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(path)
    sections = parser.sections()
    unknown_sections = [s for s in sections if s not in ("experiment", "grid")]
    if unknown_sections:
        raise ValueError(f"unknown config sections: {', '.join(unknown_sections)}")
    if not sections:
        raise ValueError("config file must contain an [experiment] or [grid] section")

    configs: list[ExperimentConfig] = []
    if "experiment" in sections:
        section = parser["experiment"]
        _reject_unknown(section, _EXPERIMENT_KEYS, "experiment")
        configs.append(ExperimentConfig(
            scheme=section.get("scheme", vectorspace.TFIDF),
            reduction=section.get("reduction", THRESHOLD_ONLY),
            tsvd_k=_opt_int(section, "tsvd_k"),
            cca_dims=_opt_int(section, "cca_dims"),
            max_df=section.getfloat("max_df", 0.85),
            train_fraction=section.getfloat("train_fraction", 0.7),
            seed=section.getint("seed", 0),
            manifest_path=section.get("manifest", ""),
        ))
    if "grid" in sections:
        section = parser["grid"]
        _reject_unknown(section, _GRID_KEYS, "grid")
        schemes = _str_list(section.get("schemes", "tfidf"))
        reductions = _str_list(section.get("reductions", THRESHOLD_ONLY))
        tsvd_k = _int_list(section.get("tsvd_k", ""))
        cca_dims = _int_list(section.get("cca_dims", ""))
        if cca_dims and TSVD not in reductions:
            raise ValueError("cca_dims in a grid requires the tsvd reduction")
        common = {
            "max_df": section.getfloat("max_df", 0.85),
            "train_fraction": section.getfloat("train_fraction", 0.7),
            "seed": section.getint("seed", 0),
            "manifest_path": section.get("manifest", ""),
        }
        for scheme in schemes:
            for reduction in reductions:
                if reduction == THRESHOLD_ONLY:
                    configs.append(ExperimentConfig(
                        scheme=scheme, reduction=THRESHOLD_ONLY, **common,
                    ))
                elif reduction == TSVD:
                    if not tsvd_k:
                        raise ValueError("grid with tsvd reduction needs tsvd_k values")
                    for k in tsvd_k:
                        configs.append(ExperimentConfig(
                            scheme=scheme, reduction=TSVD, tsvd_k=k, **common,
                        ))
                        for d in cca_dims:
                            if d <= k:
                                configs.append(ExperimentConfig(
                                    scheme=scheme, reduction=TSVD, tsvd_k=k,
                                    cca_dims=d, **common,
                                ))
                else:
                    raise ValueError(f"unknown reduction {reduction!r}")
    return configs


def _reject_unknown(section, allowed: set, name: str) -> None:
    unknown = sorted(set(section.keys()) - allowed)
    if unknown:
        raise ValueError(f"unknown keys in [{name}]: {', '.join(unknown)}")


def _opt_int(section, key: str) -> "int | None":
    raw = section.get(key, "").strip()
    return int(raw) if raw else None


def _str_list(raw: str) -> "list[str]":
    return [item.strip() for item in raw.split(",") if item.strip()]


def _int_list(raw: str) -> "list[int]":
    return [int(item) for item in _str_list(raw)]

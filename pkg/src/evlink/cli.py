"""Command-line interface.

Subcommands cover the full pipeline: corpus ingestion (`ingest`, `dedup`,
`split`), representation building (`vectorize`, `fit-tsvd`, `fit-cca`),
retrieval (`rank`), evaluation (`eval`, `grid`), and the synthetic fixture
generator (`synth`).  Staged commands exchange data through a manifest
directory plus binary vector/model files whose row order follows the
manifest's document order.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import scipy.sparse as sp

from . import align, decompose, harness, ranker, synth, vectorspace
from .corpus import (
    CorpusManifest,
    build_manifest,
    dedup_webpages,
    extract_webpage_text,
    import_jsonl,
    import_pubmed_xml,
    read_links_csv,
    resolve_one_to_one,
    split_links,
)

ARTICLE_VECTORS = "articles.vec"
WEBPAGE_VECTORS = "webpages.vec"
TSVD_MODEL = "tsvd.bin"
CCA_MODEL = "cca.bin"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evlink",
        description="Link webpages to the research articles they describe.",
    )
    parser.add_argument("--seed", type=int, default=None, help="RNG seed override")
    parser.add_argument("--config", type=Path, default=None, help="experiment/grid config file")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build a corpus manifest from raw inputs")
    p.add_argument("--articles", type=Path, required=True,
                   help="E-utilities XML (.xml) or JSONL (.jsonl) article dump")
    p.add_argument("--webpages", type=Path, required=True, help="webpage JSONL dump")
    p.add_argument("--links", type=Path, required=True, help="raw links CSV")
    p.add_argument("--html", action="store_true",
                   help="treat webpage text fields as HTML and extract visible text")
    p.add_argument("--min-words", type=int, default=100)
    p.add_argument("--dedup-fraction", type=float, default=0.5)
    p.add_argument("--residual-overlap", type=float, default=0.1)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--no-english-filter", action="store_true")
    p.add_argument("--skip-dedup", action="store_true")
    p.add_argument("--skip-resolve", action="store_true",
                   help="keep raw links for a staged dedup/split workflow")
    p.add_argument("--skip-split", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("dedup", help="near-duplicate removal + 1:1 resolution on a manifest")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--residual-overlap", type=float, default=0.1)
    p.set_defaults(func=cmd_dedup)

    p = sub.add_parser("split", help="assign links to train/test")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("vectorize", help="build the vocabulary and vector sets")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--scheme", choices=vectorspace.SCHEMES, default=vectorspace.TFIDF)
    p.add_argument("--max-df", type=float, default=0.85)
    p.add_argument("--idf-variant", choices=vectorspace.IDF_VARIANTS,
                   default=vectorspace.IDF_SMOOTH)
    p.add_argument("--jsonl", action="store_true", help="also write JSONL debug vectors")
    p.set_defaults(func=cmd_vectorize)

    p = sub.add_parser("fit-tsvd", help="fit the truncated SVD on the training stack")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--vectors", type=Path, required=True, help="directory from `vectorize`")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n-iter", type=int, default=decompose.DEFAULT_N_ITER)
    p.add_argument("--oversample", type=int, default=decompose.DEFAULT_OVERSAMPLE)
    p.set_defaults(func=cmd_fit_tsvd)

    p = sub.add_parser("fit-cca", help="fit CCA on the training pairs")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--vectors", type=Path, required=True)
    p.add_argument("--tsvd", type=Path, required=True, help="tsvd.bin from `fit-tsvd`")
    p.add_argument("--dims", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=align.DEFAULT_EPSILON)
    p.set_defaults(func=cmd_fit_cca)

    p = sub.add_parser("rank", help="rank the candidate pool for every test webpage")
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--vectors", type=Path, required=True)
    p.add_argument("--tsvd", type=Path, default=None)
    p.add_argument("--cca", type=Path, default=None)
    p.add_argument("--topk", type=int, default=ranker.DEFAULT_TOP_K)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("eval", help="run one experiment end-to-end")
    p.add_argument("--manifest", type=Path, default=None)
    p.add_argument("--scheme", choices=vectorspace.SCHEMES, default=vectorspace.TFIDF)
    p.add_argument("--reduction", choices=harness.REDUCTIONS, default=harness.THRESHOLD_ONLY)
    p.add_argument("--tsvd-k", type=int, default=None)
    p.add_argument("--cca-dims", type=int, default=None)
    p.add_argument("--max-df", type=float, default=0.85)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grid", help="run an experiment grid and write grid.csv")
    p.add_argument("--manifest", type=Path, default=None)
    p.add_argument("--phase", choices=("1", "2", "both"), default="1")
    p.add_argument("--schemes", default=None, help="comma list (phase 1)")
    p.add_argument("--tsvd-k", default=None, help="comma list of component counts")
    p.add_argument("--cca-dims", default=None, help="comma list (phase 2)")
    p.add_argument("--max-df", type=float, default=0.85)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--parallel", action="store_true")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("synth", help="generate the synthetic benchmark corpus")
    p.add_argument("--distractors", type=int, default=2000)
    p.add_argument("--pairs", type=int, default=300)
    p.add_argument("--rho", type=float, default=0.3, help="fraction of tokens replaced")
    p.add_argument("--vocab-size", type=int, default=8000)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.set_defaults(func=cmd_synth)

    return parser


def _require_out(args) -> Path:
    if args.out is None:
        raise SystemExit("error: --out <dir> is required for this command")
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def _seed(args, default: int) -> int:
    return default if args.seed is None else args.seed


def cmd_ingest(args) -> int:
    if args.articles.suffix.lower() == ".xml":
        articles, skipped = import_pubmed_xml(args.articles)
        if skipped:
            print(f"[warn] skipped {skipped} article records without a PMID", file=sys.stderr)
    else:
        articles = import_jsonl(args.articles)
    webpages = import_jsonl(args.webpages)
    if args.html:
        from .corpus import Document
        webpages = [
            Document.from_text(d.id, d.kind, extract_webpage_text(d.raw_text))
            for d in webpages
        ]
    raw_links = read_links_csv(args.links)

    manifest = build_manifest(
        articles, webpages, raw_links,
        seed=_seed(args, 0),
        train_fraction=args.train_fraction,
        min_words=args.min_words,
        dedup_fraction=args.dedup_fraction,
        residual_overlap=args.residual_overlap,
        english_filter=not args.no_english_filter,
        do_dedup=not args.skip_dedup,
        do_resolve=not args.skip_resolve,
        do_split=not args.skip_split,
    )
    out = _require_out(args)
    manifest.save(out)
    print(f"manifest written to {out}: {len(manifest.articles)} articles, "
          f"{len(manifest.webpages)} webpages, {len(manifest.links)} links")
    return 0


def cmd_dedup(args) -> int:
    manifest = CorpusManifest.load(args.manifest)
    raw = [(l.article_id, l.webpage_id) for l in manifest.links]
    pages = dedup_webpages(
        manifest.webpages, raw,
        fraction=args.fraction, residual_overlap=args.residual_overlap,
    )
    page_ids = {d.id for d in pages}
    raw = [(a, w) for a, w in raw if w in page_ids]
    links = resolve_one_to_one(raw, pages)
    linked = {l.webpage_id for l in links}
    refined = CorpusManifest(
        articles=manifest.articles,
        webpages=[d for d in pages if d.id in linked],
        links=links,
        split={},
        seed=manifest.seed,
        filter_params={
            **manifest.filter_params,
            "dedup_fraction": args.fraction,
            "residual_overlap": args.residual_overlap,
            "resolved": True,
        },
        generator_params=manifest.generator_params,
    )
    refined.validate()
    out = args.out if args.out is not None else args.manifest
    refined.save(out)
    print(f"dedup kept {len(refined.webpages)} of {len(manifest.webpages)} webpages, "
          f"{len(links)} resolved links; split cleared")
    return 0


def cmd_split(args) -> int:
    manifest = CorpusManifest.load(args.manifest)
    manifest.validate(require_one_to_one=True)
    seed = _seed(args, manifest.seed)
    manifest.split = split_links(manifest.links, args.train_fraction, seed)
    manifest.seed = seed
    manifest.filter_params["train_fraction"] = args.train_fraction
    out = args.out if args.out is not None else args.manifest
    manifest.save(out)
    n_train = sum(1 for p in manifest.split.values() if p == "train")
    print(f"split {len(manifest.links)} links into {n_train} train / "
          f"{len(manifest.links) - n_train} test (seed {seed})")
    return 0


def _train_webpages(manifest: CorpusManifest):
    train_ids = {l.webpage_id for l in manifest.train_links()}
    return [d for d in manifest.webpages if d.id in train_ids]


def cmd_vectorize(args) -> int:
    manifest = CorpusManifest.load(args.manifest)
    manifest.validate(require_one_to_one=True)
    if not manifest.split:
        raise SystemExit("error: manifest has no split; run `evlink split` first")
    vocab = vectorspace.build_vocabulary(
        manifest.articles, _train_webpages(manifest),
        max_df=args.max_df, idf_variant=args.idf_variant,
    )
    out = _require_out(args)
    vocab.save(out)
    article_vectors = vectorspace.vectorize_corpus(manifest.articles, vocab, args.scheme)
    webpage_vectors = vectorspace.vectorize_corpus(manifest.webpages, vocab, args.scheme)
    vectorspace.save_vectors(out / ARTICLE_VECTORS, article_vectors)
    vectorspace.save_vectors(out / WEBPAGE_VECTORS, webpage_vectors)
    if args.jsonl:
        vectorspace.save_vectors_jsonl(out / "articles.jsonl", article_vectors)
        vectorspace.save_vectors_jsonl(out / "webpages.jsonl", webpage_vectors)
    print(f"vocabulary of {len(vocab)} terms; vectors for "
          f"{len(article_vectors)} articles and {len(webpage_vectors)} webpages "
          f"({args.scheme}) written to {out}")
    return 0


def _load_row_spaces(manifest: CorpusManifest, vectors_dir: Path):
    articles = vectorspace.to_csr(vectorspace.load_vectors(vectors_dir / ARTICLE_VECTORS))
    webpages = vectorspace.to_csr(vectorspace.load_vectors(vectors_dir / WEBPAGE_VECTORS))
    if articles.shape[0] != len(manifest.articles):
        raise SystemExit("error: article vector count does not match the manifest")
    if webpages.shape[0] != len(manifest.webpages):
        raise SystemExit("error: webpage vector count does not match the manifest")
    article_row = {d.id: i for i, d in enumerate(manifest.articles)}
    webpage_row = {d.id: i for i, d in enumerate(manifest.webpages)}
    return articles, webpages, article_row, webpage_row


def cmd_fit_tsvd(args) -> int:
    manifest = CorpusManifest.load(args.manifest)
    manifest.validate(require_one_to_one=True)
    articles, webpages, article_row, webpage_row = _load_row_spaces(manifest, args.vectors)
    train = manifest.train_links()
    if not train:
        raise SystemExit("error: manifest has no training links; run `evlink split` first")
    import scipy.sparse as sp
    stack = sp.vstack([
        articles[[article_row[l.article_id] for l in train]],
        webpages[[webpage_row[l.webpage_id] for l in train]],
    ]).tocsr()
    model = decompose.fit_tsvd(
        stack, k=args.k, seed=_seed(args, 0),
        n_iter=args.n_iter, oversample=args.oversample,
    )
    out = _require_out(args)
    model.save(out / TSVD_MODEL)
    print(f"tsvd k={model.k} fitted on {stack.shape[0]} training rows; "
          f"top singular value {model.singular_values[0]:.6g}; saved to {out / TSVD_MODEL}")
    return 0


def cmd_fit_cca(args) -> int:
    manifest = CorpusManifest.load(args.manifest)
    manifest.validate(require_one_to_one=True)
    articles, webpages, article_row, webpage_row = _load_row_spaces(manifest, args.vectors)
    model = decompose.TsvdModel.load(args.tsvd)
    train = manifest.train_links()
    if not train:
        raise SystemExit("error: manifest has no training links; run `evlink split` first")
    page_embeddings = decompose.project(
        model, webpages[[webpage_row[l.webpage_id] for l in train]]
    )
    article_embeddings = decompose.project(
        model, articles[[article_row[l.article_id] for l in train]]
    )
    try:
        cca = align.fit_cca(page_embeddings, article_embeddings,
                            d=args.dims, epsilon=args.epsilon)
    except align.CcaConvergenceError as exc:
        raise SystemExit(f"error: CCA did not converge: {exc}")
    out = _require_out(args)
    cca.save(out / CCA_MODEL)
    print(f"cca d={cca.d} fitted on {len(train)} pairs; leading correlation "
          f"{cca.correlations[0]:.4f}; saved to {out / CCA_MODEL}")
    return 0


def cmd_rank(args) -> int:
    manifest = CorpusManifest.load(args.manifest)
    manifest.validate(require_one_to_one=True)
    articles, webpages, article_row, webpage_row = _load_row_spaces(manifest, args.vectors)
    test = manifest.test_links()
    if not test:
        raise SystemExit("error: manifest has no test links; run `evlink split` first")
    pool_ids = sorted({l.article_id for l in test} | set(manifest.distractor_ids()))
    queries = webpages[[webpage_row[l.webpage_id] for l in test]]
    pool_matrix = articles[[article_row[i] for i in pool_ids]]
    representation = "term-space"

    if args.cca is not None and args.tsvd is None:
        raise SystemExit("error: --cca requires --tsvd (CCA runs on T-SVD embeddings)")
    if args.tsvd is not None:
        model = decompose.TsvdModel.load(args.tsvd)
        queries = decompose.project(model, queries)
        pool_matrix = decompose.project(model, pool_matrix)
        representation = f"tsvd{model.k}"
        if args.cca is not None:
            cca = align.CcaModel.load(args.cca)
            queries = align.project_side(cca, align.WEBPAGE_SIDE, queries)
            pool_matrix = align.project_side(cca, align.ARTICLE_SIDE, pool_matrix)
            representation += f"+cca{cca.d}"

    pool = ranker.CandidatePool.from_matrix(pool_ids, pool_matrix, representation)
    import scipy.sparse as sp
    if sp.issparse(queries):
        items = [
            (link.webpage_id, row, link.article_id)
            for link, row in zip(test, vectorspace.from_csr(queries))
        ]
    else:
        items = [(l.webpage_id, queries[i], l.article_id) for i, l in enumerate(test)]
    results = ranker.rank_all(items, pool, k=args.topk, n_workers=args.workers)
    out = _require_out(args)
    ranker.write_rankings(out / "rankings.jsonl", results)
    ranks = [r.true_rank for r in results]
    print(f"ranked {len(results)} queries against {pool.size} candidates "
          f"({representation}); median true rank "
          f"{sorted(ranks)[len(ranks) // 2]}; wrote {out / 'rankings.jsonl'}")
    return 0


def _eval_config(args) -> harness.ExperimentConfig:
    if args.config is not None:
        configs = harness.load_config_file(args.config)
        if len(configs) != 1:
            raise SystemExit("error: eval --config must describe exactly one experiment")
        return configs[0]
    if args.manifest is None:
        raise SystemExit("error: eval needs --manifest (or --config)")
    return harness.ExperimentConfig(
        scheme=args.scheme,
        reduction=args.reduction,
        tsvd_k=args.tsvd_k,
        cca_dims=args.cca_dims,
        max_df=args.max_df,
        train_fraction=args.train_fraction,
        seed=_seed(args, 0),
        manifest_path=str(args.manifest),
    )


def _print_summary(summary: harness.EvalSummary) -> None:
    tag = summary.config.experiment_id()
    if summary.status != harness.STATUS_OK:
        print(f"{tag}: {summary.status}")
        return
    q1, q3 = summary.iqr
    print(f"{tag}: median rank {summary.median_rank:g} (IQR {q1:g}-{q3:g}), "
          f"recall@1 {summary.recall_at_1:.3f}, recall@50 {summary.recall_at_50:.3f} "
          f"over {summary.n_queries} queries / {summary.pool_size} candidates")


def cmd_eval(args) -> int:
    config = _eval_config(args)
    summary = harness.run_experiment(config)
    _print_summary(summary)
    if args.out is not None:
        out = _require_out(args)
        with (out / f"summary_{config.experiment_id()}.json").open("w", encoding="utf-8") as fh:
            json.dump(harness.summary_to_dict(summary), fh, indent=2, sort_keys=True)
            fh.write("\n")
        if summary.curve is not None:
            harness.write_curve_csv(out / f"curve_{config.experiment_id()}.csv", summary.curve)
    return 0 if summary.status == harness.STATUS_OK else 1


def _int_list(raw: "str | None"):
    if raw is None:
        return None
    return tuple(int(x) for x in raw.split(",") if x.strip())


def cmd_grid(args) -> int:
    if args.config is not None:
        configs = harness.load_config_file(args.config)
    else:
        if args.manifest is None:
            raise SystemExit("error: grid needs --manifest (or --config)")
        seed = _seed(args, 0)
        tsvd_k = _int_list(args.tsvd_k) or harness.PHASE1_TSVD_COMPONENTS
        cca_dims = _int_list(args.cca_dims) or harness.PHASE2_CCA_DIMENSIONS
        schemes = (
            tuple(s.strip() for s in args.schemes.split(","))
            if args.schemes else vectorspace.SCHEMES
        )
        configs = []
        if args.phase in ("1", "both"):
            configs += harness.default_phase1_grid(
                args.manifest, seed=seed, schemes=schemes, tsvd_components=tsvd_k,
                max_df=args.max_df, train_fraction=args.train_fraction,
            )
        if args.phase in ("2", "both"):
            configs += harness.default_phase2_grid(
                args.manifest, seed=seed, tsvd_components=tsvd_k,
                cca_dimensions=cca_dims,
                max_df=args.max_df, train_fraction=args.train_fraction,
            )
    summaries = harness.run_grid(configs, out_dir=args.out, parallel=args.parallel)
    for summary in summaries:
        _print_summary(summary)
    if args.out is not None:
        print(f"grid report written to {Path(args.out) / 'grid.csv'}")
    return 0


def cmd_synth(args) -> int:
    params = synth.SynthParams(
        n_distractors=args.distractors,
        n_pairs=args.pairs,
        replace_fraction=args.rho,
        vocab_size=args.vocab_size,
        train_fraction=args.train_fraction,
        seed=_seed(args, 13),
    )
    manifest = synth.generate_corpus(params)
    out = _require_out(args)
    manifest.save(out)
    print(f"synthetic corpus written to {out}: {len(manifest.articles)} articles "
          f"({len(manifest.distractor_ids())} distractors), "
          f"{len(manifest.links)} linked webpages")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())

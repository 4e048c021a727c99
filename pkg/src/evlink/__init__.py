"""evlink: recommend the source research article for a webpage's text.

A vector-space document linking engine over two corpora (research articles
and webpages), with optional truncated-SVD reduction, CCA cross-corpus
alignment, exhaustive cosine ranking, and an evaluation harness.
"""

from .align import CcaConvergenceError, CcaModel, fit_cca, project_side
from .corpus import (
    CorpusManifest,
    Document,
    KnownLink,
    ManifestError,
    build_manifest,
    dedup_webpages,
    extract_webpage_text,
    import_jsonl,
    import_pubmed_xml,
    is_probably_english,
    lcs_length,
    resolve_one_to_one,
    split_links,
    tokenize,
)
from .decompose import DegenerateMatrixError, TsvdModel, fit_tsvd, project
from .harness import (
    EvalSummary,
    ExperimentConfig,
    ExperimentContext,
    default_phase1_grid,
    default_phase2_grid,
    load_config_file,
    run_experiment,
    run_grid,
)
from .metrics import median_and_iqr, recall_at_k, recall_curve
from .ranker import CandidatePool, RankedResult, cosine, rank_all, rank_candidates
from .synth import SynthParams, generate_corpus
from .vectorspace import (
    EmptyVocabularyError,
    SparseVector,
    Vocabulary,
    build_vocabulary,
    vectorize,
    vectorize_corpus,
)

__version__ = "0.1.0"

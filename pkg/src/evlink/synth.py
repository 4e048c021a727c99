"""Synthetic linked-corpus generator.

Builds a corpus with the same structure as the real data: a large set of
distractor pseudo-abstracts drawn from a Zipfian vocabulary, plus linked
pairs where the "webpage" is its article with a fraction of tokens swapped
through a fixed synonym map and a few filler sentences appended.  All
generation parameters are recorded in the resulting manifest, so a fixture
is reproducible from its manifest.json alone.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .corpus import CorpusManifest, Document, build_manifest

# Generic English filler appended to synthetic webpages; heavy in function
# words so the pages behave like real prose under the language heuristic.
FILLER_SENTENCES = (
    "the findings were described by the authors of the original report",
    "these results should be interpreted with some caution because they may not apply to everyone",
    "it is not yet clear whether this would change current practice",
    "more research will be needed before any of this can be confirmed",
    "the study was published after it had been reviewed by other researchers",
    "many of those who read about this work said that it was of interest to them",
    "there are a few points that were not addressed by the authors",
    "some experts who were not involved with the work offered their own views",
    "a summary of the evidence can be found at the end of this page",
    "readers should note that the numbers reported here come from a single study",
)

_WORD_LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class SynthParams:
    """Knobs for the generator; defaults give the bundled benchmark fixture."""

    n_distractors: int = 2000
    n_pairs: int = 300
    replace_fraction: float = 0.3
    vocab_size: int = 8000
    zipf_exponent: float = 1.1
    min_doc_tokens: int = 120
    max_doc_tokens: int = 180
    train_fraction: float = 0.7
    seed: int = 13


def _make_vocabulary(rng: np.random.Generator, size: int) -> list[str]:
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < size:
        length = int(rng.integers(5, 10))
        word = "".join(_WORD_LETTERS[i] for i in rng.integers(0, 26, size=length))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def _zipf_probabilities(size: int, exponent: float) -> np.ndarray:
    weights = 1.0 / np.arange(1, size + 1) ** exponent
    return weights / weights.sum()


def generate_corpus(params: SynthParams = SynthParams()) -> CorpusManifest:
    """Generate the synthetic corpus and run it through the normal pipeline
    (filters, dedup, 1:1 resolution, split)."""
    if not 0 <= params.replace_fraction <= 1:
        raise ValueError("replace_fraction must be in [0, 1]")
    rng = np.random.default_rng(params.seed)
    vocabulary = _make_vocabulary(rng, params.vocab_size)
    probabilities = _zipf_probabilities(params.vocab_size, params.zipf_exponent)

    # Fixed synonym map: a seeded pairing of the vocabulary with itself, so
    # webpage-side replacements still hit words that occur in articles.
    paired = rng.permutation(params.vocab_size)
    synonym: dict[str, str] = {}
    for i in range(0, params.vocab_size - 1, 2):
        a, b = vocabulary[paired[i]], vocabulary[paired[i + 1]]
        synonym[a] = b
        synonym[b] = a

    n_articles = params.n_distractors + params.n_pairs
    linked = set(rng.permutation(n_articles)[:params.n_pairs].tolist())

    articles: list[Document] = []
    webpages: list[Document] = []
    raw_links: list[tuple[str, str]] = []
    for i in range(n_articles):
        length = int(rng.integers(params.min_doc_tokens, params.max_doc_tokens + 1))
        token_ids = rng.choice(params.vocab_size, size=length, p=probabilities)
        tokens = [vocabulary[t] for t in token_ids]
        article_id = str(100000 + i)
        articles.append(Document.from_text(article_id, "article", " ".join(tokens)))

        if i in linked:
            page_tokens = list(tokens)
            n_replace = round(params.replace_fraction * length)
            for position in rng.choice(length, size=n_replace, replace=False):
                word = page_tokens[position]
                page_tokens[position] = synonym.get(word, word)
            n_filler = int(rng.integers(2, 5))
            fillers = [
                FILLER_SENTENCES[j]
                for j in rng.choice(len(FILLER_SENTENCES), size=n_filler, replace=False)
            ]
            text = " ".join(page_tokens) + ". " + ". ".join(fillers) + "."
            webpage_id = f"https://example.org/news/{i}"
            webpages.append(Document.from_text(webpage_id, "webpage", text))
            raw_links.append((article_id, webpage_id))

    manifest = build_manifest(
        articles, webpages, raw_links,
        seed=params.seed, train_fraction=params.train_fraction,
    )
    manifest.generator_params = asdict(params)
    return manifest

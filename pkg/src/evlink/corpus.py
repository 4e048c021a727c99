"""Corpus construction: import, clean, filter, deduplicate, and link the
article and webpage collections, and produce reproducible train/test splits.

A finished corpus is a :class:`CorpusManifest`, persisted as a directory of
plain files (``articles.jsonl``, ``webpages.jsonl``, ``links.csv``,
``split.csv``, ``manifest.json``) so every downstream stage can be re-run
bit-identically from disk.
"""

from __future__ import annotations

import csv
import json
import re
import xml.etree.ElementTree as ET
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path
from random import Random

import numpy as np

ARTICLE = "article"
WEBPAGE = "webpage"
KINDS = (ARTICLE, WEBPAGE)

TRAIN = "train"
TEST = "test"

DEFAULT_MIN_WORDS = 100
DEFAULT_DEDUP_FRACTION = 0.5
DEFAULT_RESIDUAL_OVERLAP = 0.1
DEFAULT_TRAIN_FRACTION = 0.7
ENGLISH_RATIO_THRESHOLD = 0.05

_NON_WORD = re.compile(r"[\W_]+", re.UNICODE)
_WS = re.compile(r"\s+")

# 150 high-frequency English function words, used by the language heuristic.
# Deliberately excludes words that are equally common in other European
# languages ("in", "an", "was", "also", "so", "man", "am"), which would
# otherwise misclassify short non-English pages.
ENGLISH_FUNCTION_WORDS = frozenset((
    "the a this that these those each every either neither "
    "both few many much most some any such other another "
    "no none i you he she it we they me "
    "him her us them my your his its our their "
    "myself yourself himself herself itself who whom whose which what "
    "something anything nothing everything someone anyone everyone nobody be is "
    "are were been being do does did doing have has "
    "had having will would shall should can could may might "
    "must of to from with without within into upon at "
    "on by for about against between among through during before "
    "after above below under over off out up down across "
    "along around and or but nor yet if because although "
    "though while unless since until than as whether once when "
    "where why how not only just very too quite rather "
    "almost always never often again already still here there then"
).split())


class ManifestError(ValueError):
    """A corpus manifest violates one of its structural invariants."""


class XmlParseError(ValueError):
    """Malformed XML input; carries the approximate byte offset."""

    def __init__(self, message: str, byte_offset: int) -> None:
        super().__init__(message)
        self.byte_offset = byte_offset


class ResidualOverlapError(ValueError):
    """Two retained webpages still overlap beyond the residual threshold."""


@dataclass(frozen=True)
class Document:
    """One article or webpage admitted to (or destined for) a corpus."""

    id: str
    kind: str
    raw_text: str
    tokens: tuple[str, ...]
    word_count: int

    @classmethod
    def from_text(cls, doc_id: str, kind: str, raw_text: str) -> "Document":
        if kind not in KINDS:
            raise ValueError(f"unknown document kind {kind!r}")
        return cls(
            id=doc_id,
            kind=kind,
            raw_text=raw_text,
            tokens=tuple(tokenize(raw_text)),
            word_count=len(raw_text.split()),
        )


@dataclass(frozen=True)
class KnownLink:
    """A verified article/webpage pairing (the supervision signal)."""

    article_id: str
    webpage_id: str


def tokenize(raw_text: str) -> list[str]:
    """Lowercase, split on whitespace, strip punctuation from each word,
    and drop tokens that end up empty or consist entirely of digits.
    """
    tokens = []
    for word in raw_text.lower().split():
        term = _NON_WORD.sub("", word)
        if term and not term.isdigit():
            tokens.append(term)
    return tokens


def is_probably_english(tokens: "list[str] | tuple[str, ...]") -> bool:
    """Heuristic language check: at least 5% of tokens are common English
    function words.  Requires a non-empty token sequence.
    """
    if not tokens:
        raise ValueError("cannot classify an empty token sequence")
    hits = sum(1 for t in tokens if t in ENGLISH_FUNCTION_WORDS)
    return hits / len(tokens) >= ENGLISH_RATIO_THRESHOLD


def _normalize_text(text: str) -> str:
    return _WS.sub(" ", text.lower()).strip()


def _lcs_normalized(s: str, t: str) -> int:
    """Longest common substring length of two already-normalized strings.

    Linear-time: build a suffix automaton over the longer string, then
    stream the shorter one through it.
    """
    if not s or not t:
        return 0
    if len(s) < len(t):
        s, t = t, s

    # Suffix automaton of s: parallel arrays of state length, suffix link,
    # and outgoing transitions.
    length = [0]
    link = [-1]
    trans: list[dict[str, int]] = [{}]
    last = 0
    for ch in s:
        cur = len(length)
        length.append(length[last] + 1)
        link.append(0)
        trans.append({})
        p = last
        while p >= 0 and ch not in trans[p]:
            trans[p][ch] = cur
            p = link[p]
        if p >= 0:
            q = trans[p][ch]
            if length[p] + 1 == length[q]:
                link[cur] = q
            else:
                clone = len(length)
                length.append(length[p] + 1)
                link.append(link[q])
                trans.append(dict(trans[q]))
                while p >= 0 and trans[p].get(ch) == q:
                    trans[p][ch] = clone
                    p = link[p]
                link[q] = clone
                link[cur] = clone
        last = cur

    best = 0
    state = 0
    matched = 0
    for ch in t:
        while state and ch not in trans[state]:
            state = link[state]
            matched = length[state]
        if ch in trans[state]:
            state = trans[state][ch]
            matched += 1
            if matched > best:
                best = matched
        else:
            state = 0
            matched = 0
    return best


def lcs_length(a: str, b: str) -> int:
    """Length (in characters) of the longest contiguous substring common to
    the whitespace-normalized, lowercased forms of ``a`` and ``b``.
    """
    return _lcs_normalized(_normalize_text(a), _normalize_text(b))


def dedup_webpages(
    webpages: "list[Document]",
    links: "list[tuple[str, str]]",
    fraction: float = DEFAULT_DEDUP_FRACTION,
    residual_overlap: float = DEFAULT_RESIDUAL_OVERLAP,
    random_choice_seed: "int | None" = None,
) -> "list[Document]":
    """Collapse near-duplicate webpages among those linked to the same article.

    A pair is a near-duplicate when its longest common substring exceeds
    ``fraction`` of the longer page's normalized length.  One representative
    per near-duplicate group is retained: the longest text, ties broken by
    lexicographic id (or a seeded random member when ``random_choice_seed``
    is given).  After deduplication, retained pages linked to a common
    article must not overlap by more than ``residual_overlap`` of the longer
    text; a violation raises :class:`ResidualOverlapError`.

    The retained *set* does not depend on input order.
    """
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    by_id = {doc.id: doc for doc in webpages}
    normalized = {doc.id: _normalize_text(doc.raw_text) for doc in webpages}

    groups: dict[str, set[str]] = defaultdict(set)
    for article_id, webpage_id in links:
        if webpage_id in by_id:
            groups[article_id].add(webpage_id)

    rng = Random(random_choice_seed) if random_choice_seed is not None else None
    dropped: set[str] = set()
    for article_id in sorted(groups):
        members = sorted(groups[article_id])
        if len(members) < 2:
            continue
        parent = {m: m for m in members}

        def find(x: str) -> str:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i, wa in enumerate(members):
            for wb in members[i + 1:]:
                limit = fraction * max(len(normalized[wa]), len(normalized[wb]))
                if _lcs_normalized(normalized[wa], normalized[wb]) > limit:
                    parent[find(wa)] = find(wb)

        components: dict[str, list[str]] = defaultdict(list)
        for m in members:
            components[find(m)].append(m)
        for component in sorted(components.values(), key=min):
            if len(component) == 1:
                continue
            if rng is not None:
                keep = rng.choice(sorted(component))
            else:
                keep = min(component, key=lambda m: (-len(normalized[m]), m))
            dropped.update(m for m in component if m != keep)

    retained = [doc for doc in webpages if doc.id not in dropped]

    retained_ids = {doc.id for doc in retained}
    for article_id in sorted(groups):
        kept = sorted(groups[article_id] & retained_ids)
        for i, wa in enumerate(kept):
            for wb in kept[i + 1:]:
                longer = max(len(normalized[wa]), len(normalized[wb]))
                if _lcs_normalized(normalized[wa], normalized[wb]) > residual_overlap * longer:
                    raise ResidualOverlapError(
                        f"webpages {wa!r} and {wb!r} (article {article_id!r}) overlap "
                        f"beyond the residual threshold {residual_overlap}"
                    )
    return retained


def resolve_one_to_one(
    links: "list[tuple[str, str]]",
    webpages: "list[Document]",
) -> "list[KnownLink]":
    """Reduce a raw link multigraph to a 1:1 link set.

    Pairs whose article and webpage both occur exactly once among the
    distinct raw links are admitted first.  Each remaining article, in
    sorted-id order, takes its linked webpage with the greatest word count
    (ties by lexicographic id) that is still unused.  Articles left with no
    available webpage are dropped.
    """
    word_count = {doc.id: doc.word_count for doc in webpages}
    pairs = sorted(set(links))
    for article_id, webpage_id in pairs:
        if webpage_id not in word_count:
            raise ValueError(f"link references unknown webpage {webpage_id!r}")

    article_degree = Counter(a for a, _ in pairs)
    webpage_degree = Counter(w for _, w in pairs)

    resolved: list[KnownLink] = []
    used_articles: set[str] = set()
    used_webpages: set[str] = set()
    for article_id, webpage_id in pairs:
        if article_degree[article_id] == 1 and webpage_degree[webpage_id] == 1:
            resolved.append(KnownLink(article_id, webpage_id))
            used_articles.add(article_id)
            used_webpages.add(webpage_id)

    candidates: dict[str, list[str]] = defaultdict(list)
    for article_id, webpage_id in pairs:
        candidates[article_id].append(webpage_id)
    for article_id in sorted(candidates):
        if article_id in used_articles:
            continue
        available = [w for w in candidates[article_id] if w not in used_webpages]
        if not available:
            continue
        best = min(available, key=lambda w: (-word_count[w], w))
        resolved.append(KnownLink(article_id, best))
        used_articles.add(article_id)
        used_webpages.add(best)

    return sorted(resolved, key=lambda l: (l.article_id, l.webpage_id))


def split_links(
    links: "list[KnownLink]",
    train_fraction: float,
    seed: int,
) -> "dict[KnownLink, str]":
    """Randomly assign each link to train or test.

    ``round(train_fraction * len(links))`` links go to the training set,
    chosen by a seeded RNG; the assignment is independent of input order.
    """
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if len(links) < 2:
        raise ValueError("need at least 2 links to split")
    ordered = sorted(links, key=lambda l: (l.article_id, l.webpage_id))
    n_train = round(train_fraction * len(ordered))
    perm = np.random.default_rng(seed).permutation(len(ordered))
    train_positions = set(perm[:n_train].tolist())
    return {
        link: (TRAIN if i in train_positions else TEST)
        for i, link in enumerate(ordered)
    }


# -- importers ---------------------------------------------------------------

def import_pubmed_xml(path: "str | Path") -> "tuple[list[Document], int]":
    """Read an E-utilities efetch XML dump (PubmedArticleSet).

    Returns ``(documents, n_skipped)`` where each document's raw text is the
    article title concatenated with its abstract, and ``n_skipped`` counts
    records lacking a PMID.
    """
    path = Path(path)
    documents: list[Document] = []
    skipped = 0
    try:
        with path.open("rb") as handle:
            for event, elem in ET.iterparse(handle, events=("end",)):
                if elem.tag != "PubmedArticle":
                    continue
                pmid_el = elem.find("MedlineCitation/PMID")
                pmid = (pmid_el.text or "").strip() if pmid_el is not None else ""
                if not pmid:
                    skipped += 1
                    elem.clear()
                    continue
                title_el = elem.find("MedlineCitation/Article/ArticleTitle")
                title = "".join(title_el.itertext()).strip() if title_el is not None else ""
                abstract_parts = [
                    "".join(part.itertext()).strip()
                    for part in elem.findall("MedlineCitation/Article/Abstract/AbstractText")
                ]
                abstract = " ".join(p for p in abstract_parts if p)
                raw_text = f"{title} {abstract}".strip()
                documents.append(Document.from_text(pmid, ARTICLE, raw_text))
                elem.clear()
    except ET.ParseError as exc:
        line, column = exc.position
        offset = _byte_offset(path, line, column)
        raise XmlParseError(
            f"{path}: malformed XML at byte offset {offset} (line {line}, column {column})",
            byte_offset=offset,
        ) from exc
    return documents, skipped


def _byte_offset(path: Path, line: int, column: int) -> int:
    offset = 0
    with path.open("rb") as handle:
        for _ in range(line - 1):
            offset += len(handle.readline())
    return offset + column


def import_jsonl(path: "str | Path") -> "list[Document]":
    """Read documents from JSONL with fields ``id``, ``kind``, ``text``."""
    documents = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: invalid JSON on line {lineno}: {exc}") from exc
            try:
                documents.append(
                    Document.from_text(str(record["id"]), record["kind"], record["text"])
                )
            except KeyError as exc:
                raise ValueError(f"{path}: line {lineno} missing field {exc}") from exc
    return documents


def read_links_csv(path: "str | Path") -> "list[tuple[str, str]]":
    """Read raw article/webpage links from CSV with a required header."""
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["article_id", "webpage_id"]:
            raise ValueError(f"{path}: expected header 'article_id,webpage_id'")
        return [(row[0], row[1]) for row in reader if row]


# -- webpage text extraction -------------------------------------------------

_BLOCK_TAGS = frozenset({
    "address", "article", "aside", "blockquote", "br", "dd", "div", "dl",
    "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2",
    "h3", "h4", "h5", "h6", "header", "hr", "li", "main", "nav", "ol", "p",
    "pre", "section", "table", "td", "th", "tr", "ul",
})
_SKIP_TAGS = frozenset({"script", "style", "noscript"})


class _VisibleTextParser(HTMLParser):
    """Collects visible character data, inserting breaks at block boundaries."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self._chunks: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
        elif tag in _BLOCK_TAGS:
            self._chunks.append(" ")

    def handle_startendtag(self, tag, attrs):
        if tag in _BLOCK_TAGS:
            self._chunks.append(" ")

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            if self._skip_depth > 0:
                self._skip_depth -= 1
        elif tag in _BLOCK_TAGS:
            self._chunks.append(" ")

    def handle_data(self, data):
        if self._skip_depth == 0:
            self._chunks.append(data)

    def text(self) -> str:
        return "".join(self._chunks)


def extract_webpage_text(html: str) -> str:
    """Extract visible text from HTML: drops markup, script, and style
    content, turns block boundaries into single spaces, and collapses runs
    of whitespace.  Malformed HTML degrades to best-effort extraction; plain
    text passes through with whitespace collapsed.
    """
    parser = _VisibleTextParser()
    parser.feed(html)
    parser.close()
    return " ".join(parser.text().split())


# -- manifest ----------------------------------------------------------------

@dataclass
class CorpusManifest:
    """A finished corpus: both document collections, the resolved link set,
    the train/test split, and the parameters that produced them.
    """

    articles: list[Document]
    webpages: list[Document]
    links: list[KnownLink]
    split: dict[KnownLink, str] = field(default_factory=dict)
    seed: int = 0
    filter_params: dict = field(default_factory=dict)
    generator_params: "dict | None" = None

    def article_by_id(self) -> "dict[str, Document]":
        return {doc.id: doc for doc in self.articles}

    def webpage_by_id(self) -> "dict[str, Document]":
        return {doc.id: doc for doc in self.webpages}

    def distractor_ids(self) -> "list[str]":
        linked = {link.article_id for link in self.links}
        return [doc.id for doc in self.articles if doc.id not in linked]

    def train_links(self) -> "list[KnownLink]":
        return [l for l in self.links if self.split.get(l) == TRAIN]

    def test_links(self) -> "list[KnownLink]":
        return [l for l in self.links if self.split.get(l) == TEST]

    def is_resolved(self) -> bool:
        """Whether the link set has been reduced to 1:1 (raw imports may
        still carry a multigraph)."""
        return bool(self.filter_params.get("resolved", True))

    def validate(self, require_one_to_one: "bool | None" = None) -> None:
        """Check structural invariants; raise ManifestError listing offenders.

        The 1:1 and split checks are skipped for manifests still holding raw
        (unresolved) links, unless ``require_one_to_one`` forces them.
        """
        if require_one_to_one is None:
            require_one_to_one = self.is_resolved()
        problems: list[str] = []

        def dupes(docs: list[Document]) -> list[str]:
            counts = Counter(doc.id for doc in docs)
            return sorted(i for i, c in counts.items() if c > 1)

        for name, docs in (("articles", self.articles), ("webpages", self.webpages)):
            d = dupes(docs)
            if d:
                problems.append(f"duplicate {name} ids: {_preview(d)}")
        articles = self.article_by_id()
        webpages = self.webpage_by_id()
        bad_articles = sorted({l.article_id for l in self.links} - articles.keys())
        bad_webpages = sorted({l.webpage_id for l in self.links} - webpages.keys())
        if bad_articles:
            problems.append(f"links reference unknown articles: {_preview(bad_articles)}")
        if bad_webpages:
            problems.append(f"links reference unknown webpages: {_preview(bad_webpages)}")
        if require_one_to_one:
            repeated_a = sorted(i for i, c in Counter(l.article_id for l in self.links).items() if c > 1)
            repeated_w = sorted(i for i, c in Counter(l.webpage_id for l in self.links).items() if c > 1)
            if repeated_a:
                problems.append(f"articles linked more than once: {_preview(repeated_a)}")
            if repeated_w:
                problems.append(f"webpages linked more than once: {_preview(repeated_w)}")
        if self.split:
            link_set = set(self.links)
            split_set = set(self.split)
            missing = sorted(f"{l.article_id}->{l.webpage_id}" for l in link_set - split_set)
            extra = sorted(f"{l.article_id}->{l.webpage_id}" for l in split_set - link_set)
            if missing:
                problems.append(f"links missing from split: {_preview(missing)}")
            if extra:
                problems.append(f"split entries for unknown links: {_preview(extra)}")
            bad_parts = sorted({p for p in self.split.values() if p not in (TRAIN, TEST)})
            if bad_parts:
                problems.append(f"invalid split partitions: {_preview(bad_parts)}")
        if problems:
            raise ManifestError("; ".join(problems))

    def save(self, directory: "str | Path") -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        _write_documents(directory / "articles.jsonl", self.articles)
        _write_documents(directory / "webpages.jsonl", self.webpages)
        with (directory / "links.csv").open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["article_id", "webpage_id"])
            for link in self.links:
                writer.writerow([link.article_id, link.webpage_id])
        with (directory / "split.csv").open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["article_id", "webpage_id", "partition"])
            for link in self.links:
                if link in self.split:
                    writer.writerow([link.article_id, link.webpage_id, self.split[link]])
        meta = {
            "seed": self.seed,
            "filter_params": self.filter_params,
            "counts": {
                "articles": len(self.articles),
                "webpages": len(self.webpages),
                "links": len(self.links),
                "train": sum(1 for p in self.split.values() if p == TRAIN),
                "test": sum(1 for p in self.split.values() if p == TEST),
                "distractors": len(self.distractor_ids()),
            },
        }
        if self.generator_params is not None:
            meta["generator"] = self.generator_params
        with (directory / "manifest.json").open("w", encoding="utf-8") as handle:
            json.dump(meta, handle, indent=2, sort_keys=True)
            handle.write("\n")

    @classmethod
    def load(cls, directory: "str | Path") -> "CorpusManifest":
        directory = Path(directory)
        articles = import_jsonl(directory / "articles.jsonl")
        webpages = import_jsonl(directory / "webpages.jsonl")
        links = [
            KnownLink(a, w) for a, w in read_links_csv(directory / "links.csv")
        ]
        split: dict[KnownLink, str] = {}
        split_path = directory / "split.csv"
        if split_path.exists():
            with split_path.open("r", encoding="utf-8", newline="") as handle:
                reader = csv.reader(handle)
                header = next(reader, None)
                if header != ["article_id", "webpage_id", "partition"]:
                    raise ManifestError(
                        f"{split_path}: expected header 'article_id,webpage_id,partition'"
                    )
                for row in reader:
                    if row:
                        split[KnownLink(row[0], row[1])] = row[2]
        with (directory / "manifest.json").open("r", encoding="utf-8") as handle:
            meta = json.load(handle)
        return cls(
            articles=articles,
            webpages=webpages,
            links=links,
            split=split,
            seed=meta.get("seed", 0),
            filter_params=meta.get("filter_params", {}),
            generator_params=meta.get("generator"),
        )


def _preview(items: "list[str]", limit: int = 10) -> str:
    shown = ", ".join(items[:limit])
    if len(items) > limit:
        shown += f", ... ({len(items)} total)"
    return shown


def _write_documents(path: Path, documents: "list[Document]") -> None:
    with path.open("w", encoding="utf-8") as handle:
        for doc in documents:
            handle.write(json.dumps(
                {"id": doc.id, "kind": doc.kind, "text": doc.raw_text},
                ensure_ascii=False, sort_keys=True,
            ))
            handle.write("\n")


def build_manifest(
    articles: "list[Document]",
    webpages: "list[Document]",
    raw_links: "list[tuple[str, str]]",
    seed: int,
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
    min_words: int = DEFAULT_MIN_WORDS,
    dedup_fraction: float = DEFAULT_DEDUP_FRACTION,
    residual_overlap: float = DEFAULT_RESIDUAL_OVERLAP,
    english_filter: bool = True,
    do_dedup: bool = True,
    do_resolve: bool = True,
    do_split: bool = True,
) -> CorpusManifest:
    """Run the full corpus pipeline: length/language filters, near-duplicate
    removal, 1:1 link resolution, and the train/test split.

    Links that reference documents removed by any filter are dropped.
    Webpages left without a resolved link are excluded from the final
    corpus; articles without links are kept as distractors.  With
    ``do_resolve=False`` the raw (possibly many-to-many) links are kept and
    the split is skipped, for staged pipelines that dedup/resolve later.
    """
    kept_articles = [d for d in articles if d.word_count >= min_words and d.tokens]
    kept_webpages = [
        d for d in webpages
        if d.word_count >= min_words and d.tokens
        and (not english_filter or is_probably_english(d.tokens))
    ]

    article_ids = {d.id for d in kept_articles}
    webpage_ids = {d.id for d in kept_webpages}
    links = [
        (a, w) for a, w in raw_links if a in article_ids and w in webpage_ids
    ]

    if do_dedup:
        kept_webpages = dedup_webpages(
            kept_webpages, links,
            fraction=dedup_fraction, residual_overlap=residual_overlap,
        )
        webpage_ids = {d.id for d in kept_webpages}
        links = [(a, w) for a, w in links if w in webpage_ids]

    if do_resolve:
        resolved = resolve_one_to_one(links, kept_webpages)
        linked_pages = {l.webpage_id for l in resolved}
        final_webpages = [d for d in kept_webpages if d.id in linked_pages]
    else:
        resolved = [KnownLink(a, w) for a, w in sorted(set(links))]
        final_webpages = kept_webpages

    split: dict[KnownLink, str] = {}
    if do_resolve and do_split and len(resolved) >= 2:
        split = split_links(resolved, train_fraction, seed)

    manifest = CorpusManifest(
        articles=kept_articles,
        webpages=final_webpages,
        links=resolved,
        split=split,
        seed=seed,
        filter_params={
            "min_words": min_words,
            "dedup_fraction": dedup_fraction,
            "residual_overlap": residual_overlap,
            "train_fraction": train_fraction,
            "english_filter": english_filter,
            "resolved": do_resolve,
        },
    )
    manifest.validate()
    return manifest

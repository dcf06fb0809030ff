"""Domain classification and sentiment scoring for short texts and URLs.

The offline path is a deterministic TF-IDF centroid classifier trained on
a newsgroups-style corpus directory; scores are cosine similarities in
[0, 1]. The online path parses (and optionally fetches) responses from an
external NLU service with the same assignment/sentiment shapes.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import re
import urllib.request
from collections import Counter
from dataclasses import dataclass
from html.parser import HTMLParser
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix

logger = logging.getLogger(__name__)

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def _load_stopwords() -> frozenset[str]:
    text = resources.files("socialcred.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


STOPWORDS = _load_stopwords()


class NluParseError(ValueError):
    """Raised when a recorded NLU response violates the expected schema."""


@dataclass(frozen=True, slots=True)
class DomainAssignment:
    """A taxonomy path with a confidence score in [0, 1]."""

    category: str
    score: float

    def __post_init__(self) -> None:
        if not self.category:
            raise ValueError("category must be non-empty")
        if self.category != self.category.lower():
            raise ValueError(f"category must be lowercase: {self.category!r}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score out of range: {self.score!r}")


@dataclass(frozen=True, slots=True)
class SentimentScore:
    """Signed polarity in [-1, 1]; magnitude is strength."""

    value: float

    def __post_init__(self) -> None:
        if not -1.0 <= self.value <= 1.0:
            raise ValueError(f"sentiment value out of range: {self.value!r}")


def tokenize(text: str) -> list[str]:
    """Lowercased terms with URLs, @mentions, stopwords and 1-char tokens removed.

    Hashtag markers are dropped but the hashtag word itself is kept.
    """
    if not text:
        return []
    text = _URL_RE.sub(" ", text)
    text = _MENTION_RE.sub(" ", text)
    return [
        term
        for term in _TOKEN_RE.findall(text.lower())
        if len(term) > 1 and term not in STOPWORDS
    ]


def tf_idf_weight(term: str, doc_terms: Sequence[str], model: "CategoryModel") -> float:
    """Raw tf * ln(doc_count / df) weight of ``term`` within ``doc_terms``.

    A term absent from the training vocabulary is treated as occurring in
    every document and therefore contributes zero weight.
    """
    if model.doc_count < 1:
        raise ValueError("model has no training documents")
    tf = sum(1 for t in doc_terms if t == term)
    if tf == 0:
        return 0.0
    df = model.vocabulary.get(term, 0)
    if df == 0:
        df = model.doc_count
    return tf * math.log(model.doc_count / df)


def _smoothed_idf(doc_count: int, df: int) -> float:
    # Add-one smoothing plus unit offset keeps corpus-wide terms (and the
    # single-document corpus) from collapsing to a zero vector.
    return math.log((1 + doc_count) / (1 + df)) + 1.0


@dataclass(frozen=True)
class CategoryModel:
    """Unit-norm TF-IDF centroid per category; immutable after construction."""

    categories: tuple[str, ...]
    centroids: Mapping[str, Mapping[str, float]]
    vocabulary: Mapping[str, int]
    doc_count: int

    def to_json(self) -> str:
        payload = {
            "schema_version": 1,
            "doc_count": self.doc_count,
            "categories": list(self.categories),
            "vocabulary": dict(sorted(self.vocabulary.items())),
            "centroids": {
                cat: dict(sorted(centroid.items()))
                for cat, centroid in sorted(self.centroids.items())
            },
        }
        return json.dumps(payload, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "CategoryModel":
        payload = json.loads(text)
        return cls(
            categories=tuple(payload["categories"]),
            centroids={c: dict(v) for c, v in payload["centroids"].items()},
            vocabulary=dict(payload["vocabulary"]),
            doc_count=int(payload["doc_count"]),
        )


def normalize_category(category: str) -> str:
    normalized = category.strip().lower()
    if not normalized:
        raise ValueError("category must be non-empty")
    return normalized


def train_category_model(labeled_docs: Iterable[tuple[str, str]]) -> CategoryModel:
    """Build per-category centroids from (text, category) pairs.

    Centroids are unit-normalized sums of the documents' TF-IDF vectors;
    accumulation is over integer term counts, so the result does not
    depend on document order.
    """
    doc_count = 0
    df: Counter[str] = Counter()
    # category -> term -> summed raw term count across the category's docs
    counts: dict[str, Counter[str]] = {}
    for text, category in labeled_docs:
        category = normalize_category(category)
        terms = tokenize(text)
        doc_count += 1
        df.update(set(terms))
        counts.setdefault(category, Counter()).update(terms)
    if doc_count == 0:
        raise ValueError("empty training corpus")

    centroids: dict[str, dict[str, float]] = {}
    for category in sorted(counts):
        raw = {
            term: tf * _smoothed_idf(doc_count, df[term])
            for term, tf in sorted(counts[category].items())
        }
        norm = math.sqrt(sum(w * w for w in raw.values()))
        centroids[category] = (
            {term: w / norm for term, w in raw.items()} if norm > 0 else {}
        )
    return CategoryModel(
        categories=tuple(sorted(counts)),
        centroids=centroids,
        vocabulary=dict(df),
        doc_count=doc_count,
    )


def load_corpus(corpus_dir: str | Path) -> list[tuple[str, str]]:
    """Read a directory of per-category subdirectories of plain-text docs.

    The category path is the subdirectory name, lowercased, prefixed with
    ``/`` and with ``__`` standing in for nested path separators.
    """
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {corpus_dir}")
    docs: list[tuple[str, str]] = []
    for sub in sorted(p for p in corpus_dir.iterdir() if p.is_dir()):
        category = "/" + sub.name.lower().replace("__", "/")
        for doc in sorted(sub.glob("*.txt")):
            docs.append((doc.read_text("utf-8"), category))
    if not docs:
        raise ValueError(f"no documents under {corpus_dir}")
    return docs


def default_corpus_dir() -> Path:
    return Path(str(resources.files("socialcred.data").joinpath("corpus")))


class CategoryIndex:
    """Vectorized classifier over a trained :class:`CategoryModel`.

    Precomputes the dense centroid matrix and smoothed IDF vector so that
    batches of short texts classify in one sparse matrix product. Safe
    for concurrent callers.
    """

    def __init__(self, model: CategoryModel):
        self.model = model
        self.categories = tuple(sorted(model.categories))
        self.terms = sorted(model.vocabulary)
        self._term_ids = {t: i for i, t in enumerate(self.terms)}
        self._idf = np.array(
            [_smoothed_idf(model.doc_count, model.vocabulary[t]) for t in self.terms]
        )
        matrix = np.zeros((len(self.categories), len(self.terms)))
        for row, category in enumerate(self.categories):
            for term, weight in model.centroids[category].items():
                matrix[row, self._term_ids[term]] = weight
        self._centroids = matrix

    def classify_tokens_batch(
        self, token_lists: Sequence[Sequence[str]], top_k: int = 3
    ) -> list[tuple[DomainAssignment, ...]]:
        if not token_lists:
            return []
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        term_ids = self._term_ids
        idf = self._idf
        for tokens in token_lists:
            hits: dict[int, int] = {}
            for token in tokens:
                tid = term_ids.get(token)
                if tid is not None:
                    hits[tid] = hits.get(tid, 0) + 1
            for tid in hits:
                indices.append(tid)
                data.append(hits[tid] * idf[tid])
            indptr.append(len(indices))
        queries = csr_matrix(
            (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
            shape=(len(token_lists), len(self.terms)),
        )
        norms = np.sqrt(queries.multiply(queries).sum(axis=1)).A1
        sims = np.asarray(queries @ self._centroids.T)
        nonzero = norms > 0
        sims[nonzero] /= norms[nonzero, None]
        # Categories are pre-sorted, so a stable sort on -similarity breaks
        # ties lexicographically by taxonomy path.
        order = np.argsort(-sims, axis=1, kind="stable")[:, :top_k]

        results: list[tuple[DomainAssignment, ...]] = []
        categories = self.categories
        for row in range(sims.shape[0]):
            picks = []
            for col in order[row]:
                score = float(sims[row, col])
                if score <= 0.0:
                    break
                picks.append(DomainAssignment(categories[col], min(score, 1.0)))
            results.append(tuple(picks))
        return results

    def classify_tokens(
        self, tokens: Sequence[str], top_k: int = 3
    ) -> tuple[DomainAssignment, ...]:
        return self.classify_tokens_batch([tokens], top_k)[0]


def classify_text(
    text: str, model: CategoryModel | CategoryIndex, top_k: int = 3
) -> list[DomainAssignment]:
    """Top-k category assignments for a text by cosine against centroids.

    Scores are similarities in [0, 1], sorted descending with ties broken
    by taxonomy path; categories with zero similarity are omitted.
    """
    index = model if isinstance(model, CategoryIndex) else CategoryIndex(model)
    return list(index.classify_tokens(tokenize(text), top_k))


class SentimentLexicon:
    """Term-to-polarity map with all values in [-1, 1]."""

    def __init__(self, values: Mapping[str, float]):
        for term, value in values.items():
            if not -1.0 <= value <= 1.0:
                raise ValueError(f"lexicon value out of range for {term!r}: {value}")
        self._values = dict(values)

    def __contains__(self, term: str) -> bool:
        return term in self._values

    def __getitem__(self, term: str) -> float:
        return self._values[term]

    def __len__(self) -> int:
        return len(self._values)

    def items(self):
        return self._values.items()

    @classmethod
    def from_tsv(cls, path: str | Path) -> "SentimentLexicon":
        values: dict[str, float] = {}
        for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                term, value = line.split("\t")
                values[term.strip().lower()] = float(value)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad lexicon line {line!r}") from exc
        return cls(values)

    @classmethod
    def default(cls) -> "SentimentLexicon":
        text = resources.files("socialcred.data").joinpath("sentiment_lexicon.tsv")
        return cls.from_tsv(Path(str(text)))


def sentiment(text: str, lexicon: SentimentLexicon) -> SentimentScore:
    """Mean lexicon polarity over matched tokens; 0 when nothing matches."""
    matched = [lexicon[t] for t in tokenize(text) if t in lexicon]
    if not matched:
        return SentimentScore(0.0)
    value = sum(matched) / len(matched)
    return SentimentScore(max(-1.0, min(1.0, value)))


def parse_nlu_response(payload: bytes | str) -> tuple[list[DomainAssignment], SentimentScore]:
    """Parse a recorded NLU service response into assignments + sentiment.

    Expected shape: ``{"categories": [{"label", "score"}, ...],
    "sentiment": {"document": {"label", "score"}}}``. Scores are taken
    verbatim; the sentiment value is signed by the document label.
    """
    try:
        data = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise NluParseError(f"invalid JSON payload: {exc}") from exc
    if not isinstance(data, dict):
        raise NluParseError("response is not a JSON object")
    if "categories" not in data:
        raise NluParseError("missing field: categories")
    raw_categories = data["categories"]
    if not isinstance(raw_categories, list):
        raise NluParseError("categories must be an array")

    assignments: list[DomainAssignment] = []
    for i, entry in enumerate(raw_categories):
        if not isinstance(entry, dict) or "label" not in entry:
            raise NluParseError(f"missing field: categories[{i}].label")
        if "score" not in entry:
            raise NluParseError(f"missing field: categories[{i}].score")
        label, score = entry["label"], entry["score"]
        if not isinstance(label, str) or not label:
            raise NluParseError(f"missing field: categories[{i}].label")
        if not isinstance(score, (int, float)) or isinstance(score, bool):
            raise NluParseError(f"categories[{i}].score is not a number")
        try:
            assignments.append(DomainAssignment(normalize_category(label), float(score)))
        except ValueError as exc:
            raise NluParseError(str(exc)) from exc

    if "sentiment" not in data:
        raise NluParseError("missing field: sentiment")
    document = data["sentiment"].get("document") if isinstance(data["sentiment"], dict) else None
    if not isinstance(document, dict):
        raise NluParseError("missing field: sentiment.document")
    if "label" not in document:
        raise NluParseError("missing field: sentiment.document.label")
    if "score" not in document:
        raise NluParseError("missing field: sentiment.document.score")
    label = document["label"]
    score = document["score"]
    if not isinstance(score, (int, float)) or isinstance(score, bool) or not 0.0 <= score <= 1.0:
        raise NluParseError(f"score out of range: {score!r}")
    if label == "positive":
        value = float(score)
    elif label == "negative":
        value = -float(score)
    elif label == "neutral":
        value = 0.0
    else:
        raise NluParseError(f"unknown sentiment label: {label!r}")
    return assignments, SentimentScore(value)


class _TextExtractor(HTMLParser):
    _SKIP = {"script", "style"}

    def __init__(self) -> None:
        super().__init__()
        self.chunks: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._skip_depth += 1

    def handle_endtag(self, tag):
        if tag in self._SKIP and self._skip_depth:
            self._skip_depth -= 1

    def handle_data(self, data):
        if not self._skip_depth:
            self.chunks.append(data)


def strip_html(markup: str) -> str:
    """Visible text of an HTML fragment with tags stripped and whitespace collapsed."""
    extractor = _TextExtractor()
    extractor.feed(markup)
    return " ".join(" ".join(extractor.chunks).split())


class UrlTextSource:
    """Resolves URLs to visible page text.

    Offline mode reads from a fixture map (TSV of ``url<TAB>path``);
    online mode performs an HTTP GET with a timeout. Misses and network
    failures yield an empty string, never an exception.
    """

    def __init__(
        self,
        fixture_map: Mapping[str, Path] | None = None,
        online: bool = False,
        timeout: float = 10.0,
    ):
        self.fixture_map = dict(fixture_map) if fixture_map else {}
        self.online = online
        self.timeout = timeout
        self.misses = 0

    @classmethod
    def from_fixture_tsv(cls, path: str | Path) -> "UrlTextSource":
        base = Path(path).parent
        fixture_map: dict[str, Path] = {}
        for line in Path(path).read_text("utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            url, target = line.split("\t")
            target_path = Path(target)
            fixture_map[url] = target_path if target_path.is_absolute() else base / target_path
        return cls(fixture_map=fixture_map)

    def fetch(self, url: str) -> str:
        if url in self.fixture_map:
            return strip_html(self.fixture_map[url].read_text("utf-8"))
        if self.online:
            try:
                with urllib.request.urlopen(url, timeout=self.timeout) as response:
                    body = response.read().decode("utf-8", errors="replace")
                return strip_html(body)
            except Exception as exc:  # noqa: BLE001 - network failure is non-fatal by contract
                logger.warning("fetch failed for %s: %s", url, exc)
                return ""
        self.misses += 1
        if self.misses <= 10:
            logger.warning("no fixture text for %s", url)
        return ""


@dataclass(frozen=True)
class SemanticAnnotations:
    """Per-record semantics outputs for one dataset.

    ``post_assignments`` maps post ids to the top-k text assignments,
    ``url_assignments`` maps URLs to assignments of their fetched page
    text, and ``reply_sentiment`` maps reply ids to polarity values.
    """

    post_assignments: Mapping[str, tuple[DomainAssignment, ...]]
    url_assignments: Mapping[str, tuple[DomainAssignment, ...]]
    reply_sentiment: Mapping[str, float]
    top_k: int = 3

    def to_json(self) -> str:
        payload = {
            "schema_version": 1,
            "top_k": self.top_k,
            "posts": {
                pid: [[a.category, a.score] for a in assigns]
                for pid, assigns in sorted(self.post_assignments.items())
            },
            "urls": {
                url: [[a.category, a.score] for a in assigns]
                for url, assigns in sorted(self.url_assignments.items())
            },
            "replies": dict(sorted(self.reply_sentiment.items())),
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "SemanticAnnotations":
        payload = json.loads(text)
        def _parse(table: dict) -> dict[str, tuple[DomainAssignment, ...]]:
            return {
                key: tuple(DomainAssignment(cat, score) for cat, score in rows)
                for key, rows in table.items()
            }
        return cls(
            post_assignments=_parse(payload["posts"]),
            url_assignments=_parse(payload["urls"]),
            reply_sentiment={k: float(v) for k, v in payload["replies"].items()},
            top_k=int(payload.get("top_k", 3)),
        )


_CHUNK = 4096  # fixed batch size so results are identical for any thread count


def annotate_dataset(
    dataset,
    index: CategoryIndex,
    lexicon: SentimentLexicon,
    url_source: UrlTextSource | None = None,
    top_k: int = 3,
    threads: int = 1,
) -> SemanticAnnotations:
    """Classify every post text (and fetched URL text) and score every reply.

    Work is chunked at a fixed size and merged in input order, so the
    output is byte-identical for any ``threads`` value.
    """
    posts = [(post.post_id, post.text) for user in dataset.users for post in user.posts]
    chunks = [posts[i : i + _CHUNK] for i in range(0, len(posts), _CHUNK)]

    def classify_chunk(chunk):
        token_lists = [tokenize(text) for _, text in chunk]
        return index.classify_tokens_batch(token_lists, top_k)

    post_assignments: dict[str, tuple[DomainAssignment, ...]] = {}
    if threads > 1 and len(chunks) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunk_results = list(pool.map(classify_chunk, chunks))
    else:
        chunk_results = [classify_chunk(chunk) for chunk in chunks]
    for chunk, results in zip(chunks, chunk_results):
        for (pid, _), assigns in zip(chunk, results):
            post_assignments[pid] = assigns

    url_assignments: dict[str, tuple[DomainAssignment, ...]] = {}
    if url_source is not None:
        unique_urls = sorted({url for user in dataset.users for post in user.posts for url in post.urls})
        fetched = [(url, url_source.fetch(url)) for url in unique_urls]
        texted = [(url, text) for url, text in fetched if text]
        if texted:
            token_lists = [tokenize(text) for _, text in texted]
            for (url, _), assigns in zip(texted, index.classify_tokens_batch(token_lists, top_k)):
                url_assignments[url] = assigns

    reply_sentiment = {
        reply.reply_id: sentiment(reply.text, lexicon).value for reply in dataset.replies
    }
    return SemanticAnnotations(post_assignments, url_assignments, reply_sentiment, top_k)


def annotate_dataset_nlu(
    dataset,
    client: "NluClient",
    url_source: UrlTextSource | None = None,
    top_k: int = 3,
) -> SemanticAnnotations:
    """Annotate a dataset through the (cached) external NLU service."""
    post_assignments = {}
    for user in dataset.users:
        for post in user.posts:
            assignments, _ = client.annotate(post.text)
            post_assignments[post.post_id] = tuple(assignments[:top_k])
    url_assignments = {}
    if url_source is not None:
        for url in sorted({u for user in dataset.users for post in user.posts for u in post.urls}):
            text = url_source.fetch(url)
            if text:
                assignments, _ = client.annotate(text)
                url_assignments[url] = tuple(assignments[:top_k])
    reply_sentiment = {
        reply.reply_id: client.annotate(reply.text)[1].value for reply in dataset.replies
    }
    return SemanticAnnotations(post_assignments, url_assignments, reply_sentiment, top_k)


class NluClient:
    """Disk-cached client for the external NLU annotation service.

    Responses are cached as raw bytes keyed by the SHA-256 of the request
    text. In cached-only mode a miss raises; in live mode the request is
    POSTed to ``NLU_ENDPOINT`` with ``NLU_API_KEY``.
    """

    def __init__(
        self,
        cache_dir: str | Path,
        live: bool = False,
        endpoint: str | None = None,
        api_key: str | None = None,
        timeout: float = 30.0,
        transport: Callable[[str, bytes, dict], bytes] | None = None,
    ):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.live = live
        self.endpoint = endpoint or os.environ.get("NLU_ENDPOINT")
        self.api_key = api_key or os.environ.get("NLU_API_KEY")
        self.timeout = timeout
        self._transport = transport or self._http_post

    def _cache_path(self, text: str) -> Path:
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        return self.cache_dir / f"{digest}.json"

    def _http_post(self, url: str, body: bytes, headers: dict) -> bytes:
        request = urllib.request.Request(url, data=body, headers=headers, method="POST")
        with urllib.request.urlopen(request, timeout=self.timeout) as response:
            return response.read()

    def annotate(self, text: str) -> tuple[list[DomainAssignment], SentimentScore]:
        cache_path = self._cache_path(text)
        if cache_path.exists():
            return parse_nlu_response(cache_path.read_bytes())
        if not self.live:
            raise LookupError(
                f"no cached NLU response for text hash {cache_path.stem}; "
                "rerun in live mode to populate the cache"
            )
        if not self.endpoint:
            raise ValueError("live NLU mode requires NLU_ENDPOINT")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = json.dumps({"text": text}).encode("utf-8")
        payload = self._transport(self.endpoint, body, headers)
        parsed = parse_nlu_response(payload)  # validate before caching
        cache_path.write_bytes(payload)
        return parsed

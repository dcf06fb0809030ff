"""Per-(user, domain, time-window) credibility features.

For each window: duplication penalties over the user's words and URLs,
per-domain semantic score mass, the inverse-domain-frequency multiplier
that zeroes users posting everywhere, engagement counts, and reply
sentiment totals. The weight column W is the default ranking key.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .ingest import Dataset, Post, TimeWindow
from .semantics import SemanticAnnotations, tokenize

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"

# Fixed, versioned column order of the feature vector.
FEATURE_COLUMNS = (
    "W", "Sc", "R", "L", "P", "S", "SP", "SN",
    "FOL", "FRD", "FF_R", "Twt_Sim", "URL_Sim", "DF", "IDF",
)
_INT_COLUMNS = frozenset({"R", "L", "P", "FOL", "FRD", "DF"})

MIN_AGE_YEARS = 1.0 / 365.25
_SECONDS_PER_YEAR = 365.25 * 86400.0


class InternalConsistencyError(RuntimeError):
    """A feature invariant that should hold by construction was violated."""


@dataclass(frozen=True, slots=True)
class UserGlobalFeatures:
    """Domain-independent features of one user in one window."""

    user_id: str
    window: str
    tweet_sim: float
    url_sim: float
    followers: int
    friends: int
    ff_ratio: float
    domain_freq: int
    inv_domain_freq: float
    age_years: float
    # Penalties default to the neutral 1.0 when the user had no words/URLs.
    tweet_sim_defaulted: bool = False
    url_sim_defaulted: bool = False


@dataclass(frozen=True, slots=True)
class UserDomainFeatures:
    """Domain-specific score mass and engagement of one user in one window."""

    user_id: str
    domain: str
    window: str
    text_score_sum: float
    url_score_sum: float
    combined_score: float
    weight: float
    retweets: int
    likes: int
    replies: int
    sent_pos: float
    sent_neg: float
    sent_net: float


@dataclass(frozen=True, slots=True)
class FeatureVector:
    """One (window, domain, user) cell in the fixed column order."""

    window: str
    domain: str
    user_id: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(FEATURE_COLUMNS):
            raise InternalConsistencyError(
                f"expected {len(FEATURE_COLUMNS)} values, got {len(self.values)}"
            )

    def value(self, column: str) -> float:
        return self.values[FEATURE_COLUMNS.index(column)]

    @property
    def weight(self) -> float:
        return self.values[0]


def tweet_similarity_penalty(post_tokens: Iterable[Sequence[str]]) -> tuple[float, bool]:
    """Distinct-to-total token ratio over all of a user's posts in a window.

    Returns (penalty, defaulted); a user with no tokens gets the neutral
    1.0 with the defaulted flag set.
    """
    total = 0
    distinct: set[str] = set()
    for tokens in post_tokens:
        total += len(tokens)
        distinct.update(tokens)
    if total == 0:
        return 1.0, True
    return len(distinct) / total, False


def url_similarity_penalty(urls: Sequence[str]) -> tuple[float, bool]:
    """0.5 * (distinct URLs + distinct hosts) / total URLs, post-cleansing."""
    from .ingest import registrable_host

    if not urls:
        return 1.0, True
    hosts = {registrable_host(url) for url in urls}
    return 0.5 * (len(set(urls)) + len(hosts)) / len(urls), False


def sum_scores(
    post_assignment_lists: Iterable[Sequence],
    url_assignment_lists: Iterable[Sequence],
    domain: str,
) -> tuple[float, float]:
    """Total assignment score for ``domain`` over post texts and URL contents."""
    text_sum = 0.0
    for assignments in post_assignment_lists:
        for assignment in assignments:
            if assignment.category == domain:
                text_sum += assignment.score
    url_sum = 0.0
    for assignments in url_assignment_lists:
        for assignment in assignments:
            if assignment.category == domain:
                url_sum += assignment.score
    return text_sum, url_sum


def domain_user_score(
    tweet_sim: float, text_score_sum: float, url_sim: float, url_score_sum: float
) -> float:
    """Penalized score mass: duplicated words/URLs shrink the raw sums."""
    return tweet_sim * text_score_sum + url_sim * url_score_sum


def domain_frequency(post_assignment_lists: Iterable[Sequence], tau: float = 0.5) -> int:
    """Number of domains in which the user has at least one post scoring >= tau."""
    domains: set[str] = set()
    for assignments in post_assignment_lists:
        for assignment in assignments:
            if assignment.score >= tau:
                domains.add(assignment.category)
    return len(domains)


def inverse_domain_frequency(n: int, domain_freq: int) -> float:
    """ln(n / DF); 0 both for the user posting in every domain and for DF = 0.

    A user covering all observed domains is deliberately zeroed; a user
    with no domain of interest is excluded from rankings downstream.
    """
    if domain_freq == 0:
        return 0.0
    if n < 1 or domain_freq > n:
        raise InternalConsistencyError(f"DF={domain_freq} exceeds observed domains n={n}")
    return math.log(n / domain_freq)


def domain_weight(combined_score: float, inv_domain_freq: float) -> float:
    return combined_score * inv_domain_freq


def engagement_counts(posts: Iterable[Post]) -> tuple[int, int, int]:
    """(retweets, likes, replies) totals over the posts attributed to a domain."""
    retweets = likes = replies = 0
    for post in posts:
        retweets += post.retweet_count
        likes += post.like_count
        replies += len(post.reply_ids)
    return retweets, likes, replies


def reply_sentiment_totals(values: Iterable[float]) -> tuple[float, float, float]:
    """(positive mass, negative magnitude, net) over reply polarity values."""
    pos = 0.0
    neg = 0.0
    for value in values:
        if value > 0:
            pos += value
        elif value < 0:
            neg += -value
    return pos, neg, pos - neg


def follower_friend_ratio(followers: int, friends: int, age_years: float) -> float:
    """Age-normalized follower surplus; the equal-counts case falls back to 1/age."""
    age = max(age_years, MIN_AGE_YEARS)
    diff = followers - friends
    if diff == 0:
        return 1.0 / age
    return diff / age


def observed_domains(
    dataset: Dataset,
    windows: Sequence[TimeWindow],
    annotations: SemanticAnnotations,
    tau: float = 0.5,
) -> tuple[str, ...]:
    """Domains with at least one post text assignment >= tau in any window."""
    labels = {w.label for w in windows}
    from .ingest import month_of

    found: set[str] = set()
    for user in dataset.users:
        for post in user.posts:
            if month_of(post.created_at) not in labels:
                continue
            for assignment in annotations.post_assignments.get(post.post_id, ()):
                if assignment.score >= tau:
                    found.add(assignment.category)
    return tuple(sorted(found))


def extract_features(
    dataset: Dataset,
    windows: Sequence[TimeWindow],
    annotations: SemanticAnnotations,
    tau: float = 0.5,
) -> list[FeatureVector]:
    """Assemble one vector per (user, domain, window) cell with any signal.

    A cell is emitted when its weight is positive or any engagement or
    sentiment value is nonzero. Replies are attributed to the window of
    their parent post. Output is ordered by (window, domain, user_id).
    """
    from .ingest import month_of

    window_labels = [w.label for w in sorted(windows, key=lambda w: w.start)]
    label_set = set(window_labels)
    window_by_label = {w.label: w for w in windows}

    n_domains = len(observed_domains(dataset, windows, annotations, tau))

    vectors: list[FeatureVector] = []
    rows_by_window: dict[str, list[FeatureVector]] = {label: [] for label in window_labels}

    for user in dataset.users:
        posts_by_window: dict[str, list[Post]] = {}
        for post in user.posts:
            label = month_of(post.created_at)
            if label in label_set:
                posts_by_window.setdefault(label, []).append(post)
        if not posts_by_window:
            continue
        earliest_post = min(p.created_at for p in user.posts)
        account_start = user.account_created_at or earliest_post

        for label, posts in posts_by_window.items():
            window = window_by_label[label]
            token_lists = [tokenize(p.text) for p in posts]
            tweet_sim, _ = tweet_similarity_penalty(token_lists)
            urls = [url for p in posts for url in p.urls]
            url_sim, _ = url_similarity_penalty(urls)
            age_years = max(
                (window.end - account_start).total_seconds() / _SECONDS_PER_YEAR,
                MIN_AGE_YEARS,
            )
            ff = follower_friend_ratio(user.followers_count, user.friends_count, age_years)

            text_sums: dict[str, float] = {}
            url_sums: dict[str, float] = {}
            tau_domains: set[str] = set()
            posts_in_domain: dict[str, list[Post]] = {}
            for post in posts:
                for assignment in annotations.post_assignments.get(post.post_id, ()):
                    text_sums[assignment.category] = (
                        text_sums.get(assignment.category, 0.0) + assignment.score
                    )
                    if assignment.score >= tau:
                        tau_domains.add(assignment.category)
                        posts_in_domain.setdefault(assignment.category, []).append(post)
                for url in post.urls:
                    for assignment in annotations.url_assignments.get(url, ()):
                        url_sums[assignment.category] = (
                            url_sums.get(assignment.category, 0.0) + assignment.score
                        )

            df = len(tau_domains)
            idf = inverse_domain_frequency(n_domains, df) if df else 0.0

            for domain in sorted(set(text_sums) | set(url_sums)):
                combined = domain_user_score(
                    tweet_sim, text_sums.get(domain, 0.0), url_sim, url_sums.get(domain, 0.0)
                )
                weight = domain_weight(combined, idf)
                domain_posts = posts_in_domain.get(domain, ())
                retweets, likes, reply_count = engagement_counts(domain_posts)
                sent_values = [
                    annotations.reply_sentiment.get(rid, 0.0)
                    for post in domain_posts
                    for rid in post.reply_ids
                ]
                pos, neg, net = reply_sentiment_totals(sent_values)
                if weight > 0 or retweets or likes or reply_count or net != 0:
                    rows_by_window[label].append(
                        FeatureVector(
                            window=label,
                            domain=domain,
                            user_id=user.user_id,
                            values=(
                                weight, combined, float(retweets), float(likes),
                                float(reply_count), net, pos, neg,
                                float(user.followers_count), float(user.friends_count),
                                ff, tweet_sim, url_sim, float(df), idf,
                            ),
                        )
                    )

    for label in window_labels:
        rows = rows_by_window[label]
        rows.sort(key=lambda v: (v.domain, v.user_id))
        vectors.extend(rows)
    return vectors


def format_value(column: str, value: float) -> str:
    if column in _INT_COLUMNS:
        return str(int(value))
    return f"{value:.12g}"


def write_features_csv(vectors: Iterable[FeatureVector], target) -> None:
    """Write vectors as CSV with the fixed, versioned header."""
    def _write(handle) -> None:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["schema_version", "window", "domain", "user_id", *FEATURE_COLUMNS])
        for vector in vectors:
            writer.writerow(
                [SCHEMA_VERSION, vector.window, vector.domain, vector.user_id]
                + [format_value(c, v) for c, v in zip(FEATURE_COLUMNS, vector.values)]
            )

    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8", newline="") as handle:
            _write(handle)
    else:
        _write(target)


def read_features_csv(source) -> list[FeatureVector]:
    """Read back a feature CSV from a path or open file-like object."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as handle:
            return read_features_csv(handle)
    reader = csv.reader(source)
    header = next(reader, None)
    expected = ["schema_version", "window", "domain", "user_id", *FEATURE_COLUMNS]
    if header != expected:
        raise ValueError(f"unexpected feature CSV header: {header}")
    vectors = []
    for row in reader:
        if row[0] != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version: {row[0]}")
        vectors.append(
            FeatureVector(
                window=row[1],
                domain=row[2],
                user_id=row[3],
                values=tuple(float(v) for v in row[4:]),
            )
        )
    return vectors

"""Seeded generator of labeled synthetic datasets with a controllable
influencer/spammer behavioral contrast.

Influencers concentrate on one home domain, avoid duplication, attract
followers and positive replies; spammers spread over all domains,
duplicate texts and URLs, and follow far more than they are followed.
``separation`` interpolates every behavioral parameter between a common
neutral profile (0: the groups are indistinguishable) and the extremes
(1: maximal contrast). Word pools come from the classifier fixture
corpus, so assignment scores are predictable in tests.
"""

from __future__ import annotations

import json
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from . import ingest, semantics

ROLE_INFLUENCER = "influencer"
ROLE_SPAMMER = "spammer"
ROLE_ORDINARY = "ordinary"


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 100
    n_domains: int = 10
    influencer_fraction: float = 0.3
    spammer_fraction: float = 0.3
    posts_per_user: tuple[int, int] = (50, 70)
    separation: float = 0.9
    months: int = 1
    seed: int = 0
    base_month: str = "2017-01"
    # Lift every user to >= max(50, posts min) posts so default cleansing
    # keeps them; tests exercising the cleanse filter switch this off.
    enforce_cleanse_floor: bool = True

    def __post_init__(self) -> None:
        if self.n_users < 1:
            raise ValueError("n_users must be >= 1")
        if self.n_domains < 1:
            raise ValueError("n_domains must be >= 1")
        if not 0.0 < self.influencer_fraction <= 1.0:
            raise ValueError("influencer_fraction must be in (0, 1]")
        if not 0.0 <= self.spammer_fraction < 1.0:
            raise ValueError("spammer_fraction must be in [0, 1)")
        if self.influencer_fraction + self.spammer_fraction > 1.0:
            raise ValueError("influencer_fraction + spammer_fraction must be <= 1")
        lo, hi = self.posts_per_user
        if lo < 1 or hi < lo:
            raise ValueError("posts_per_user must be a positive (min, max) range")
        if not 0.0 <= self.separation <= 1.0:
            raise ValueError("separation must be in [0, 1]")
        if self.months < 1:
            raise ValueError("months must be >= 1")


# Behavioral knobs per role at separation=1; every role sits at NEUTRAL
# when separation=0.
_NEUTRAL = {
    "home_conc": 0.5, "dup_prob": 0.2, "distinct_bias": 0.5,
    "url_prob": 0.3, "url_reuse": 0.5,
    "fol_lo": 50, "fol_hi": 500, "frd_lo": 50, "frd_hi": 500,
    "retweet_mean": 2.0, "like_mean": 4.0, "reply_mean": 0.5, "reply_pos": 0.5,
    "words_lo": 8, "words_hi": 16, "fillers": 2.0,
}
_EXTREME = {
    ROLE_INFLUENCER: {
        "home_conc": 1.0, "dup_prob": 0.0, "distinct_bias": 1.0,
        "url_prob": 0.4, "url_reuse": 0.0,
        "fol_lo": 2000, "fol_hi": 9000, "frd_lo": 20, "frd_hi": 200,
        "retweet_mean": 20.0, "like_mean": 40.0, "reply_mean": 1.5, "reply_pos": 0.95,
        "words_lo": 12, "words_hi": 20, "fillers": 4.0,
    },
    ROLE_SPAMMER: {
        "home_conc": None,  # filled with 1/n_domains: uniform over all domains
        "dup_prob": 0.85, "distinct_bias": 0.0,
        "url_prob": 0.6, "url_reuse": 0.9,
        "fol_lo": 3, "fol_hi": 40, "frd_lo": 2000, "frd_hi": 8000,
        "retweet_mean": 0.1, "like_mean": 0.2, "reply_mean": 0.05, "reply_pos": 0.15,
        "words_lo": 6, "words_hi": 12, "fillers": 0.0,
    },
    ROLE_ORDINARY: {
        "home_conc": 0.75, "dup_prob": 0.1, "distinct_bias": 0.6,
        "url_prob": 0.3, "url_reuse": 0.3,
        "fol_lo": 100, "fol_hi": 800, "frd_lo": 80, "frd_hi": 600,
        "retweet_mean": 3.0, "like_mean": 6.0, "reply_mean": 0.4, "reply_pos": 0.6,
        "words_lo": 8, "words_hi": 16, "fillers": 2.0,
    },
}


def _role_params(role: str, separation: float, n_domains: int) -> dict:
    extreme = dict(_EXTREME[role])
    if extreme["home_conc"] is None:
        extreme["home_conc"] = 1.0 / n_domains
    return {
        key: _NEUTRAL[key] + separation * (extreme[key] - _NEUTRAL[key])
        for key in _NEUTRAL
    }


def domain_vocab(corpus_dir: str | Path | None = None) -> dict[str, list[str]]:
    """Per-category sorted token pools derived from the classifier corpus."""
    docs = semantics.load_corpus(corpus_dir or semantics.default_corpus_dir())
    pools: dict[str, set[str]] = {}
    for text, category in docs:
        pools.setdefault(category, set()).update(semantics.tokenize(text))
    return {category: sorted(terms) for category, terms in sorted(pools.items())}


def _month_start(label: str, offset: int) -> datetime:
    year, month = (int(p) for p in label.split("-"))
    month0 = (year * 12 + month - 1) + offset
    return datetime(month0 // 12, month0 % 12 + 1, 1, tzinfo=timezone.utc)


def _slug(category: str) -> str:
    return category.strip("/").replace(" ", "-").replace("/", "-")


def generate_records(
    config: SynthConfig, corpus_dir: str | Path | None = None
) -> tuple[list[dict], str]:
    """Produce JSONL-ready record dicts plus the labels CSV content.

    Deterministic in ``config.seed``; the record stream round-trips
    through the ingest loader unchanged.
    """
    pools = domain_vocab(corpus_dir)
    if config.n_domains > len(pools):
        raise ValueError(f"n_domains exceeds the {len(pools)} corpus categories")
    domains = list(pools)[: config.n_domains]
    rng = np.random.default_rng(config.seed)

    n_inf = int(round(config.n_users * config.influencer_fraction))
    n_spam = int(round(config.n_users * config.spammer_fraction))
    n_spam = min(n_spam, config.n_users - n_inf)
    roles = (
        [ROLE_INFLUENCER] * n_inf
        + [ROLE_SPAMMER] * n_spam
        + [ROLE_ORDINARY] * (config.n_users - n_inf - n_spam)
    )

    posts_lo, posts_hi = config.posts_per_user
    if config.enforce_cleanse_floor:
        posts_lo = max(posts_lo, 50)
        posts_hi = max(posts_hi, posts_lo)
    base = _month_start(config.base_month, 0)
    positive_words = sorted(t for t, v in semantics.SentimentLexicon.default().items() if v > 0)
    negative_words = sorted(t for t, v in semantics.SentimentLexicon.default().items() if v < 0)

    records: list[dict] = []
    label_rows: list[tuple[str, str, str]] = []
    post_serial = 0
    reply_serial = 0

    for index, role in enumerate(roles):
        user_id = f"u{index + 1:05d}"
        params = _role_params(role, config.separation, config.n_domains)
        home = domains[int(rng.integers(0, len(domains)))]
        followers = int(rng.integers(params["fol_lo"], params["fol_hi"] + 1))
        friends = int(rng.integers(params["frd_lo"], params["frd_hi"] + 1))
        account_created = base - timedelta(days=int(rng.integers(400, 3000)))
        records.append({
            "record_type": "user",
            "id": user_id,
            "followers_count": followers,
            "friends_count": friends,
            "account_created_at": ingest.format_timestamp(account_created),
        })
        label_rows.append((user_id, home, ROLE_INFLUENCER if role == ROLE_INFLUENCER else "non_influencer"))

        n_posts = int(rng.integers(posts_lo, posts_hi + 1))
        previous: list[tuple[str, list[str]]] = []
        url_pool: list[str] = []
        for _ in range(n_posts):
            post_serial += 1
            post_id = f"p{post_serial:08d}"
            month_offset = int(rng.integers(0, config.months))
            moment = _month_start(config.base_month, month_offset) + timedelta(
                days=int(rng.integers(0, 28)),
                hours=int(rng.integers(0, 24)),
                minutes=int(rng.integers(0, 60)),
                seconds=int(rng.integers(0, 60)),
            )
            month_end = _month_start(config.base_month, month_offset + 1)

            if previous and rng.random() < params["dup_prob"]:
                text, urls = previous[int(rng.integers(0, len(previous)))]
                urls = list(urls)
            else:
                if rng.random() < params["home_conc"] or len(domains) == 1:
                    domain = home
                else:
                    others = [d for d in domains if d != home]
                    domain = others[int(rng.integers(0, len(others)))]
                pool = pools[domain]
                k = int(rng.integers(params["words_lo"], params["words_hi"] + 1))
                if rng.random() < params["distinct_bias"] and k <= len(pool):
                    words = list(rng.choice(len(pool), size=k, replace=False))
                else:
                    words = list(rng.integers(0, len(pool), size=k))
                tokens = [pool[i] for i in words]
                # Unique hashtag-like fillers lift the distinct-word ratio of
                # original posts; unknown to the classifier vocabulary, they
                # leave assignment scores untouched.
                tokens.extend(
                    f"#tag{post_serial}x{j}" for j in range(int(round(params["fillers"])))
                )
                text = " ".join(tokens)
                urls = []
                if rng.random() < params["url_prob"]:
                    if url_pool and rng.random() < params["url_reuse"]:
                        urls.append(url_pool[int(rng.integers(0, len(url_pool)))])
                    else:
                        url = f"https://{_slug(domain)}.example.org/{user_id}/{len(url_pool)}"
                        url_pool.append(url)
                        urls.append(url)
                if rng.random() < 0.02:
                    urls.append(f"https://youtube.com/watch?v={user_id}x{post_serial}")
                previous.append((text, urls))

            records.append({
                "record_type": "post",
                "id": post_id,
                "user_id": user_id,
                "text": text,
                "urls": urls,
                "created_at": ingest.format_timestamp(moment),
                "retweet_count": int(rng.poisson(params["retweet_mean"])),
                "like_count": int(rng.poisson(params["like_mean"])),
            })

            for _ in range(min(int(rng.poisson(params["reply_mean"])), 20)):
                reply_serial += 1
                word_pool = positive_words if rng.random() < params["reply_pos"] else negative_words
                n_words = int(rng.integers(2, 5))
                reply_text = " ".join(
                    word_pool[i] for i in rng.integers(0, len(word_pool), size=n_words)
                )
                # replies stay inside the parent's month so a corpus spanning
                # N months yields exactly N windows
                reply_moment = min(
                    moment + timedelta(seconds=int(rng.integers(60, 86400))),
                    month_end - timedelta(seconds=1),
                )
                records.append({
                    "record_type": "reply",
                    "id": f"r{reply_serial:08d}",
                    "parent_post_id": post_id,
                    "text": reply_text,
                    "created_at": ingest.format_timestamp(reply_moment),
                })

    labels_csv = "user_id,domain,label\n" + "".join(
        f"{u},{d},{label}\n" for u, d, label in label_rows
    )
    return records, labels_csv


def records_to_jsonl(records: list[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in records)


def generate_jsonl(
    config: SynthConfig, corpus_dir: str | Path | None = None
) -> tuple[str, str]:
    """(JSONL text, labels CSV) for a config; byte-identical per seed."""
    records, labels_csv = generate_records(config, corpus_dir)
    return records_to_jsonl(records), labels_csv


def generate(
    config: SynthConfig, corpus_dir: str | Path | None = None
) -> tuple[ingest.Dataset, str]:
    """Generate and load a dataset, guaranteeing ingest schema round-trip."""
    jsonl, labels_csv = generate_jsonl(config, corpus_dir)
    with tempfile.NamedTemporaryFile("w", suffix=".jsonl", encoding="utf-8", delete=False) as handle:
        handle.write(jsonl)
        temp_path = Path(handle.name)
    try:
        dataset = ingest.load_dataset(temp_path)
    finally:
        temp_path.unlink(missing_ok=True)
    return dataset, labels_csv

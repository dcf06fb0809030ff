"""Shared fixtures: the fixture-corpus classifier and tiny dataset builders."""

from __future__ import annotations

from datetime import datetime, timezone

import pytest

from socialcred import ingest, semantics


@pytest.fixture(scope="session")
def category_model() -> semantics.CategoryModel:
    return semantics.train_category_model(
        semantics.load_corpus(semantics.default_corpus_dir())
    )


@pytest.fixture(scope="session")
def category_index(category_model) -> semantics.CategoryIndex:
    return semantics.CategoryIndex(category_model)


@pytest.fixture(scope="session")
def lexicon() -> semantics.SentimentLexicon:
    return semantics.SentimentLexicon.default()


def ts(text: str) -> datetime:
    return ingest.parse_timestamp(text)


def make_post(post_id, user_id="u1", text="hello world", urls=(), created="2017-01-05T10:00:00Z",
              retweets=0, likes=0, reply_ids=()):
    return ingest.Post(
        post_id=post_id, user_id=user_id, text=text, urls=tuple(urls),
        created_at=ts(created), retweet_count=retweets, like_count=likes,
        reply_ids=tuple(reply_ids),
    )


def make_reply(reply_id, parent, text="great", created="2017-01-05T11:00:00Z"):
    return ingest.Reply(reply_id=reply_id, parent_post_id=parent, text=text, created_at=ts(created))


def make_user(user_id, posts, followers=10, friends=5, created="2015-01-01T00:00:00Z"):
    return ingest.UserProfile(
        user_id=user_id, followers_count=followers, friends_count=friends,
        account_created_at=ts(created) if created else None, posts=tuple(posts),
    )


def make_dataset(users, replies=()):
    dataset = ingest.Dataset(
        users=tuple(users), replies=tuple(replies),
        provenance=ingest.Provenance("test", "2020-01-01T00:00:00+00:00"),
    )
    return ingest.link_replies(dataset)


def run_mini_pipeline(raw_dataset, index, lex, tau=0.5, min_posts=50):
    """dataset -> cleanse -> windows -> annotate -> feature vectors."""
    from socialcred import features, semantics

    cleansed, _ = ingest.cleanse(raw_dataset, min_posts=min_posts)
    windowed = ingest.partition_windows(cleansed)
    windows = [w for w, _ in windowed]
    annotations = semantics.annotate_dataset(cleansed, index, lex)
    return features.extract_features(cleansed, windows, annotations, tau=tau), cleansed, windows, annotations

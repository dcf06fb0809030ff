"""Loading, cleansing and time-partitioning of raw social post datasets.

Input is JSONL with one record per line, tagged ``record_type`` in
{user, post, reply}. Field names: record_type, id, user_id, text, urls,
created_at, retweet_count, like_count, followers_count, friends_count,
account_created_at, parent_post_id. Unknown fields are ignored.

All returned structures are immutable snapshots, safe to share across
threads.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

FACEBOOK_HOST = "facebook.com"


class DatasetFormatError(ValueError):
    """Raised when an input file is mostly unparseable."""


def _default_media_hosts() -> tuple[str, ...]:
    text = resources.files("socialcred.data").joinpath("media_hosts.txt").read_text("utf-8")
    return tuple(line.strip().lower() for line in text.splitlines() if line.strip())


@dataclass(frozen=True, slots=True)
class Post:
    post_id: str
    user_id: str
    text: str
    urls: tuple[str, ...]
    created_at: datetime
    retweet_count: int
    like_count: int
    reply_ids: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True)
class Reply:
    reply_id: str
    parent_post_id: str
    text: str
    created_at: datetime


@dataclass(frozen=True, slots=True)
class UserProfile:
    user_id: str
    followers_count: int
    friends_count: int
    account_created_at: datetime | None
    posts: tuple[Post, ...]
    # True when no user record existed and the profile was synthesized
    # from post records; metadata fields are then zero/None.
    implicit: bool = False


@dataclass(frozen=True, slots=True)
class Provenance:
    source: str
    loaded_at: str
    malformed_lines: int = 0


@dataclass(frozen=True, slots=True)
class Dataset:
    users: tuple[UserProfile, ...]
    replies: tuple[Reply, ...]
    provenance: Provenance

    def iter_posts(self) -> Iterator[Post]:
        for user in self.users:
            yield from user.posts

    @property
    def post_count(self) -> int:
        return sum(len(u.posts) for u in self.users)

    @property
    def user_count(self) -> int:
        return len(self.users)


@dataclass(frozen=True, slots=True)
class TimeWindow:
    label: str
    start: datetime
    end: datetime


@dataclass(frozen=True, slots=True)
class CleanseReport:
    duplicates_removed: int = 0
    duplicate_replies_removed: int = 0
    users_removed_min_posts: int = 0
    media_urls_removed: int = 0
    facebook_urls_removed: int = 0
    orphan_replies_removed: int = 0

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


def parse_timestamp(value: object) -> datetime:
    """Parse an RFC 3339 timestamp into an aware UTC datetime."""
    if not isinstance(value, str) or not value:
        raise ValueError(f"not a timestamp: {value!r}")
    raw = value.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    parsed = datetime.fromisoformat(raw)
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def format_timestamp(value: datetime) -> str:
    return value.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def url_host(url: str) -> str:
    """Lowercased host of a URL; tolerates scheme-less strings like ``a.com/x``."""
    rest = url.split("://", 1)[1] if "://" in url else url
    host = rest.split("/", 1)[0].split("?", 1)[0].split("#", 1)[0]
    host = host.rsplit("@", 1)[-1].split(":", 1)[0]
    return host.lower()


def registrable_host(url: str) -> str:
    """Last two labels of the host (``sub.a.com`` -> ``a.com``); IPs kept whole."""
    host = url_host(url)
    labels = host.split(".")
    if len(labels) <= 2 or all(p.isdigit() for p in labels):
        return host
    return ".".join(labels[-2:])


def _host_matches(host: str, blocked: str) -> bool:
    return host == blocked or host.endswith("." + blocked)


def _coerce_count(record: dict, key: str) -> int:
    value = record.get(key, 0)
    if value is None:
        return 0
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ValueError(f"{key} must be a non-negative integer, got {value!r}")
    return value


def _require_str(record: dict, key: str) -> str:
    value = record.get(key)
    if not isinstance(value, str) or not value:
        raise ValueError(f"missing or empty field: {key}")
    return value


def _parse_post(record: dict) -> Post:
    urls = record.get("urls", [])
    if urls is None:
        urls = []
    if not isinstance(urls, list) or not all(isinstance(u, str) for u in urls):
        raise ValueError("urls must be an array of strings")
    return Post(
        post_id=_require_str(record, "id"),
        user_id=_require_str(record, "user_id"),
        text=record.get("text") or "",
        urls=tuple(urls),
        created_at=parse_timestamp(record.get("created_at")),
        retweet_count=_coerce_count(record, "retweet_count"),
        like_count=_coerce_count(record, "like_count"),
    )


def _parse_reply(record: dict) -> Reply:
    return Reply(
        reply_id=_require_str(record, "id"),
        parent_post_id=_require_str(record, "parent_post_id"),
        text=record.get("text") or "",
        created_at=parse_timestamp(record.get("created_at")),
    )


def load_dataset(path: str | Path, format: str = "jsonl") -> Dataset:
    """Load a JSONL dataset file into an immutable :class:`Dataset`.

    Malformed lines are counted in the provenance and skipped; an
    unreadable file raises ``OSError`` and a file in which more than half
    of the lines are malformed raises :class:`DatasetFormatError`.
    """
    if format != "jsonl":
        raise ValueError(f"unsupported format: {format}")
    path = Path(path)
    loaded_at = datetime.now(timezone.utc).isoformat()

    user_records: dict[str, dict] = {}
    posts_by_user: dict[str, list[Post]] = {}
    replies: list[Reply] = []
    malformed = 0
    total = 0

    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.strip()
            if not line:
                continue
            total += 1
            try:
                record = json.loads(line)
                if not isinstance(record, dict):
                    raise ValueError("record is not an object")
                kind = record.get("record_type")
                if kind == "post":
                    post = _parse_post(record)
                    posts_by_user.setdefault(post.user_id, []).append(post)
                elif kind == "reply":
                    replies.append(_parse_reply(record))
                elif kind == "user":
                    uid = _require_str(record, "id")
                    _coerce_count(record, "followers_count")
                    _coerce_count(record, "friends_count")
                    if uid in user_records:
                        logger.debug("duplicate user record %s at line %d; first wins", uid, lineno)
                    else:
                        user_records[uid] = record
                else:
                    raise ValueError(f"unknown record_type: {kind!r}")
            except ValueError as exc:
                malformed += 1
                if malformed <= 5:
                    logger.warning("%s:%d malformed record: %s", path, lineno, exc)

    if total and malformed * 2 > total:
        raise DatasetFormatError(
            f"{path}: {malformed} of {total} lines malformed; refusing to load"
        )

    users: list[UserProfile] = []
    seen: set[str] = set()
    for uid, record in user_records.items():
        created = record.get("account_created_at")
        users.append(
            UserProfile(
                user_id=uid,
                followers_count=_coerce_count(record, "followers_count"),
                friends_count=_coerce_count(record, "friends_count"),
                account_created_at=parse_timestamp(created) if created else None,
                posts=tuple(posts_by_user.get(uid, ())),
            )
        )
        seen.add(uid)
    for uid, posts in posts_by_user.items():
        if uid not in seen:
            logger.debug("no user record for %s; synthesizing implicit profile", uid)
            users.append(
                UserProfile(
                    user_id=uid,
                    followers_count=0,
                    friends_count=0,
                    account_created_at=None,
                    posts=tuple(posts),
                    implicit=True,
                )
            )

    dataset = link_replies(
        Dataset(
            users=tuple(users),
            replies=tuple(replies),
            provenance=Provenance(str(path), loaded_at, malformed),
        )
    )
    _check_profile_ages(dataset)
    return dataset


def link_replies(dataset: Dataset) -> Dataset:
    """Recompute every post's reply_ids from the dataset's reply records."""
    by_parent: dict[str, list[str]] = {}
    for reply in dataset.replies:
        by_parent.setdefault(reply.parent_post_id, []).append(reply.reply_id)

    def with_ids(post: Post) -> Post:
        ids = tuple(by_parent.get(post.post_id, ()))
        if ids == post.reply_ids:
            return post
        return dataclasses.replace(post, reply_ids=ids)

    users = tuple(
        dataclasses.replace(user, posts=tuple(with_ids(post) for post in user.posts))
        for user in dataset.users
    )
    return dataclasses.replace(dataset, users=users)


def _check_profile_ages(dataset: Dataset) -> None:
    # Account younger than its own posts is suspicious but not fatal.
    for user in dataset.users:
        if user.account_created_at is None or not user.posts:
            continue
        earliest = min(p.created_at for p in user.posts)
        if user.account_created_at > earliest:
            logger.warning(
                "user %s: account_created_at is after their earliest post", user.user_id
            )


def cleanse(
    dataset: Dataset,
    min_posts: int = 50,
    media_hosts: Iterable[str] | None = None,
) -> tuple[Dataset, CleanseReport]:
    """Deduplicate records, drop low-volume users, scrub blocked URL hosts.

    Steps, in order: (i) records with an already-seen id are removed;
    (ii) users left with fewer than ``min_posts`` posts are removed along
    with their posts; (iii) URLs on media-sharing hosts or facebook.com
    are removed from posts' url lists; (iv) replies whose parent post did
    not survive are dropped. Idempotent: a second pass reports all zeros.
    """
    blocked = tuple(h.lower() for h in media_hosts) if media_hosts is not None else _default_media_hosts()

    duplicate_posts = 0
    duplicate_replies = 0
    users_removed = 0
    media_removed = 0
    facebook_removed = 0
    orphan_replies = 0

    seen_posts: set[str] = set()
    kept_users: list[UserProfile] = []
    seen_users: set[str] = set()
    for user in dataset.users:
        if user.user_id in seen_users:
            logger.debug("duplicate profile %s dropped", user.user_id)
            continue
        seen_users.add(user.user_id)
        unique_posts: list[Post] = []
        for post in user.posts:
            if post.post_id in seen_posts:
                duplicate_posts += 1
                continue
            seen_posts.add(post.post_id)
            unique_posts.append(post)
        if len(unique_posts) < min_posts:
            users_removed += 1
            continue
        scrubbed: list[Post] = []
        for post in unique_posts:
            kept_urls = []
            for url in post.urls:
                host = url_host(url)
                if _host_matches(host, FACEBOOK_HOST):
                    facebook_removed += 1
                elif any(_host_matches(host, b) for b in blocked):
                    media_removed += 1
                else:
                    kept_urls.append(url)
            if len(kept_urls) != len(post.urls):
                post = dataclasses.replace(post, urls=tuple(kept_urls))
            scrubbed.append(post)
        kept_users.append(dataclasses.replace(user, posts=tuple(scrubbed)))

    surviving_posts = {p.post_id for u in kept_users for p in u.posts}
    kept_replies: list[Reply] = []
    seen_replies: set[str] = set()
    for reply in dataset.replies:
        if reply.reply_id in seen_replies:
            duplicate_replies += 1
            continue
        seen_replies.add(reply.reply_id)
        if reply.parent_post_id not in surviving_posts:
            orphan_replies += 1
            continue
        kept_replies.append(reply)

    cleansed = link_replies(
        Dataset(tuple(kept_users), tuple(kept_replies), dataset.provenance)
    )
    report = CleanseReport(
        duplicates_removed=duplicate_posts,
        duplicate_replies_removed=duplicate_replies,
        users_removed_min_posts=users_removed,
        media_urls_removed=media_removed,
        facebook_urls_removed=facebook_removed,
        orphan_replies_removed=orphan_replies,
    )
    return cleansed, report


def dataset_to_jsonl(dataset: Dataset) -> str:
    """Serialize a dataset back to the canonical JSONL record stream.

    Record order is deterministic: each user record followed by that
    user's posts, then all replies. Loading the output reproduces the
    dataset (implicit profiles become explicit zero-metadata records).
    """
    lines: list[str] = []

    def emit(record: dict) -> None:
        lines.append(json.dumps(record, sort_keys=True, separators=(",", ":")))

    for user in dataset.users:
        record = {
            "record_type": "user",
            "id": user.user_id,
            "followers_count": user.followers_count,
            "friends_count": user.friends_count,
        }
        if user.account_created_at is not None:
            record["account_created_at"] = format_timestamp(user.account_created_at)
        emit(record)
        for post in user.posts:
            emit({
                "record_type": "post",
                "id": post.post_id,
                "user_id": post.user_id,
                "text": post.text,
                "urls": list(post.urls),
                "created_at": format_timestamp(post.created_at),
                "retweet_count": post.retweet_count,
                "like_count": post.like_count,
            })
    for reply in dataset.replies:
        emit({
            "record_type": "reply",
            "id": reply.reply_id,
            "parent_post_id": reply.parent_post_id,
            "text": reply.text,
            "created_at": format_timestamp(reply.created_at),
        })
    return "\n".join(lines) + "\n" if lines else ""


def month_of(moment: datetime) -> str:
    return moment.astimezone(timezone.utc).strftime("%Y-%m")


def month_window(label: str) -> TimeWindow:
    """Calendar-month window (UTC) for a ``YYYY-MM`` label."""
    year, month = (int(part) for part in label.split("-"))
    start = datetime(year, month, 1, tzinfo=timezone.utc)
    end = datetime(year + (month == 12), month % 12 + 1, 1, tzinfo=timezone.utc)
    return TimeWindow(label=label, start=start, end=end)


def _month_range(first: str, last: str) -> list[str]:
    y, m = (int(p) for p in first.split("-"))
    stop_y, stop_m = (int(p) for p in last.split("-"))
    labels = []
    while (y, m) <= (stop_y, stop_m):
        labels.append(f"{y:04d}-{m:02d}")
        y, m = y + (m == 12), m % 12 + 1
    return labels


def partition_windows(
    dataset: Dataset,
    granularity: str = "month",
    span: tuple[datetime, datetime] | None = None,
    include_empty: bool = False,
) -> list[tuple[TimeWindow, Dataset]]:
    """Partition a cleansed dataset into disjoint calendar-month snapshots.

    Posts and replies are assigned to windows by ``created_at``; a user
    appears in a window iff they posted in it. Months with no activity
    are omitted unless ``include_empty`` is set, in which case every
    month between the first and last active one is emitted.
    """
    if granularity != "month":
        raise ValueError(f"unsupported granularity: {granularity}")
    if span is not None:
        start, end = span
        if start >= end:
            raise ValueError("span start must precede span end")

    def in_span(moment: datetime) -> bool:
        return span is None or (span[0] <= moment < span[1])

    posts_by_month: dict[str, dict[str, list[Post]]] = {}
    for user in dataset.users:
        for post in user.posts:
            if in_span(post.created_at):
                posts_by_month.setdefault(month_of(post.created_at), {}).setdefault(
                    user.user_id, []
                ).append(post)
    replies_by_month: dict[str, list[Reply]] = {}
    for reply in dataset.replies:
        if in_span(reply.created_at):
            replies_by_month.setdefault(month_of(reply.created_at), []).append(reply)

    active = sorted(set(posts_by_month) | set(replies_by_month))
    if not active:
        return []
    labels = _month_range(active[0], active[-1]) if include_empty else active

    profile_index = {user.user_id: user for user in dataset.users}
    result: list[tuple[TimeWindow, Dataset]] = []
    for label in labels:
        window = month_window(label)
        month_users = posts_by_month.get(label, {})
        users = tuple(
            dataclasses.replace(profile_index[uid], posts=tuple(month_posts))
            for uid, month_posts in month_users.items()
        )
        snapshot = Dataset(
            users=users,
            replies=tuple(replies_by_month.get(label, ())),
            provenance=dataclasses.replace(
                dataset.provenance, source=f"{dataset.provenance.source}#{label}"
            ),
        )
        result.append((window, snapshot))
    return result

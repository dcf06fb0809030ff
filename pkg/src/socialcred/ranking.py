"""Per-domain, per-window user rankings and per-user temporal trajectories."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .features import FeatureVector

logger = logging.getLogger(__name__)

RANKING_KEYS = ("W", "model_probability")


@dataclass(frozen=True, slots=True)
class DomainRanking:
    """Users of one (window, domain) cell ordered by a non-increasing key.

    Ranks are 1-based and consecutive; key ties are broken by user_id
    ascending.
    """

    window: str
    domain: str
    entries: tuple[tuple[int, str, float], ...]


def rank_domain(
    vectors: Sequence[FeatureVector],
    domain: str,
    window: str,
    key: str = "W",
    score_fn: Callable[[FeatureVector], float] | None = None,
) -> DomainRanking:
    """Rank the users holding a vector in (domain, window) by ``key`` descending.

    ``key`` is either the weight column W or ``model_probability``, in
    which case ``score_fn`` must map a vector to a probability. An
    unknown domain or window yields an empty ranking with a warning.
    """
    if key not in RANKING_KEYS:
        raise ValueError(f"unknown ranking key: {key!r}")
    if key == "model_probability" and score_fn is None:
        raise ValueError("key 'model_probability' requires a score_fn")

    cell = [v for v in vectors if v.domain == domain and v.window == window]
    if not cell:
        logger.warning("no vectors for domain %r in window %r", domain, window)
        return DomainRanking(window=window, domain=domain, entries=())

    keyed = [
        (v.user_id, v.weight if key == "W" else score_fn(v))
        for v in cell
    ]
    keyed.sort(key=lambda item: (-item[1], item[0]))
    entries = tuple(
        (rank, user_id, value) for rank, (user_id, value) in enumerate(keyed, start=1)
    )
    return DomainRanking(window=window, domain=domain, entries=entries)


def rank_all(
    vectors: Sequence[FeatureVector],
    key: str = "W",
    score_fn: Callable[[FeatureVector], float] | None = None,
) -> list[DomainRanking]:
    """One ranking per (window, domain) cell present in the vectors."""
    cells = sorted({(v.window, v.domain) for v in vectors})
    return [rank_domain(vectors, domain, window, key, score_fn) for window, domain in cells]


def temporal_series(
    vectors: Sequence[FeatureVector], user_id: str, domain: str
) -> list[tuple[str, float]]:
    """Chronological (window, W) points for one user in one domain.

    Windows without a vector for the user are omitted; an unknown user
    yields an empty series.
    """
    points = [
        (v.window, v.weight)
        for v in vectors
        if v.user_id == user_id and v.domain == domain
    ]
    points.sort(key=lambda p: p[0])
    return points


def write_rankings_csv(rankings: Iterable[DomainRanking], target) -> None:
    def _write(handle) -> None:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["window", "domain", "rank", "user_id", "key"])
        for ranking in rankings:
            for rank, user_id, value in ranking.entries:
                writer.writerow([ranking.window, ranking.domain, rank, user_id, f"{value:.12g}"])

    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8", newline="") as handle:
            _write(handle)
    else:
        _write(target)


def rankings_to_json(rankings: Iterable[DomainRanking]) -> str:
    payload = [
        {
            "window": r.window,
            "domain": r.domain,
            "entries": [
                {"rank": rank, "user_id": uid, "key": value} for rank, uid, value in r.entries
            ],
        }
        for r in rankings
    ]
    return json.dumps(payload, indent=2, sort_keys=True)

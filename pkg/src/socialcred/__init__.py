"""Deterministic domain-based credibility analytics for social post datasets.

Pipeline phases: ingest (load/cleanse/window) -> semantics (domain
classification + sentiment) -> features (per user/domain/window metrics)
-> ranking -> learn (influencer classifiers + evaluation).
"""

__version__ = "0.1.0"

"""Term scoring (NSPF, ILF) and feature selection (Top-K, Mid-N percentile).

Both selectors are expressed as thresholds on the score: a term is kept when
``lower <= score <= upper``. Top-K and Mid-N only differ in how the two bounds
are derived from the ranked scores of one snippet. Ranking is always by
descending score with ties broken by ascending term string, which makes the
selected set reproducible across runs and platforms.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping

from senatus.errors import EmptySelection
from senatus.frontend.features import FeatureSet, parse_term
from senatus.frontend.spt import SimplifiedParseTree

NSPF = "nspf"
ILF = "ilf"
TOPK = "topk"
MIDN = "midn"
NONE = "none"  # plain MinHash baseline: no selection, no padding


@dataclass(frozen=True)
class CorpusTermStats:
    """Corpus-wide term totals, frozen once built."""

    term_frequency: Mapping[str, int]
    corpus_size: int

    def __post_init__(self):
        if self.corpus_size < 0:
            raise ValueError("corpus_size must be non-negative")
        if not isinstance(self.term_frequency, MappingProxyType):
            object.__setattr__(self, "term_frequency", MappingProxyType(dict(self.term_frequency)))

    @property
    def vocabulary_size(self) -> int:
        return len(self.term_frequency)

    @classmethod
    def from_feature_sets(cls, feature_sets: Iterable[FeatureSet]) -> "CorpusTermStats":
        totals: Counter = Counter()
        n = 0
        for fs in feature_sets:
            totals.update(fs.terms)
            n += 1
        return cls(dict(totals), n)


@dataclass(frozen=True)
class ScoredFeature:
    term: str
    raw_count: int
    score: float


@dataclass(frozen=True)
class SelectionConfig:
    mode: str = TOPK
    k: int = 100
    n: float = 95.0
    scorer: str = NSPF

    def __post_init__(self):
        if self.mode not in (TOPK, MIDN, NONE):
            raise ValueError(f"unknown selection mode {self.mode!r}")
        if self.scorer not in (NSPF, ILF):
            raise ValueError(f"unknown scorer {self.scorer!r}")
        if self.k < 1:
            raise ValueError("K must be >= 1")
        if not 0 < self.n <= 100:
            raise ValueError("N must lie in (0, 100]")

    def to_dict(self) -> dict:
        return {"mode": self.mode, "k": self.k, "n": self.n, "scorer": self.scorer}


def nspf_score(term: str, local_count: int, stats: CorpusTermStats) -> float:
    """Local count over corpus-wide count, capped at 1.

    Terms never seen in the corpus are maximally distinctive and score 1.0.
    """
    total = stats.term_frequency.get(term)
    if not total:
        return 1.0
    return min(1.0, local_count / total)


def ilf_score(term: str, spt: SimplifiedParseTree | Mapping[str, int]) -> float:
    """Inverse frequency of the term's anchor leaf inside one tree.

    ``spt`` may also be a precomputed ``leaf_counts()`` mapping.
    """
    counts = spt.leaf_counts() if isinstance(spt, SimplifiedParseTree) else spt
    anchor = parse_term(term).anchor
    return 1.0 / max(counts.get(anchor, 0), 1)


def score_features(features: FeatureSet, scorer: str = NSPF,
                   stats: CorpusTermStats | None = None,
                   spt: SimplifiedParseTree | Mapping[str, int] | None = None) -> list[ScoredFeature]:
    if scorer == NSPF:
        if stats is None:
            raise ValueError("NSPF scoring needs corpus statistics")
        return [ScoredFeature(t, c, nspf_score(t, c, stats)) for t, c in features.terms.items()]
    if scorer == ILF:
        if spt is None:
            raise ValueError("ILF scoring needs the snippet's parse tree")
        counts = spt.leaf_counts() if isinstance(spt, SimplifiedParseTree) else spt
        return [ScoredFeature(t, c, ilf_score(t, counts)) for t, c in features.terms.items()]
    raise ValueError(f"unknown scorer {scorer!r}")


def rank(scored: Iterable[ScoredFeature]) -> list[ScoredFeature]:
    return sorted(scored, key=lambda f: (-f.score, f.term))


def _to_features(kept: Iterable[ScoredFeature]) -> FeatureSet:
    return FeatureSet(Counter({f.term: f.raw_count for f in kept}))


def threshold_scores(scored: Iterable[ScoredFeature], l_lower: float, l_upper: float) -> FeatureSet:
    if l_lower > l_upper:
        raise ValueError("l_lower must not exceed l_upper")
    kept = [f for f in scored if l_lower <= f.score <= l_upper]
    if not kept:
        raise EmptySelection(f"no feature scored within [{l_lower}, {l_upper}]")
    return _to_features(kept)


def select_top_k(scored: Iterable[ScoredFeature], k: int) -> FeatureSet:
    if k < 1:
        raise ValueError("K must be >= 1")
    return _to_features(rank(scored)[:k])


def mid_n_bounds(n_items: int, n: float) -> tuple[int, int]:
    """Slice ``[start, stop)`` of the descending ranking kept by Mid-N.

    Nearest-rank percentiles on the ascending order: the lowest
    ``ceil(tail * n_items)`` and the highest ``floor(tail * n_items)`` items are
    dropped, with ``tail = (100 - N) / 200``.
    """
    tail = (100 - Fraction(str(n))) / 200
    low_cut = math.ceil(tail * n_items)
    high_rank = math.ceil((1 - tail) * n_items)
    return n_items - high_rank, n_items - low_cut


def select_mid_n(scored: Iterable[ScoredFeature], n: float, k: int) -> FeatureSet:
    if not 0 < n <= 100:
        raise ValueError("N must lie in (0, 100]")
    if k < 1:
        raise ValueError("K must be >= 1")
    ranked = rank(scored)
    start, stop = mid_n_bounds(len(ranked), n)
    band = ranked[start:stop]
    if not band:
        raise EmptySelection("Mid-N band is empty")
    return _to_features(band[:k])


def select(features: FeatureSet, config: SelectionConfig,
           stats: CorpusTermStats | None = None,
           spt: SimplifiedParseTree | Mapping[str, int] | None = None) -> FeatureSet:
    """Apply ``config`` to one snippet's features."""
    if config.mode == NONE:
        return FeatureSet(Counter(features.terms), features.source_id)
    scored = score_features(features, config.scorer, stats, spt)
    if config.mode == TOPK:
        out = select_top_k(scored, config.k)
    else:
        out = select_mid_n(scored, config.n, config.k)
    out.source_id = features.source_id
    return out

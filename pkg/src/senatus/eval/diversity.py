"""Conciseness and diversity of recommendation lists."""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from itertools import combinations
from typing import Collection, Mapping, Sequence

from senatus.search import containment, jaccard


@dataclass(frozen=True)
class ConcisenessDiversity:
    length_ratios: tuple[float, ...]  # |F(candidate)| / |F(query)|, one per result
    mean_length_ratio: float
    median_length_ratio: float
    pairwise_jaccard: float
    pairwise_containment: float
    queries_with_pairs: int

    def to_dict(self) -> dict:
        return {
            "mean_length_ratio": self.mean_length_ratio,
            "median_length_ratio": self.median_length_ratio,
            "pairwise_jaccard": self.pairwise_jaccard,
            "pairwise_containment": self.pairwise_containment,
            "queries_with_pairs": self.queries_with_pairs,
            "results": len(self.length_ratios),
        }


def conciseness_diversity(results: Mapping[str, Sequence[str]],
                          query_features: Mapping[str, Collection[str]],
                          features: Mapping[str, Collection[str]]) -> ConcisenessDiversity:
    """Length ratios and mean pairwise similarity within each result list.

    ``results`` maps a query id to its ranked result ids; ``query_features`` and
    ``features`` give the distinct terms of queries and results. Pairwise
    containment is averaged over ordered pairs since it is asymmetric.
    """
    ratios: list[float] = []
    jac, cont = [], []
    for qid, ids in results.items():
        qlen = len(query_features[qid])
        ratios.extend(len(features[i]) / qlen for i in ids)
        if len(ids) < 2:
            continue
        sets = [set(features[i]) for i in ids]
        pj = [jaccard(a, b) for a, b in combinations(sets, 2)]
        pc = [containment(a, b) for a in sets for b in sets if a is not b]
        jac.append(statistics.fmean(pj))
        cont.append(statistics.fmean(pc))
    if not jac:
        raise ValueError("need at least one query with two or more results")
    return ConcisenessDiversity(
        tuple(ratios),
        statistics.fmean(ratios),
        float(statistics.median(ratios)),
        statistics.fmean(jac),
        statistics.fmean(cont),
        len(jac),
    )

"""Query pipeline: featurize, select, sketch, probe buckets, exact rerank."""

from __future__ import annotations

import logging
import time
from collections.abc import Collection, Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np

from senatus.errors import BothEmpty, EmptyQuery, EmptySelection
from senatus.frontend import CodeSnippet, FeatureSet, featurize
from senatus.index import LshIndex
from senatus.scoring import ILF, select
from senatus.sketch import band_digests, fingerprints, minhash_ids

log = logging.getLogger(__name__)

CONTAINMENT = "containment"
JACCARD = "jaccard"
DOT = "dot"
RERANKS = (CONTAINMENT, JACCARD, DOT)

FULL = "full"
SELECTED = "selected"


def _terms(x) -> Collection[str]:
    if isinstance(x, FeatureSet):
        return x.terms.keys()
    if isinstance(x, (set, frozenset, dict)):
        return x
    return set(x)


def containment(q, m) -> float:
    """Share of the query's distinct terms found in ``m``."""
    q, m = _terms(q), _terms(m)
    if not q:
        raise EmptyQuery("containment of an empty query")
    return sum(1 for t in q if t in m) / len(q)


def jaccard(q, m) -> float:
    q, m = _terms(q), _terms(m)
    if not q and not m:
        raise BothEmpty("jaccard of two empty sets")
    inter = sum(1 for t in q if t in m)
    return inter / (len(q) + len(m) - inter)


@dataclass(frozen=True)
class QueryResult:
    id: str
    containment: float
    jaccard: float
    dot: int
    rank: int

    def to_dict(self) -> dict:
        return {"id": self.id, "containment": self.containment, "jaccard": self.jaccard,
                "dot": self.dot, "rank": self.rank}


@dataclass
class QueryResponse:
    query_id: str
    results: list[QueryResult]
    candidate_count: int
    timings_us: dict[str, int] = field(default_factory=dict)
    degraded: bool = False

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "results": [r.to_dict() for r in self.results],
            "candidate_count": self.candidate_count,
            "timings_us": dict(self.timings_us),
        }

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.results]


def _gather(indptr: np.ndarray, data: np.ndarray, rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Concatenated CSR rows plus their lengths."""
    starts = indptr[rows].astype(np.int64)
    lengths = (indptr[rows + 1] - indptr[rows]).astype(np.int64)
    total = int(lengths.sum())
    if total == 0:
        return data[:0], lengths
    shift = np.repeat(starts - (np.cumsum(lengths) - lengths), lengths)
    return data[np.arange(total, dtype=np.int64) + shift], lengths


def _member_mask(values: np.ndarray, sorted_keys: np.ndarray) -> np.ndarray:
    if len(sorted_keys) == 0:
        return np.zeros(len(values), dtype=bool)
    pos = np.searchsorted(sorted_keys, values)
    pos[pos == len(sorted_keys)] = 0
    return sorted_keys[pos] == values


def overlap(index: LshIndex, q_ids: np.ndarray, rows: np.ndarray | None,
            vectors: str = FULL) -> tuple[np.ndarray, np.ndarray]:
    """Intersection sizes and stored lengths for ``rows`` (all records when None).

    ``q_ids`` holds the sorted term ids of the query that exist in the vocabulary.
    """
    indptr, data = ((index.full_indptr, index.full_terms) if vectors == FULL
                    else (index.sel_indptr, index.sel_terms))
    if rows is None:
        terms, lengths = data, np.diff(indptr).astype(np.int64)
    else:
        terms, lengths = _gather(indptr, data, rows)
    if len(lengths) == 0:
        return np.zeros(0, dtype=np.int64), lengths
    mask = _member_mask(terms, q_ids).astype(np.int64)
    nonempty = lengths > 0
    dots = np.zeros(len(lengths), dtype=np.int64)
    if len(mask):
        starts = (np.cumsum(lengths) - lengths)[nonempty]
        dots[nonempty] = np.add.reduceat(mask, starts)
    return dots, lengths


def rerank(index: LshIndex, query_terms: Collection[str], rows: np.ndarray | None,
           topn: int = 100, by: str = CONTAINMENT, vectors: str = FULL) -> list[QueryResult]:
    """Exact scores against stored vectors, best first, ties by ascending id."""
    if by not in RERANKS:
        raise ValueError(f"unknown rerank {by!r}")
    if not query_terms:
        raise EmptyQuery("query has no features")
    t2i = index.term_to_id
    q_ids = np.array(sorted(t2i[t] for t in query_terms if t in t2i), dtype=np.uint32)
    dots, lengths = overlap(index, q_ids, rows, vectors)
    rows = np.arange(len(index)) if rows is None else rows
    keep = dots > 0
    rows, dots, lengths = rows[keep], dots[keep], lengths[keep]
    qn = len(query_terms)
    cont = dots / qn
    jac = dots / (qn + lengths - dots)
    key = {CONTAINMENT: cont, JACCARD: jac, DOT: dots}[by]
    # Records are stored sorted by id, so the row index breaks ties by id.
    order = np.lexsort((rows, -key))[:topn]
    return [QueryResult(index.ids[rows[i]], float(cont[i]), float(jac[i]), int(dots[i]), r + 1)
            for r, i in enumerate(order)]


def candidates(index: LshIndex, selected_terms: Iterable[str]) -> np.ndarray:
    """Record indices sharing at least one band bucket with the (unpadded) query."""
    if len(index) == 0:
        return np.empty(0, dtype=np.uint32)
    ids = fingerprints(selected_terms)
    sig = minhash_ids(ids, index.lsh)
    return index.probe(band_digests(sig, index.lsh))


def select_query(index: LshIndex, features: FeatureSet,
                 leaf_counts: Mapping[str, int] | None = None) -> tuple[FeatureSet, bool]:
    """Selected query features and whether the raw-feature fallback was used."""
    if not len(features):
        raise EmptyQuery("query has no features")
    try:
        return select(features, index.selection, index.stats, leaf_counts), False
    except EmptySelection:
        log.warning("selection left query %s empty; using all of its features", features.source_id)
        return features, True


def query_features(index: LshIndex, features: FeatureSet, topn: int = 100,
                   by: str = CONTAINMENT, exhaustive: bool = False, vectors: str = FULL,
                   leaf_counts: Mapping[str, int] | None = None,
                   query_id: str | None = None, featurize_us: int = 0) -> QueryResponse:
    if topn < 1:
        raise ValueError("topN must be >= 1")
    if index.selection.scorer == ILF and leaf_counts is None:
        raise ValueError("ILF index needs the query's leaf counts")
    t0 = time.perf_counter()
    chosen, degraded = select_query(index, features, leaf_counts)
    t1 = time.perf_counter()
    rows = None if exhaustive else candidates(index, chosen.terms)
    t2 = time.perf_counter()
    q_terms = features.terms.keys() if vectors == FULL else chosen.terms.keys()
    results = rerank(index, q_terms, rows, topn, by, vectors)
    t3 = time.perf_counter()
    return QueryResponse(
        query_id=query_id if query_id is not None else (features.source_id or ""),
        results=results,
        candidate_count=len(index) if rows is None else len(rows),
        timings_us={
            "featurize": featurize_us + round((t1 - t0) * 1e6),
            "probe": round((t2 - t1) * 1e6),
            "rerank": round((t3 - t2) * 1e6),
        },
        degraded=degraded,
    )


def query(index: LshIndex, snippet: CodeSnippet, topn: int = 100, rerank: str = CONTAINMENT,
          exhaustive: bool = False, vectors: str = FULL) -> QueryResponse:
    """Top-``topn`` recommendations for ``snippet``.

    ``exhaustive`` skips the bucket probe and reranks the whole corpus.
    """
    t0 = time.perf_counter()
    spt, fs = featurize(snippet)
    leaf_counts = spt.leaf_counts() if index.selection.scorer == ILF else None
    us = round((time.perf_counter() - t0) * 1e6)
    return query_features(index, fs, topn, rerank, exhaustive, vectors, leaf_counts,
                          query_id=snippet.id, featurize_us=us)


def brute_force(index: LshIndex, features: FeatureSet, topn: int = 100,
                by: str = CONTAINMENT) -> list[QueryResult]:
    """Linear-scan baseline: exact scores against every stored full vector."""
    return rerank(index, features.terms.keys(), None, topn, by, FULL)

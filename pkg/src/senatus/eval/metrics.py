"""Retrieval metrics over groundtruth clusters."""

from __future__ import annotations

import csv
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Collection, Iterable, Mapping, TextIO

from senatus.errors import EmptyGroundtruth
from senatus.eval.groundtruth import GroundtruthCluster
from senatus.frontend import CodeSnippet, FeatureSet
from senatus.index import LshIndex
from senatus.search import CONTAINMENT, FULL, QueryResponse, query, query_features


@dataclass(frozen=True)
class QueryMetrics:
    query_id: str
    relevant: int
    retrieved: int
    hits: int
    precision: float  # denominator min(k, retrieved)
    precision_strict: float  # denominator k
    recall: float
    f1: float
    candidate_count: int = 0
    time_s: float = 0.0


@dataclass
class MetricsReport:
    k: int
    n_queries: int
    skipped: int
    precision: float
    precision_strict: float
    recall: float
    f1: float  # mean of per-query F1
    f1_of_means: float  # harmonic mean of the macro P and R
    mean_query_time_s: float
    candidates_mean: float
    candidates_median: float
    candidates_max: int
    per_query: list[QueryMetrics] = field(default_factory=list)

    def to_dict(self, per_query: bool = False) -> dict:
        d = asdict(self)
        if not per_query:
            d.pop("per_query")
        return d

    def write_csv(self, out: TextIO) -> None:
        w = csv.writer(out, lineterminator="\n")
        names = list(QueryMetrics.__dataclass_fields__)
        w.writerow(names)
        for m in self.per_query:
            w.writerow([getattr(m, n) for n in names])


def _harmonic(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def score_query(query_id: str, retrieved: list[str], relevant: Collection[str], k: int,
                candidate_count: int = 0, time_s: float = 0.0) -> QueryMetrics:
    top = retrieved[:k]
    hits = sum(1 for r in top if r in relevant)
    p = hits / len(top) if top else 0.0
    r = hits / len(relevant)
    return QueryMetrics(query_id, len(relevant), len(top), hits, p, hits / k, r,
                        _harmonic(p, r), candidate_count, time_s)


def score_run(clusters: Iterable[GroundtruthCluster], retrieved: Mapping[str, list[str]],
              k: int = 100, indexed: Collection[str] | None = None,
              stats: Mapping[str, tuple[int, float]] | None = None) -> MetricsReport:
    """Aggregate metrics for precomputed result lists keyed by query id.

    Relevant sets are restricted to ``indexed`` ids when given; clusters left
    without any relevant snippet are skipped and counted.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    clusters = list(clusters)
    if not clusters:
        raise EmptyGroundtruth("groundtruth has no usable clusters")
    rows, skipped = [], 0
    for c in clusters:
        relevant = c.relevant if indexed is None else {s for s in c.relevant if s in indexed}
        if not relevant:
            skipped += 1
            continue
        cc, t = (stats or {}).get(c.query_id, (0, 0.0))
        rows.append(score_query(c.query_id, retrieved.get(c.query_id, []), relevant, k, cc, t))
    if not rows:
        raise EmptyGroundtruth("no cluster has a relevant snippet in the index")
    p = statistics.fmean(m.precision for m in rows)
    r = statistics.fmean(m.recall for m in rows)
    cands = [m.candidate_count for m in rows]
    return MetricsReport(
        k=k,
        n_queries=len(rows),
        skipped=skipped,
        precision=p,
        precision_strict=statistics.fmean(m.precision_strict for m in rows),
        recall=r,
        f1=statistics.fmean(m.f1 for m in rows),
        f1_of_means=_harmonic(p, r),
        mean_query_time_s=statistics.fmean(m.time_s for m in rows),
        candidates_mean=statistics.fmean(cands),
        candidates_median=float(statistics.median(cands)),
        candidates_max=max(cands),
        per_query=rows,
    )


def run_queries(index: LshIndex, queries: Mapping[str, CodeSnippet | FeatureSet], topn: int,
                rerank: str = CONTAINMENT, exhaustive: bool = False, vectors: str = FULL,
                threads: int = 1) -> dict[str, tuple[QueryResponse, float]]:
    def one(qid: str):
        q = queries[qid]
        t0 = time.perf_counter()
        if isinstance(q, FeatureSet):
            resp = query_features(index, q, topn, rerank, exhaustive, vectors, query_id=qid)
        else:
            resp = query(index, q, topn, rerank, exhaustive, vectors)
        return qid, (resp, time.perf_counter() - t0)

    ids = sorted(queries)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return dict(pool.map(one, ids))
    return dict(map(one, ids))


def evaluate(index: LshIndex, clusters: Iterable[GroundtruthCluster],
             queries: Mapping[str, CodeSnippet | FeatureSet], k: int = 100,
             rerank: str = CONTAINMENT, exhaustive: bool = False, vectors: str = FULL,
             threads: int = 1) -> MetricsReport:
    """P@k, R@k and F1@k of ``index`` for each cluster's query snippet.

    ``queries`` maps query ids to their snippets (or feature sets); query
    snippets are expected to be absent from the index; if one is present, its
    self-match is ignored.
    """
    clusters = list(clusters)
    if not clusters:
        raise EmptyGroundtruth("groundtruth is empty")
    missing = [c.query_id for c in clusters if c.query_id not in queries]
    if missing:
        raise KeyError(f"no snippet for query {missing[0]!r}")
    wanted = {c.query_id: queries[c.query_id] for c in clusters}
    runs = run_queries(index, wanted, k + 1, rerank, exhaustive, vectors, threads)
    # A query that is itself indexed would find itself first; that hit is not
    # a recommendation, so it is dropped before scoring.
    retrieved = {qid: [i for i in resp.ids if i != qid][:k] for qid, (resp, _) in runs.items()}
    stats = {qid: (resp.candidate_count, t) for qid, (resp, t) in runs.items()}
    return score_run(clusters, retrieved, k, set(index.ids), stats)

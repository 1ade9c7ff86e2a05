"""Scalability benchmark: LSH probe + rerank against a linear scan."""

from __future__ import annotations

import csv
import logging
import statistics
import time
from dataclasses import asdict, dataclass, replace
from typing import Sequence, TextIO

import numpy as np

from senatus.eval.synth import SkewedCorpus
from senatus.index import LshIndex, build_index_from_features
from senatus.scoring import SelectionConfig
from senatus.search import brute_force, query_features
from senatus.sketch import LshParams

log = logging.getLogger(__name__)

LSH = "lsh"
BRUTE_FORCE = "brute_force"


@dataclass(frozen=True)
class BenchRow:
    corpus_size: int
    quartile: int  # 1..4 by query feature length, 0 = all queries
    method: str
    queries: int
    mean_comparisons: float
    mean_time_s: float


def length_quartiles(lengths: Sequence[int]) -> np.ndarray:
    """Quartile label 1..4 of each length (ties broken by position)."""
    order = np.argsort(np.asarray(lengths), kind="stable")
    labels = np.empty(len(lengths), dtype=np.int64)
    labels[order] = np.arange(len(lengths)) * 4 // max(len(lengths), 1) + 1
    return labels


def _rows(size: int, method: str, comps: np.ndarray, times: np.ndarray,
          quart: np.ndarray) -> list[BenchRow]:
    out = [BenchRow(size, 0, method, len(comps), float(comps.mean()), float(times.mean()))]
    for q in range(1, 5):
        m = quart == q
        if m.any():
            out.append(BenchRow(size, q, method, int(m.sum()), float(comps[m].mean()),
                                float(times[m].mean())))
    return out


def bench_index(index: LshIndex, queries: Sequence, brute_force_queries: int | None = None,
                ) -> list[BenchRow]:
    """Time every query through the LSH path and a prefix of them by linear scan."""
    n = len(index)
    lengths = [len(q) for q in queries]
    quart = length_quartiles(lengths)
    comps, times = [], []
    for q in queries:
        t0 = time.perf_counter()
        resp = query_features(index, q)
        times.append(time.perf_counter() - t0)
        comps.append(resp.candidate_count)
    rows = _rows(n, LSH, np.array(comps, float), np.array(times), quart)
    m = len(queries) if brute_force_queries is None else min(brute_force_queries, len(queries))
    bt = []
    for q in queries[:m]:
        t0 = time.perf_counter()
        brute_force(index, q)
        bt.append(time.perf_counter() - t0)
    rows += _rows(n, BRUTE_FORCE, np.full(m, float(n)), np.array(bt), quart[:m])
    return rows


def scalability_bench(sizes: Sequence[int], n_queries: int = 200,
                      brute_force_queries: int | None = 50,
                      corpus: SkewedCorpus | None = None,
                      lsh: LshParams = LshParams(),
                      selection: SelectionConfig = SelectionConfig()) -> list[BenchRow]:
    """Build a synthetic corpus at each size and benchmark a fixed-seed query pool."""
    template = corpus or SkewedCorpus(n_snippets=max(sizes))
    rows: list[BenchRow] = []
    for size in sizes:
        c = replace(template, n_snippets=size)
        t0 = time.perf_counter()
        index, _ = build_index_from_features(c.records(), lsh, selection, created="bench")
        log.info("built %d records in %.1fs", size, time.perf_counter() - t0)
        queries = [fs for _, fs in c.fresh_queries(n_queries)]
        rows += bench_index(index, queries, brute_force_queries)
    return rows


def speedup(rows: Sequence[BenchRow], size: int) -> float:
    by = {r.method: r.mean_time_s for r in rows if r.corpus_size == size and r.quartile == 0}
    return by[BRUTE_FORCE] / by[LSH]


def write_csv(rows: Sequence[BenchRow], out: TextIO) -> None:
    w = csv.DictWriter(out, fieldnames=list(BenchRow.__dataclass_fields__), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(asdict(r))


def summarize(rows: Sequence[BenchRow]) -> dict:
    sizes = sorted({r.corpus_size for r in rows})
    out = {}
    for s in sizes:
        lsh = [r for r in rows if r.corpus_size == s and r.method == LSH]
        out[s] = {
            "candidates": next(r.mean_comparisons for r in lsh if r.quartile == 0),
            "speedup": speedup(rows, s),
            "quartile_candidates": [r.mean_comparisons for r in lsh if r.quartile][:4],
        }
    if len(sizes) >= 2:
        out["candidate_growth"] = out[sizes[-1]]["candidates"] / max(out[sizes[0]]["candidates"], 1e-12)
        out["size_growth"] = sizes[-1] / sizes[0]
    out["median_speedup"] = statistics.median(out[s]["speedup"] for s in sizes)
    return out

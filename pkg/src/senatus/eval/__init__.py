"""Groundtruth, retrieval metrics and corpus analyses."""

from senatus.eval.diversity import ConcisenessDiversity, conciseness_diversity
from senatus.eval.groundtruth import GroundtruthCluster, build_groundtruth, read_pairs
from senatus.eval.metrics import MetricsReport, QueryMetrics, evaluate, score_query, score_run
from senatus.eval.powerlaw import LengthDistribution, length_distribution
from senatus.eval.synth import SkewedCorpus, zipf_lengths

__all__ = [
    "ConcisenessDiversity",
    "GroundtruthCluster",
    "LengthDistribution",
    "MetricsReport",
    "QueryMetrics",
    "SkewedCorpus",
    "build_groundtruth",
    "conciseness_diversity",
    "evaluate",
    "length_distribution",
    "read_pairs",
    "score_query",
    "score_run",
    "zipf_lengths",
]

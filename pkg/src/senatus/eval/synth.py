"""Seeded synthetic corpora at the feature level.

Each snippet belongs to a family of snippets that answer the same question.
Its distinct terms are drawn from three pools:

* API terms: a fixed per-family vocabulary, of which every member uses a random
  subset. These carry the relevance signal.
* rare terms: identifiers drawn uniformly from a vocabulary that grows with the
  corpus, so each one is shared by only a handful of snippets.
* generic terms: structural boilerplate from a fixed vocabulary with Zipf
  popularity. They make up everything beyond the API and rare terms, so long
  snippets are dominated by them.

Lengths follow a truncated continuous power law with density exponent
``length_exponent``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from senatus.frontend import FeatureSet
from senatus.index import FeatureRecord


@dataclass(frozen=True)
class SkewedCorpus:
    n_snippets: int
    family_size: int = 8
    family_api: int = 70
    api_per_snippet: int = 60
    rare_per_snippet: int = 40
    rare_vocab_factor: int = 4
    generic_vocab: int = 2000
    generic_zipf: float = 1.1
    min_length: int = 100
    max_length: int = 1500
    length_exponent: float = 2.0
    seed: int = 42

    def __post_init__(self):
        if self.api_per_snippet > self.family_api:
            raise ValueError("api_per_snippet exceeds family_api")
        if self.min_length < self.api_per_snippet + self.rare_per_snippet:
            raise ValueError("min_length too small for the API and rare terms")
        if self.family_size < 2:
            raise ValueError("family_size must be >= 2")

    @property
    def n_families(self) -> int:
        return -(-self.n_snippets // self.family_size)

    @cached_property
    def _generic_p(self) -> np.ndarray:
        w = 1.0 / np.arange(1, self.generic_vocab + 1) ** self.generic_zipf
        return w / w.sum()

    def family_of(self, i: int) -> int:
        return i // self.family_size

    def snippet_id(self, i: int) -> str:
        return f"s{i:07d}"

    def question_id(self, family: int) -> str:
        return f"q{family:06d}"

    def lengths(self, n: int, rng: np.random.Generator) -> np.ndarray:
        # Inverse CDF of p(x) ~ x^-a on [min_length, max_length + 1).
        a = self.length_exponent - 1.0
        lo, hi = float(self.min_length), float(self.max_length + 1)
        u = rng.random(n)
        x = (lo ** -a - u * (lo ** -a - hi ** -a)) ** (-1.0 / a)
        return np.minimum(np.floor(x).astype(np.int64), self.max_length)

    def _snippet(self, family: int, length: int, rng: np.random.Generator) -> Counter:
        api = rng.choice(self.family_api, self.api_per_snippet, replace=False)
        rare = rng.choice(self.rare_vocab_factor * self.n_snippets, self.rare_per_snippet,
                          replace=False)
        n_generic = length - self.api_per_snippet - self.rare_per_snippet
        terms: Counter = Counter()
        for j in api.tolist():
            terms[f"api:{family}.{j}"] = 1
        for j in rare.tolist():
            terms[f"id:{j}"] = 1
        if n_generic:
            generic = rng.choice(self.generic_vocab, n_generic, replace=False, p=self._generic_p)
            counts = rng.geometric(0.5, n_generic)
            for j, c in zip(generic.tolist(), counts.tolist()):
                terms[f"g:{j}"] = c
        return terms

    def records(self) -> list[FeatureRecord]:
        rng = np.random.default_rng(self.seed)
        lengths = self.lengths(self.n_snippets, rng)
        out = []
        for i in range(self.n_snippets):
            sid = self.snippet_id(i)
            out.append(FeatureRecord(sid, FeatureSet(self._snippet(self.family_of(i), int(lengths[i]), rng), sid)))
        return out

    def pairs(self) -> list[tuple[str, str]]:
        """``(question_id, snippet_id)`` for every snippet."""
        return [(self.question_id(self.family_of(i)), self.snippet_id(i))
                for i in range(self.n_snippets)]

    def fresh_queries(self, n: int, seed: int = 0) -> list[tuple[int, FeatureSet]]:
        """New snippets (not in the corpus) from random families, as ``(family, features)``."""
        rng = np.random.default_rng([self.seed, seed, 1])
        fams = rng.integers(0, self.n_families, n)
        lengths = self.lengths(n, rng)
        return [(int(f), FeatureSet(self._snippet(int(f), int(L), rng), f"query-{k}"))
                for k, (f, L) in enumerate(zip(fams.tolist(), lengths.tolist()))]


def zipf_lengths(n: int, alpha: float = 2.0, seed: int = 42) -> np.ndarray:
    """Discrete Zipf(alpha) samples, p(k) ~ k^-alpha for k >= 1."""
    return np.random.default_rng(seed).zipf(alpha, n)

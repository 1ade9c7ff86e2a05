"""Question-keyed groundtruth clusters."""

from __future__ import annotations

import json
import random
from collections import defaultdict
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

from senatus.errors import SchemaError


@dataclass(frozen=True)
class GroundtruthCluster:
    question_id: str
    members: tuple[str, ...]
    query_id: str

    def __post_init__(self):
        if len(self.members) < 2:
            raise ValueError("a cluster needs at least two members")
        if self.query_id not in self.members:
            raise ValueError("query must be a member of its cluster")

    @property
    def relevant(self) -> frozenset[str]:
        return frozenset(self.members) - {self.query_id}


def build_groundtruth(pairs: Iterable[tuple[str, str]], seed: int = 42) -> list[GroundtruthCluster]:
    """Group ``(question_id, snippet_id)`` pairs by exact question.

    Singleton questions are dropped. The query of each cluster is drawn from a
    generator seeded by ``(seed, question_id)``, so the choice does not depend on
    input order or on which other clusters exist.
    """
    groups: dict[str, set[str]] = defaultdict(set)
    for question, snippet in pairs:
        groups[question].add(snippet)
    clusters = []
    for question in sorted(groups):
        members = tuple(sorted(groups[question]))
        if len(members) < 2:
            continue
        rng = random.Random(f"{seed}:{question}")
        clusters.append(GroundtruthCluster(question, members, rng.choice(members)))
    return clusters


def read_pairs(fh: IO[str]) -> Iterator[tuple[str, str]]:
    """Parse JSON-Lines ``{"question_id": str, "snippet_id": str}`` records."""
    for n, line in enumerate(fh, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise SchemaError(f"line {n}: {e}") from e
        if not isinstance(obj, dict):
            raise SchemaError(f"line {n}: expected an object")
        q, s = obj.get("question_id"), obj.get("snippet_id")
        if not isinstance(q, str) or not isinstance(s, str) or not q or not s:
            raise SchemaError(f"line {n}: question_id and snippet_id must be non-empty strings")
        yield q, s


def write_pairs(fh: IO[str], pairs: Iterable[tuple[str, str]]) -> None:
    for q, s in pairs:
        fh.write(json.dumps({"question_id": q, "snippet_id": s}) + "\n")


def query_ids(clusters: Iterable[GroundtruthCluster]) -> set[str]:
    return {c.query_id for c in clusters}

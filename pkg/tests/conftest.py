import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from senatus.eval.synth import SkewedCorpus  # noqa: E402
from senatus.index import build_index, build_index_from_features  # noqa: E402

DATA = Path(__file__).parent / "data"

RANKING_SNIPPET = """// rank the variant graph
Set<VariantGraph.Vertex> matchedVertices = new HashSet<>();
for (List<Match> phraseMatch : phraseMatches) {
    matchedVertices.add(phraseMatch.get(0).vertex);
}
final VariantGraphRanking ranking =
VariantGraphRanking.ofOnlyCertainVertices(base, matchedVertices);
return ranking;
"""


@pytest.fixture(scope="session")
def java_corpus():
    from javagen import java_families

    return java_families(300, family_size=6, seed=3)


@pytest.fixture(scope="session")
def java_index(java_corpus):
    snippets, _ = java_corpus
    index, _ = build_index(snippets, created="2000-01-01T00:00:00+00:00")
    return index


@pytest.fixture(scope="session")
def skewed_small():
    corpus = SkewedCorpus(n_snippets=1000, seed=5)
    index, _ = build_index_from_features(corpus.records(), created="2000-01-01T00:00:00+00:00")
    return corpus, index

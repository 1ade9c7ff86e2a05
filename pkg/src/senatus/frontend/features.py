"""Structural features of a simplified parse tree.

Four families of terms are produced:

========== ================================ ===========================
family     shape                            example
========== ================================ ===========================
token      ``TOKEN``                        ``#VAR``
parent     ``LABEL POS > TOKEN``            ``return#;2>#VAR``
sibling    ``TOKEN >> TOKEN``               ``get>>0``
variable   ``LABEL POS >>> LABEL POS``      ``#=#1>>>return#;2``
========== ================================ ===========================

``POS`` is the 1-based slot of the child inside the label. Backslash, ``>``
and control characters inside labels and tokens are backslash-escaped, so
every term parses back unambiguously with :func:`parse_term`.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

from senatus.frontend.spt import VAR_TOKEN, SimplifiedParseTree

MAX_ANCESTOR_DEPTH = 3

_NEEDS_ESCAPE = re.compile(r"[\\>\x00-\x1f]")


def _escape_char(m: re.Match) -> str:
    c = m.group(0)
    if c in "\\>":
        return "\\" + c
    return f"\\x{ord(c):02x}"


def escape(text: str) -> str:
    return _NEEDS_ESCAPE.sub(_escape_char, text)


def escape_label(text: str) -> str:
    """Escape a label that is followed by a position; a trailing digit is escaped too."""
    if text[-1:].isdigit():
        return escape(text[:-1]) + "\\" + text[-1]
    return escape(text)


_UNESCAPE = re.compile(r"\\(x[0-9a-f]{2}|.)", re.S)


def unescape(text: str) -> str:
    def repl(m: re.Match) -> str:
        s = m.group(1)
        return chr(int(s[1:], 16)) if len(s) == 3 else s
    return _UNESCAPE.sub(repl, text)


@dataclass
class FeatureSet:
    """Multiset of structural terms for one snippet."""

    terms: Counter = field(default_factory=Counter)
    source_id: str | None = None

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: object) -> bool:
        return term in self.terms

    def __iter__(self):
        return iter(self.terms)

    def total(self) -> int:
        return sum(self.terms.values())

    def keys(self) -> frozenset[str]:
        return frozenset(self.terms)

    def subset(self, keep: Iterable[str]) -> "FeatureSet":
        return FeatureSet(Counter({t: self.terms[t] for t in keep if t in self.terms}),
                          self.source_id)

    @classmethod
    def from_terms(cls, terms: Iterable[str] | Mapping[str, int],
                   source_id: str | None = None) -> "FeatureSet":
        return cls(Counter(terms), source_id)


class Term(NamedTuple):
    kind: str  # token | parent | sibling | variable
    left: str  # unescaped
    left_pos: int | None
    right: str | None
    right_pos: int | None

    @property
    def anchor(self) -> str:
        """Leaf token a relation is attributed to (first leaf in traversal order)."""
        if self.kind == "token":
            return self.left
        if self.kind == "parent":
            return self.right
        if self.kind == "sibling":
            return self.left
        return VAR_TOKEN


def format_term(t: Term) -> str:
    if t.kind == "token":
        return escape(t.left)
    if t.kind == "parent":
        return f"{escape_label(t.left)}{t.left_pos}>{escape(t.right)}"
    if t.kind == "sibling":
        return f"{escape(t.left)}>>{escape(t.right)}"
    return f"{escape_label(t.left)}{t.left_pos}>>>{escape_label(t.right)}{t.right_pos}"


# An escape sequence is one unit, so "\\x00" followed by a position stays intact.
_LABEL_POS = re.compile(r"^((?:\\x[0-9a-f]{2}|\\[^x]|[^\\])+?)(\d+)$", re.S)


def _split_relation(term: str) -> list[str]:
    pieces: list[str] = []
    buf: list[str] = []
    i = 0
    n = len(term)
    while i < n:
        c = term[i]
        if c == "\\":
            buf.append(term[i:i + 2])
            i += 2
            continue
        if c == ">":
            j = i
            while j < n and term[j] == ">":
                j += 1
            pieces.append("".join(buf))
            pieces.append(">" * (j - i))
            buf = []
            i = j
            continue
        buf.append(c)
        i += 1
    pieces.append("".join(buf))
    return pieces


def _label_pos(text: str, term: str) -> tuple[str, int]:
    m = _LABEL_POS.match(text)
    if m is None:
        raise ValueError(f"malformed relation term {term!r}")
    return unescape(m.group(1)), int(m.group(2))


def parse_term(term: str) -> Term:
    """Parse a feature string back into its structured form.

    Raises ``ValueError`` for strings the extractor could never have emitted.
    """
    pieces = _split_relation(term)
    if len(pieces) == 1:
        if not term:
            raise ValueError("empty term")
        return Term("token", unescape(term), None, None, None)
    if len(pieces) != 3 or not pieces[0] or not pieces[2]:
        raise ValueError(f"malformed relation term {term!r}")
    left, rel, right = pieces
    if rel == ">":
        label, pos = _label_pos(left, term)
        return Term("parent", label, pos, unescape(right), None)
    if rel == ">>":
        return Term("sibling", unescape(left), None, unescape(right), None)
    if rel == ">>>":
        label, pos = _label_pos(left, term)
        rlabel, rpos = _label_pos(right, term)
        return Term("variable", label, pos, rlabel, rpos)
    raise ValueError(f"unknown relation {rel!r} in {term!r}")


def extract_features(spt: SimplifiedParseTree, source_id: str | None = None) -> FeatureSet:
    terms: Counter = Counter()
    labels = spt.labels
    leaves = spt.leaves()

    for tok in spt.signature:
        terms[escape(tok)] += 1

    for i in leaves:
        tok = escape(labels[i])
        terms[tok] += 1
        for depth, (anc, pos) in enumerate(spt.ancestors(i), 1):
            if depth > MAX_ANCESTOR_DEPTH:
                break
            terms[f"{escape_label(labels[anc])}{pos}>{tok}"] += 1

    for a, b in zip(leaves, leaves[1:]):
        terms[f"{escape(labels[a])}>>{escape(labels[b])}"] += 1

    last_use: dict[int, int] = {}
    for i in leaves:
        slot = spt.var_slots[i]
        if slot < 0 or spt.parents[i] < 0:
            continue
        prev = last_use.get(slot)
        if prev is not None:
            terms[f"{_context(spt, prev)}>>>{_context(spt, i)}"] += 1
        last_use[slot] = i

    return FeatureSet(terms, source_id)


def _context(spt: SimplifiedParseTree, i: int) -> str:
    return f"{escape_label(spt.labels[spt.parents[i]])}{spt.positions[i]}"

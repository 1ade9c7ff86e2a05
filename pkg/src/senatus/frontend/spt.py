"""Simplified parse trees.

Grammar frontends emit a *raw* concrete tree (``RawNode``/``RawLeaf``) plus the
set of names declared locally in the snippet. :func:`simplify` turns that into a
language-neutral :class:`SimplifiedParseTree`:

* keyword and punctuation tokens are folded into their parent's label, every
  non-token child is written as ``#`` (``return#;``, ``#.#``, ``#(#)``);
* subtrees with no leaves collapse into plain label text (``final``, ``<>``);
* unary chains whose label would be a bare ``#`` are skipped;
* identifiers that name a local variable become ``#VAR``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Union

VAR_TOKEN = "#VAR"

# Leaf kinds emitted by frontends.
IDENT = "ident"  # plain identifier, abstracted when it names a local
NAME = "name"  # method/field name after a dot; never abstracted
TYPE = "type"
LITERAL = "literal"
KEYWORD = "keyword"  # this, null, true, primitive types, ...


@dataclass(frozen=True)
class RawLeaf:
    token: str
    kind: str = IDENT


@dataclass
class RawNode:
    parts: list[Union[str, "RawNode", RawLeaf]] = field(default_factory=list)


@dataclass(frozen=True)
class SimplifiedParseTree:
    """Flat pre-order encoding of a simplified parse tree.

    Node ``i`` has label ``labels[i]`` (the surface token for leaves), parent
    ``parents[i]`` (``-1`` for the root, otherwise ``< i``) and 1-based
    ``positions[i]`` inside its parent's label. ``var_slots`` numbers local
    variables by first appearance so that renamings are invisible.
    """

    labels: tuple[str, ...]
    parents: tuple[int, ...]
    positions: tuple[int, ...]
    is_leaf: tuple[bool, ...]
    is_local: tuple[bool, ...]
    is_keyword: tuple[bool, ...]
    var_slots: tuple[int, ...]
    signature: tuple[str, ...] = ()
    language: str = ""

    def __len__(self) -> int:
        return len(self.labels)

    def leaves(self) -> list[int]:
        return [i for i, leaf in enumerate(self.is_leaf) if leaf]

    def leaf_tokens(self) -> list[str]:
        return [self.labels[i] for i in self.leaves()]

    def children(self, i: int) -> list[int]:
        return [j for j in range(i + 1, len(self.parents)) if self.parents[j] == i]

    def ancestors(self, i: int) -> Iterator[tuple[int, int]]:
        """Yield ``(ancestor, position of the path child inside it)`` upwards."""
        child = i
        parent = self.parents[i]
        while parent >= 0:
            yield parent, self.positions[child]
            child, parent = parent, self.parents[parent]

    def leaf_counts(self) -> Counter:
        """Occurrences of each leaf token, signature tokens included."""
        counts = Counter(self.leaf_tokens())
        counts.update(self.signature)
        return counts

    def check(self) -> None:
        """Raise ``ValueError`` unless the arrays describe one rooted tree."""
        n = len(self.labels)
        columns = (self.parents, self.positions, self.is_leaf, self.is_local,
                   self.is_keyword, self.var_slots)
        if any(len(c) != n for c in columns):
            raise ValueError("column length mismatch")
        if n == 0:
            return
        if self.parents[0] != -1:
            raise ValueError("node 0 must be the root")
        for i in range(1, n):
            p = self.parents[i]
            if not 0 <= p < i:
                raise ValueError(f"node {i} has invalid parent {p}")
            if self.is_leaf[p]:
                raise ValueError(f"leaf {p} has a child")
        for i in range(n):
            if self.is_local[i] and self.labels[i] != VAR_TOKEN:
                raise ValueError(f"local leaf {i} was not abstracted")


class _Node:
    __slots__ = ("parts",)

    def __init__(self, parts):
        self.parts = parts


class _Leaf:
    __slots__ = ("token", "kind", "local", "name")

    def __init__(self, token, kind, local, name):
        self.token = token
        self.kind = kind
        self.local = local
        self.name = name


def _convert(raw, locals_: frozenset[str]):
    if isinstance(raw, RawLeaf):
        local = raw.kind == IDENT and raw.token in locals_
        return _Leaf(VAR_TOKEN if local else raw.token, raw.kind, local, raw.token)
    parts = []
    for part in raw.parts:
        if isinstance(part, str):
            parts.append(part)
        else:
            parts.append(_convert(part, locals_))
    subtrees = [p for p in parts if not isinstance(p, str)]
    if not subtrees:
        return "".join(parts)
    if len(parts) == 1:
        return subtrees[0]
    return _Node(parts)


def simplify(raw: RawNode | RawLeaf, locals_: set[str] | frozenset[str] = frozenset(),
             signature: tuple[str, ...] = (), language: str = "") -> SimplifiedParseTree:
    root = _convert(raw, frozenset(locals_))
    labels: list[str] = []
    parents: list[int] = []
    positions: list[int] = []
    is_leaf: list[bool] = []
    is_local: list[bool] = []
    is_keyword: list[bool] = []
    var_slots: list[int] = []
    slots: dict[str, int] = {}

    def emit(label, parent, pos, leaf=False, local=False, keyword=False, slot=-1) -> int:
        labels.append(label)
        parents.append(parent)
        positions.append(pos)
        is_leaf.append(leaf)
        is_local.append(local)
        is_keyword.append(keyword)
        var_slots.append(slot)
        return len(labels) - 1

    # Iterative pre-order walk; deep expression chains overflow recursion otherwise.
    stack = [(root, -1, 0)]
    while stack:
        node, parent, pos = stack.pop()
        if isinstance(node, str):
            emit(node, parent, pos)
        elif isinstance(node, _Leaf):
            slot = slots.setdefault(node.name, len(slots)) if node.local else -1
            emit(node.token, parent, pos, leaf=True, local=node.local,
                 keyword=node.kind == KEYWORD, slot=slot)
        else:
            label = "".join(p if isinstance(p, str) else "#" for p in node.parts)
            me = emit(label, parent, pos)
            kids = [(p, me, k) for k, p in enumerate(node.parts, 1) if not isinstance(p, str)]
            stack.extend(reversed(kids))

    return SimplifiedParseTree(
        labels=tuple(labels),
        parents=tuple(parents),
        positions=tuple(positions),
        is_leaf=tuple(is_leaf),
        is_local=tuple(is_local),
        is_keyword=tuple(is_keyword),
        var_slots=tuple(var_slots),
        signature=tuple(signature),
        language=language,
    )

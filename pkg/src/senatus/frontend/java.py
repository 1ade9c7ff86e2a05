"""Java frontend backed by the tree-sitter Java grammar."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Iterator

import tree_sitter_java
from tree_sitter import Language, Node, Parser

from senatus.errors import ParseError
from senatus.frontend.spt import (
    IDENT,
    KEYWORD,
    LITERAL,
    NAME,
    TYPE,
    RawLeaf,
    RawNode,
    SimplifiedParseTree,
    simplify,
)

LANGUAGE = Language(tree_sitter_java.language())

_LITERALS = frozenset({
    "decimal_integer_literal", "hex_integer_literal", "octal_integer_literal",
    "binary_integer_literal", "decimal_floating_point_literal",
    "hex_floating_point_literal", "string_literal", "character_literal", "text_block",
})
_KEYWORD_LEAVES = frozenset({
    "this", "super", "true", "false", "null_literal", "void_type", "integral_type",
    "floating_point_type", "boolean_type",
})
_COMMENTS = frozenset({"line_comment", "block_comment"})
_METHODS = ("method_declaration", "constructor_declaration")

# (parent type, field) pairs whose identifier names a member rather than a variable.
_NAME_FIELDS = {
    ("method_invocation", "name"),
    ("field_access", "field"),
    ("method_reference", None),
    ("method_declaration", "name"),
    ("constructor_declaration", "name"),
    ("labeled_statement", None),
    ("break_statement", None),
    ("continue_statement", None),
    ("marker_annotation", "name"),
    ("annotation", "name"),
    ("element_value_pair", "key"),
}

# Wrappers: the snippet is tried as a class member first, then as a statement list.
_MEMBER_PREFIX = b"class __Snippet {\n"
_MEMBER_SUFFIX = b"\n}\n"
_BODY_PREFIX = b"class __Snippet { void __snippet() {\n"
_BODY_SUFFIX = b"\n} }\n"

_local = threading.local()


def _parser() -> Parser:
    # Parser objects are not safe to share between threads.
    p = getattr(_local, "parser", None)
    if p is None:
        p = _local.parser = Parser(LANGUAGE)
    return p


def parse_source(source: bytes):
    return _parser().parse(source)


def _first_error(node: Node) -> Node | None:
    if node.type == "ERROR" or node.is_missing:
        return node
    if not node.has_error:
        return None
    for child in node.children:
        found = _first_error(child)
        if found is not None:
            return found
    return node


def _declared_names(node: Node) -> set[str]:
    names: set[str] = set()
    stack = [node]
    while stack:
        n = stack.pop()
        t = n.type
        if t in ("variable_declarator", "formal_parameter", "catch_formal_parameter",
                 "enhanced_for_statement", "resource", "spread_parameter"):
            target = n.child_by_field_name("name")
            if target is None and t == "spread_parameter":
                target = next((c for c in n.children if c.type == "variable_declarator"), None)
                target = target.child_by_field_name("name") if target else None
            if target is not None and target.type == "identifier":
                names.add(target.text.decode("utf-8"))
        elif t == "lambda_expression":
            params = n.child_by_field_name("parameters")
            if params is not None:
                if params.type == "identifier":
                    names.add(params.text.decode("utf-8"))
                elif params.type == "inferred_parameters":
                    names.update(c.text.decode("utf-8") for c in params.children
                                 if c.type == "identifier")
        elif t in ("type_pattern", "record_pattern_component"):
            for c in n.children:
                if c.type == "identifier":
                    names.add(c.text.decode("utf-8"))
        stack.extend(n.children)
    return names


def _to_raw(node: Node) -> RawNode | RawLeaf | str | None:
    t = node.type
    if t in _COMMENTS:
        return None
    text = node.text.decode("utf-8", errors="replace")
    if t in _LITERALS:
        return RawLeaf(text, LITERAL)
    if t in _KEYWORD_LEAVES:
        return RawLeaf(text, KEYWORD)
    if t == "type_identifier":
        return RawLeaf(text, TYPE)
    if t == "identifier":
        return RawLeaf(text, IDENT)
    if node.child_count == 0:
        if node.is_named:
            return RawLeaf(text, KEYWORD)
        return text
    parts: list = []
    for i, child in enumerate(node.children):
        raw = _to_raw(child)
        if raw is None:
            continue
        if isinstance(raw, RawLeaf) and raw.kind == IDENT:
            field = node.field_name_for_child(i)
            if (t, field) in _NAME_FIELDS or (t, None) in _NAME_FIELDS:
                raw = RawLeaf(raw.token, NAME)
        parts.append(raw)
    return RawNode(parts)


def _signature(method: Node) -> tuple[str, ...]:
    toks: list[str] = []
    name = method.child_by_field_name("name")
    if name is not None:
        toks.append(name.text.decode("utf-8"))
    params = method.child_by_field_name("parameters")
    if params is not None:
        for p in params.children:
            if p.type in ("formal_parameter", "spread_parameter"):
                ty = p.child_by_field_name("type")
                if ty is None:
                    ty = next((c for c in p.children if c.is_named and c.type != "modifiers"), None)
                if ty is not None:
                    toks.append(ty.text.decode("utf-8"))
    return tuple(toks)


@dataclass(frozen=True)
class MethodSource:
    name: str
    text: str
    start_line: int  # 1-based
    end_line: int
    has_error: bool


def method_to_spt(method: Node, language: str = "java") -> SimplifiedParseTree:
    body = method.child_by_field_name("body")
    locals_ = _declared_names(method)
    if body is None:
        raw: RawNode | RawLeaf | str = RawNode([";"])
    else:
        raw = _to_raw(body)
    if isinstance(raw, str):
        raw = RawNode([raw])
    return simplify(raw, locals_, signature=_signature(method), language=language)


def _member_method(tree) -> Node | None:
    cls = tree.root_node.children[0] if tree.root_node.child_count else None
    body = cls.child_by_field_name("body") if cls is not None else None
    if body is None:
        return None
    members = [c for c in body.named_children if c.type not in _COMMENTS]
    if len(members) == 1 and members[0].type in _METHODS:
        return members[0]
    return None


def parse_java(text: str) -> SimplifiedParseTree:
    """Parse one Java method declaration or a bare sequence of statements."""
    src = text.encode("utf-8")
    tree = parse_source(_MEMBER_PREFIX + src + _MEMBER_SUFFIX)
    method = _member_method(tree)
    if method is not None and not tree.root_node.has_error:
        return method_to_spt(method)

    tree = parse_source(_BODY_PREFIX + src + _BODY_SUFFIX)
    if tree.root_node.has_error:
        err = _first_error(tree.root_node)
        row, col = err.start_point if err is not None else (1, 0)
        raise ParseError("invalid Java snippet", line=max(row, 1), column=col + 1)
    method = _member_method(tree)
    body = method.child_by_field_name("body")
    locals_ = _declared_names(body)
    raw = _to_raw(body)
    if isinstance(raw, str):
        raw = RawNode([raw])
    return simplify(raw, locals_, language="java")


def iter_methods(source: bytes) -> Iterator[MethodSource]:
    """Yield every method and constructor declared in a Java compilation unit."""
    tree = parse_source(source)
    stack = [tree.root_node]
    found: list[Node] = []
    while stack:
        n = stack.pop()
        if n.type in _METHODS:
            found.append(n)
        stack.extend(n.children)
    found.sort(key=lambda n: n.start_byte)
    for m in found:
        name = m.child_by_field_name("name")
        yield MethodSource(
            name=name.text.decode("utf-8") if name is not None else "<anonymous>",
            text=m.text.decode("utf-8", errors="replace"),
            start_line=m.start_point[0] + 1,
            end_line=m.end_point[0] + 1,
            has_error=m.has_error,
        )

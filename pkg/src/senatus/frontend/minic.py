"""A small C-like language used for hermetic tests and examples.

Grammar (informal)::

    unit     := function | stmt*
    function := type IDENT '(' [type IDENT {',' type IDENT}] ')' block
    stmt     := type IDENT ['=' expr] ';' | 'return' [expr] ';' | block
              | 'if' '(' expr ')' stmt ['else' stmt] | 'while' '(' expr ')' stmt
              | 'for' '(' (decl | [expr] ';') [expr] ';' [expr] ')' stmt
              | 'break' ';' | 'continue' ';' | expr ';'
    expr     := assignment with C precedence, calls, member access and indexing

Comments (``//`` and ``/* */``) are discarded by the lexer.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from senatus.errors import ParseError
from senatus.frontend.spt import (
    IDENT,
    KEYWORD,
    LITERAL,
    NAME,
    RawLeaf,
    RawNode,
    SimplifiedParseTree,
    simplify,
)

TYPES = frozenset({"int", "long", "float", "double", "char", "bool", "void", "string"})
KEYWORDS = TYPES | {"if", "else", "while", "for", "return", "break", "continue",
                    "true", "false", "null"}

_TOKEN = re.compile(r"""
    (?P<ws>\s+|//[^\n]*|/\*.*?\*/)
  | (?P<num>\d+(?:\.\d+)?)
  | (?P<str>"(?:[^"\\\n]|\\.)*"|'(?:[^'\\\n]|\\.)')
  | (?P<id>[A-Za-z_]\w*)
  | (?P<op>\+\+|--|->|&&|\|\||[=!<>+\-*/%&|^]=|<<|>>|[-+*/%=<>!&|^~?:;,.(){}\[\]])
""", re.X | re.S)

_BINARY = [
    ("||",), ("&&",), ("|",), ("^",), ("&",), ("==", "!="), ("<", ">", "<=", ">="),
    ("<<", ">>"), ("+", "-"), ("*", "/", "%"),
]
_ASSIGN = ("=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=")


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Tok]:
    toks: list[Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        s = m.group(0)
        if kind != "ws":
            if kind == "id" and s in KEYWORDS:
                kind = "kw"
            toks.append(Tok(kind, s, line, pos - line_start + 1))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rfind("\n") + 1
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - line_start + 1))
    return toks


class _Parser:
    def __init__(self, toks: list[Tok]):
        self.toks = toks
        self.i = 0
        self.locals: set[str] = set()

    # -- token helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        return self.tok.text in texts and self.tok.kind in ("op", "kw")

    def take(self) -> Tok:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> str:
        if not self.at(text):
            self.fail(f"expected {text!r}")
        return self.take().text

    def fail(self, msg: str):
        t = self.tok
        found = t.text or "end of input"
        raise ParseError(f"{msg}, found {found!r}", t.line, t.col)

    # -- declarations
    def at_decl(self) -> bool:
        return self.tok.kind == "kw" and self.tok.text in TYPES and self.peek().kind == "id"

    def type_leaf(self) -> RawLeaf:
        return RawLeaf(self.take().text, KEYWORD)

    def declared(self) -> RawLeaf:
        t = self.tok
        if t.kind != "id":
            self.fail("expected identifier")
        self.take()
        self.locals.add(t.text)
        return RawLeaf(t.text, IDENT)

    def unit(self) -> tuple[RawNode, tuple[str, ...]]:
        if self.at_decl() and self.peek(2).text == "(":
            self.take()  # return type
            name = self.take()
            self.expect("(")
            sig = [name.text]
            while not self.at(")"):
                if not (self.tok.kind == "kw" and self.tok.text in TYPES):
                    self.fail("expected parameter type")
                sig.append(self.take().text)
                self.declared()
                if not self.at(")"):
                    self.expect(",")
            self.expect(")")
            body = self.block()
            if self.tok.kind != "eof":
                self.fail("trailing input after function")
            return body, tuple(sig)
        parts: list = []
        while self.tok.kind != "eof":
            parts.append(self.stmt())
        return RawNode(parts), ()

    # -- statements
    def block(self) -> RawNode:
        parts: list = [self.expect("{")]
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail("unterminated block")
            parts.append(self.stmt())
        parts.append(self.take().text)
        return RawNode(parts)

    def decl(self) -> RawNode:
        parts: list = [self.type_leaf(), self.declared()]
        if self.at("="):
            parts += [self.take().text, self.expr()]
        parts.append(self.expect(";"))
        return RawNode(parts)

    def stmt(self):
        if self.at_decl():
            return self.decl()
        if self.at("{"):
            return self.block()
        if self.at("return"):
            parts: list = [self.take().text]
            if not self.at(";"):
                parts.append(self.expr())
            parts.append(self.expect(";"))
            return RawNode(parts)
        if self.at("break", "continue"):
            return RawNode([self.take().text, self.expect(";")])
        if self.at("if"):
            parts = [self.take().text, self.expect("("), self.expr(), self.expect(")"), self.stmt()]
            if self.at("else"):
                parts += [self.take().text, self.stmt()]
            return RawNode(parts)
        if self.at("while"):
            return RawNode([self.take().text, self.expect("("), self.expr(),
                            self.expect(")"), self.stmt()])
        if self.at("for"):
            parts = [self.take().text, self.expect("(")]
            if self.at_decl():
                parts.append(self.decl())
            else:
                if not self.at(";"):
                    parts.append(self.expr())
                parts.append(self.expect(";"))
            if not self.at(";"):
                parts.append(self.expr())
            parts.append(self.expect(";"))
            if not self.at(")"):
                parts.append(self.expr())
            parts += [self.expect(")"), self.stmt()]
            return RawNode(parts)
        if self.at(";"):
            return RawNode([self.take().text])
        return RawNode([self.expr(), self.expect(";")])

    # -- expressions
    def expr(self):
        lhs = self.binary(0)
        if self.at(*_ASSIGN):
            op = self.take().text
            return RawNode([lhs, op, self.expr()])
        if self.at("?"):
            q = self.take().text
            then = self.expr()
            colon = self.expect(":")
            return RawNode([lhs, q, then, colon, self.expr()])
        return lhs

    def binary(self, level: int):
        if level == len(_BINARY):
            return self.unary()
        lhs = self.binary(level + 1)
        while self.at(*_BINARY[level]):
            op = self.take().text
            lhs = RawNode([lhs, op, self.binary(level + 1)])
        return lhs

    def unary(self):
        if self.at("-", "+", "!", "~", "++", "--"):
            op = self.take().text
            return RawNode([op, self.unary()])
        return self.postfix()

    def postfix(self):
        node = self.primary()
        while True:
            if self.at("("):
                parts: list = [node, self.take().text]
                while not self.at(")"):
                    parts.append(self.expr())
                    if not self.at(")"):
                        parts.append(self.expect(","))
                parts.append(self.take().text)
                node = RawNode(parts)
            elif self.at(".", "->"):
                dot = self.take().text
                if self.tok.kind != "id":
                    self.fail("expected member name")
                node = RawNode([node, dot, RawLeaf(self.take().text, NAME)])
            elif self.at("["):
                node = RawNode([node, self.take().text, self.expr(), self.expect("]")])
            elif self.at("++", "--"):
                node = RawNode([node, self.take().text])
            else:
                return node

    def primary(self):
        t = self.tok
        if t.kind == "id":
            self.take()
            # Callee names stay visible unless shadowed by a local.
            if self.at("(") and t.text not in self.locals:
                return RawLeaf(t.text, NAME)
            return RawLeaf(t.text, IDENT)
        if t.kind in ("num", "str"):
            self.take()
            return RawLeaf(t.text, LITERAL)
        if t.kind == "kw" and t.text in ("true", "false", "null"):
            self.take()
            return RawLeaf(t.text, KEYWORD)
        if self.at("("):
            open_ = self.take().text
            inner = self.expr()
            return RawNode([open_, inner, self.expect(")")])
        self.fail("expected expression")


def parse_minic(text: str) -> SimplifiedParseTree:
    p = _Parser(tokenize(text))
    try:
        raw, sig = p.unit()
    except RecursionError:
        raise ParseError("nesting too deep") from None
    return simplify(raw, p.locals, signature=sig, language="minic")

"""Parsing and featurization of code snippets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from senatus.errors import ParseError, UnsupportedLanguage
from senatus.frontend.features import (
    FeatureSet,
    Term,
    extract_features,
    format_term,
    parse_term,
)
from senatus.frontend.spt import VAR_TOKEN, SimplifiedParseTree

__all__ = [
    "CodeSnippet",
    "FeatureSet",
    "ParseError",
    "SimplifiedParseTree",
    "Term",
    "UnsupportedLanguage",
    "VAR_TOKEN",
    "extract_features",
    "featurize",
    "format_term",
    "parse",
    "parse_term",
    "register_frontend",
    "supported_languages",
]


@dataclass(frozen=True)
class CodeSnippet:
    id: str
    language: str
    text: str
    origin: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("snippet id must be non-empty")
        if not self.text:
            raise ValueError(f"snippet {self.id!r} has empty text")


_FRONTENDS: dict[str, Callable[[str], SimplifiedParseTree]] = {}


def register_frontend(language: str, fn: Callable[[str], SimplifiedParseTree]) -> None:
    _FRONTENDS[language.lower()] = fn


def supported_languages() -> list[str]:
    return sorted(_FRONTENDS)


def parse(snippet: CodeSnippet) -> SimplifiedParseTree:
    fn = _FRONTENDS.get(snippet.language.lower())
    if fn is None:
        raise UnsupportedLanguage(f"no frontend for language {snippet.language!r}")
    return fn(snippet.text)


def featurize(snippet: CodeSnippet) -> tuple[SimplifiedParseTree, FeatureSet]:
    spt = parse(snippet)
    return spt, extract_features(spt, snippet.id)


def _register_builtin() -> None:
    from senatus.frontend.java import parse_java
    from senatus.frontend.minic import parse_minic

    register_frontend("java", parse_java)
    register_frontend("minic", parse_minic)


_register_builtin()

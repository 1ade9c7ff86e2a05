"""Corpus JSON-Lines I/O and method extraction from source trees."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

from senatus.errors import SchemaError
from senatus.frontend import CodeSnippet
from senatus.frontend.java import iter_methods

log = logging.getLogger(__name__)


@dataclass
class IngestReport:
    files: int = 0
    methods: int = 0
    skipped: int = 0
    warnings: list[str] = field(default_factory=list)


def snippet_to_json(s: CodeSnippet) -> str:
    d = {"id": s.id, "language": s.language, "code": s.text}
    if s.origin is not None:
        d["path"] = s.origin
    return json.dumps(d, ensure_ascii=False)


def write_corpus(fh: IO[str], snippets: Iterable[CodeSnippet]) -> int:
    n = 0
    for s in snippets:
        fh.write(snippet_to_json(s) + "\n")
        n += 1
    return n


def read_corpus(fh: IO[str]) -> Iterator[CodeSnippet]:
    """Parse ``{"id", "language", "code"[, "path"]}`` records, one per line."""
    for n, line in enumerate(fh, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise SchemaError(f"line {n}: {e}") from e
        if not isinstance(obj, dict):
            raise SchemaError(f"line {n}: expected an object")
        sid, lang, text = obj.get("id"), obj.get("language"), obj.get("code")
        origin = obj.get("path")
        if not all(isinstance(v, str) and v for v in (sid, lang, text)):
            raise SchemaError(f"line {n}: id, language and code must be non-empty strings")
        if origin is not None and not isinstance(origin, str):
            raise SchemaError(f"line {n}: path must be a string")
        yield CodeSnippet(sid, lang, text, origin)


def load_corpus(path: str | os.PathLike) -> list[CodeSnippet]:
    with open(path, encoding="utf-8") as fh:
        return list(read_corpus(fh))


def java_methods(path: Path, root: Path, report: IngestReport) -> Iterator[CodeSnippet]:
    rel = path.relative_to(root).as_posix() if path != root else path.name
    report.files += 1
    for m in iter_methods(path.read_bytes()):
        where = f"{rel}:{m.start_line}-{m.end_line}"
        if m.has_error:
            report.skipped += 1
            msg = f"{where}: syntax error in {m.name}, skipped"
            report.warnings.append(msg)
            log.warning(msg)
            continue
        report.methods += 1
        yield CodeSnippet(f"{rel}:{m.name}:{m.start_line}", "java", m.text, where)


def walk_java(src: str | os.PathLike, report: IngestReport | None = None) -> Iterator[CodeSnippet]:
    """Every method of every ``*.java`` file under ``src`` (a file or directory)."""
    report = report if report is not None else IngestReport()
    root = Path(src)
    if root.is_file():
        yield from java_methods(root, root, report)
        return
    if not root.is_dir():
        raise FileNotFoundError(f"{root} does not exist")
    for path in sorted(root.rglob("*.java")):
        if path.is_file():
            yield from java_methods(path, root, report)

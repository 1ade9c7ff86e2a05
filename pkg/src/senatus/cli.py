"""Command-line interface.

Exit codes: 0 success, 1 I/O error, 2 usage or validation error, 3 index error.
Option values resolve as flags > environment > config file > built-in defaults.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from senatus import __version__
from senatus.errors import (
    EmptyGroundtruth,
    EmptyQuery,
    IndexError_,
    InsufficientData,
    ParseError,
    SchemaError,
    UnsupportedLanguage,
)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("senatus")

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_INDEX = 0, 1, 2, 3

CONFIG_FILE = "senatus.toml"
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}

# Built-in defaults. B=50, R=2 gave the best retrieval quality per query
# millisecond in the original parameter sweep; K=100 with NSPF was the best
# selector setting there, and N=95 the best Mid-N band.
DEFAULTS: dict[str, Any] = {
    "scorer": "nspf",
    "selector": "topk",
    "k": 100,
    "n": 95.0,
    "bands": 50,
    "rows": 2,
    "seed": 42,
    "maxlength": 100,
    "topn": 100,
    "rerank": "containment",
    "vectors": "full",
    "language": "java",
    "threads": os.cpu_count() or 1,
    "log": "info",
}
ENV = {"threads": "SENATUS_THREADS", "log": "SENATUS_LOG"}
_TYPES = {"k": int, "n": float, "bands": int, "rows": int, "seed": int, "maxlength": int,
          "topn": int, "threads": int}


class UsageError(Exception):
    pass


@dataclass
class Resolved:
    values: dict[str, Any]
    sources: dict[str, str]

    def __getitem__(self, key: str) -> Any:
        return self.values[key]


def load_config_file(path: str | None) -> dict[str, Any]:
    p = Path(path) if path else Path(CONFIG_FILE)
    if not p.is_file():
        if path:
            raise UsageError(f"config file {path} not found")
        return {}
    try:
        data = tomllib.loads(p.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as e:
        raise UsageError(f"{p}: {e}") from e
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise UsageError(f"{p}: unknown keys {sorted(unknown)}")
    return data


def resolve(args: argparse.Namespace, keys: Sequence[str]) -> Resolved:
    file_cfg = load_config_file(getattr(args, "config", None))
    values, sources = {}, {}
    for key in keys:
        flag = getattr(args, key, None)
        env = os.environ.get(ENV[key]) if key in ENV else None
        if flag is not None:
            v, src = flag, "flag"
        elif env:
            v, src = env, "env"
        elif key in file_cfg:
            v, src = file_cfg[key], "file"
        else:
            v, src = DEFAULTS[key], "default"
        if key in _TYPES:
            try:
                v = _TYPES[key](v)
            except (TypeError, ValueError):
                raise UsageError(f"{key}={v!r} is not a valid {_TYPES[key].__name__}") from None
        values[key], sources[key] = v, src
    return Resolved(values, sources)


def _setup_logging(args: argparse.Namespace) -> None:
    level = args.log or os.environ.get("SENATUS_LOG") or DEFAULTS["log"]
    if level.lower() not in LOG_LEVELS:
        raise UsageError(f"unknown log level {level!r}")
    logging.basicConfig(stream=sys.stderr, level=LOG_LEVELS[level.lower()],
                        format="%(levelname)s %(name)s: %(message)s", force=True)


def _echo(command: str, cfg: Resolved) -> None:
    shown = {k: f"{v} ({cfg.sources[k]})" for k, v in cfg.values.items()}
    log.info("senatus %s %s: %s", __version__, command, json.dumps(shown, sort_keys=True))


def _open_out(path: str | None):
    if path in (None, "-"):
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", encoding="utf-8", newline="")


# ---------------------------------------------------------------------------
# commands


def cmd_ingest(args: argparse.Namespace) -> int:
    from senatus.frontend.ingest import IngestReport, load_corpus, walk_java, write_corpus

    _echo("ingest", Resolved({"src": args.src, "out": args.out}, {"src": "flag", "out": "flag"}))
    src = Path(args.src)
    report = IngestReport()
    if src.is_file() and src.suffix in (".jsonl", ".json"):
        snippets = load_corpus(src)
    else:
        snippets = walk_java(src, report)
    with _open_out(args.out) as fh:
        n = write_corpus(fh, snippets)
    print(f"ingested {n} snippets from {report.files or 1} file(s); "
          f"{report.skipped} parse failure(s)", file=sys.stderr)
    return EXIT_OK


def _selection(cfg: Resolved):
    from senatus.scoring import SelectionConfig

    return SelectionConfig(mode=cfg["selector"], k=cfg["k"], n=cfg["n"], scorer=cfg["scorer"])


def cmd_index(args: argparse.Namespace) -> int:
    from senatus.frontend.ingest import load_corpus
    from senatus.index import build_index
    from senatus.sketch import LshParams

    cfg = resolve(args, ["scorer", "selector", "k", "n", "bands", "rows", "seed", "maxlength",
                         "threads"])
    if cfg.sources["n"] == "flag" and cfg["selector"] != "midn":
        raise UsageError("--n only applies with --selector midn")
    if cfg["k"] < 1:
        raise UsageError("--k must be >= 1")
    if cfg["bands"] < 1 or cfg["rows"] < 1:
        raise UsageError("--bands and --rows must be >= 1")
    if not 0 < cfg["n"] <= 100:
        raise UsageError("--n must lie in (0, 100]")
    if cfg["selector"] != "none" and cfg["maxlength"] < cfg["k"]:
        raise UsageError("--maxlength must be >= --k")
    _echo("index", cfg)
    lsh = LshParams(cfg["bands"], cfg["rows"], cfg["seed"], cfg["maxlength"])
    snippets = load_corpus(args.corpus)
    index, report = build_index(snippets, lsh, _selection(cfg), threads=cfg["threads"])
    report.bytes = index.save(args.out_dir)
    for key in ("records_in", "parse_failures", "duplicate_ids", "dedup_dropped", "empty",
                "records_out", "vocabulary_size", "bytes"):
        print(f"{key}: {getattr(report, key)}")
    print(f"threshold: {report.threshold:.4f}")
    print(f"seed: {cfg['seed']}")
    return EXIT_OK


def _load_index(path: str):
    from senatus.index import load

    return load(path)


def cmd_query(args: argparse.Namespace) -> int:
    from senatus.frontend import CodeSnippet
    from senatus.search import query

    cfg = resolve(args, ["topn", "rerank", "vectors", "language"])
    if cfg["topn"] < 1:
        raise UsageError("--topn must be >= 1")
    _echo("query", cfg)
    index = _load_index(args.index_dir)
    if args.stdin:
        text, qid = sys.stdin.read(), "stdin"
    else:
        p = Path(args.file)
        text, qid = p.read_text(encoding="utf-8"), p.name
    if not text.strip():
        raise UsageError("query text is empty")
    snippet = CodeSnippet(qid, cfg["language"], text)
    resp = query(index, snippet, cfg["topn"], cfg["rerank"], args.exhaustive, cfg["vectors"])
    if resp.degraded:
        log.warning("query selection was empty; searched with all of its features")
    if args.json:
        print(json.dumps(resp.to_dict(), indent=2))
    else:
        print(f"{'rank':>4}  {'containment':>11}  {'jaccard':>7}  {'dot':>5}  id")
        for r in resp.results:
            print(f"{r.rank:>4}  {r.containment:>11.4f}  {r.jaccard:>7.4f}  {r.dot:>5}  {r.id}")
        print(f"candidates: {resp.candidate_count}", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    from senatus.eval.groundtruth import build_groundtruth, read_pairs
    from senatus.eval.metrics import evaluate
    from senatus.frontend.ingest import load_corpus

    cfg = resolve(args, ["seed", "rerank", "vectors", "threads"])
    k = args.k
    if k < 1:
        raise UsageError("--k must be >= 1")
    _echo("eval", cfg)
    index = _load_index(args.index_dir)
    with open(args.groundtruth, encoding="utf-8") as fh:
        clusters = build_groundtruth(read_pairs(fh), cfg["seed"])
    if not clusters:
        raise EmptyGroundtruth("groundtruth has no question with two or more snippets")
    corpus_path = args.corpus
    if corpus_path is None:
        raise UsageError("--corpus is required to look up query snippets")
    by_id = {s.id: s for s in load_corpus(corpus_path)}
    missing = [c.query_id for c in clusters if c.query_id not in by_id]
    if missing:
        raise SchemaError(f"query snippet {missing[0]!r} not found in {corpus_path}")
    report = evaluate(index, clusters, by_id, k, cfg["rerank"], args.exhaustive, cfg["vectors"],
                      cfg["threads"])
    if args.csv:
        with _open_out(args.csv) as fh:
            report.write_csv(fh)
    out = report.to_dict()
    out["seed"] = cfg["seed"]
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _lengths_from(path: str) -> list[int]:
    p = Path(path)
    if p.is_dir():
        return _load_index(path).full_lengths().tolist()
    from senatus.frontend import featurize
    from senatus.frontend.ingest import load_corpus

    out = []
    for s in load_corpus(p):
        try:
            out.append(len(featurize(s)[1]))
        except (ParseError, UnsupportedLanguage) as e:
            log.warning("skipping %s: %s", s.id, e)
    return out


def cmd_stats(args: argparse.Namespace) -> int:
    from senatus.eval.plots import plot_length_distribution
    from senatus.eval.powerlaw import length_distribution

    _echo("stats", Resolved({"input": args.input, "out": args.out},
                            {"input": "flag", "out": "flag"}))
    dist = length_distribution(_lengths_from(args.input))
    with _open_out(args.out) as fh:
        dist.write_csv(fh)
    plot = args.plot or (str(Path(args.out).with_suffix(".png")) if args.out not in (None, "-") else None)
    if plot:
        plot_length_distribution(dist, plot)
    print(json.dumps(dist.to_dict(), indent=2), file=sys.stderr)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    from senatus.eval.bench import scalability_bench, summarize, write_csv
    from senatus.eval.plots import plot_scalability
    from senatus.eval.synth import SkewedCorpus
    from senatus.sketch import LshParams

    cfg = resolve(args, ["scorer", "selector", "k", "n", "bands", "rows", "seed", "maxlength"])
    try:
        sizes = [int(s) for s in args.sizes.split(",")]
    except ValueError:
        raise UsageError(f"--sizes must be comma-separated integers, got {args.sizes!r}") from None
    if not sizes or min(sizes) < 2:
        raise UsageError("--sizes must be integers >= 2")
    _echo("bench", cfg)
    corpus = SkewedCorpus(n_snippets=max(sizes), seed=cfg["seed"])
    lsh = LshParams(cfg["bands"], cfg["rows"], cfg["seed"], cfg["maxlength"])
    rows = scalability_bench(sizes, args.queries, args.bf_queries, corpus, lsh, _selection(cfg))
    with _open_out(args.out) as fh:
        write_csv(rows, fh)
    plot = args.plot or (str(Path(args.out).with_suffix(".png")) if args.out not in (None, "-") else None)
    if plot:
        plot_scalability(rows, plot)
    print(json.dumps(summarize(rows), indent=2, default=str), file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_selection(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scorer", choices=["nspf", "ilf"],
                   help="term scorer (default nspf, the better of the two in the original study)")
    p.add_argument("--selector", choices=["topk", "midn", "none"],
                   help="feature selector; none disables selection and padding (default topk)")
    p.add_argument("--k", type=int, help="features kept per snippet (default 100)")
    p.add_argument("--n", type=float, help="Mid-N percentile band, midn only (default 95)")


def _add_lsh(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bands", type=int, help="LSH bands B (default 50)")
    p.add_argument("--rows", type=int, help="rows per band R (default 2; threshold (1/B)^(1/R))")
    p.add_argument("--seed", type=int, help="MinHash family seed (default 42)")
    p.add_argument("--maxlength", type=int, help="padded record length (default 100, >= K)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="senatus", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"senatus {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help=f"key = value overlay file (default ./{CONFIG_FILE} if present)")
    common.add_argument("--log", help="log level: error|warn|info|debug (env SENATUS_LOG, default info)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="extract methods into a corpus JSONL")
    p.add_argument("src", help="directory or .java file to walk, or an existing corpus .jsonl")
    p.add_argument("out", nargs="?", default="-", help="output JSONL (default stdout)")
    p.set_defaults(parser=p, fn=cmd_ingest)

    p = sub.add_parser("index", parents=[common], help="build an index directory from a corpus")
    p.add_argument("corpus")
    p.add_argument("out_dir")
    _add_selection(p)
    _add_lsh(p)
    p.add_argument("--threads", type=int, help="parser threads (env SENATUS_THREADS, default all cores)")
    p.set_defaults(parser=p, fn=cmd_index)

    p = sub.add_parser("query", parents=[common], help="recommend snippets similar to a query")
    p.add_argument("index_dir")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--file", help="file holding the query snippet")
    src.add_argument("--stdin", action="store_true", help="read the query from standard input")
    p.add_argument("--language", help="query language (default java)")
    p.add_argument("--topn", type=int, help="results to return (default 100, the @100 evaluation depth)")
    p.add_argument("--rerank", choices=["containment", "jaccard", "dot"],
                   help="exact rerank score (default containment)")
    p.add_argument("--vectors", choices=["full", "selected"],
                   help="feature vectors compared by the rerank (default full)")
    p.add_argument("--exhaustive", action="store_true", help="rerank the whole corpus, skip LSH")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(parser=p, fn=cmd_query)

    p = sub.add_parser("eval", parents=[common], help="P/R/F1@k against question groundtruth")
    p.add_argument("index_dir")
    p.add_argument("groundtruth", help='JSONL of {"question_id": ..., "snippet_id": ...}')
    p.add_argument("--corpus", help="corpus JSONL holding the query snippets")
    p.add_argument("--k", type=int, default=100, help="cutoff (default 100)")
    p.add_argument("--seed", type=int, help="query sampling seed (default 42)")
    p.add_argument("--rerank", choices=["containment", "jaccard", "dot"])
    p.add_argument("--vectors", choices=["full", "selected"])
    p.add_argument("--exhaustive", action="store_true", help="brute-force candidates")
    p.add_argument("--csv", help="per-query CSV output")
    p.add_argument("--threads", type=int, help="query threads (env SENATUS_THREADS)")
    p.set_defaults(parser=p, fn=cmd_eval)

    p = sub.add_parser("stats", parents=[common], help="feature-length histogram and power-law fit")
    p.add_argument("input", help="corpus JSONL or index directory")
    p.add_argument("--out", default="-", help="histogram CSV (default stdout)")
    p.add_argument("--plot", help="log-log PNG (default: next to --out)")
    p.set_defaults(parser=p, fn=cmd_stats)

    p = sub.add_parser("bench", parents=[common], help="scalability benchmark on synthetic corpora")
    p.add_argument("--sizes", default="1000,10000", help="comma-separated corpus sizes")
    p.add_argument("--queries", type=int, default=200, help="query pool size (default 200)")
    p.add_argument("--bf-queries", type=int, default=50,
                   help="queries also timed by linear scan (default 50)")
    _add_selection(p)
    _add_lsh(p)
    p.add_argument("--out", default="-", help="CSV of per-size, per-quartile rows")
    p.add_argument("--plot", help="PNG (default: next to --out)")
    p.set_defaults(parser=p, fn=cmd_bench)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _setup_logging(args)
        return args.fn(args)
    except UsageError as e:
        getattr(args, "parser", parser).error(str(e))  # exits 2
    except (SchemaError, EmptyGroundtruth, InsufficientData, ParseError, UnsupportedLanguage,
            EmptyQuery) as e:
        log.error("%s", e)
        return EXIT_USAGE
    except IndexError_ as e:
        log.error("index error: %s", e)
        return EXIT_INDEX
    except OSError as e:
        log.error("%s", e)
        return EXIT_IO
    except ValueError as e:
        log.error("%s", e)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

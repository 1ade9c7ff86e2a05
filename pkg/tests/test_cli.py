import json
import os
import subprocess
import sys

import pytest
from conftest import DATA
from javagen import java_families

from senatus.cli import DEFAULTS, build_parser, main, resolve
from senatus.eval import zipf_lengths
from senatus.eval.groundtruth import write_pairs
from senatus.frontend import FeatureSet
from senatus.frontend.ingest import load_corpus, write_corpus
from senatus.index import FeatureRecord, build_index_from_features
from senatus.scoring import SelectionConfig
from senatus.sketch import LshParams


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def usage_exit(capsys, *argv):
    with pytest.raises(SystemExit) as e:
        main(list(argv))
    return e.value.code, capsys.readouterr().err


@pytest.fixture(scope="module")
def small(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    snippets, pairs = java_families(120, family_size=6, seed=8)
    with open(root / "corpus.jsonl", "w") as fh:
        write_corpus(fh, snippets)
    with open(root / "gt.jsonl", "w") as fh:
        write_pairs(fh, pairs)
    assert main([ "index", str(root / "corpus.jsonl"), str(root / "ix"), "--log", "error"]) == 0
    return root, snippets


def test_ingest_fixture_tree(tmp_path, capsys):
    out = tmp_path / "c.jsonl"
    code, _, err = run(capsys, "ingest", str(DATA / "java"), str(out))
    assert code == 0
    records = load_corpus(out)
    assert len(records) == 7
    assert {r.id.split(":")[1] for r in records} == {"add", "get", "total", "Strings", "reverse",
                                                     "isBlank", "firstLine"}
    assert all(r.origin for r in records)
    first = json.loads(out.read_text().splitlines()[0])
    assert set(first) == {"id", "language", "code", "path"}
    assert "7 snippets" in err


def test_ingest_stdout_and_broken(capsys):
    code, out, err = run(capsys, "ingest", str(DATA / "java_broken"))
    assert code == 0
    assert len(out.splitlines()) == 1
    assert "1 parse failure" in err and "WARNING" in err


def test_ingest_empty_and_missing(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    code, out, _ = run(capsys, "ingest", str(tmp_path / "empty"))
    assert code == 0 and out == ""
    code, _, _ = run(capsys, "ingest", str(tmp_path / "nope"))
    assert code == 1


def test_index_defaults_echoed(small, tmp_path, capsys):
    root, _ = small
    code, out, err = run(capsys, "index", str(root / "corpus.jsonl"), str(tmp_path / "ix"))
    assert code == 0
    header = next(line for line in err.splitlines() if "senatus" in line and " index:" in line)
    cfg = json.loads(header.split(" index: ", 1)[1])
    for key, want in [("scorer", "nspf"), ("selector", "topk"), ("k", "100"), ("bands", "50"),
                      ("rows", "2"), ("seed", "42")]:
        assert cfg[key] == f"{want} (default)"
    assert "threshold: 0.1414" in out and "seed: 42" in out and "records_out: 120" in out
    assert (tmp_path / "ix" / "manifest.json").is_file()


def test_index_threshold_flag(small, tmp_path, capsys):
    root, _ = small
    code, out, _ = run(capsys, "index", str(root / "corpus.jsonl"), str(tmp_path / "ix"),
                       "--bands", "100", "--rows", "2", "--log", "error")
    assert code == 0 and "threshold: 0.1000" in out


@pytest.mark.parametrize("flags", [["--k", "0"], ["--n", "90"], ["--k", "200"],
                                   ["--selector", "topk", "--n", "50"], ["--bands", "0"]])
def test_index_invalid(small, tmp_path, capsys, flags):
    root, _ = small
    code, err = usage_exit(capsys, "index", str(root / "corpus.jsonl"), str(tmp_path / "ix"), *flags)
    assert code == 2 and "usage: senatus index" in err


def test_index_midn_ok(small, tmp_path, capsys):
    root, _ = small
    code, _, _ = run(capsys, "index", str(root / "corpus.jsonl"), str(tmp_path / "ix"),
                     "--selector", "midn", "--n", "90", "--scorer", "ilf", "--log", "error")
    assert code == 0


def test_index_bad_corpus(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id": "a"}\n')
    code, _, _ = run(capsys, "index", str(bad), str(tmp_path / "ix"), "--log", "error")
    assert code == 2
    code, _, _ = run(capsys, "index", str(tmp_path / "missing.jsonl"), str(tmp_path / "ix"),
                     "--log", "error")
    assert code == 1


def test_query_self_hit(small, tmp_path, capsys):
    root, snippets = small
    q = tmp_path / "q.java"
    q.write_text(snippets[13].text)
    code, out, _ = run(capsys, "query", str(root / "ix"), "--file", str(q), "--topn", "5")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split() == ["rank", "containment", "jaccard", "dot", "id"]
    first = lines[1].split()
    assert first[0] == "1" and first[-1] == snippets[13].id and first[2] == "1.0000"


def test_query_json(small, tmp_path, capsys, monkeypatch):
    root, snippets = small
    import io

    monkeypatch.setattr(sys, "stdin", io.StringIO(snippets[20].text))
    code, out, _ = run(capsys, "query", str(root / "ix"), "--stdin", "--json", "--topn", "3",
                       "--rerank", "jaccard")
    assert code == 0
    d = json.loads(out)
    assert set(d) == {"query_id", "results", "candidate_count", "timings_us"}
    assert set(d["results"][0]) == {"id", "containment", "jaccard", "dot", "rank"}
    assert d["results"][0]["id"] == snippets[20].id and len(d["results"]) <= 3


def test_query_errors(small, tmp_path, capsys):
    root, _ = small
    q = tmp_path / "q.java"
    q.write_text("int f( {")
    assert run(capsys, "query", str(tmp_path / "noindex"), "--file", str(q))[0] == 3
    assert run(capsys, "query", str(root / "ix"), "--file", str(q))[0] == 2
    assert run(capsys, "query", str(root / "ix"), "--file", str(tmp_path / "absent.java"))[0] == 1
    empty = tmp_path / "blank.java"
    empty.write_text("  \n")
    assert usage_exit(capsys, "query", str(root / "ix"), "--file", str(empty))[0] == 2


def test_query_corrupt_index(small, tmp_path, capsys):
    import shutil

    root, snippets = small
    ix = tmp_path / "ix"
    shutil.copytree(root / "ix", ix)
    band = ix / "buckets" / "band-0.bin"
    data = bytearray(band.read_bytes())
    data[-1] ^= 1
    band.write_bytes(bytes(data))
    q = tmp_path / "q.java"
    q.write_text(snippets[0].text)
    code, _, err = run(capsys, "query", str(ix), "--file", str(q))
    assert code == 3 and "checksum" in err


def test_eval_small(small, tmp_path, capsys):
    root, _ = small
    csv_path = tmp_path / "per_query.csv"
    code, out, _ = run(capsys, "eval", str(root / "ix"), str(root / "gt.jsonl"), "--corpus",
                       str(root / "corpus.jsonl"), "--k", "5", "--csv", str(csv_path),
                       "--log", "error")
    assert code == 0
    d = json.loads(out)
    assert d["n_queries"] == 20 and d["k"] == 5 and d["seed"] == 42
    assert 0 <= d["f1"] <= 1 and d["precision_strict"] <= d["precision"]
    assert len(csv_path.read_text().splitlines()) == 21


def test_eval_errors(small, tmp_path, capsys):
    root, _ = small
    empty = tmp_path / "gt.jsonl"
    empty.write_text("")
    args = ["eval", str(root / "ix"), str(empty), "--corpus", str(root / "corpus.jsonl")]
    assert run(capsys, *args)[0] == 2
    singletons = tmp_path / "single.jsonl"
    singletons.write_text('{"question_id": "a", "snippet_id": "j00000"}\n')
    args[2] = str(singletons)
    assert run(capsys, *args)[0] == 2
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"question": 1}\n')
    args[2] = str(bad)
    assert run(capsys, *args)[0] == 2
    assert usage_exit(capsys, "eval", str(root / "ix"), str(root / "gt.jsonl"))[0] == 2


@pytest.mark.slow
def test_eval_golden(tmp_path, capsys):
    from make_golden import GOLDEN, corpus

    golden = json.loads(GOLDEN.read_text())
    snippets, pairs = corpus()
    with open(tmp_path / "c.jsonl", "w") as fh:
        write_corpus(fh, snippets)
    with open(tmp_path / "gt.jsonl", "w") as fh:
        write_pairs(fh, pairs)
    assert main(["index", str(tmp_path / "c.jsonl"), str(tmp_path / "ix"), "--bands", "100",
                 "--rows", "2", "--log", "error"]) == 0
    capsys.readouterr()
    common = ["eval", str(tmp_path / "ix"), str(tmp_path / "gt.jsonl"), "--corpus",
              str(tmp_path / "c.jsonl"), "--k", str(golden["k"]), "--log", "error"]
    code, out, _ = run(capsys, *common, "--exhaustive")
    assert code == 0
    exact = json.loads(out)
    assert exact["n_queries"] == golden["n_queries"]
    for key in ("precision", "recall", "f1"):
        assert exact[key] == pytest.approx(golden[key], abs=1e-12)
    code, out, _ = run(capsys, *common)
    lsh = json.loads(out)
    # Selection can only help here; the LSH run must not fall short of the scan.
    assert lsh["f1"] >= golden["f1"] - 0.05
    assert lsh["candidates_mean"] < 5000


@pytest.fixture(scope="module")
def zipf_index(tmp_path_factory):
    path = tmp_path_factory.mktemp("zipf") / "ix"
    lengths = zipf_lengths(50000, 2.0, seed=3)
    recs = [FeatureRecord(f"z{i:06d}", FeatureSet.from_terms([f"t{i}.{j}" for j in range(int(n))]))
            for i, n in enumerate(lengths)]
    index, _ = build_index_from_features(recs, LshParams(bands=1, rows=1),
                                         SelectionConfig(mode="none"), created="fixture")
    index.save(path)
    return path


def test_stats_zipf(zipf_index, tmp_path, capsys):
    out = tmp_path / "hist.csv"
    code, _, err = run(capsys, "stats", str(zipf_index), "--out", str(out), "--log", "error")
    assert code == 0
    header = out.read_text().splitlines()[0]
    slope = float(header.split()[1].split("=")[1])
    assert abs(slope + 2) <= 0.2
    assert (tmp_path / "hist.png").read_bytes()[:4] == b"\x89PNG"
    assert json.loads(err)["power_law"] is True


def test_stats_corpus_and_errors(small, tmp_path, capsys):
    root, _ = small
    code, out, _ = run(capsys, "stats", str(root / "corpus.jsonl"), "--log", "error")
    assert code == 0 and out.splitlines()[1] == "length,count"
    few = tmp_path / "few.jsonl"
    few.write_text(json.dumps({"id": "a", "language": "java", "code": "int f() { return 1; }"}) + "\n")
    assert run(capsys, "stats", str(few), "--log", "error")[0] == 2


def test_bench_small(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    code, _, err = run(capsys, "bench", "--sizes", "200,400", "--queries", "20", "--bf-queries", "5",
                       "--out", str(out), "--log", "error")
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "corpus_size,quartile,method,queries,mean_comparisons,mean_time_s"
    rows = [line.split(",") for line in lines[1:]]
    for size in ("200", "400"):
        assert sorted(r[1] for r in rows if r[0] == size and r[2] == "lsh") == list("01234")
        assert [r[4] for r in rows if r[0] == size and r[2] == "brute_force" and r[1] == "0"] == [f"{size}.0"]
    assert (tmp_path / "bench.png").is_file()
    assert "median_speedup" in err
    assert usage_exit(capsys, "bench", "--sizes", "x")[0] == 2


def test_config_precedence(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "senatus.toml").write_text("k = 50\nbands = 20\nthreads = 2\nrows = 3\n")
    monkeypatch.setenv("SENATUS_THREADS", "3")
    args = build_parser().parse_args(["index", "c", "o", "--bands", "10"])
    cfg = resolve(args, ["k", "bands", "threads", "rows", "seed"])
    assert (cfg["bands"], cfg.sources["bands"]) == (10, "flag")
    assert (cfg["threads"], cfg.sources["threads"]) == (3, "env")
    assert (cfg["k"], cfg.sources["k"]) == (50, "file")
    assert (cfg["seed"], cfg.sources["seed"]) == (DEFAULTS["seed"], "default")
    monkeypatch.delenv("SENATUS_THREADS")
    assert resolve(args, ["threads"])["threads"] == 2


def test_config_errors(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "senatus.toml").write_text("colour = 'red'\n")
    assert usage_exit(capsys, "index", "c", "o")[0] == 2
    assert usage_exit(capsys, "index", "c", "o", "--config", str(tmp_path / "nope.toml"))[0] == 2
    (tmp_path / "senatus.toml").write_text("")
    monkeypatch.setenv("SENATUS_LOG", "loud")
    assert usage_exit(capsys, "index", "c", "o")[0] == 2


def test_help_mentions_defaults(capsys):
    for cmd in ("ingest", "index", "query", "eval", "stats", "bench"):
        with pytest.raises(SystemExit) as e:
            main([cmd, "--help"])
        assert e.value.code == 0
    text = capsys.readouterr().out
    assert "default 50" in text and "default 100" in text and "default 42" in text


def test_console_script(tmp_path):
    env = dict(os.environ, SENATUS_LOG="error")
    proc = subprocess.run([sys.executable, "-m", "senatus", "ingest", str(DATA / "java")],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 0 and len(proc.stdout.splitlines()) == 7
    proc = subprocess.run([sys.executable, "-m", "senatus", "--version"], capture_output=True, text=True)
    assert proc.stdout.strip().startswith("senatus ")

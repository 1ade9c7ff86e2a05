"""Corpus indexing and on-disk persistence.

Directory layout (all integers little-endian)::

    manifest.json        parameters, format version, corpus/vocabulary sizes
    vocab.tsv            header line, then ``term<TAB>term_id<TAB>frequency`` by term_id
    records.bin          b"SNRC", u32 version, u32 count, then per record
                         u32 payload length + payload (see ``_pack_record``)
    buckets/band-<j>.bin b"SNBK", u32 band, u32 n_keys, u32 n_members,
                         u64[n_keys] sorted digests, u32[n_keys + 1] offsets,
                         u32[n_members] record indices
    checksums.txt        ``<16 hex digits>  <relative path>`` per file

Records are stored sorted by id; a record index is its position in that order.
Term ids are dense and follow ascending term order, so comparing ids compares
the terms themselves.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import struct
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np

from senatus.errors import (
    CorruptIndex,
    EmptySelection,
    MissingComponent,
    ParseError,
    UnsupportedLanguage,
    VersionMismatch,
)
from senatus.frontend import CodeSnippet, FeatureSet, featurize
from senatus.scoring import ILF, NONE, CorpusTermStats, SelectionConfig, select, select_top_k, score_features
from senatus.sketch import (
    BAND_DIGEST_ALGORITHM,
    FINGERPRINT_ALGORITHM,
    LshParams,
    band_digests,
    fingerprint,
    minhash_many,
    sentinel,
)

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
_RECORDS_MAGIC = b"SNRC"
_BUCKET_MAGIC = b"SNBK"


def dedup_key(features: FeatureSet) -> str:
    """SHA-1 over the sorted ``term<TAB>count`` lines of a feature vector."""
    h = hashlib.sha1()
    for term in sorted(features.terms):
        h.update(f"{term}\t{features.terms[term]}\n".encode("utf-8"))
    return h.hexdigest()


def _created_now() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    ts = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return ts.replace(microsecond=0).isoformat()


@dataclass(frozen=True)
class IndexManifest:
    lsh: LshParams
    selection: SelectionConfig
    corpus_size: int
    vocabulary_size: int
    created: str
    padded: bool = True
    format_version: int = FORMAT_VERSION
    fingerprint: str = FINGERPRINT_ALGORITHM
    band_digest: str = BAND_DIGEST_ALGORITHM

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "lsh": self.lsh.to_dict(),
            "selection": self.selection.to_dict(),
            "padded": self.padded,
            "fingerprint": self.fingerprint,
            "band_digest": self.band_digest,
            "corpus_size": self.corpus_size,
            "vocabulary_size": self.vocabulary_size,
            "created": self.created,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "IndexManifest":
        version = d.get("format_version")
        if version != FORMAT_VERSION:
            raise VersionMismatch(f"index format {version!r}, this build reads {FORMAT_VERSION}")
        try:
            if d["fingerprint"] != FINGERPRINT_ALGORITHM or d["band_digest"] != BAND_DIGEST_ALGORITHM:
                raise VersionMismatch("index was hashed with a different algorithm")
            return cls(
                lsh=LshParams(**d["lsh"]),
                selection=SelectionConfig(**d["selection"]),
                corpus_size=int(d["corpus_size"]),
                vocabulary_size=int(d["vocabulary_size"]),
                created=str(d["created"]),
                padded=bool(d["padded"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise CorruptIndex(f"bad manifest: {e}") from e


@dataclass
class BandTable:
    """Buckets of one band: sorted digests, CSR offsets and member record indices."""

    digests: np.ndarray
    offsets: np.ndarray
    members: np.ndarray

    @classmethod
    def from_digests(cls, per_record: np.ndarray) -> "BandTable":
        n = len(per_record)
        order = np.lexsort((np.arange(n), per_record))
        sorted_d = per_record[order]
        keys, starts = np.unique(sorted_d, return_index=True)
        offsets = np.append(starts, n).astype(np.uint32)
        return cls(keys.astype(np.uint64), offsets, order.astype(np.uint32))

    def lookup(self, digest: int | np.uint64) -> np.ndarray:
        i = np.searchsorted(self.digests, np.uint64(digest))
        if i < len(self.digests) and self.digests[i] == np.uint64(digest):
            return self.members[self.offsets[i]:self.offsets[i + 1]]
        return self.members[:0]

    def __len__(self) -> int:
        return len(self.digests)


class StoredRecord(NamedTuple):
    id: str
    full: dict[int, int]  # term id -> count
    selected: tuple[int, ...]
    origin: str | None


class FeatureRecord(NamedTuple):
    """Input to :func:`build_index_from_features`."""

    id: str
    features: FeatureSet
    leaf_counts: Mapping[str, int] | None = None
    origin: str | None = None


@dataclass
class BuildReport:
    records_in: int = 0
    parse_failures: int = 0
    empty: int = 0
    duplicate_ids: int = 0
    dedup_dropped: int = 0
    records_out: int = 0
    vocabulary_size: int = 0
    threshold: float = 0.0
    bytes: int | None = None
    failures: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "failures"}
        d["failures"] = self.failures[:20]
        return d


class LshIndex:
    """An immutable, loaded index."""

    def __init__(self, manifest: IndexManifest, vocab: list[str], frequencies: np.ndarray,
                 ids: list[str], origins: list[str | None],
                 full_indptr: np.ndarray, full_terms: np.ndarray, full_counts: np.ndarray,
                 sel_indptr: np.ndarray, sel_terms: np.ndarray, tables: list[BandTable]):
        self.manifest = manifest
        self.vocab = vocab
        self.frequencies = frequencies
        self.ids = ids
        self.origins = origins
        self.full_indptr = full_indptr
        self.full_terms = full_terms
        self.full_counts = full_counts
        self.sel_indptr = sel_indptr
        self.sel_terms = sel_terms
        self.tables = tables
        self._term_to_id: dict[str, int] | None = None
        self._stats: CorpusTermStats | None = None
        self._id_to_index: dict[str, int] | None = None

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def lsh(self) -> LshParams:
        return self.manifest.lsh

    @property
    def selection(self) -> SelectionConfig:
        return self.manifest.selection

    @property
    def term_to_id(self) -> dict[str, int]:
        if self._term_to_id is None:
            self._term_to_id = {t: i for i, t in enumerate(self.vocab)}
        return self._term_to_id

    @property
    def id_to_index(self) -> dict[str, int]:
        if self._id_to_index is None:
            self._id_to_index = {s: i for i, s in enumerate(self.ids)}
        return self._id_to_index

    @property
    def stats(self) -> CorpusTermStats:
        if self._stats is None:
            self._stats = CorpusTermStats(dict(zip(self.vocab, self.frequencies.tolist())), len(self.ids))
        return self._stats

    def record(self, i: int) -> StoredRecord:
        a, b = self.full_indptr[i], self.full_indptr[i + 1]
        s, e = self.sel_indptr[i], self.sel_indptr[i + 1]
        return StoredRecord(
            self.ids[i],
            dict(zip(self.full_terms[a:b].tolist(), self.full_counts[a:b].tolist())),
            tuple(self.sel_terms[s:e].tolist()),
            self.origins[i],
        )

    def full_features(self, i: int) -> FeatureSet:
        rec = self.record(i)
        return FeatureSet(Counter({self.vocab[t]: c for t, c in rec.full.items()}), rec.id)

    def selected_features(self, i: int) -> FeatureSet:
        rec = self.record(i)
        return FeatureSet(Counter({self.vocab[t]: rec.full[t] for t in rec.selected}), rec.id)

    def full_lengths(self) -> np.ndarray:
        return np.diff(self.full_indptr)

    def probe(self, digests: np.ndarray) -> np.ndarray:
        """Union of the buckets hit by a query's band digests (sorted record indices)."""
        hits = [table.lookup(d) for table, d in zip(self.tables, digests)]
        hits = [h for h in hits if len(h)]
        if not hits:
            return np.empty(0, dtype=np.uint32)
        return np.unique(np.concatenate(hits))

    def save(self, directory: str | os.PathLike) -> int:
        return save(self, directory)

    @classmethod
    def load(cls, directory: str | os.PathLike) -> "LshIndex":
        return load(directory)


# ---------------------------------------------------------------------------
# building


def featurize_corpus(snippets: Iterable[CodeSnippet], report: BuildReport,
                     keep_leaf_counts: bool = False, threads: int = 1) -> Iterator[FeatureRecord]:
    """Parse and featurize snippets, logging and skipping the ones that fail."""

    def work(snippet: CodeSnippet):
        try:
            spt, fs = featurize(snippet)
        except (ParseError, UnsupportedLanguage) as e:
            return snippet, e
        counts = spt.leaf_counts() if keep_leaf_counts else None
        return snippet, FeatureRecord(snippet.id, fs, counts, snippet.origin)

    def results():
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                yield from pool.map(work, snippets)
        else:
            yield from map(work, snippets)

    for snippet, out in results():
        report.records_in += 1
        if isinstance(out, Exception):
            report.parse_failures += 1
            report.failures.append(f"{snippet.id}: {out}")
            log.warning("skipping %s: %s", snippet.id, out)
            continue
        yield out


def build_index(snippets: Iterable[CodeSnippet], lsh: LshParams = LshParams(),
                selection: SelectionConfig = SelectionConfig(), threads: int = 1,
                created: str | None = None) -> tuple[LshIndex, BuildReport]:
    report = BuildReport()
    records = featurize_corpus(snippets, report, keep_leaf_counts=selection.scorer == ILF,
                               threads=threads)
    return build_index_from_features(records, lsh, selection, created=created, report=report,
                                     count_inputs=False)


def build_index_from_features(records: Iterable[FeatureRecord], lsh: LshParams = LshParams(),
                              selection: SelectionConfig = SelectionConfig(),
                              created: str | None = None, report: BuildReport | None = None,
                              count_inputs: bool = True) -> tuple[LshIndex, BuildReport]:
    """Two-pass build: corpus statistics first, then select, pad, sketch and bucket."""
    report = report or BuildReport()
    padded = selection.mode != NONE
    if padded and lsh.maxlength < selection.k:
        raise ValueError(f"maxlength={lsh.maxlength} is smaller than K={selection.k}")

    # Pass 1: dedup and provisional term ids.
    seen_ids: set[str] = set()
    seen_keys: set[str] = set()
    provisional: dict[str, int] = {}
    kept: list[tuple[str, np.ndarray, np.ndarray, Mapping | None, str | None]] = []
    for rec in records:
        if count_inputs:
            report.records_in += 1
        if rec.id in seen_ids:
            report.duplicate_ids += 1
            log.warning("duplicate snippet id %s ignored", rec.id)
            continue
        seen_ids.add(rec.id)
        if not len(rec.features):
            report.empty += 1
            continue
        key = dedup_key(rec.features)
        if key in seen_keys:
            report.dedup_dropped += 1
            continue
        seen_keys.add(key)
        pids = np.fromiter((provisional.setdefault(t, len(provisional)) for t in rec.features.terms),
                           dtype=np.int64, count=len(rec.features))
        counts = np.fromiter(rec.features.terms.values(), dtype=np.int64, count=len(rec.features))
        kept.append((rec.id, pids, counts, rec.leaf_counts, rec.origin))
    del seen_ids, seen_keys

    kept.sort(key=lambda r: r[0])
    vocab = sorted(provisional)
    remap = np.empty(len(provisional), dtype=np.int64)
    for tid, term in enumerate(vocab):
        remap[provisional[term]] = tid
    del provisional

    freq = np.zeros(len(vocab), dtype=np.uint64)
    full_indptr = np.zeros(len(kept) + 1, dtype=np.uint64)
    full_terms_parts, full_counts_parts = [], []
    for i, (_, pids, counts, _, _) in enumerate(kept):
        tids = remap[pids]
        order = np.argsort(tids)
        tids, counts = tids[order], counts[order]
        np.add.at(freq, tids, counts.astype(np.uint64))
        full_terms_parts.append(tids.astype(np.uint32))
        full_counts_parts.append(counts.astype(np.uint32))
        full_indptr[i + 1] = full_indptr[i] + len(tids)
    full_terms = np.concatenate(full_terms_parts) if kept else np.empty(0, np.uint32)
    full_counts = np.concatenate(full_counts_parts) if kept else np.empty(0, np.uint32)
    del full_terms_parts, full_counts_parts

    stats = CorpusTermStats(dict(zip(vocab, freq.tolist())), len(kept))
    term_to_id = {t: i for i, t in enumerate(vocab)}
    vocab_fp = np.fromiter((fingerprint(t) for t in vocab), dtype=np.uint64, count=len(vocab))

    # Pass 2: select, pad, sketch.
    sel_indptr = np.zeros(len(kept) + 1, dtype=np.uint64)
    sel_parts: list[np.ndarray] = []
    sketch_inputs: list[np.ndarray] = []
    for i, (rid, _, _, leaf_counts, _) in enumerate(kept):
        a, b = full_indptr[i], full_indptr[i + 1]
        tids = full_terms[a:b]
        fs = FeatureSet(Counter(dict(zip((vocab[t] for t in tids.tolist()),
                                         full_counts[a:b].tolist()))), rid)
        chosen = select_record(fs, selection, stats, leaf_counts)
        sel = np.sort(np.fromiter((term_to_id[t] for t in chosen.terms), dtype=np.uint32,
                                  count=len(chosen)))
        sel_parts.append(sel)
        sel_indptr[i + 1] = sel_indptr[i] + len(sel)
        ids = vocab_fp[sel]
        if padded and len(sel) < lsh.maxlength:
            pad_ids = np.fromiter((fingerprint(sentinel(rid, k)) for k in range(lsh.maxlength - len(sel))),
                                  dtype=np.uint64)
            ids = np.concatenate([ids, pad_ids])
        sketch_inputs.append(ids)
    sel_terms = np.concatenate(sel_parts) if sel_parts else np.empty(0, np.uint32)

    if kept:
        sigs = minhash_many(sketch_inputs, lsh)
        digests = band_digests(sigs, lsh)
    else:
        digests = np.empty((0, lsh.bands), dtype=np.uint64)
    del sketch_inputs
    tables = [BandTable.from_digests(np.ascontiguousarray(digests[:, j])) for j in range(lsh.bands)]

    manifest = IndexManifest(lsh=lsh, selection=selection, corpus_size=len(kept),
                             vocabulary_size=len(vocab), created=created or _created_now(),
                             padded=padded)
    index = LshIndex(manifest, vocab, freq, [r[0] for r in kept], [r[4] for r in kept],
                     full_indptr, full_terms, full_counts, sel_indptr, sel_terms, tables)
    index._term_to_id = term_to_id
    index._stats = stats
    report.records_out = len(kept)
    report.vocabulary_size = len(vocab)
    report.threshold = lsh.threshold
    log.info("indexed %d records (%d duplicates dropped), vocabulary %d",
             report.records_out, report.dedup_dropped, report.vocabulary_size)
    return index, report


def select_record(fs: FeatureSet, selection: SelectionConfig, stats: CorpusTermStats,
                  leaf_counts: Mapping[str, int] | None) -> FeatureSet:
    """Selection with the empty-band fallback to Top-K used for corpus records."""
    try:
        return select(fs, selection, stats, leaf_counts)
    except EmptySelection:
        scored = score_features(fs, selection.scorer, stats, leaf_counts)
        return select_top_k(scored, selection.k)


# ---------------------------------------------------------------------------
# persistence


def _checksum(data: bytes) -> str:
    return hashlib.blake2b(data, digest_size=8).hexdigest()


def _pack_str(s: str | None) -> bytes:
    b = (s or "").encode("utf-8")
    return struct.pack("<H", len(b)) + b


def _pack_record(index: LshIndex, i: int) -> bytes:
    """id (u16 len + utf8), origin (u16 len + utf8, empty = none),
    u32 n_full, u32[n_full] term ids, u32[n_full] counts, u32 n_sel, u32[n_sel] term ids."""
    a, b = int(index.full_indptr[i]), int(index.full_indptr[i + 1])
    s, e = int(index.sel_indptr[i]), int(index.sel_indptr[i + 1])
    return b"".join([
        _pack_str(index.ids[i]),
        _pack_str(index.origins[i]),
        struct.pack("<I", b - a),
        index.full_terms[a:b].astype("<u4").tobytes(),
        index.full_counts[a:b].astype("<u4").tobytes(),
        struct.pack("<I", e - s),
        index.sel_terms[s:e].astype("<u4").tobytes(),
    ])


def _escape_tsv(term: str) -> str:
    # Terms never hold raw control characters, but be strict about the delimiters.
    return term.replace("\t", "\\x09").replace("\n", "\\x0a")


def save(index: LshIndex, directory: str | os.PathLike) -> int:
    """Write ``index`` to ``directory``; returns the total number of bytes written."""
    root = Path(directory)
    (root / "buckets").mkdir(parents=True, exist_ok=True)
    files: dict[str, bytes] = {}

    files["manifest.json"] = (json.dumps(index.manifest.to_dict(), indent=2, sort_keys=True)
                              + "\n").encode("utf-8")

    lines = ["term\tterm_id\tfrequency\n"]
    lines.extend(f"{_escape_tsv(t)}\t{i}\t{int(f)}\n"
                 for i, (t, f) in enumerate(zip(index.vocab, index.frequencies.tolist())))
    files["vocab.tsv"] = "".join(lines).encode("utf-8")

    chunks = [_RECORDS_MAGIC, struct.pack("<II", FORMAT_VERSION, len(index))]
    for i in range(len(index)):
        payload = _pack_record(index, i)
        chunks.append(struct.pack("<I", len(payload)))
        chunks.append(payload)
    files["records.bin"] = b"".join(chunks)

    for j, table in enumerate(index.tables):
        files[f"buckets/band-{j}.bin"] = b"".join([
            _BUCKET_MAGIC,
            struct.pack("<III", j, len(table.digests), len(table.members)),
            table.digests.astype("<u8").tobytes(),
            table.offsets.astype("<u4").tobytes(),
            table.members.astype("<u4").tobytes(),
        ])

    for name, data in files.items():
        (root / name).write_bytes(data)
    sums = "".join(f"{_checksum(files[name])}  {name}\n" for name in sorted(files))
    (root / "checksums.txt").write_text(sums, encoding="utf-8")
    return sum(len(d) for d in files.values()) + len(sums)


def _read(root: Path, name: str) -> bytes:
    path = root / name
    if not path.is_file():
        raise MissingComponent(f"{name} missing from {root}")
    return path.read_bytes()


def load(directory: str | os.PathLike) -> LshIndex:
    root = Path(directory)
    if not root.is_dir():
        raise MissingComponent(f"{root} is not an index directory")
    raw_manifest = _read(root, "manifest.json")
    try:
        manifest_dict = json.loads(raw_manifest.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CorruptIndex(f"manifest.json unreadable: {e}") from e
    manifest = IndexManifest.from_dict(manifest_dict)

    expected = {}
    for line in _read(root, "checksums.txt").decode("utf-8").splitlines():
        digest, _, name = line.partition("  ")
        expected[name] = digest
    required = ["manifest.json", "vocab.tsv", "records.bin"] + [
        f"buckets/band-{j}.bin" for j in range(manifest.lsh.bands)]
    blobs: dict[str, bytes] = {"manifest.json": raw_manifest}
    for name in required:
        if name not in expected:
            raise MissingComponent(f"{name} not listed in checksums.txt")
        data = blobs.get(name) or _read(root, name)
        if _checksum(data) != expected[name]:
            raise CorruptIndex(f"checksum mismatch for {name}")
        blobs[name] = data

    try:
        vocab, freq = _parse_vocab(blobs["vocab.tsv"])
        ids, origins, full, sel = _parse_records(blobs["records.bin"])
        tables = [_parse_band(blobs[f"buckets/band-{j}.bin"], j) for j in range(manifest.lsh.bands)]
    except (struct.error, ValueError, IndexError, UnicodeDecodeError) as e:
        raise CorruptIndex(str(e)) from e
    if len(ids) != manifest.corpus_size or len(vocab) != manifest.vocabulary_size:
        raise CorruptIndex("manifest sizes disagree with stored data")
    return LshIndex(manifest, vocab, freq, ids, origins, *full, *sel, tables)


def _parse_vocab(data: bytes) -> tuple[list[str], np.ndarray]:
    lines = data.decode("utf-8").split("\n")
    if lines[0] != "term\tterm_id\tfrequency":
        raise ValueError("vocab.tsv header missing")
    vocab, freq = [], []
    for n, line in enumerate(lines[1:]):
        if not line:
            continue
        term, tid, f = line.split("\t")
        if int(tid) != n:
            raise ValueError("vocab.tsv is not sorted by term id")
        vocab.append(term.replace("\\x09", "\t").replace("\\x0a", "\n"))
        freq.append(int(f))
    return vocab, np.array(freq, dtype=np.uint64)


def _parse_records(data: bytes):
    if data[:4] != _RECORDS_MAGIC:
        raise ValueError("records.bin: bad magic")
    version, count = struct.unpack_from("<II", data, 4)
    if version != FORMAT_VERSION:
        raise ValueError("records.bin: version mismatch")
    pos = 12
    ids, origins = [], []
    full_indptr = np.zeros(count + 1, dtype=np.uint64)
    sel_indptr = np.zeros(count + 1, dtype=np.uint64)
    ft, fc, st = [], [], []

    def read_str(p):
        (n,) = struct.unpack_from("<H", data, p)
        return data[p + 2:p + 2 + n].decode("utf-8"), p + 2 + n

    for i in range(count):
        (length,) = struct.unpack_from("<I", data, pos)
        end = pos + 4 + length
        p = pos + 4
        rid, p = read_str(p)
        origin, p = read_str(p)
        (nf,) = struct.unpack_from("<I", data, p)
        p += 4
        ft.append(np.frombuffer(data, "<u4", nf, p))
        fc.append(np.frombuffer(data, "<u4", nf, p + 4 * nf))
        p += 8 * nf
        (ns,) = struct.unpack_from("<I", data, p)
        p += 4
        st.append(np.frombuffer(data, "<u4", ns, p))
        p += 4 * ns
        if p != end:
            raise ValueError(f"records.bin: record {i} length mismatch")
        ids.append(rid)
        origins.append(origin or None)
        full_indptr[i + 1] = full_indptr[i] + nf
        sel_indptr[i + 1] = sel_indptr[i] + ns
        pos = end
    if pos != len(data):
        raise ValueError("records.bin: trailing bytes")

    def cat(parts):
        return np.concatenate(parts).astype(np.uint32) if parts else np.empty(0, np.uint32)

    return ids, origins, (full_indptr, cat(ft), cat(fc)), (sel_indptr, cat(st))


def _parse_band(data: bytes, j: int) -> BandTable:
    if data[:4] != _BUCKET_MAGIC:
        raise ValueError(f"band {j}: bad magic")
    band, n_keys, n_members = struct.unpack_from("<III", data, 4)
    if band != j:
        raise ValueError(f"band file {j} holds band {band}")
    p = 16
    digests = np.frombuffer(data, "<u8", n_keys, p).astype(np.uint64)
    p += 8 * n_keys
    offsets = np.frombuffer(data, "<u4", n_keys + 1, p).astype(np.uint32)
    p += 4 * (n_keys + 1)
    members = np.frombuffer(data, "<u4", n_members, p).astype(np.uint32)
    p += 4 * n_members
    if p != len(data):
        raise ValueError(f"band {j}: size mismatch")
    return BandTable(digests, offsets, members)

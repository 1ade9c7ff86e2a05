"""MinHash signatures, asymmetric padding and LSH banding.

Terms are mapped to 64-bit ids with an unkeyed 8-byte BLAKE2b digest, which is
stable across platforms and Python versions. Slot ``i`` of a signature is
``min over ids x of fmix64(a_i * x + b_i)`` (arithmetic mod 2**64) where the
odd multipliers ``a_i`` and offsets ``b_i`` come from a splitmix64 stream
seeded by ``LshParams.seed``. The murmur3 finalizer turns the affine map into a
well-mixed bijection, so each slot behaves like an independent permutation.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from senatus.errors import EmptyFeatureSet, OversizeInput
from senatus.frontend.features import FeatureSet

FINGERPRINT_ALGORITHM = "blake2b-64-le"
BAND_DIGEST_ALGORITHM = "fmix64-chain-v1"

_MASK = (1 << 64) - 1
_C1 = np.uint64(0xFF51AFD7ED558CCD)
_C2 = np.uint64(0xC4CEB9FE1A85EC53)
_GOLDEN = 0x9E3779B97F4A7C15
_S33 = np.uint64(33)


@dataclass(frozen=True)
class LshParams:
    bands: int = 50
    rows: int = 2
    seed: int = 42
    maxlength: int = 100

    def __post_init__(self):
        if self.bands < 1 or self.rows < 1:
            raise ValueError("bands and rows must be >= 1")
        if self.maxlength < 1:
            raise ValueError("maxlength must be >= 1")

    @property
    def num_perm(self) -> int:
        return self.bands * self.rows

    @property
    def threshold(self) -> float:
        return lsh_threshold(self.bands, self.rows)

    def to_dict(self) -> dict:
        return {"bands": self.bands, "rows": self.rows, "seed": self.seed,
                "maxlength": self.maxlength}


@dataclass(frozen=True)
class MinHashSignature:
    values: np.ndarray  # uint64, length bands * rows
    seed: int

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        return (isinstance(other, MinHashSignature) and self.seed == other.seed
                and np.array_equal(self.values, other.values))

    __hash__ = None


@dataclass(frozen=True)
class BandKey:
    band: int
    digest: int


def fingerprint(term: str) -> int:
    return int.from_bytes(hashlib.blake2b(term.encode("utf-8"), digest_size=8).digest(), "little")


def fingerprints(terms: Iterable[str]) -> np.ndarray:
    return np.fromiter((fingerprint(t) for t in terms), dtype=np.uint64)


def _fmix64(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> _S33)
    x = x * _C1
    x = x ^ (x >> _S33)
    x = x * _C2
    return x ^ (x >> _S33)


def _splitmix64(seed: int, n: int) -> list[int]:
    out = []
    state = seed & _MASK
    for _ in range(n):
        state = (state + _GOLDEN) & _MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        out.append(z ^ (z >> 31))
    return out


@lru_cache(maxsize=32)
def hash_family(seed: int, num_perm: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-slot ``(multipliers, offsets)``; multipliers are odd."""
    stream = _splitmix64(seed, 2 * num_perm)
    a = np.array(stream[0::2], dtype=np.uint64) | np.uint64(1)
    b = np.array(stream[1::2], dtype=np.uint64)
    a.setflags(write=False)
    b.setflags(write=False)
    return a, b


def _as_ids(features) -> np.ndarray:
    if isinstance(features, np.ndarray):
        return features.astype(np.uint64, copy=False)
    if isinstance(features, FeatureSet):
        features = features.terms
    return fingerprints(features)


def minhash_ids(ids: np.ndarray, params: LshParams) -> np.ndarray:
    if ids.size == 0:
        raise EmptyFeatureSet("cannot sketch an empty feature set")
    a, b = hash_family(params.seed, params.num_perm)
    h = _fmix64(ids.reshape(-1, 1) * a + b)
    return h.min(axis=0)


def minhash(features, params: LshParams) -> MinHashSignature:
    """Signature of a feature set (``FeatureSet``, iterable of terms or id array).

    Only the distinct terms matter; counts and order are ignored.
    """
    return MinHashSignature(minhash_ids(_as_ids(features), params), params.seed)


def minhash_many(id_arrays: list[np.ndarray], params: LshParams,
                 chunk_rows: int = 200_000) -> np.ndarray:
    """Signatures for many id arrays at once, shape ``(len(id_arrays), num_perm)``."""
    a, b = hash_family(params.seed, params.num_perm)
    out = np.empty((len(id_arrays), params.num_perm), dtype=np.uint64)
    start = 0
    while start < len(id_arrays):
        stop, rows = start, 0
        while stop < len(id_arrays) and (rows == 0 or rows + len(id_arrays[stop]) <= chunk_rows):
            rows += len(id_arrays[stop])
            stop += 1
        chunk = id_arrays[start:stop]
        lengths = np.array([len(c) for c in chunk])
        if (lengths == 0).any():
            raise EmptyFeatureSet("cannot sketch an empty feature set")
        flat = np.concatenate(chunk).astype(np.uint64, copy=False)
        h = _fmix64(flat.reshape(-1, 1) * a + b)
        offsets = np.concatenate(([0], np.cumsum(lengths)[:-1]))
        out[start:stop] = np.minimum.reduceat(h, offsets, axis=0)
        start = stop
    return out


def band_digests(values: np.ndarray, params: LshParams) -> np.ndarray:
    """Digest of each band; ``values`` may be one signature or a stack of them."""
    v = np.asarray(values, dtype=np.uint64)
    single = v.ndim == 1
    v = v.reshape(-1, params.bands, params.rows)
    d = _fmix64(np.arange(params.bands, dtype=np.uint64) + np.uint64(_GOLDEN))
    d = np.broadcast_to(d, v.shape[:2]).copy()
    for r in range(params.rows):
        d = _fmix64((d ^ v[:, :, r]) * _C1)
    return d[0] if single else d


def band_keys(sig: MinHashSignature, params: LshParams) -> list[BandKey]:
    if len(sig) != params.num_perm:
        raise ValueError(f"signature has {len(sig)} slots, expected {params.num_perm}")
    return [BandKey(j, int(d)) for j, d in enumerate(band_digests(sig.values, params))]


def sentinel(record_id: str, k: int) -> str:
    # Real terms never contain a raw NUL (control characters are escaped), and
    # the length prefix keeps (record_id, k) pairs unambiguous.
    return f"\x00⊥{len(record_id)}:{record_id}\x00{k}"


def pad(features: FeatureSet, maxlength: int, record_id: str) -> FeatureSet:
    """Fill a corpus record up to ``maxlength`` distinct elements.

    Never apply this to a query.
    """
    if not record_id:
        raise ValueError("record_id must be non-empty")
    n = len(features)
    if n > maxlength:
        raise OversizeInput(f"{n} features exceed maxlength={maxlength}; select first")
    terms = Counter(features.terms)
    for k in range(maxlength - n):
        terms[sentinel(record_id, k)] = 1
    return FeatureSet(terms, features.source_id)


def lsh_threshold(bands: int, rows: int) -> float:
    if bands < 1 or rows < 1:
        raise ValueError("bands and rows must be >= 1")
    return (1.0 / bands) ** (1.0 / rows)


def collision_probability(s: float, bands: int, rows: int) -> float:
    """Chance that a pair with Jaccard ``s`` shares at least one band."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    return 1.0 - (1.0 - s ** rows) ** bands

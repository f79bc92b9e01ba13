"""Pure re-implementations of the in-process mock utilities.

These duplicate the primary toolkit's arithmetic exactly (same FNV-1a 64
constants, 256 buckets, sign from hash bit 63, same token F1 formula) so
protocol conformance can be checked bit-for-bit across the process boundary.
Only the standard library is used.
"""

import math

EMBEDDING_DIM = 256

_FNV_OFFSET = 14695981039346656037
_FNV_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def lexical_embed(text: str) -> list:
    """L2-normalized bag of token hashes; empty text embeds to the zero vector."""
    vec = [0.0] * EMBEDDING_DIM
    for token in text.split():
        h = fnv1a64(token.encode("utf-8"))
        bucket = h % EMBEDDING_DIM
        vec[bucket] += -1.0 if (h >> 63) & 1 else 1.0
    norm = math.sqrt(sum(x * x for x in vec))
    if norm == 0.0:
        return vec
    return [x / norm for x in vec]


def cosine(u, v) -> float:
    # single sqrt of the squared-norm product keeps cosine(x, x) exactly 1.0
    dot = 0.0
    nu2 = 0.0
    nv2 = 0.0
    for a, b in zip(u, v):
        dot += a * b
        nu2 += a * a
        nv2 += b * b
    if nu2 == 0.0 or nv2 == 0.0:
        return 0.0
    return dot / math.sqrt(nu2 * nv2)


def token_f1(left: str, right: str) -> float:
    """Token-level F1 over whitespace tokens; identical empties score 1."""
    a = left.split()
    b = right.split()
    if not a and not b:
        return 1.0
    counts = {}
    for tok in a:
        counts[tok] = counts.get(tok, 0) + 1
    overlap = 0
    for tok in b:
        have = counts.get(tok, 0)
        if have:
            counts[tok] = have - 1
            overlap += 1
    if overlap == 0:
        return 0.0
    return 2.0 * overlap / (len(a) + len(b))

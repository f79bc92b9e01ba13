"""Native BLEU: tokenization, sentence/corpus BLEU and Self-BLEU.

Scores are in [0, 1] (Self-BLEU in [0, 100]) and are only comparable within
one tokenizer mode.  Sentence-level callers default to exp_decay smoothing;
corpus aggregation defaults to no smoothing.
"""
from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

TokenSequence = Sequence[str]

_SMOOTHINGS = ("none", "add_k", "exp_decay")


@dataclass(frozen=True)
class BleuScore:
    """BLEU value with its sufficient statistics.

    `precisions` holds one (possibly smoothed) modified precision per n-gram
    order; orders the hypothesis is too short to produce are reported as 0.0
    and excluded from the geometric mean.  `degenerate` marks an empty
    hypothesis, which scores 0 with a neutral brevity penalty instead of
    raising.
    """

    value: float
    precisions: tuple[float, ...]
    brevity_penalty: float
    hyp_len: int
    ref_len: int
    degenerate: bool = field(default=False)


def tokenize(text: str, mode: str = "intl") -> list[str]:
    """Split a sentence into tokens.

    `intl` splits on Unicode whitespace and makes every punctuation or symbol
    character a standalone token; `whitespace` splits on whitespace only.
    """
    if mode == "whitespace":
        return text.split()
    if mode != "intl":
        raise ValueError(f"unknown tokenizer mode: {mode!r}")
    tokens: list[str] = []
    current: list[str] = []
    for ch in text:
        if ch.isspace():
            if current:
                tokens.append("".join(current))
                current = []
        elif unicodedata.category(ch)[0] in ("P", "S"):
            if current:
                tokens.append("".join(current))
                current = []
            tokens.append(ch)
        else:
            current.append(ch)
    if current:
        tokens.append("".join(current))
    return tokens


def _ngram_counts(tokens: TokenSequence, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _clipped_counts(
    hyp: TokenSequence, refs: Sequence[TokenSequence], max_n: int
) -> tuple[list[int], list[int], int, int]:
    """Per-order clipped and total n-gram counts, plus lengths.

    Counts are clipped against the maximum occurrence over all references;
    `ref_len` is the closest reference length (ties go to the shorter one).
    """
    correct = []
    total = []
    for n in range(1, max_n + 1):
        hyp_counts = _ngram_counts(hyp, n)
        total.append(max(len(hyp) - n + 1, 0))
        if not hyp_counts:
            correct.append(0)
            continue
        ref_max: Counter = Counter()
        for ref in refs:
            for gram, count in _ngram_counts(ref, n).items():
                if count > ref_max[gram]:
                    ref_max[gram] = count
        correct.append(
            sum(min(count, ref_max[gram]) for gram, count in hyp_counts.items())
        )
    hyp_len = len(hyp)
    ref_len = min((len(r) for r in refs), key=lambda rl: (abs(rl - hyp_len), rl))
    return correct, total, hyp_len, ref_len


def _score_from_counts(
    correct: Sequence[int],
    total: Sequence[int],
    hyp_len: int,
    ref_len: int,
    smoothing: str,
    smooth_k: float,
) -> BleuScore:
    max_n = len(correct)
    if smoothing not in _SMOOTHINGS:
        raise ValueError(f"unknown smoothing: {smoothing!r}")
    if hyp_len == 0:
        return BleuScore(0.0, (0.0,) * max_n, 1.0, 0, ref_len, degenerate=True)

    brevity_penalty = math.exp(1.0 - ref_len / hyp_len) if hyp_len < ref_len else 1.0
    raw = tuple(c / t if t > 0 else 0.0 for c, t in zip(correct, total))
    if correct[0] == 0:
        # A zero unigram precision scores 0 no matter the smoothing.
        return BleuScore(0.0, raw, brevity_penalty, hyp_len, ref_len)

    effective = max(n + 1 for n in range(max_n) if total[n] > 0)
    precisions: list[float] = []
    zeros = 0
    for n in range(effective):
        c, t = correct[n], total[n]
        if smoothing == "add_k" and n >= 1:
            precisions.append((c + smooth_k) / (t + smooth_k))
        elif c == 0:
            if smoothing == "exp_decay":
                zeros += 1
                precisions.append(1.0 / 2.0**zeros)
            else:
                precisions.append(0.0)
        else:
            precisions.append(c / t)

    padded = tuple(precisions) + (0.0,) * (max_n - effective)
    if any(p == 0.0 for p in precisions):
        return BleuScore(0.0, padded, brevity_penalty, hyp_len, ref_len)
    value = brevity_penalty * math.exp(
        sum(math.log(p) for p in precisions) / effective
    )
    return BleuScore(value, padded, brevity_penalty, hyp_len, ref_len)


def sentence_bleu(
    hyp: TokenSequence,
    refs: Sequence[TokenSequence],
    max_n: int = 4,
    smoothing: str = "exp_decay",
    smooth_k: float = 1.0,
) -> BleuScore:
    """BLEU of a single tokenized hypothesis against one or more references."""
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    if not refs:
        raise ValueError("at least one reference is required")
    counts = _clipped_counts(hyp, refs, max_n)
    return _score_from_counts(*counts, smoothing=smoothing, smooth_k=smooth_k)


def corpus_bleu(
    pairs: Iterable[tuple[TokenSequence, Sequence[TokenSequence]]],
    max_n: int = 4,
    smoothing: str = "none",
    smooth_k: float = 1.0,
) -> BleuScore:
    """Corpus BLEU from aggregated clipped counts (not averaged sentence scores)."""
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    agg_correct = [0] * max_n
    agg_total = [0] * max_n
    agg_hyp_len = 0
    agg_ref_len = 0
    n_pairs = 0
    for hyp, refs in pairs:
        if not refs:
            raise ValueError("at least one reference is required per pair")
        correct, total, hyp_len, ref_len = _clipped_counts(hyp, refs, max_n)
        for n in range(max_n):
            agg_correct[n] += correct[n]
            agg_total[n] += total[n]
        agg_hyp_len += hyp_len
        agg_ref_len += ref_len
        n_pairs += 1
    if n_pairs == 0:
        raise ValueError("corpus_bleu requires at least one pair")
    return _score_from_counts(
        agg_correct, agg_total, agg_hyp_len, agg_ref_len, smoothing, smooth_k
    )


def self_bleu(sentences: Sequence[str], max_n: int = 4, tokenize_mode: str = "intl") -> float:
    """Mean BLEU of each sentence against the rest of the set, scaled to [0, 100].

    Lower values mean richer surface diversity.
    """
    if len(sentences) < 2:
        raise ValueError("self-BLEU undefined for fewer than 2 sentences")
    tokenized = [tokenize(s, tokenize_mode) for s in sentences]
    scores = []
    for i, sent in enumerate(tokenized):
        rest = tokenized[:i] + tokenized[i + 1 :]
        scores.append(sentence_bleu(sent, rest, max_n=max_n, smoothing="exp_decay").value)
    # fsum keeps the mean invariant under input permutation
    return 100.0 * math.fsum(scores) / len(scores)

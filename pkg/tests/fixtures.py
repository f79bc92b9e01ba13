"""Hand-written fixture corpora shared between unit, analysis and acceptance tests."""

# Five segments whose selections shift as more quasi-sources join the support
# set: candidate 0 matches the original source exactly, candidate 1 is closer
# to the quasi-sources, candidate 2 is junk.
ANALYSIS_CORPUS = [
    {
        "id": "a",
        "source": "the cat sat on the mat",
        "candidates": [
            {"text": "the cat sat on the mat", "logprob": -0.2},
            {"text": "a cat was sitting on the mat", "logprob": -0.6},
            {"text": "the dog ran away", "logprob": -3.0},
        ],
        "quasi_sources": [
            {"text": "a cat was sitting on the mat", "provenance": "pp"},
            {"text": "a cat sat down on a mat", "provenance": "pp"},
        ],
        "references": ["the cat sat on the mat"],
    },
    {
        "id": "b",
        "source": "he reads a long book today",
        "candidates": [
            {"text": "he reads a long book today", "logprob": -0.3},
            {"text": "today he is reading a long book", "logprob": -0.7},
            {"text": "she sings a short song", "logprob": -2.5},
        ],
        "quasi_sources": [
            {"text": "today he is reading a long book", "provenance": "pp"},
            {"text": "he is reading a lengthy book today", "provenance": "pp"},
        ],
        "references": ["he reads a long book today"],
    },
    {
        "id": "c",
        "source": "rain fell over the quiet town",
        "candidates": [
            {"text": "rain fell over the quiet town", "logprob": -0.1},
            {"text": "rain was falling over a quiet town", "logprob": -0.5},
            {"text": "snow covered the busy city", "logprob": -2.0},
        ],
        "quasi_sources": [
            {"text": "rain was falling over a quiet town", "provenance": "pp"},
            {"text": "a quiet town saw rain falling down", "provenance": "pp"},
        ],
        "references": ["rain fell over the quiet town"],
    },
    {
        "id": "d",
        "source": "two birds fly across the sky",
        "candidates": [
            {"text": "two birds fly across the sky", "logprob": -0.2},
            {"text": "a pair of birds fly over the sky", "logprob": -0.9},
            {"text": "a fish swims under water", "logprob": -2.8},
        ],
        "quasi_sources": [
            {"text": "a pair of birds fly over the sky", "provenance": "pp"},
            {"text": "two birds are flying across the sky", "provenance": "pp"},
        ],
        "references": ["two birds fly across the sky"],
    },
    {
        "id": "e",
        "source": "she builds a house of wood",
        "candidates": [
            {"text": "she builds a house of wood", "logprob": -0.25},
            {"text": "she is building a wooden house", "logprob": -0.8},
            {"text": "he paints an old fence", "logprob": -2.2},
        ],
        "quasi_sources": [
            {"text": "she is building a house out of wood", "provenance": "pp"},
            {"text": "a wooden house is being built by her", "provenance": "pp"},
        ],
        "references": ["she builds a house of wood"],
    },
]


def cached_mean_sentence_bleu():
    """Mean-of-per-segment sentence BLEU metric with a per-pair memo.

    Bootstrap tests call the corpus metric thousands of times over resamples
    of the same segments; memoizing the per-segment score keeps them fast
    without changing any value.
    """
    from mbrkit.bleu import sentence_bleu, tokenize

    memo = {}

    def metric(outputs, refs):
        total = 0.0
        for out, ref_list in zip(outputs, refs):
            key = (out, tuple(ref_list))
            value = memo.get(key)
            if value is None:
                value = sentence_bleu(
                    tokenize(out), [tokenize(r) for r in ref_list], smoothing="exp_decay"
                ).value
                memo[key] = value
            total += value
        return total / len(outputs)

    return metric


def to_segments(records):
    """Build a SegmentSet from plain fixture dicts."""
    from mbrkit.corpus import Candidate, QuasiSource, Segment, SegmentSet

    segments = []
    for rec in records:
        segments.append(
            Segment(
                id=rec["id"],
                source=rec["source"],
                candidates=tuple(Candidate(**c) for c in rec["candidates"]),
                quasi_sources=tuple(QuasiSource(**q) for q in rec.get("quasi_sources", [])),
                references=tuple(rec.get("references", [])),
            )
        )
    return SegmentSet.from_segments(segments)


def write_jsonl(records, path):
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def random_segments(rng, n_segments, n_candidates, n_quasi, vocab=None, with_logprobs=True):
    """Deterministic random corpus records for property and acceptance tests."""
    vocab = vocab or [
        "alpha", "beta", "gamma", "delta", "omega", "cat", "dog",
        "red", "blue", "sun", "moon", "tree",
    ]

    def sentence():
        length = int(rng.integers(1, 9))
        return " ".join(vocab[int(i)] for i in rng.integers(0, len(vocab), size=length))

    records = []
    for idx in range(n_segments):
        candidates = []
        for _ in range(n_candidates):
            cand = {"text": sentence()}
            if with_logprobs:
                cand["logprob"] = float(-rng.uniform(0.01, 8.0))
            candidates.append(cand)
        records.append(
            {
                "id": f"seg{idx}",
                "source": sentence(),
                "candidates": candidates,
                "quasi_sources": [
                    {"text": sentence(), "provenance": "pp"} for _ in range(n_quasi)
                ],
                "references": [sentence()],
            }
        )
    return records


def bootstrap_fixture(n_segments=100, a_wins=60):
    """Per-segment outputs where system a matches the reference on the first
    `a_wins` segments and system b matches on the rest; the loser emits a
    vocabulary-disjoint sentence, so per-segment sentence BLEU is exactly 1/0."""
    refs = [f"segment number{i} alpha beta gamma" for i in range(n_segments)]
    junk = "zzz qqq www"
    outs_a = [refs[i] if i < a_wins else junk for i in range(n_segments)]
    outs_b = [junk if i < a_wins else refs[i] for i in range(n_segments)]
    return outs_a, outs_b, [[r] for r in refs]

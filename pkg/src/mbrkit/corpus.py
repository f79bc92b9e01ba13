"""Domain types and JSONL ingestion for segments, candidates and quasi-sources.

A segments file carries one JSON object per line:

    {"id": str, "source": str,
     "candidates": [{"text": str, "logprob"?: number}],
     "quasi_sources"?: [{"text": str, "provenance": "original"|"pp"|"bt",
                         "weight"?: number}],
     "references"?: [str]}

Text is UTF-8 and is stored byte-faithfully; no normalization happens at
ingestion.  Raw weights are preserved as loaded and only renormalized where
they are consumed.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

log = logging.getLogger(__name__)

PROVENANCES = ("original", "pp", "bt")

_CANDIDATE_FIELDS = {"text", "logprob"}
_QUASI_FIELDS = {"text", "provenance", "weight"}
_SEGMENT_FIELDS = {"id", "source", "candidates", "quasi_sources", "references"}


class SegmentValidationError(ValueError):
    """Raised for malformed or invariant-violating segment data."""


@dataclass(frozen=True)
class Candidate:
    text: str
    logprob: float | None = None


@dataclass(frozen=True)
class QuasiSource:
    text: str
    provenance: str = "pp"
    weight: float | None = None


@dataclass(frozen=True)
class Segment:
    id: str
    source: str
    candidates: tuple[Candidate, ...]
    quasi_sources: tuple[QuasiSource, ...] = ()
    references: tuple[str, ...] = ()


@dataclass(frozen=True)
class Manifest:
    n_segments: int
    n_candidates: int
    n_quasi_sources: int
    n_with_references: int
    provenance_counts: tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class SegmentSet:
    """Immutable, order-preserving collection of segments."""

    segments: tuple[Segment, ...]
    manifest: Manifest

    def __iter__(self) -> Iterator[Segment]:
        return iter(self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    @classmethod
    def from_segments(cls, segments: Iterable[Segment]) -> "SegmentSet":
        segs = tuple(segments)
        counts = {p: 0 for p in PROVENANCES}
        n_candidates = 0
        n_quasi = 0
        n_refs = 0
        for seg in segs:
            n_candidates += len(seg.candidates)
            n_quasi += len(seg.quasi_sources)
            if seg.references:
                n_refs += 1
            for q in seg.quasi_sources:
                counts[q.provenance] += 1
        manifest = Manifest(
            n_segments=len(segs),
            n_candidates=n_candidates,
            n_quasi_sources=n_quasi,
            n_with_references=n_refs,
            provenance_counts=tuple(sorted(counts.items())),
        )
        return cls(segments=segs, manifest=manifest)


def _fail(line_no: int, message: str) -> SegmentValidationError:
    return SegmentValidationError(f"line {line_no}: {message}")


def _check_fields(obj: dict, allowed: set[str], what: str, line_no: int, strict: bool) -> None:
    if strict:
        unknown = set(obj) - allowed
        if unknown:
            raise _fail(line_no, f"unknown {what} field(s): {', '.join(sorted(unknown))}")


def _parse_candidate(obj: object, line_no: int, strict: bool) -> Candidate:
    if not isinstance(obj, dict) or not isinstance(obj.get("text"), str):
        raise _fail(line_no, "candidate must be an object with a string 'text'")
    _check_fields(obj, _CANDIDATE_FIELDS, "candidate", line_no, strict)
    logprob = obj.get("logprob")
    if logprob is not None:
        if not isinstance(logprob, (int, float)) or isinstance(logprob, bool):
            raise _fail(line_no, "candidate logprob must be a number")
        logprob = float(logprob)
        if not math.isfinite(logprob):
            raise _fail(line_no, "candidate logprob must be finite")
        if logprob > 0.0:
            raise _fail(line_no, f"candidate logprob must be <= 0, got {logprob}")
    return Candidate(text=obj["text"], logprob=logprob)


def _parse_quasi_source(obj: object, line_no: int, strict: bool) -> QuasiSource:
    if not isinstance(obj, dict) or not isinstance(obj.get("text"), str):
        raise _fail(line_no, "quasi_source must be an object with a string 'text'")
    _check_fields(obj, _QUASI_FIELDS, "quasi_source", line_no, strict)
    provenance = obj.get("provenance")
    if provenance not in PROVENANCES:
        raise _fail(line_no, f"quasi_source provenance must be one of {PROVENANCES}")
    weight = obj.get("weight")
    if weight is not None:
        if not isinstance(weight, (int, float)) or isinstance(weight, bool):
            raise _fail(line_no, "quasi_source weight must be a number")
        weight = float(weight)
        if not math.isfinite(weight) or weight < 0.0:
            raise _fail(line_no, f"quasi_source weight must be finite and >= 0, got {weight}")
    return QuasiSource(text=obj["text"], provenance=provenance, weight=weight)


def _parse_segment(obj: object, line_no: int, strict: bool) -> Segment:
    if not isinstance(obj, dict):
        raise _fail(line_no, "record must be a JSON object")
    _check_fields(obj, _SEGMENT_FIELDS, "segment", line_no, strict)
    seg_id = obj.get("id")
    if not isinstance(seg_id, str) or not seg_id:
        raise _fail(line_no, "segment id must be a non-empty string")
    source = obj.get("source")
    if not isinstance(source, str):
        raise _fail(line_no, "segment source must be a string")
    raw_candidates = obj.get("candidates")
    if not isinstance(raw_candidates, list):
        raise _fail(line_no, "segment candidates must be a list")
    if strict and not raw_candidates:
        raise _fail(line_no, "segment candidates must be non-empty")
    candidates = tuple(_parse_candidate(c, line_no, strict) for c in raw_candidates)

    raw_quasi = obj.get("quasi_sources", [])
    if not isinstance(raw_quasi, list):
        raise _fail(line_no, "quasi_sources must be a list")
    quasi = tuple(_parse_quasi_source(q, line_no, strict) for q in raw_quasi)

    originals = [q for q in quasi if q.provenance == "original"]
    if len(originals) > 1:
        raise _fail(line_no, "at most one quasi_source may have provenance 'original'")
    if originals and originals[0].text != source:
        raise _fail(line_no, "the 'original' quasi_source text must equal the segment source")
    weighted = [q for q in quasi if q.weight is not None]
    if weighted and len(weighted) != len(quasi):
        raise _fail(line_no, "either all quasi_sources carry a weight or none do")

    raw_refs = obj.get("references", [])
    if not isinstance(raw_refs, list) or not all(isinstance(r, str) for r in raw_refs):
        raise _fail(line_no, "references must be a list of strings")

    return Segment(
        id=seg_id,
        source=source,
        candidates=candidates,
        quasi_sources=quasi,
        references=tuple(raw_refs),
    )


def load_segments(path: str | Path, schema_mode: str = "strict") -> SegmentSet:
    """Load and validate a segments JSONL file.

    `strict` rejects unknown fields and empty candidate lists; `lenient`
    ignores unknown fields.  Loading is deterministic and order-preserving.
    """
    if schema_mode not in ("strict", "lenient"):
        raise ValueError(f"unknown schema_mode: {schema_mode!r}")
    strict = schema_mode == "strict"
    segments: list[Segment] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise _fail(line_no, f"malformed JSON: {exc.msg}") from exc
            segment = _parse_segment(obj, line_no, strict)
            if segment.id in seen_ids:
                raise _fail(line_no, f"duplicate segment id {segment.id!r}")
            seen_ids.add(segment.id)
            segments.append(segment)
    return SegmentSet.from_segments(segments)


def write_segments(segment_set: SegmentSet | Iterable[Segment], path: str | Path) -> None:
    """Write segments back to JSONL, omitting absent optional fields."""
    with open(path, "w", encoding="utf-8") as fh:
        for seg in segment_set:
            record: dict = {"id": seg.id, "source": seg.source}
            record["candidates"] = [
                {"text": c.text} if c.logprob is None else {"text": c.text, "logprob": c.logprob}
                for c in seg.candidates
            ]
            if seg.quasi_sources:
                record["quasi_sources"] = [
                    {"text": q.text, "provenance": q.provenance}
                    if q.weight is None
                    else {"text": q.text, "provenance": q.provenance, "weight": q.weight}
                    for q in seg.quasi_sources
                ]
            if seg.references:
                record["references"] = list(seg.references)
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def support_view(segment: Segment, kind: str) -> list[tuple[str, float | None]]:
    """Flatten a segment into an ordered (text, weight) support list.

    `candidates_as_support` returns candidate texts, with weights exp(logprob)
    when every candidate has one.  `quasi_sources_with_original` returns the
    original source first (synthesized when not already present as a
    provenance-"original" quasi-source) followed by quasi-sources in file
    order; a synthesized original under weighted quasi-sources receives the
    maximum quasi-source weight, which is logged.
    """
    if kind == "candidates_as_support":
        if not segment.candidates:
            raise SegmentValidationError(f"segment {segment.id!r}: empty support set")
        if all(c.logprob is not None for c in segment.candidates):
            return [(c.text, math.exp(c.logprob)) for c in segment.candidates]
        return [(c.text, None) for c in segment.candidates]

    if kind == "quasi_sources_with_original":
        if not segment.source:
            raise SegmentValidationError(f"segment {segment.id!r}: empty source")
        quasi = list(segment.quasi_sources)
        originals = [q for q in quasi if q.provenance == "original"]
        rest = [q for q in quasi if q.provenance != "original"]
        if originals:
            head = originals[0]
        else:
            weight = None
            if rest and all(q.weight is not None for q in rest):
                weight = max(q.weight for q in rest)
                log.info(
                    "segment %s: synthesized original source weighted %s "
                    "(max quasi-source weight before renormalization)",
                    segment.id,
                    weight,
                )
            head = QuasiSource(text=segment.source, provenance="original", weight=weight)
        return [(head.text, head.weight)] + [(q.text, q.weight) for q in rest]

    raise ValueError(f"unknown support view kind: {kind!r}")

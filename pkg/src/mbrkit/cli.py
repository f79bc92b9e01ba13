"""Command-line entry point.

    mbrkit <decode|eval|significance|analyze|bench> --input F [options]

Option precedence is command line > config file (TOML, one table per
command) > defaults, and the effective configuration is echoed into every
output so runs are auditable.  Exit codes: 0 success, 1 input/config error,
2 scorer/transport error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from . import analysis, bench
from .bleu import corpus_bleu, tokenize
from .bridge import RemoteProvider, ScorerConnection, ScorerError
from .corpus import SegmentValidationError, Segment, load_segments, support_view
from .decision import (
    SupportWeights,
    filter_support,
    map_select,
    mbr_select_fast,
    mbr_select_naive,
    qe_rerank,
    smbr_select,
)
from .significance import paired_bootstrap, significance_marker
from .utility import ProviderShapeError, UtilityProvider, get_mock_provider

DECODE_RULES = ("map", "mbr_naive", "mbr_fast", "qe_rerank", "smbr")

DEFAULTS: dict[str, dict] = {
    "decode": {
        "rule": "qe_rerank",
        "provider": "mock:qe",
        "k": None,
        "filter_m": None,
        "weighted": False,
        "seed": 0,
        "output": None,
        "format": "jsonl",
        "schema_mode": "strict",
        "tie_break": "lowest_index",
        "emit_scores": False,
        "workers": 0,
    },
    "eval": {
        "hyp": None,
        "tokenizer": "intl",
        "max_n": 4,
        "output": None,
        "format": "jsonl",
        "schema_mode": "strict",
    },
    "significance": {
        "hyp_a": None,
        "hyp_b": None,
        "n_resamples": 1000,
        "seed": 0,
        "tokenizer": "intl",
        "max_n": 4,
        "output": None,
        "format": "jsonl",
        "schema_mode": "strict",
    },
    "analyze": {
        "analysis": "ablation",
        "provider": "mock:qe",
        "k_values": "1,2,3",
        "tokenizer": "intl",
        "output": None,
        "format": "jsonl",
        "schema_mode": "strict",
    },
    "bench": {
        "rules": "qe_rerank,smbr",
        "provider": "mock:qe",
        "repetitions": 5,
        "parallel_workers": 0,
        "output": None,
        "format": "jsonl",
        "schema_mode": "strict",
    },
}


class ConfigError(ValueError):
    pass


def open_provider(spec: str) -> UtilityProvider:
    """Build a provider from `mock:NAME`, `cmd:COMMAND` or `tcp:HOST:PORT`."""
    if spec.startswith("mock:"):
        try:
            return get_mock_provider(spec[5:])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if spec.startswith("cmd:"):
        return RemoteProvider(ScorerConnection.from_command(spec[4:]))
    if spec.startswith("tcp:"):
        rest = spec[4:]
        host, sep, port = rest.rpartition(":")
        if not sep or not host:
            raise ConfigError(f"tcp provider spec must be tcp:host:port, got {spec!r}")
        return RemoteProvider(ScorerConnection.from_tcp(host, int(port)))
    raise ConfigError(f"unknown provider spec: {spec!r}")


def close_provider(provider: UtilityProvider) -> None:
    if isinstance(provider, RemoteProvider):
        provider.close()


def _header(cfg: dict) -> dict:
    # the output path names the container, not the run; leaving it out keeps
    # repeated runs byte-comparable wherever they are written
    return {k: v for k, v in cfg.items() if k != "output"}


def _effective_config(command: str, args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS[command])
    cli_values = {k: v for k, v in vars(args).items() if k not in ("command", "config", "input")}
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path, "rb") as fh:
            file_cfg = tomllib.load(fh)
        section = file_cfg.get(command, {})
        unknown = set(section) - set(cfg)
        if unknown:
            raise ConfigError(
                f"unknown config key(s) in [{command}]: {', '.join(sorted(unknown))}"
            )
        cfg.update(section)
    cfg.update(cli_values)
    cfg["command"] = command
    cfg["input"] = getattr(args, "input", None)
    return cfg


def _dump(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def _write_output(lines: Sequence[str], output: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _parse_k_values(raw) -> list[int]:
    if isinstance(raw, str):
        values = [int(part) for part in raw.split(",") if part.strip()]
    else:
        values = [int(v) for v in raw]
    if not values:
        raise ConfigError("k_values must not be empty")
    return values


# ---------------------------------------------------------------------------
# decode


def _decode_segment(seg: Segment, cfg: dict, provider: UtilityProvider) -> dict:
    rule = cfg["rule"]
    tie_break = cfg["tie_break"]
    if not seg.candidates:
        raise SegmentValidationError(f"segment {seg.id!r} has no candidates to decode")

    if rule == "map":
        result = map_select(seg.candidates, tie_break=tie_break)
    elif rule == "qe_rerank":
        result = qe_rerank(seg.source, seg.candidates, provider, tie_break=tie_break)
    elif rule in ("mbr_naive", "mbr_fast"):
        pairs = support_view(seg, "candidates_as_support")
        weights = None
        if cfg["filter_m"] is not None:
            if cfg["weighted"]:
                raise ConfigError("--weighted cannot be combined with --filter-m")
            if provider.shape != "joint":
                raise ConfigError(
                    "--filter-m needs a joint (QE-style) provider to score supports"
                )
            supports = filter_support(seg.candidates, seg.source, provider, cfg["filter_m"])
        else:
            supports = [text for text, _ in pairs]
            if cfg["weighted"]:
                raw = [w for _, w in pairs]
                if any(w is None for w in raw):
                    raise SegmentValidationError(
                        f"segment {seg.id!r}: --weighted needs a logprob on every candidate"
                    )
                weights = SupportWeights.from_raw(raw)
        if rule == "mbr_naive":
            result = mbr_select_naive(
                seg.candidates, supports, provider,
                weights=weights, source=seg.source, tie_break=tie_break,
            )
        else:
            result = mbr_select_fast(
                seg.candidates, supports, seg.source, provider,
                weights=weights, tie_break=tie_break,
            )
    elif rule == "smbr":
        sources = support_view(seg, "quasi_sources_with_original")
        if cfg["k"] is not None:
            if cfg["k"] < 1 or cfg["k"] > len(sources):
                raise SegmentValidationError(
                    f"segment {seg.id!r}: k={cfg['k']} but only {len(sources)} support sources"
                )
            sources = sources[: cfg["k"]]
        if cfg["weighted"]:
            if any(w is None for w in (w for _, w in sources)):
                raise SegmentValidationError(
                    f"segment {seg.id!r}: --weighted needs a weight on every quasi-source"
                )
        else:
            sources = [(text, None) for text, _ in sources]
        result = smbr_select(sources, seg.candidates, provider, tie_break=tie_break)
    else:
        raise ConfigError(f"unknown rule: {rule!r}")

    record = {
        "id": seg.id,
        "rule": result.rule,
        "selected_index": result.selected_index,
        "selected_text": seg.candidates[result.selected_index].text,
        "tied_indices": result.tied_indices,
    }
    if cfg["emit_scores"]:
        record["scores"] = result.scores
    return record


def cmd_decode(cfg: dict) -> list[str]:
    if cfg["rule"] not in DECODE_RULES:
        raise ConfigError(f"unknown rule: {cfg['rule']!r}")
    segment_set = load_segments(cfg["input"], cfg["schema_mode"])
    provider = open_provider(cfg["provider"]) if cfg["rule"] != "map" else None
    try:
        workers = cfg["workers"] or os.cpu_count() or 1
        if workers > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=workers) as pool:
                records = list(
                    pool.map(lambda seg: _decode_segment(seg, cfg, provider), segment_set)
                )
        else:
            records = [_decode_segment(seg, cfg, provider) for seg in segment_set]
    finally:
        if provider is not None:
            close_provider(provider)

    if cfg["format"] == "text":
        lines = [f"# {_dump({'header': _header(cfg)})}"]
        lines += [f"{r['id']}\t{r['selected_index']}\t{r['selected_text']}" for r in records]
        return lines
    return [_dump({"header": _header(cfg)})] + [_dump(r) for r in records]


# ---------------------------------------------------------------------------
# eval / significance


def _load_decode_output(path: str) -> dict[str, str]:
    selections: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            obj = json.loads(line)
            if "header" in obj:
                continue
            if "id" not in obj or "selected_text" not in obj:
                raise SegmentValidationError(
                    f"{path}: line {line_no}: not a decode record"
                )
            selections[obj["id"]] = obj["selected_text"]
    return selections


def _align(segment_set, selections: dict[str, str], path: str) -> list[str]:
    seg_ids = [seg.id for seg in segment_set]
    missing = [i for i in seg_ids if i not in selections]
    extra = [i for i in selections if i not in set(seg_ids)]
    if missing or extra:
        raise SegmentValidationError(
            f"id mismatch with {path}: missing from hyp: {missing[:10]}; "
            f"not in segments: {extra[:10]}"
        )
    return [selections[i] for i in seg_ids]


def _corpus_bleu_metric(tokenizer: str, max_n: int):
    def metric(outputs: Sequence[str], refs: Sequence[Sequence[str]]) -> float:
        pairs = [
            (tokenize(out, tokenizer), [tokenize(r, tokenizer) for r in ref_list])
            for out, ref_list in zip(outputs, refs)
        ]
        return corpus_bleu(pairs, max_n=max_n).value

    return metric


def cmd_eval(cfg: dict) -> list[str]:
    if not cfg["hyp"]:
        raise ConfigError("eval requires --hyp (a decode output file)")
    segment_set = load_segments(cfg["input"], cfg["schema_mode"])
    for seg in segment_set:
        if not seg.references:
            raise SegmentValidationError(f"segment {seg.id!r} has no references")
    outputs = _align(segment_set, _load_decode_output(cfg["hyp"]), cfg["hyp"])
    pairs = [
        (tokenize(out, cfg["tokenizer"]), [tokenize(r, cfg["tokenizer"]) for r in seg.references])
        for out, seg in zip(outputs, segment_set)
    ]
    score = corpus_bleu(pairs, max_n=cfg["max_n"])
    report = {
        "bleu": score.value,
        "precisions": list(score.precisions),
        "brevity_penalty": score.brevity_penalty,
        "hyp_len": score.hyp_len,
        "ref_len": score.ref_len,
        "n_segments": len(segment_set),
    }
    if cfg["format"] == "text":
        return [
            f"BLEU = {score.value:.4f}",
            "precisions = " + " / ".join(f"{p:.4f}" for p in score.precisions),
            f"brevity_penalty = {score.brevity_penalty:.4f}",
            f"hyp_len = {score.hyp_len}  ref_len = {score.ref_len}",
        ]
    return [_dump({"header": _header(cfg), "report": report})]


def cmd_significance(cfg: dict) -> list[str]:
    if not cfg["hyp_a"] or not cfg["hyp_b"]:
        raise ConfigError("significance requires --hyp-a and --hyp-b")
    segment_set = load_segments(cfg["input"], cfg["schema_mode"])
    for seg in segment_set:
        if not seg.references:
            raise SegmentValidationError(f"segment {seg.id!r} has no references")
    outputs_a = _align(segment_set, _load_decode_output(cfg["hyp_a"]), cfg["hyp_a"])
    outputs_b = _align(segment_set, _load_decode_output(cfg["hyp_b"]), cfg["hyp_b"])
    refs = [list(seg.references) for seg in segment_set]
    report = paired_bootstrap(
        outputs_a,
        outputs_b,
        refs,
        _corpus_bleu_metric(cfg["tokenizer"], cfg["max_n"]),
        n_resamples=cfg["n_resamples"],
        seed=cfg["seed"],
        metric_name="corpus_bleu",
    )
    marker = significance_marker(report.p_value)
    if cfg["format"] == "text":
        return [
            f"{report.metric_name}: a = {report.system_a_score:.4f}, "
            f"b = {report.system_b_score:.4f}",
            f"wins_a = {report.wins_a}  wins_b = {report.wins_b}  ties = {report.ties}",
            f"p (a better than b) = {report.p_value:.4f} {marker}".rstrip(),
            f"generator = {report.generator}  seed = {report.seed}",
        ]
    return [_dump({"header": _header(cfg), "report": report.to_dict(), "marker": marker})]


# ---------------------------------------------------------------------------
# analyze / bench


def cmd_analyze(cfg: dict) -> list[str]:
    segment_set = load_segments(cfg["input"], cfg["schema_mode"])
    provider = open_provider(cfg["provider"])
    try:
        kind = cfg["analysis"]
        if kind == "ablation":
            for seg in segment_set:
                if not seg.references:
                    raise SegmentValidationError(f"segment {seg.id!r} has no references")
            curve = analysis.source_count_ablation(
                segment_set,
                provider,
                _parse_k_values(cfg["k_values"]),
                _corpus_bleu_metric(cfg["tokenizer"], 4),
                metric_name="corpus_bleu",
            )
            payload = curve.to_dict()
        elif kind == "avg-qe":
            curve = analysis.avg_qe_to_original(
                segment_set, provider, _parse_k_values(cfg["k_values"])
            )
            payload = curve.to_dict()
        elif kind == "source-quality":
            report = analysis.source_quality(segment_set, provider)
            payload = report.to_dict()
            # match the usual x100 presentation for similarity in text mode
        else:
            raise ConfigError(f"unknown analysis: {kind!r}")
    finally:
        close_provider(provider)

    if cfg["format"] == "text":
        if cfg["analysis"] == "source-quality":
            sim = payload["mean_semantic_similarity"] * 100.0
            sb = "n/a" if payload["self_bleu"] is None else f"{payload['self_bleu']:.2f}"
            return [
                f"self_bleu            {sb}",
                f"semantic_similarity  {sim:.2f}",
                f"n_sources            {payload['n_sources']}",
            ]
        header = f"{'|S|':>6}  {payload['metric_name']}"
        rows = [
            f"{k:>6}  {v:.6f}"
            for k, v in zip(payload["k_values"], payload["metric_values"])
        ]
        return [header] + rows
    return [_dump({"header": _header(cfg), "report": payload})]


def cmd_bench(cfg: dict) -> list[str]:
    segment_set = load_segments(cfg["input"], cfg["schema_mode"])
    rules = [r.strip() for r in cfg["rules"].split(",") if r.strip()]
    provider = open_provider(cfg["provider"])
    try:
        reports = bench.run_bench(
            rules,
            segment_set,
            provider,
            repetitions=cfg["repetitions"],
            parallel_workers=cfg["parallel_workers"],
        )
    finally:
        close_provider(provider)

    if cfg["format"] == "text":
        lines = [
            f"{'rule':<12}{'|C|':>6}{'|S|':>6}{'K':>6}{'pair_items':>12}"
            f"{'est_triples':>13}{'embed_texts':>13}{'wall_time':>12}{'per_seg':>12}"
        ]
        for r in reports:
            lines.append(
                f"{r.rule:<12}{r.sizes[0]:>6}{r.sizes[1]:>6}{r.sizes[2]:>6}"
                f"{r.tally.pair_items:>12}{r.tally.estimate_triples:>13}"
                f"{r.tally.embed_texts:>13}{r.wall_time:>12.4f}{r.per_segment_time:>12.6f}"
            )
        return lines
    return [_dump({"header": _header(cfg), "reports": [r.to_dict() for r in reports]})]


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mbrkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", required=True, help="segments JSONL file")
        p.add_argument("--config", default=None, help="TOML config file")
        p.add_argument("--output", help="output file (default: stdout)")
        p.add_argument("--format", choices=("jsonl", "text"))
        p.add_argument("--schema-mode", dest="schema_mode", choices=("strict", "lenient"))

    p = sub.add_parser("decode", help="run a decision rule over a segments file")
    add_common(p)
    p.add_argument("--rule", choices=DECODE_RULES)
    p.add_argument("--provider", help="mock:NAME | cmd:COMMAND | tcp:HOST:PORT")
    p.add_argument("--k", type=int, help="support size for smbr (original + k-1 quasi-sources)")
    p.add_argument("--filter-m", dest="filter_m", type=int, help="QE-filter supports to size m")
    p.add_argument("--weighted", action="store_true", default=argparse.SUPPRESS)
    p.add_argument("--seed", type=int)
    p.add_argument("--tie-break", dest="tie_break", choices=("lowest_index", "logprob"))
    p.add_argument("--emit-scores", dest="emit_scores", action="store_true", default=argparse.SUPPRESS)
    p.add_argument("--workers", type=int, help="worker threads (default: logical cores)")

    p = sub.add_parser("eval", help="corpus BLEU of a decode output against references")
    add_common(p)
    p.add_argument("--hyp", help="decode output JSONL")
    p.add_argument("--tokenizer", choices=("intl", "whitespace"))
    p.add_argument("--max-n", dest="max_n", type=int)

    p = sub.add_parser("significance", help="paired bootstrap between two decode outputs")
    add_common(p)
    p.add_argument("--hyp-a", dest="hyp_a", help="decode output of system a")
    p.add_argument("--hyp-b", dest="hyp_b", help="decode output of system b")
    p.add_argument("--n-resamples", dest="n_resamples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--tokenizer", choices=("intl", "whitespace"))
    p.add_argument("--max-n", dest="max_n", type=int)

    p = sub.add_parser("analyze", help="support-set analyses")
    add_common(p)
    p.add_argument("--analysis", choices=("ablation", "avg-qe", "source-quality"))
    p.add_argument("--provider")
    p.add_argument("--k-values", dest="k_values", help="comma-separated support sizes")
    p.add_argument("--tokenizer", choices=("intl", "whitespace"))

    p = sub.add_parser("bench", help="call counts and wall times per rule")
    add_common(p)
    p.add_argument("--rules", help="comma-separated rule list")
    p.add_argument("--provider")
    p.add_argument("--repetitions", type=int)
    p.add_argument("--parallel-workers", dest="parallel_workers", type=int)

    return parser


_COMMANDS = {
    "decode": cmd_decode,
    "eval": cmd_eval,
    "significance": cmd_significance,
    "analyze": cmd_analyze,
    "bench": cmd_bench,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    # drop unset options so config-file values can fill them in
    ns = argparse.Namespace(
        **{k: v for k, v in vars(args).items() if v is not None}
    )
    try:
        cfg = _effective_config(args.command, ns)
        lines = _COMMANDS[args.command](cfg)
        _write_output(lines, cfg.get("output"))
        return 0
    except ScorerError as exc:
        print(f"scorer error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, SegmentValidationError, ProviderShapeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

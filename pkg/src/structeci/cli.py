"""Command-line pipeline driver.

Exit codes: 0 success, 1 usage or configuration problem, 2 bad input
data, 3 LLM gateway failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path

from .concept_graph import ConceptGraph, build_graph
from .config import PipelineConfig, apply_overrides, load_config, require_paths
from .corpus import load_corpus, load_embeddings, load_parses
from .errors import ConfigError, DataError, GatewayError
from .evaluation import evaluate, format_report_table, load_predictions, report_to_json
from .figures import save_eval_figure, save_pattern_histogram
from .jsonl import write_jsonl
from .llm_gateway import Gateway, HttpBackend, ResponseCache, load_mock_script
from .path_metric import default_templates, load_templates
from .pattern import CausalPattern, PatternCache, assign_patterns
from .reasoner import infer, prediction_record
from .retrieval import PipelineState, candidate_paths, retrieve, trace_record
from .syntax_metric import default_label_weights, load_label_weights

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_GATEWAY = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: A003 - argparse API
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="structeci", description="Structural example retrieval for event causality")
    parser.add_argument("--config", required=True, help="YAML pipeline config")
    parser.add_argument("--jobs", type=int, default=1, help="parallel scoring workers")
    parser.add_argument("--k-top", dest="k_top", type=int)
    parser.add_argument("--w1", type=float)
    parser.add_argument("--w2", type=float)
    parser.add_argument("--threshold", type=float)
    parser.add_argument("--max-path-len", dest="max_path_len", type=int)
    parser.add_argument("--model")
    parser.add_argument("--mock-script", dest="mock_script")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("build-graph", help="build or reload the concept graph snapshot")
    sub.add_parser("extract-patterns", help="assign causal patterns to the corpus")
    sub.add_parser("retrieve", help="write the retrieval trace for all queries")
    sub.add_parser("infer", help="retrieve examples and predict answers")
    eval_parser = sub.add_parser("eval", help="score predictions against gold labels")
    eval_parser.add_argument("--predictions", help="predictions JSONL (default: <output_dir>/predictions.jsonl)")
    eval_parser.add_argument("--gold", help="gold corpus JSONL (default: the queries path)")
    return parser


def _make_gateway(config: PipelineConfig) -> Gateway:
    gw = config.gateway
    if gw.mock_script is not None:
        if not Path(gw.mock_script).exists():
            raise ConfigError(f"mock script {gw.mock_script} does not exist")
        backend = load_mock_script(gw.mock_script)
    elif gw.endpoint:
        backend = HttpBackend(gw.endpoint, api_key_env=gw.api_key_env, timeout=gw.timeout)
    else:
        raise ConfigError("no gateway configured: set gateway.endpoint or gateway.mock_script")
    cache = ResponseCache(config.paths.cache_dir / "responses.jsonl")
    return Gateway(
        backend,
        cache=cache,
        retry_limit=gw.retry_limit,
        backoff_base=gw.backoff_base,
        max_in_flight=gw.max_in_flight,
    )


def _load_graph(config: PipelineConfig) -> tuple[ConceptGraph, bool]:
    """Build the graph, or reload it from a checksum-keyed snapshot."""
    require_paths(config, "concept_dump")
    dump_path = Path(config.paths.concept_dump)
    checksum = hashlib.sha256(dump_path.read_bytes()).hexdigest()
    snapshot_path = config.paths.cache_dir / "graph_snapshot.json"
    if snapshot_path.exists():
        try:
            stored = json.loads(snapshot_path.read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"unreadable graph snapshot {snapshot_path}: {exc}") from exc
        if stored.get("checksum") == checksum:
            return ConceptGraph.from_snapshot(stored.get("snapshot", {})), True
    graph = build_graph(dump_path)
    snapshot_path.parent.mkdir(parents=True, exist_ok=True)
    snapshot_path.write_text(
        json.dumps({"checksum": checksum, "snapshot": graph.to_snapshot()}, ensure_ascii=False),
        "utf-8",
    )
    return graph, False


def _templates(config: PipelineConfig):
    if config.paths.relation_templates is not None:
        return load_templates(config.paths.relation_templates)
    return default_templates()


def _weights(config: PipelineConfig):
    if config.paths.label_weights is not None:
        return load_label_weights(config.paths.label_weights)
    return default_label_weights()


def _pipeline_state(config: PipelineConfig, gateway: Gateway) -> PipelineState:
    require_paths(config, "corpus", "queries", "parses_dir", "embeddings")
    corpus = load_corpus(config.paths.corpus)
    graph, _ = _load_graph(config)
    embeddings = load_embeddings(config.paths.embeddings)
    parses = load_parses(config.paths.parses_dir)
    pattern_cache = PatternCache(config.paths.cache_dir / "patterns.jsonl")
    assignment = assign_patterns(corpus, gateway, pattern_cache, config.gateway.model, config.gateway.temperature)
    state = PipelineState(
        corpus=corpus,
        graph=graph,
        embeddings=embeddings,
        parses=parses,
        templates=_templates(config),
        weights=_weights(config),
        assignment=assignment,
        gateway=gateway,
        model=config.gateway.model,
        temperature=config.gateway.temperature,
        query_pattern_cache=PatternCache(config.paths.cache_dir / "query_patterns.jsonl"),
    )
    state.paths = candidate_paths(corpus, graph, embeddings, config.retrieval)
    return state


def cmd_build_graph(config: PipelineConfig) -> int:
    graph, cache_hit = _load_graph(config)
    print(f"{graph.node_count} nodes, {graph.edge_count} edges")
    if cache_hit:
        print("graph snapshot cache hit")
    return EXIT_OK


def cmd_extract_patterns(config: PipelineConfig) -> int:
    require_paths(config, "corpus")
    corpus = load_corpus(config.paths.corpus)
    gateway = _make_gateway(config)
    cache = PatternCache(config.paths.cache_dir / "patterns.jsonl")
    assignment = assign_patterns(corpus, gateway, cache, config.gateway.model, config.gateway.temperature)
    counts = assignment.counts()
    for pattern in CausalPattern:
        print(f"{pattern.value} {counts[pattern.value]}")
    figure = save_pattern_histogram(counts, config.paths.output_dir / "pattern_histogram.png")
    print(f"histogram figure: {figure}")
    return EXIT_OK


def cmd_retrieve(config: PipelineConfig, jobs: int) -> int:
    gateway = _make_gateway(config)
    state = _pipeline_state(config, gateway)
    queries = load_corpus(config.paths.queries)
    records = []
    for query in queries:
        result = retrieve(query, state, config.retrieval, jobs=jobs)
        records.append(trace_record(result))
    trace_path = config.paths.output_dir / "retrieval_trace.jsonl"
    write_jsonl(trace_path, records)
    print(f"retrieved examples for {len(records)} queries -> {trace_path}")
    return EXIT_OK


def cmd_infer(config: PipelineConfig, jobs: int) -> int:
    gateway = _make_gateway(config)
    state = _pipeline_state(config, gateway)
    queries = load_corpus(config.paths.queries)
    records = []
    for query in queries:
        result = retrieve(query, state, config.retrieval, jobs=jobs)
        verdict = infer(query, result.examples, gateway, config.gateway.model, config.gateway.temperature)
        records.append(prediction_record(verdict))
    predictions_path = config.paths.output_dir / "predictions.jsonl"
    write_jsonl(predictions_path, records)
    print(f"wrote {len(records)} predictions -> {predictions_path}")
    return EXIT_OK


def cmd_eval(config: PipelineConfig, predictions_arg: str | None, gold_arg: str | None) -> int:
    predictions_path = Path(predictions_arg) if predictions_arg else config.paths.output_dir / "predictions.jsonl"
    if gold_arg:
        gold_path = Path(gold_arg)
    else:
        require_paths(config, "queries")
        gold_path = Path(config.paths.queries)
    if not predictions_path.exists():
        raise DataError(f"predictions file {predictions_path} does not exist")
    predictions = load_predictions(predictions_path)
    gold = load_corpus(gold_path)
    report = evaluate(predictions, gold)
    print(format_report_table(report))

    out_dir = config.paths.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "eval_report.json"
    report_path.write_text(json.dumps(report_to_json(report), ensure_ascii=False, indent=2) + "\n", "utf-8")
    csv_path = out_dir / "eval_per_sample.csv"
    with csv_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=["id", "gold", "predicted", "correct", "group"])
        writer.writeheader()
        for record in report.per_sample:
            writer.writerow({"group": "", **record})
    figure = save_eval_figure(report, out_dir / "eval_report.png")
    print(f"report: {report_path}")
    print(f"per-sample: {csv_path}")
    print(f"figure: {figure}")
    return EXIT_OK


def run(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    config = load_config(args.config)
    overrides = {
        "k_top": args.k_top,
        "w1": args.w1,
        "w2": args.w2,
        "threshold": args.threshold,
        "max_path_len": args.max_path_len,
        "model": args.model,
        "mock_script": args.mock_script,
    }
    config = apply_overrides(config, overrides)
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    config.paths.cache_dir.mkdir(parents=True, exist_ok=True)
    config.paths.output_dir.mkdir(parents=True, exist_ok=True)
    if args.command == "build-graph":
        return cmd_build_graph(config)
    if args.command == "extract-patterns":
        return cmd_extract_patterns(config)
    if args.command == "retrieve":
        return cmd_retrieve(config, args.jobs)
    if args.command == "infer":
        return cmd_infer(config, args.jobs)
    if args.command == "eval":
        return cmd_eval(config, args.predictions, args.gold)
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except GatewayError as exc:
        print(f"gateway error: {exc}", file=sys.stderr)
        return EXIT_GATEWAY


if __name__ == "__main__":
    sys.exit(main())

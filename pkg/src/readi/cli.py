"""Command-line entry point: ``readi {kgqa,tableqa,instantiate,bind,report}``."""
from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from readi.errors import DataError, GatewayError, IndexBuildError, ReadiError, RenderError
from readi.evaluation import build_report, load_dataset, per_question, write_per_question_csv
from readi.gateway import SHOT_PROFILES, Gateway, HttpBackend, ScriptedBackend, Transcript, load_transcripts
from readi.instantiate import InstantiatorConfig, instantiate_path
from readi.kg import KnowledgeGraph, load_graph
from readi.paths import ReasoningPath
from readi.relindex import build_index
from readi.session import SessionConfig, read_traces, run_session, run_table_session, write_traces
from readi.table import load_tables

log = logging.getLogger("readi")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

# key -> (type, default); keys may come from --config or flags, flags win
SETTINGS: dict[str, tuple[Callable, object]] = {
    "graph": (str, None),
    "names": (str, None),
    "compound": (str, None),
    "tables": (str, None),
    "dataset": (str, None),
    "backend": (str, None),
    "model": (str, "gpt-3.5-turbo"),
    "retries": (int, 3),
    "backoff": (float, 1.0),
    "profile": (str, "default"),
    "max_edit": (int, 4),
    "bind_k": (int, 5),
    "queue_threshold": (int, 1000),
    "candidate_k": (int, 35),
    "sample_k": (int, 3),
    "temperature": (float, 0.3),
    "out": (str, "runs"),
    "parallel": (int, 1),
    "seed": (int, None),
}


class UsageError(ReadiError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n\n{self.format_help()}")


@dataclass(frozen=True)
class RunConfig:
    graph: str | None
    names: str | None
    compound: str | None
    tables: str | None
    dataset: str | None
    backend: str | None
    model: str
    retries: int
    backoff: float
    profile: str
    max_edit: int
    bind_k: int
    queue_threshold: int
    candidate_k: int
    sample_k: int
    temperature: float
    out: str
    parallel: int
    seed: int | None

    def instantiator(self) -> InstantiatorConfig:
        return InstantiatorConfig(self.bind_k, self.queue_threshold, self.candidate_k, self.sample_k)

    def session(self) -> SessionConfig:
        return SessionConfig(self.max_edit, self.instantiator(), self.temperature, self.seed)


def _read_config(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    cp = configparser.ConfigParser()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    cp.read_string("[readi]\n" + text)
    return {k.replace("-", "_"): v for k, v in cp["readi"].items()}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    file_values = _read_config(getattr(args, "config", None))
    unknown = set(file_values) - set(SETTINGS)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    values = {}
    for key, (typ, default) in SETTINGS.items():
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
        elif key in file_values:
            try:
                values[key] = typ(file_values[key])
            except ValueError as exc:
                raise UsageError(f"config key {key}: {exc}") from exc
        else:
            values[key] = default
    if values["profile"] not in SHOT_PROFILES:
        raise UsageError(f"unknown shot profile {values['profile']!r}; choose from {sorted(SHOT_PROFILES)}")
    if values["parallel"] < 1:
        raise UsageError("--parallel must be >= 1")
    if values["backend"] is not None and values["backend"].partition(":")[0] not in ("scripted", "http"):
        raise UsageError(f"backend must be scripted:FILE or http:URL, got {values['backend']!r}")
    return RunConfig(**values)


def _add_graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", help="triples TSV (subject, predicate, object)")
    p.add_argument("--names", help="names TSV (id, display name)")
    p.add_argument("--compound", help="compound node ids, one per line")


def _add_instantiator_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bind-k", dest="bind_k", type=int)
    p.add_argument("--queue-threshold", dest="queue_threshold", type=int)
    p.add_argument("--candidate-k", dest="candidate_k", type=int)
    p.add_argument("--sample-k", dest="sample_k", type=int)


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value settings file; flags override it")
    p.add_argument("--dataset", help="dataset JSONL")
    p.add_argument("--backend", help="scripted:FILE or http:URL")
    p.add_argument("--model")
    p.add_argument("--retries", type=int)
    p.add_argument("--backoff", type=float)
    p.add_argument("--profile", help=f"shot profile: {', '.join(sorted(SHOT_PROFILES))}")
    p.add_argument("--max-edit", dest="max_edit", type=int)
    p.add_argument("--temperature", type=float)
    p.add_argument("--out", help="output directory")
    p.add_argument("--parallel", type=int)
    p.add_argument("--seed", type=int, help="seed for the table sample-row picker")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="readi", description="Reasoning-path editing over knowledge graphs and tables.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("kgqa", help="run KGQA sessions over a dataset")
    _add_graph_args(p)
    _add_instantiator_args(p)
    _add_run_args(p)

    p = sub.add_parser("tableqa", help="run TableQA sessions over a dataset")
    p.add_argument("--tables", help="directory of table JSON files")
    _add_run_args(p)

    p = sub.add_parser("instantiate", help="ground one path.json and print the outcome")
    _add_graph_args(p)
    _add_instantiator_args(p)
    p.add_argument("--path", required=True, help="path.json")

    p = sub.add_parser("bind", help="print top-k candidate relations for one NL relation")
    _add_graph_args(p)
    p.add_argument("--relation", required=True)
    p.add_argument("--k", type=int, default=5)

    p = sub.add_parser("report", help="recompute metrics from existing traces")
    _add_graph_args(p)
    p.add_argument("--traces", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", help="write report.json here instead of stdout")
    return parser


def _need(cfg: RunConfig, *keys: str) -> None:
    missing = [k for k in keys if getattr(cfg, k) is None]
    if missing:
        raise UsageError("missing required setting(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _graph(cfg: RunConfig) -> KnowledgeGraph:
    _need(cfg, "graph")
    return load_graph(cfg.graph, cfg.names, cfg.compound)


def _index(g: KnowledgeGraph):
    return build_index(g.relations, g.relation_aliases())


def _gateway_factory(cfg: RunConfig) -> tuple[Callable[[str], Gateway], Callable[[], None]]:
    """Returns (question_id -> Gateway, close)."""
    _need(cfg, "backend")
    kind, _, target = cfg.backend.partition(":")
    roles = SHOT_PROFILES[cfg.profile]
    if kind == "scripted":
        try:
            shared, per = load_transcripts(target)
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot read transcript {target}: {exc}") from exc
        if shared is not None and cfg.parallel > 1:
            raise UsageError("a single shared transcript is order-dependent; use --parallel 1 "
                             "or a per-question {\"sessions\": ...} transcript")

        def make(qid: str) -> Gateway:
            if shared is not None:
                return Gateway(ScriptedBackend(shared), roles, cfg.temperature)
            if qid not in per:
                raise DataError(f"transcript has no session for question {qid!r}")
            return Gateway(ScriptedBackend(per[qid]), roles, cfg.temperature)

        return make, lambda: None
    if kind == "http":
        backend = HttpBackend(target, cfg.model, max_retries=cfg.retries, backoff=cfg.backoff)
        return (lambda qid: Gateway(backend, roles, cfg.temperature)), backend.close
    raise UsageError(f"backend must be scripted:FILE or http:URL, got {cfg.backend!r}")


def _map(fn, items, parallel: int) -> list:
    if parallel <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=parallel) as pool:
        return list(pool.map(fn, items))


def _write_run(out: Path, traces, gold, g) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    write_traces(out / "traces.jsonl", traces)
    report = build_report(traces, gold, g)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    write_per_question_csv(out / "per_question.csv", per_question(traces, gold, g))
    return report.to_dict()


def cmd_kgqa(args) -> int:
    cfg = resolve_config(args)
    _need(cfg, "dataset")
    g = _graph(cfg)
    idx = _index(g)
    gold = load_dataset(cfg.dataset)
    for rec in gold:
        if not rec.topic_entities:
            raise DataError(f"record {rec.id}: KGQA needs topic_entities")
    make, close = _gateway_factory(cfg)
    scfg = cfg.session()
    try:
        traces = _map(
            lambda rec: run_session(rec.question, rec.topic_entities, g, idx, make(rec.id), scfg, rec.id),
            gold,
            cfg.parallel,
        )
    finally:
        close()
    print(json.dumps(_write_run(Path(cfg.out), traces, gold, g), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_tableqa(args) -> int:
    cfg = resolve_config(args)
    _need(cfg, "dataset", "tables")
    tables = load_tables(cfg.tables)
    gold = load_dataset(cfg.dataset)
    for rec in gold:
        if rec.table_id not in tables:
            raise DataError(f"record {rec.id}: unknown table_id {rec.table_id!r}")
    make, close = _gateway_factory(cfg)
    scfg = cfg.session()
    try:
        traces = _map(
            lambda rec: run_table_session(rec.question, tables[rec.table_id], make(rec.id), scfg, rec.id),
            gold,
            cfg.parallel,
        )
    finally:
        close()
    print(json.dumps(_write_run(Path(cfg.out), traces, gold, None), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_instantiate(args) -> int:
    cfg = resolve_config(args)
    g = _graph(cfg)
    idx = _index(g)
    try:
        path = ReasoningPath.from_dict(json.loads(Path(args.path).read_text(encoding="utf-8")))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise DataError(f"cannot read path file {args.path}: {exc!r}") from exc
    outcomes = instantiate_path(path, g, idx, cfg.instantiator())
    result = {
        "question_id": path.question_id,
        "outcomes": [
            {
                "start": o.start,
                "instantiated_relations": [list(p) for p in o.instantiated_relations],
                "frontier": sorted(g.friendly_name(e) for e in o.frontier),
                "error": o.error.reason.value if o.error else None,
                "r_err": o.error.r_err if o.error else None,
                "err_position": o.error.err_position if o.error else None,
            }
            for o in outcomes
        ],
    }
    print(json.dumps(result, indent=2, ensure_ascii=False))
    return EXIT_OK


def cmd_bind(args) -> int:
    cfg = resolve_config(args)
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    idx = _index(_graph(cfg))
    for rel, score in idx.bind_relation(args.relation, args.k).candidates:
        print(f"{rel}\t{score:.4f}")
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = resolve_config(args)
    traces = read_traces(args.traces)
    gold = load_dataset(args.dataset)
    g = load_graph(cfg.graph, cfg.names, cfg.compound) if cfg.graph else None
    if g is None and any(t.kind == "kg" for t in traces):
        raise UsageError("--graph is required for KG traces")
    report = build_report(traces, gold, g)
    if args.out:
        Path(args.out).write_text(report.to_json(), encoding="utf-8")
    else:
        sys.stdout.write(report.to_json())
    return EXIT_OK


COMMANDS = {
    "kgqa": cmd_kgqa,
    "tableqa": cmd_tableqa,
    "instantiate": cmd_instantiate,
    "bind": cmd_bind,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required\n\n" + parser.format_help())
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"readi: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, IndexBuildError, GatewayError, RenderError, OSError) as exc:
        print(f"readi: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

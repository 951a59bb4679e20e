"""forge: single entry point for the dataset pipeline.

Subcommands: ingest, generate, balance, split, stats, eval, inspect,
templates. Exit codes: 0 success, 1 pipeline/validation failure, 2 usage.
Diagnostics go to stderr; data goes to files or stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .balance import BalanceConfig, balance_answers, balance_parameters, balance_report
from .dataset import (
    atomic_write_json,
    compute_stats,
    read_dataset,
    read_records_jsonl,
    split_corpus,
    write_dataset,
    write_records_jsonl,
)
from .errors import ForgeError, IoFailure, MalformedInput, UnknownDocument, UnknownPage
from .evaluate import breakdown, evaluate, read_predictions_jsonl
from .generator import GenConfig, generate_corpus, resolve_workers
from .graphs import build_graphs
from .ingest import (
    document_from_processed,
    document_to_processed,
    parse_document,
    preprocess_document,
)
from .model import Document
from .programs import compile_program, execute_with_trace, scope_for
from .templates import load_templates


def load_corpus(path) -> list[Document]:
    """Accept a directory of annotation files, one annotation file, or a
    processed corpus file produced by `forge ingest`."""
    path = Path(path)
    if path.is_dir():
        docs = []
        for child in sorted(path.glob("*.json")):
            docs.append(preprocess_document(parse_document(child.read_bytes())))
        if not docs:
            raise IoFailure(f"no .json documents under {path}")
        return docs
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"{path}: not valid JSON") from exc
    if isinstance(data, dict) and "documents" in data:
        return [document_from_processed(d) for d in data["documents"]]
    return [preprocess_document(parse_document(data))]


def _ratios(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("ratios must be three comma-separated numbers")
    try:
        values = tuple(float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    return values


def _tasks(text: str):
    tasks = tuple(t.strip().upper() for t in text.split(",") if t.strip())
    for t in tasks:
        if t not in ("A", "B", "C"):
            raise argparse.ArgumentTypeError(f"unknown task {t!r}")
    return tasks


def _cmd_ingest(args) -> int:
    corpus = load_corpus(args.input)
    payload = {"documents": [document_to_processed(d) for d in corpus]}
    atomic_write_json(args.out, payload)
    print(f"ingested {len(corpus)} documents -> {args.out}", file=sys.stderr)
    return 0


def _cmd_generate(args) -> int:
    corpus = load_corpus(args.input)
    cfg = GenConfig(seed=args.seed, tasks=args.tasks, na_retention=args.na_rate,
                    per_template_cap=args.template_cap)
    result = generate_corpus(corpus, cfg, max_workers=args.workers)
    write_records_jsonl(result.records, args.out)
    manifest = {
        "records": str(args.out),
        "excluded": [e.as_dict() for e in result.excluded],
        "counts": result.counts,
        "seed": result.seed,
        "config_hash": result.config_hash,
    }
    manifest_path = args.manifest or f"{args.out}.manifest.json"
    atomic_write_json(manifest_path, manifest)
    if args.trace:
        _write_traces(result.records, corpus, args.trace)
    print(f"generated {len(result.records)} records "
          f"({resolve_workers(args.workers)} workers) -> {args.out}", file=sys.stderr)
    return 0


def _write_traces(records, corpus, path) -> None:
    registry = load_templates()
    docs = {doc.doc_id: doc for doc in corpus}
    graphs = {doc_id: build_graphs(doc) for doc_id, doc in docs.items()}
    lines = []
    for record in records:
        doc = docs[record.doc_id]
        page = doc.pages[record.page_index] if record.page_index is not None else None
        tpl = registry.by_id(record.template_id)
        program = compile_program(tpl, record.binding)
        _, trace = execute_with_trace(program, scope_for(record.task, doc, page),
                                      graphs[record.doc_id])
        lines.append(json.dumps({"qid": record.qid, "trace": trace}))
    from .dataset import _atomic_write_text

    _atomic_write_text(Path(path), ("\n".join(lines) + "\n") if lines else "")


def _cmd_balance(args) -> int:
    records = read_records_jsonl(args.input)
    cfg = BalanceConfig(seed=args.seed, answer_ratio=args.answer_ratio,
                        param_ratio=args.param_ratio)
    after = balance_parameters(balance_answers(records, cfg), cfg)
    write_records_jsonl(after, args.out)
    if args.report:
        atomic_write_json(args.report, balance_report(records, after))
    print(f"balanced {len(records)} -> {len(after)} records", file=sys.stderr)
    return 0


def _cmd_split(args) -> int:
    records = read_records_jsonl(args.input)
    splits = split_corpus(records, args.ratios, args.seed)
    write_dataset(splits, args.out_dir)
    sizes = ", ".join(f"{s.name}={len(s.records)}" for s in splits)
    print(f"split {len(records)} records: {sizes}", file=sys.stderr)
    return 0


def _cmd_stats(args) -> int:
    inputs = [Path(p) for p in args.input]
    if len(inputs) == 1 and inputs[0].is_dir():
        splits = read_dataset(inputs[0])
    else:
        from .dataset import DatasetSplit

        splits = []
        for path in inputs:
            records = read_records_jsonl(path)
            doc_ids = tuple(sorted({r.doc_id for r in records}))
            splits.append(DatasetSplit(name=path.stem, records=tuple(records),
                                       doc_ids=doc_ids))
    report = compute_stats(splits)
    if args.out:
        atomic_write_json(args.out, report)
    else:
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        print()
    return 0


def _cmd_eval(args) -> int:
    gold = read_records_jsonl(args.gold)
    preds = read_predictions_jsonl(args.pred)
    report = evaluate(gold, preds, strict=args.strict, averaging=args.averaging)
    print(breakdown(report))
    if args.out:
        atomic_write_json(args.out, report)
    return 0


def _cmd_inspect(args) -> int:
    corpus = load_corpus(args.input)
    doc = next((d for d in corpus if d.doc_id == args.doc), None)
    if doc is None:
        raise UnknownDocument(f"no document {args.doc!r} in corpus")
    pages = {p.index: p for p in doc.pages}
    if args.page not in pages:
        raise UnknownPage(f"document {args.doc!r} has no page {args.page}")
    page = pages[args.page]
    graphs = build_graphs(doc)
    spatial = graphs.spatial[page.index]

    if args.format == "json":
        dump = spatial.dump()
        dump.update(graphs.logical.dump())
        json.dump(dump, sys.stdout, indent=2, sort_keys=True)
        print()
        return 0

    print(f"document {doc.doc_id} page {page.index}: {len(page.elements)} elements")
    for el in sorted(page.elements, key=lambda e: e.page_reading_index):
        text = el.text if len(el.text) <= 40 else el.text[:37] + "..."
        print(f"  [{el.page_reading_index:>2}/{el.doc_reading_index:>3}] "
              f"{el.category.value:<14} {el.id:<12} {text!r}")
    print("spatial edges:")
    for src, dst, rel in sorted(spatial.edge_set()):
        print(f"  {src} -> {dst}: {rel.value}")
    print("parent chains:")
    for el in sorted(page.elements, key=lambda e: e.page_reading_index):
        chain = graphs.logical.ancestors(el.id)
        print(f"  {el.id}: {' -> '.join(chain) if chain else '(root)'}")
    return 0


def _cmd_templates(args) -> int:
    if args.action != "dump":
        raise ForgeError(f"unknown templates action {args.action!r}")
    payload = load_templates().dump()
    if args.out:
        atomic_write_json(args.out, payload)
    else:
        json.dump(payload, sys.stdout, indent=2)
        print()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forge",
        description="Generate, balance, split, and score document-structure VQA datasets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and preprocess annotation JSON")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("generate", help="generate raw QA records")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--tasks", type=_tasks, default=("A", "B", "C"))
    p.add_argument("--na-rate", type=float, default=0.1)
    p.add_argument("--template-cap", type=int, default=None)
    p.add_argument("--workers", type=int, default=None,
                   help="worker count; FORGE_THREADS is the fallback (0 = auto)")
    p.add_argument("--manifest", default=None)
    p.add_argument("--trace", default=None, help="write per-question program traces")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("balance", help="answer- and parameter-based down-sampling")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--answer-ratio", type=float, default=1.5)
    p.add_argument("--param-ratio", type=float, default=2.0)
    p.add_argument("--report", default=None)
    p.set_defaults(func=_cmd_balance)

    p = sub.add_parser("split", help="document-level train/valid/test split")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--ratios", type=_ratios, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("stats", help="descriptive dataset statistics")
    p.add_argument("--in", dest="input", nargs="+", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("eval", help="score predictions against a gold file")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--strict", action="store_true",
                   help="require a prediction for every gold qid")
    p.add_argument("--averaging", choices=("macro", "micro"), default="macro")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("inspect", help="dump one page's elements and graphs")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--doc", required=True)
    p.add_argument("--page", type=int, default=0)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("templates", help="registry export")
    p.add_argument("action", choices=("dump",))
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_templates)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ForgeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""End-to-end QA generation over a corpus.

Documents are independent work units; generation within one document is fully
deterministic given the seed, so per-document outputs can be computed by any
number of workers and merged back in doc_id order without changing a byte.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .errors import AnchorNotFound, OverflowAnswer
from .graphs import GraphBundle, build_graphs
from .hashing import stable_hex, stable_unit
from .ingest import validate_for_generation
from .model import Document, Page, TaskId
from .programs import AnswerValue, compile_program, execute, scope_for
from .templates import (
    QuestionType,
    TemplateRegistry,
    canonical_binding,
    enumerate_bindings,
    instantiate,
    load_templates,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GenConfig:
    seed: int
    tasks: tuple[str, ...] = ("A", "B", "C")
    na_retention: float = 0.1
    per_template_cap: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.na_retention <= 1.0:
            raise ValueError("na_retention must be in [0, 1]")
        for t in self.tasks:
            TaskId(t)

    def hash(self) -> str:
        blob = json.dumps({
            "seed": self.seed,
            "tasks": sorted(self.tasks),
            "na_retention": self.na_retention,
            "per_template_cap": self.per_template_cap,
        }, sort_keys=True)
        return stable_hex("config", blob)


@dataclass(frozen=True)
class QARecord:
    qid: str
    task: TaskId
    qtype: QuestionType
    doc_id: str
    page_index: int | None
    question: str
    template_id: str
    binding: dict
    answer: AnswerValue


@dataclass(frozen=True)
class Exclusion:
    doc_id: str
    task: str
    scope: str
    page_index: int | None
    reason: str

    def as_dict(self) -> dict:
        return {"doc_id": self.doc_id, "task": self.task, "scope": self.scope,
                "page_index": self.page_index, "reason": self.reason}


@dataclass
class GenerationResult:
    records: list[QARecord]
    excluded: list[Exclusion]
    counts: dict = field(default_factory=dict)
    seed: int = 0
    config_hash: str = ""


def make_qid(doc_id: str, page_index: int | None, template_id: str, binding: dict) -> str:
    page_part = "" if page_index is None else page_index
    return stable_hex("qid", doc_id, page_part, template_id, canonical_binding(binding))


def _cap_bindings(bindings, cfg: GenConfig, doc_id: str, page_index, template_id: str):
    cap = cfg.per_template_cap
    if cap is None or len(bindings) <= cap:
        return bindings
    ranked = sorted(
        bindings,
        key=lambda b: stable_unit(cfg.seed, "cap", doc_id, page_index,
                                  template_id, canonical_binding(b)),
    )
    keep = {canonical_binding(b) for b in ranked[:cap]}
    return [b for b in bindings if canonical_binding(b) in keep]


def _emit(tpl, binding, doc, page, graphs, cfg) -> QARecord | None:
    page_index = page.index if page is not None else None
    scope = scope_for(tpl.task, doc, page)
    program = compile_program(tpl, binding)
    try:
        answer = execute(program, scope, graphs)
    except OverflowAnswer:
        return None
    except AnchorNotFound as exc:
        logger.debug("skipping %s on %s: %s", tpl.template_id, doc.doc_id, exc)
        return None
    qid = make_qid(doc.doc_id, page_index, tpl.template_id, binding)
    if answer.kind == "na":
        if tpl.task != TaskId.B:
            return None
        if stable_unit(cfg.seed, "na", qid) >= cfg.na_retention:
            return None
    question = instantiate(tpl, binding, cfg.seed)
    return QARecord(qid=qid, task=tpl.task, qtype=tpl.qtype, doc_id=doc.doc_id,
                    page_index=page_index, question=question.text,
                    template_id=tpl.template_id, binding=dict(binding), answer=answer)


def generate_page(page: Page, doc: Document, graphs: GraphBundle,
                  registry: TemplateRegistry, cfg: GenConfig) -> list[QARecord]:
    """All Task A/B records for one validated page, in canonical order."""
    records = []
    for task in (TaskId.A, TaskId.B):
        if task.value not in cfg.tasks:
            continue
        for tpl in registry.for_task(task):
            bindings = enumerate_bindings(tpl, doc, page, graphs)
            bindings = _cap_bindings(bindings, cfg, doc.doc_id, page.index, tpl.template_id)
            for binding in bindings:
                record = _emit(tpl, binding, doc, page, graphs, cfg)
                if record is not None:
                    records.append(record)
    return records


def generate_document(doc: Document, graphs: GraphBundle,
                      registry: TemplateRegistry, cfg: GenConfig) -> list[QARecord]:
    """All Task C records for one validated document."""
    records = []
    if TaskId.C.value not in cfg.tasks:
        return records
    for tpl in registry.for_task(TaskId.C):
        bindings = enumerate_bindings(tpl, doc, None, graphs)
        bindings = _cap_bindings(bindings, cfg, doc.doc_id, None, tpl.template_id)
        for binding in bindings:
            record = _emit(tpl, binding, doc, None, graphs, cfg)
            if record is not None:
                records.append(record)
    return records


def _document_job(args) -> tuple[str, list[QARecord], list[Exclusion]]:
    doc, cfg = args
    registry = load_templates()
    records: list[QARecord] = []
    excluded: list[Exclusion] = []
    graphs = build_graphs(doc)

    page_by_index = {p.index: p for p in doc.pages}
    ab_pages: list[int] | None = None
    for task_value in ("A", "B"):
        if task_value not in cfg.tasks:
            continue
        report = validate_for_generation(doc, TaskId(task_value))
        excluded.extend(
            Exclusion(doc.doc_id, task_value, e.scope, e.page_index, e.reason)
            for e in report.excluded
        )
        if ab_pages is None and report.document_eligible:
            ab_pages = list(report.eligible_pages)
    if ab_pages:
        for index in ab_pages:
            records.extend(generate_page(page_by_index[index], doc, graphs,
                                         registry, cfg))

    if TaskId.C.value in cfg.tasks:
        report = validate_for_generation(doc, TaskId.C)
        excluded.extend(
            Exclusion(doc.doc_id, "C", e.scope, e.page_index, e.reason)
            for e in report.excluded
        )
        if report.document_eligible:
            records.extend(generate_document(doc, graphs, registry, cfg))
    return doc.doc_id, records, excluded


def resolve_workers(explicit: int | None = None) -> int:
    """Worker count: explicit argument, else FORGE_THREADS (0 = auto), else 1."""
    if explicit is None:
        env = os.environ.get("FORGE_THREADS", "")
        explicit = int(env) if env else 1
    if explicit == 0:
        explicit = os.cpu_count() or 1
    return max(1, explicit)


def generate_corpus(corpus, cfg: GenConfig, max_workers: int | None = None) -> GenerationResult:
    """Run generation over every document, merged in doc_id order."""
    docs = sorted(corpus, key=lambda d: d.doc_id)
    workers = resolve_workers(max_workers)
    jobs = [(doc, cfg) for doc in docs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_document_job, jobs))
    else:
        outputs = [_document_job(job) for job in jobs]
    outputs.sort(key=lambda item: item[0])

    records: list[QARecord] = []
    excluded: list[Exclusion] = []
    for _, doc_records, doc_excluded in outputs:
        records.extend(doc_records)
        excluded.extend(doc_excluded)
    return GenerationResult(records=records, excluded=excluded,
                            counts=count_by_type(records),
                            seed=cfg.seed, config_hash=cfg.hash())


def count_by_type(records) -> dict:
    """Question counts in the per-task, per-type report shape."""
    counts: dict[str, dict[str, int]] = {}
    for task in TaskId:
        counts[task.value] = {
            qtype.value: 0 for qtype in QuestionType if qtype.task == task
        }
    for record in records:
        counts[record.task.value][record.qtype.value] += 1
    return counts

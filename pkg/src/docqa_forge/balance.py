"""Two-stage distribution balancing: answers first, then parameter combos.

Both stages down-sample inside (task, pattern) groups, never across them,
and never touch Task C (its parameter values are nearly unique document
texts, so balancing would only destroy data). Survivor selection ranks
records by a seeded hash, which keeps results identical regardless of
machine, worker count, or input chunking.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

from .generator import QARecord
from .hashing import stable_unit
from .model import TaskId
from .templates import canonical_binding, load_templates


@dataclass(frozen=True)
class BalanceConfig:
    seed: int
    answer_ratio: float = 1.5
    param_ratio: float = 2.0

    def __post_init__(self):
        if self.answer_ratio < 1.0 or self.param_ratio < 1.0:
            raise ValueError("ratio bounds must be >= 1")


def _pattern_of(record: QARecord) -> str:
    return load_templates().by_id(record.template_id).pattern


def group_key(record: QARecord) -> tuple[str, str]:
    return (record.task.value, _pattern_of(record))


def _grouped(records):
    groups: dict[tuple[str, str], list[QARecord]] = {}
    for record in records:
        groups.setdefault(group_key(record), []).append(record)
    return groups


def _survivors(members: list[QARecord], cap: int, seed: int, salt: str) -> set[str]:
    if len(members) <= cap:
        return {r.qid for r in members}
    ranked = sorted(members, key=lambda r: (stable_unit(seed, salt, r.qid), r.qid))
    return {r.qid for r in ranked[:cap]}


def balance_answers(records: list[QARecord], cfg: BalanceConfig) -> list[QARecord]:
    """Cap every answer class at ceil(r_a x smallest nonempty class) per group."""
    keep: set[str] = set()
    for (task, pattern), members in _grouped(records).items():
        if task == TaskId.C.value:
            keep.update(r.qid for r in members)
            continue
        classes: dict[str, list[QARecord]] = {}
        for r in members:
            classes.setdefault(r.answer.canonical(), []).append(r)
        smallest = min(len(rs) for rs in classes.values())
        cap = math.ceil(cfg.answer_ratio * smallest)
        for label, rs in classes.items():
            keep.update(_survivors(rs, cap, cfg.seed, f"ans|{task}|{pattern}|{label}"))
    return [r for r in records if r.qid in keep]


def balance_parameters(records: list[QARecord], cfg: BalanceConfig) -> list[QARecord]:
    """Cap every parameter-value combination at ceil(r_p x median combo count)."""
    keep: set[str] = set()
    for (task, pattern), members in _grouped(records).items():
        if task == TaskId.C.value:
            keep.update(r.qid for r in members)
            continue
        combos: dict[str, list[QARecord]] = {}
        for r in members:
            combos.setdefault(canonical_binding(r.binding), []).append(r)
        median = statistics.median(sorted(len(rs) for rs in combos.values()))
        cap = max(1, math.ceil(cfg.param_ratio * median))
        for combo, rs in combos.items():
            keep.update(_survivors(rs, cap, cfg.seed, f"par|{task}|{pattern}|{combo}"))
    return [r for r in records if r.qid in keep]


def balance(records: list[QARecord], cfg: BalanceConfig) -> list[QARecord]:
    """Answer-based stage followed by the question-based smoothing stage."""
    return balance_parameters(balance_answers(records, cfg), cfg)


def reduction_factor(before: int, after: int) -> float | None:
    if after == 0:
        return None
    return round(before / after, 2)


def _class_ratio(members) -> float | None:
    sizes: dict[str, int] = {}
    for r in members:
        label = r.answer.canonical()
        sizes[label] = sizes.get(label, 0) + 1
    if not sizes:
        return None
    return max(sizes.values()) / min(sizes.values())


def _combo_ratio(members) -> float | None:
    sizes: dict[str, int] = {}
    for r in members:
        combo = canonical_binding(r.binding)
        sizes[combo] = sizes.get(combo, 0) + 1
    if not sizes:
        return None
    return max(sizes.values()) / statistics.median(sorted(sizes.values()))


def balance_report(before: list[QARecord], after: list[QARecord]) -> dict:
    """Per-task shrinkage plus worst remaining skew ratios across groups."""
    report: dict = {"tasks": {}}
    for task in TaskId:
        n_before = sum(1 for r in before if r.task == task)
        n_after = sum(1 for r in after if r.task == task)
        report["tasks"][task.value] = {
            "before": n_before,
            "after": n_after,
            "reduction_factor": reduction_factor(n_before, n_after),
        }
    for name, metric in (("answer_class_ratio", _class_ratio),
                         ("param_combo_ratio", _combo_ratio)):
        per_task: dict[str, float | None] = {}
        for task in TaskId:
            if task == TaskId.C:
                per_task[task.value] = None
                continue
            ratios = [
                metric(members)
                for (t, _), members in _grouped(after).items()
                if t == task.value
            ]
            ratios = [r for r in ratios if r is not None]
            per_task[task.value] = round(max(ratios), 4) if ratios else None
        report[name] = per_task
    return report

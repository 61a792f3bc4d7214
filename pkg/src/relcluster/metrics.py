"""Pairwise precision / recall / F1 of a clustering against gold labels.

Pairs are unordered pairs of gold-labeled instances. A pair is predicted
positive when both instances share a predicted cluster, gold positive when
they share a gold label, and a true positive when both hold. Instances
without a gold label are excluded entirely. All zero-denominator cases
resolve to 0.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .clustering import ClusterAssignment
from .corpus import ValidationError


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    n_evaluated: int
    true_positive_pairs: int
    predicted_positive_pairs: int
    gold_positive_pairs: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


def _pairs(count: int) -> int:
    return count * (count - 1) // 2


def pairwise_f1(assignment: ClusterAssignment, gold: Mapping[str, str]) -> EvalReport:
    """Score the assignment over all pairs of gold-labeled instances."""
    evaluated = [
        (label, gold[inst_id])
        for inst_id, label in zip(assignment.ids, assignment.labels)
        if gold.get(inst_id) is not None
    ]
    if len(evaluated) < 2:
        raise ValidationError(
            f"pairwise evaluation needs at least 2 gold-labeled instances, "
            f"got {len(evaluated)}"
        )
    pred_counts = Counter(pred for pred, _ in evaluated)
    gold_counts = Counter(g for _, g in evaluated)
    joint_counts = Counter(evaluated)
    pp = sum(_pairs(c) for c in pred_counts.values())
    gp = sum(_pairs(c) for c in gold_counts.values())
    tp = sum(_pairs(c) for c in joint_counts.values())
    precision = tp / pp if pp > 0 else 0.0
    recall = tp / gp if gp > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return EvalReport(
        precision=precision,
        recall=recall,
        f1=f1,
        n_evaluated=len(evaluated),
        true_positive_pairs=tp,
        predicted_positive_pairs=pp,
        gold_positive_pairs=gp,
    )


def compare_runs(
    reports: Sequence[tuple[str, EvalReport]]
) -> list[tuple[str, EvalReport]]:
    """Rank named reports by F1 descending; ties order by name."""
    if not reports:
        raise ValidationError("nothing to rank: no reports given")
    return sorted(reports, key=lambda item: (-item[1].f1, item[0]))


def format_ranking(ranked: Sequence[tuple[str, EvalReport]]) -> str:
    """Human-readable ranking table; percentages with one decimal place."""
    name_width = max(len("run"), max(len(name) for name, _ in ranked))
    lines = [f"{'run':<{name_width}}  {'P%':>6}  {'R%':>6}  {'F1%':>6}"]
    for name, report in ranked:
        lines.append(
            f"{name:<{name_width}}  {100 * report.precision:>6.1f}  "
            f"{100 * report.recall:>6.1f}  {100 * report.f1:>6.1f}"
        )
    return "\n".join(lines)


def format_report(report: EvalReport) -> str:
    """Human-readable summary of one evaluation."""
    return (
        f"pairwise precision: {100 * report.precision:.1f}%\n"
        f"pairwise recall:    {100 * report.recall:.1f}%\n"
        f"pairwise F1:        {100 * report.f1:.1f}%\n"
        f"pairs: tp={report.true_positive_pairs} "
        f"predicted={report.predicted_positive_pairs} "
        f"gold={report.gold_positive_pairs} "
        f"({report.n_evaluated} instances evaluated)"
    )


def save_report(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(report.to_json(), encoding="utf-8", newline="\n")


def load_report(path: str | Path) -> EvalReport:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return EvalReport(**obj)

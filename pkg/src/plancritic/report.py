"""Scoring of run records and report emission.

Accuracy is the fraction of runs whose final plan validates as correct,
reported with a 95% normal-approximation confidence interval.  The per-step
series reads each run "as of" step t: once a plan was accepted it stands;
otherwise the latest plan proposed by then counts.  Per-step confusion
counts compare the critic's call (positive = plan judged correct) against
ground truth at each round where a critique was issued.

Scoring is a pure function of records plus the problems they refer to, so
runs can be re-scored offline without touching any backend.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .critics import CritiqueLabel
from .orchestrator import RunRecord
from .pddl import DomainDef, ProblemDef, parse_plan
from .semantics import validate_plan

Z_95 = 1.96


class MissingProblem(KeyError):
    pass


def wald_ci(p: float, n: int) -> float:
    """Half-width of the 95% normal-approximation interval for a proportion."""
    if n <= 0:
        raise ValueError("n must be positive")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be a proportion")
    return Z_95 * math.sqrt(p * (1.0 - p) / n)


@dataclass(frozen=True)
class StepMetrics:
    step: int
    n_correct: int
    accuracy: float
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n_critiques(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def precision(self) -> float | None:
        denom = self.tp + self.fp
        return self.tp / denom if denom else None

    @property
    def recall(self) -> float | None:
        denom = self.tp + self.fn
        return self.tp / denom if denom else None

    @property
    def critic_accuracy(self) -> float | None:
        total = self.n_critiques
        return (self.tp + self.tn) / total if total else None


@dataclass(frozen=True)
class Metrics:
    n: int
    accuracy: float
    ci_half_width: float
    mean_llm_calls: float
    steps: tuple[StepMetrics, ...]


def _plan_as_of(record: RunRecord, step: int) -> str:
    """The plan standing at the end of step ``step`` (accepted plans stick)."""
    if not record.iterations or step > record.iterations[-1].step:
        # the run was over by this step; whatever it ended with stands
        return record.final_plan
    chosen = ""
    for entry in record.iterations:
        if entry.step > step:
            break
        chosen = entry.plan
        if entry.critic_label == CritiqueLabel.CORRECT.value:
            return entry.plan
    return chosen


def score(
    records: Sequence[RunRecord],
    domain: DomainDef,
    problems: Mapping[str, ProblemDef],
) -> Metrics:
    """Recompute ground truth for every recorded plan and aggregate."""
    if not records:
        raise ValueError("no records to score")
    for record in records:
        if record.problem_id not in problems:
            raise MissingProblem(record.problem_id)

    cache: dict[tuple[str, str], bool] = {}

    def is_correct(problem_id: str, plan_text: str) -> bool:
        key = (problem_id, plan_text)
        if key not in cache:
            problem = problems[problem_id]
            plan = parse_plan(plan_text, domain)
            cache[key] = validate_plan(problem, plan, domain).is_correct
        return cache[key]

    n = len(records)
    n_final_correct = sum(1 for r in records if is_correct(r.problem_id, r.final_plan))
    accuracy = n_final_correct / n

    k = max(r.max_steps for r in records)
    steps = []
    for step in range(k + 1):
        n_correct = 0
        tp = fp = tn = fn = 0
        for record in records:
            if is_correct(record.problem_id, _plan_as_of(record, step)):
                n_correct += 1
            for entry in record.iterations:
                if entry.step != step:
                    continue
                truth = is_correct(record.problem_id, entry.plan)
                said_correct = entry.critic_label == CritiqueLabel.CORRECT.value
                if said_correct and truth:
                    tp += 1
                elif said_correct:
                    fp += 1
                elif truth:
                    fn += 1
                else:
                    tn += 1
        steps.append(StepMetrics(step, n_correct, n_correct / n, tp, fp, tn, fn))

    return Metrics(
        n=n,
        accuracy=accuracy,
        ci_half_width=wald_ci(accuracy, n),
        mean_llm_calls=sum(r.llm_calls for r in records) / n,
        steps=tuple(steps),
    )


# ---------------------------------------------------------------------------
# Emission


def summary_line(metrics: Metrics) -> str:
    """Percent accuracy with its interval, e.g. ``85.5±2.8``."""
    return f"{metrics.accuracy * 100:.1f}±{metrics.ci_half_width * 100:.1f}"


def metrics_to_dict(metrics: Metrics) -> dict:
    return {
        "n": metrics.n,
        "accuracy": round(metrics.accuracy, 6),
        "ci_half_width": round(metrics.ci_half_width, 6),
        "summary": summary_line(metrics),
        "mean_llm_calls": round(metrics.mean_llm_calls, 6),
        "steps": [
            {
                "step": s.step,
                "n_correct": s.n_correct,
                "accuracy": round(s.accuracy, 6),
                "tp": s.tp,
                "fp": s.fp,
                "tn": s.tn,
                "fn": s.fn,
                "precision": round(s.precision, 6) if s.precision is not None else None,
                "recall": round(s.recall, 6) if s.recall is not None else None,
                "critic_accuracy": round(s.critic_accuracy, 6)
                if s.critic_accuracy is not None
                else None,
            }
            for s in metrics.steps
        ],
    }


def _steps_csv(metrics: Metrics) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["step", "n_correct", "accuracy", "tp", "fp", "tn", "fn", "precision", "recall"]
    )
    for s in metrics.steps:
        writer.writerow(
            [
                s.step,
                s.n_correct,
                f"{s.accuracy:.6f}",
                s.tp,
                s.fp,
                s.tn,
                s.fn,
                f"{s.precision:.6f}" if s.precision is not None else "",
                f"{s.recall:.6f}" if s.recall is not None else "",
            ]
        )
    return buf.getvalue()


def _table_text(metrics: Metrics) -> str:
    lines = [
        f"accuracy: {summary_line(metrics)} (n={metrics.n})",
        f"mean llm calls: {metrics.mean_llm_calls:.2f}",
        "",
        f"{'step':>4}  {'correct':>7}  {'accuracy':>8}  {'tp':>5}  {'fp':>5}  {'tn':>5}  {'fn':>5}  {'precision':>9}  {'recall':>9}",
    ]
    for s in metrics.steps:
        precision = f"{s.precision:.3f}" if s.precision is not None else "-"
        recall = f"{s.recall:.3f}" if s.recall is not None else "-"
        lines.append(
            f"{s.step:>4}  {s.n_correct:>7}  {s.accuracy:>8.3f}  {s.tp:>5}  {s.fp:>5}  {s.tn:>5}  {s.fn:>5}  {precision:>9}  {recall:>9}"
        )
    return "\n".join(lines) + "\n"


REPORT_FORMATS = ("table-text", "csv", "structured")


def emit_report(metrics: Metrics, fmt: str, out_dir: str | Path) -> list[Path]:
    """Write the report in one format; returns the files written."""
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"unknown report format {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "table-text":
        path = out / "report.txt"
        path.write_text(_table_text(metrics))
        written.append(path)
    elif fmt == "csv":
        steps = out / "steps.csv"
        steps.write_text(_steps_csv(metrics))
        summary = out / "summary.txt"
        summary.write_text(summary_line(metrics) + "\n")
        written.extend([steps, summary])
    else:
        path = out / "metrics.json"
        path.write_text(json.dumps(metrics_to_dict(metrics), indent=2, sort_keys=True) + "\n")
        written.append(path)
    return written

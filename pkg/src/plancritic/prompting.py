"""Byte-stable prompt assembly, few-shot selection, and transcripts.

Planning prompts show the domain, worked (problem, plan) example blocks, and
the target problem.  When earlier attempts were rejected, the transcript of
(plan, critique, repair request) turns is appended so the model revises its
own output.  Critique prompts come in five fixed variants that differ in how
much guidance they give the judge.

All rendering is deterministic: the same inputs always produce the same
bytes, so prompts can be frozen as golden files.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Mapping, Sequence

from .pddl import DomainDef, Plan, ProblemDef, print_domain, print_plan, print_problem
from .semantics import validate_plan


class TemplateId(str, Enum):
    PLAN_FEWSHOT = "plan_fewshot"
    CRITIQUE_FEWSHOT = "critique_fewshot"
    CRITIQUE_0SHOT_DD = "critique_0shot_dd"
    CRITIQUE_0SHOT_NO_DD = "critique_0shot_no_dd"
    CRITIQUE_NO_3STEP = "critique_no_3step"
    CRITIQUE_VERIFY_PLAN = "critique_verify_plan"


CRITIQUE_TEMPLATES = (
    TemplateId.CRITIQUE_FEWSHOT,
    TemplateId.CRITIQUE_0SHOT_DD,
    TemplateId.CRITIQUE_0SHOT_NO_DD,
    TemplateId.CRITIQUE_NO_3STEP,
    TemplateId.CRITIQUE_VERIFY_PLAN,
)


class BudgetExceeded(Exception):
    """The rendered prompt no longer fits the transcript's character budget."""

    def __init__(self, length: int, budget: int):
        super().__init__(f"prompt length {length} exceeds budget {budget}")
        self.length = length
        self.budget = budget


class PoolTooSmall(ValueError):
    pass


class MissingPlaceholderValue(KeyError):
    pass


REPAIR_REQUEST = "Please can you explain the error and fix it."
_SHOT_BLOCK = (
    "Example of a problem and its solution (plan):\n"
    "{problem}\n\nThe plan without formatting:\n{plan}\n\n\n"
)

_PLACEHOLDER = re.compile(r"\{([a-z_]+)\}")


def load_template(template_id: TemplateId) -> str:
    path = resources.files(__package__) / "templates" / f"{template_id.value}.txt"
    return path.read_text(encoding="utf-8")


def render_template(body: str, values: Mapping[str, str]) -> str:
    """Substitute ``{name}`` placeholders in one pass.

    Values are inserted verbatim and never re-scanned, so braces inside them
    are safe.  A placeholder without a value raises MissingPlaceholderValue.
    """

    def lookup(match: re.Match) -> str:
        name = match.group(1)
        if name not in values:
            raise MissingPlaceholderValue(name)
        return values[name]

    return _PLACEHOLDER.sub(lookup, body)


# ---------------------------------------------------------------------------
# Few-shot pools


@dataclass(frozen=True)
class Exemplar:
    problem: ProblemDef
    plan: Plan


@dataclass(frozen=True)
class FewShotPool:
    exemplars: tuple[Exemplar, ...]
    seed: int

    def __len__(self) -> int:
        return len(self.exemplars)


def build_pool(domain: DomainDef, exemplars: Sequence[Exemplar], seed: int) -> FewShotPool:
    """Build a pool, checking every exemplar's plan actually solves its problem."""
    for ex in exemplars:
        if not validate_plan(ex.problem, ex.plan, domain).is_correct:
            raise ValueError(f"exemplar plan for {ex.problem.name!r} does not validate")
    return FewShotPool(tuple(exemplars), seed)


def select_fewshots(pool: FewShotPool, problem_id: str, n: int) -> tuple[Exemplar, ...]:
    """Deterministic selection of ``n`` exemplars for one problem.

    The full pool is permuted by a stream keyed on (pool seed, problem id)
    and the first ``n`` entries are taken, so a smaller selection is always a
    prefix of a larger one.  The caller must keep the target problem out of
    the pool.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > len(pool.exemplars):
        raise PoolTooSmall(f"asked for {n} exemplars, pool has {len(pool.exemplars)}")
    rng = random.Random(f"{pool.seed}:{problem_id}")
    order = list(range(len(pool.exemplars)))
    rng.shuffle(order)
    return tuple(pool.exemplars[i] for i in order[:n])


# ---------------------------------------------------------------------------
# Transcripts


@dataclass(frozen=True)
class TranscriptEntry:
    plan_text: str
    critique_text: str
    repair_requested: bool = True


@dataclass
class Transcript:
    """Ordered record of rejected attempts, with a character budget."""

    char_budget: int | None = None
    entries: list[TranscriptEntry] = field(default_factory=list)

    def append(self, plan_text: str, critique_text: str) -> None:
        self.entries.append(TranscriptEntry(plan_text, critique_text))

    def render(self) -> str:
        parts = []
        for entry in self.entries:
            text = "The clean plan:\n" + entry.plan_text + "\n" + entry.critique_text
            if entry.repair_requested:
                text += "\n\n" + REPAIR_REQUEST
            parts.append(text + "\n")
        return "".join(parts)

    def __len__(self) -> int:
        return len(self.entries)


# ---------------------------------------------------------------------------
# Prompt builders


def render_shot(exemplar: Exemplar) -> str:
    return _SHOT_BLOCK.format(
        problem=print_problem(exemplar.problem), plan=print_plan(exemplar.plan)
    )


def build_plan_prompt(
    domain: DomainDef,
    problem: ProblemDef,
    shots: Sequence[Exemplar] = (),
    transcript: Transcript | None = None,
) -> str:
    """Assemble the planning prompt; raises BudgetExceeded when too long."""
    body = load_template(TemplateId.PLAN_FEWSHOT)
    text = render_template(
        body,
        {
            "domain_pddl": print_domain(domain),
            "few_shots": "".join(render_shot(s) for s in shots),
            "instance": print_problem(problem),
        },
    )
    if transcript is not None:
        text += transcript.render()
        budget = transcript.char_budget
        if budget is not None and len(text) > budget:
            raise BudgetExceeded(len(text), budget)
    return text


def build_critique_prompt(
    template_id: TemplateId,
    domain: DomainDef,
    problem: ProblemDef,
    plan: Plan,
    exemplars: Sequence[str] | None = None,
) -> str:
    """Assemble one of the five critique prompts.

    ``exemplars`` are pre-rendered verification walkthrough texts; they are
    required by the few-shot variant and rejected by the others.
    """
    if template_id not in CRITIQUE_TEMPLATES:
        raise ValueError(f"{template_id} is not a critique template")
    if template_id is TemplateId.CRITIQUE_FEWSHOT:
        if not exemplars:
            raise MissingPlaceholderValue("self_evaluations_exemplars")
    elif exemplars:
        raise ValueError(f"{template_id.value} does not take exemplars")
    values = {
        "domain_pddl": print_domain(domain),
        "instance": print_problem(problem),
        "plan": print_plan(plan),
    }
    if exemplars:
        values["self_evaluations_exemplars"] = "\n\n".join(exemplars)
    return render_template(load_template(template_id), values)

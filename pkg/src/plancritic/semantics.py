"""Ground-truth STRIPS execution semantics.

A state is a frozen set of ground atoms under the closed-world assumption.
Applying an action removes its delete effects and then unions its add
effects.  Plan validation simulates step by step, stops at the first
inapplicable action, and reports one of three verdicts: the plan is correct,
the plan is wrong at a specific step (with every unmet precondition listed),
or the plan executes but the goal is not reached.
"""

from __future__ import annotations

from dataclasses import dataclass

from .pddl import (
    ActionSchema,
    ArityMismatch,
    Atom,
    DomainDef,
    GroundAction,
    PddlError,
    Plan,
    ProblemDef,
    UnknownAction,
)

State = frozenset[Atom]


class InapplicableAction(PddlError):
    """Raised by :func:`apply` when preconditions do not hold."""

    def __init__(self, action: GroundAction, unmet: tuple[Atom, ...]):
        super().__init__(
            f"preconditions not met for {action}: " + ", ".join(str(a) for a in unmet)
        )
        self.action = action
        self.unmet = unmet


@dataclass(frozen=True)
class Correct:
    pass


@dataclass(frozen=True)
class WrongAtStep:
    step: int  # 1-based index of the first failing action
    unmet: tuple[Atom, ...]


@dataclass(frozen=True)
class GoalNotReached:
    unsatisfied: tuple[Atom, ...]


PlanVerdict = Correct | WrongAtStep | GoalNotReached

# the assessment phrases critics are asked to conclude with
PHRASE_CORRECT = "the plan is correct"
PHRASE_WRONG = "the plan is wrong"
PHRASE_GOAL_NOT_REACHED = "goal not reached"


@dataclass(frozen=True)
class StepTrace:
    """One simulated step: the checks made and the state transition."""

    index: int  # 1-based
    action: GroundAction
    state_before: State
    checks: tuple[tuple[Atom, bool], ...]
    state_after: State | None  # None when the step failed

    @property
    def unmet(self) -> tuple[Atom, ...]:
        return tuple(atom for atom, ok in self.checks if not ok)

    @property
    def applied(self) -> bool:
        return self.state_after is not None


@dataclass(frozen=True)
class ValidationResult:
    verdict: PlanVerdict
    trace: tuple[StepTrace, ...]

    @property
    def is_correct(self) -> bool:
        return isinstance(self.verdict, Correct)


def initial_state(problem: ProblemDef) -> State:
    return frozenset(problem.init)


def _bind(domain: DomainDef, action: GroundAction) -> tuple[ActionSchema, dict[str, str]]:
    schema = domain.action(action.name)
    if schema is None:
        raise UnknownAction(f"unknown action {action.name!r}")
    if len(schema.parameters) != len(action.args):
        raise ArityMismatch(
            f"{action.name} expects {len(schema.parameters)} argument(s), got {len(action.args)}"
        )
    return schema, dict(zip(schema.parameters, action.args))


def precondition_checks(
    state: State, action: GroundAction, domain: DomainDef
) -> tuple[tuple[Atom, bool], ...]:
    """Evaluate each ground precondition of ``action`` against ``state``."""
    schema, binding = _bind(domain, action)
    return tuple(
        (ground, ground in state)
        for ground in (atom.substitute(binding) for atom in schema.precondition)
    )


def is_applicable(
    state: State, action: GroundAction, domain: DomainDef
) -> tuple[bool, tuple[Atom, ...]]:
    """Return ``(ok, unmet)`` where ``unmet`` lists every failing precondition."""
    checks = precondition_checks(state, action, domain)
    unmet = tuple(atom for atom, ok in checks if not ok)
    return not unmet, unmet


def apply(state: State, action: GroundAction, domain: DomainDef) -> State:
    """Apply ``action`` to ``state``; raises InapplicableAction if it cannot fire."""
    ok, unmet = is_applicable(state, action, domain)
    if not ok:
        raise InapplicableAction(action, unmet)
    schema, binding = _bind(domain, action)
    dels = {atom.substitute(binding) for atom in schema.del_effects}
    adds = {atom.substitute(binding) for atom in schema.add_effects}
    return (state - dels) | adds


def goal_satisfied(state: State, problem: ProblemDef) -> tuple[bool, tuple[Atom, ...]]:
    """Return ``(ok, unsatisfied)`` with misses in goal declaration order."""
    unsatisfied = tuple(atom for atom in problem.goal if atom not in state)
    return not unsatisfied, unsatisfied


def validate_plan(problem: ProblemDef, plan: Plan, domain: DomainDef) -> ValidationResult:
    """Simulate ``plan`` from the initial state and judge it.

    The trace covers exactly the executed prefix, including the failing step
    when there is one.
    """
    state = initial_state(problem)
    trace: list[StepTrace] = []
    for index, action in enumerate(plan.steps, start=1):
        checks = precondition_checks(state, action, domain)
        unmet = tuple(atom for atom, ok in checks if not ok)
        if unmet:
            trace.append(StepTrace(index, action, state, checks, None))
            return ValidationResult(WrongAtStep(index, unmet), tuple(trace))
        after = apply(state, action, domain)
        trace.append(StepTrace(index, action, state, checks, after))
        state = after
    ok, unsatisfied = goal_satisfied(state, problem)
    if ok:
        return ValidationResult(Correct(), tuple(trace))
    return ValidationResult(GoalNotReached(unsatisfied), tuple(trace))


def final_state(problem: ProblemDef, result: ValidationResult) -> State:
    """State after the last applied step of the trace."""
    for step in reversed(result.trace):
        if step.state_after is not None:
            return step.state_after
    return initial_state(problem)


# ---------------------------------------------------------------------------
# Text and record serialization


def verdict_phrase(verdict: PlanVerdict) -> str:
    if isinstance(verdict, Correct):
        return PHRASE_CORRECT
    if isinstance(verdict, WrongAtStep):
        return PHRASE_WRONG
    return PHRASE_GOAL_NOT_REACHED


def format_state(state: State) -> str:
    return "\n".join(str(atom) for atom in sorted(state, key=Atom.sort_key))


def format_trace(result: ValidationResult) -> str:
    """Render the step-by-step verification, one block per simulated step."""
    blocks = []
    for step in result.trace:
        lines = [f"**step {step.index}: {step.action}**", "preconditions:"]
        for atom, ok in step.checks:
            lines.append(f"- {atom}: {'true' if ok else 'false'}")
        if not step.checks:
            lines.append("- none")
        if step.applied:
            lines.append("all preconditions are met.")
            lines.append("resulting state:")
            lines.append(format_state(step.state_after))
        else:
            lines.append("preconditions are not met.")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


def format_verdict(verdict: PlanVerdict) -> str:
    """Human-readable detail ending with the literal assessment phrase."""
    if isinstance(verdict, Correct):
        return "all goal atoms hold in the final state.\n" + PHRASE_CORRECT
    if isinstance(verdict, WrongAtStep):
        unmet = ", ".join(str(a) for a in verdict.unmet)
        return (
            f"the preconditions {unmet} are not met at step {verdict.step}.\n" + PHRASE_WRONG
        )
    unsat = ", ".join(str(a) for a in verdict.unsatisfied)
    return f"unsatisfied goal atoms: {unsat}.\n" + PHRASE_GOAL_NOT_REACHED


def verdict_to_dict(verdict: PlanVerdict) -> dict:
    if isinstance(verdict, Correct):
        return {"verdict": "correct"}
    if isinstance(verdict, WrongAtStep):
        return {
            "verdict": "wrong_at_step",
            "step": verdict.step,
            "unmet": [str(a) for a in verdict.unmet],
        }
    return {
        "verdict": "goal_not_reached",
        "unsatisfied": [str(a) for a in verdict.unsatisfied],
    }


def verdict_from_dict(data: dict) -> PlanVerdict:
    kind = data["verdict"]
    if kind == "correct":
        return Correct()
    if kind == "wrong_at_step":
        return WrongAtStep(data["step"], tuple(_parse_atom_str(a) for a in data["unmet"]))
    if kind == "goal_not_reached":
        return GoalNotReached(tuple(_parse_atom_str(a) for a in data["unsatisfied"]))
    raise ValueError(f"unknown verdict kind {kind!r}")


def _parse_atom_str(text: str) -> Atom:
    parts = text.strip()[1:-1].split()
    return Atom(parts[0], tuple(parts[1:]))


def validation_to_dict(result: ValidationResult) -> dict:
    """Structured form of a validation result for machine consumption."""
    return {
        **verdict_to_dict(result.verdict),
        "trace": [
            {
                "index": step.index,
                "action": str(step.action),
                "checks": [[str(atom), ok] for atom, ok in step.checks],
                "state_after": sorted(str(a) for a in step.state_after)
                if step.state_after is not None
                else None,
            }
            for step in result.trace
        ],
    }

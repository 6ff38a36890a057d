"""Plan mutation helpers used by the validator/oracle equivalence tests.

Each mutation of a *shortest* plan is guaranteed non-correct:

* drop: removing a step from a shortest plan cannot leave a valid plan (it
  would contradict minimality).
* swap: every blocksworld action either requires the hand empty or requires
  it holding something, and flips that state; swapping two adjacent steps
  therefore always fails exactly at the first swapped position.
* replace: a random replacement may coincidentally still work, so candidates
  are filtered through the independent executor until one breaks the plan.
"""

import hashlib
import random

from plancritic.pddl import DomainDef, Plan, ProblemDef
from plancritic.search import ground_actions, run_plan


def tree_digest(root):
    """Hash of every file's relative path and bytes under ``root``."""
    digest = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file():
            digest.update(str(path.relative_to(root)).encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()


def mutate_drop(plan: Plan, rng: random.Random) -> Plan:
    i = rng.randrange(len(plan.steps))
    return Plan(plan.steps[:i] + plan.steps[i + 1 :])


def mutate_swap(plan: Plan, rng: random.Random) -> tuple[Plan, int]:
    """Swap two adjacent steps; returns (plan, 1-based index of first swapped)."""
    i = rng.randrange(len(plan.steps) - 1)
    steps = list(plan.steps)
    steps[i], steps[i + 1] = steps[i + 1], steps[i]
    return Plan(tuple(steps)), i + 1


def mutate_replace(
    domain: DomainDef, problem: ProblemDef, plan: Plan, rng: random.Random, attempts: int = 200
) -> Plan:
    """Replace one step with a random ground action so the plan breaks.

    Candidates that still reach the goal (checked with the independent
    executor, not the validator under test) are rejected and resampled.
    """
    actions = ground_actions(domain, problem)
    for _ in range(attempts):
        i = rng.randrange(len(plan.steps))
        replacement = actions[rng.randrange(len(actions))]
        if replacement == plan.steps[i]:
            continue
        steps = list(plan.steps)
        steps[i] = replacement
        candidate = Plan(tuple(steps))
        if not run_plan(domain, problem, candidate).accepted:
            return candidate
    raise AssertionError("could not find a breaking replacement")

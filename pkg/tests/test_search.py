from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plancritic.generators import GenSpec, generate
from plancritic.pddl import GroundAction, Plan, parse_plan, parse_problem
from plancritic.search import (
    ExecutionOutcome,
    SearchLimits,
    SearchStatus,
    bfs_plan,
    ground_actions,
    run_plan,
)
from plancritic.semantics import apply, goal_satisfied, initial_state, is_applicable, validate_plan

THREE_BLOCKS = """\
(define (problem three)
(:domain blocksworld-4ops)
(:objects a b c)
(:init (on c a) (ontable a) (ontable b) (clear c) (clear b) (handempty))
(:goal (and (on a b) (on b c)))
)
"""


def reference_shortest_length(domain, problem, max_depth=30):
    """Independent breadth-first search written directly over the semantics
    module, used to cross-check bfs_plan's optimality."""
    start = initial_state(problem)
    if goal_satisfied(start, problem)[0]:
        return 0
    actions = ground_actions(domain, problem)
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        state, depth = frontier.popleft()
        if depth >= max_depth:
            continue
        for action in actions:
            if not is_applicable(state, action, domain)[0]:
                continue
            nxt = apply(state, action, domain)
            if nxt in seen:
                continue
            if goal_satisfied(nxt, problem)[0]:
                return depth + 1
            seen.add(nxt)
            frontier.append((nxt, depth + 1))
    return None


class TestGrounding:
    def test_three_block_count_and_order(self, bw_domain):
        problem = parse_problem(THREE_BLOCKS, bw_domain)
        actions = ground_actions(bw_domain, problem)
        assert len(actions) == 18  # 3 + 3 + 6 + 6
        # schemas in declaration order, objects sorted, distinct args
        assert actions[:3] == [
            GroundAction("pick-up", ("a",)),
            GroundAction("pick-up", ("b",)),
            GroundAction("pick-up", ("c",)),
        ]
        assert actions[6] == GroundAction("stack", ("a", "b"))
        assert all(
            len(set(a.args)) == len(a.args) for a in actions
        ), "ground arguments must be pairwise distinct"

    def test_logistics_grounding_allows_repeats_only_across_roles(self, bw_domain):
        # same-arg grounding like (stack a a) must not appear
        problem = parse_problem(THREE_BLOCKS, bw_domain)
        actions = ground_actions(bw_domain, problem)
        assert GroundAction("stack", ("a", "a")) not in actions


class TestBfs:
    def test_six_step_example(self, bw_domain):
        problem = parse_problem(THREE_BLOCKS, bw_domain)
        result = bfs_plan(bw_domain, problem, SearchLimits(100_000, 30))
        assert result.status is SearchStatus.FOUND
        assert len(result.plan.steps) == 6
        assert validate_plan(problem, result.plan, bw_domain).is_correct
        # deterministic: the same plan comes back every time
        again = bfs_plan(bw_domain, problem, SearchLimits(100_000, 30))
        assert again.plan == result.plan

    def test_goal_already_satisfied(self, bw_domain):
        problem = parse_problem(
            "(define (problem p) (:domain blocksworld-4ops) (:objects a) "
            "(:init (ontable a) (clear a) (handempty)) (:goal (and (clear a))))",
            bw_domain,
        )
        result = bfs_plan(bw_domain, problem, SearchLimits(10, 10))
        assert result.status is SearchStatus.FOUND
        assert result.plan == Plan(())

    def test_no_plan(self, bw_domain):
        # two blocks can never both be on each other
        problem = parse_problem(
            "(define (problem p) (:domain blocksworld-4ops) (:objects a b) "
            "(:init (ontable a) (ontable b) (clear a) (clear b) (handempty)) "
            "(:goal (and (on a b) (on b a))))",
            bw_domain,
        )
        result = bfs_plan(bw_domain, problem, SearchLimits(100_000, 30))
        assert result.status is SearchStatus.NO_PLAN

    def test_limit_exceeded(self, bw_domain):
        problem = parse_problem(THREE_BLOCKS, bw_domain)
        result = bfs_plan(bw_domain, problem, SearchLimits(max_expanded=1, max_plan_length=30))
        assert result.status is SearchStatus.LIMIT_EXCEEDED

    def test_length_limit_distinguishes_truncation(self, bw_domain):
        # a too-small depth cap must NOT masquerade as a no-plan proof
        problem = parse_problem(THREE_BLOCKS, bw_domain)
        result = bfs_plan(
            bw_domain, problem, SearchLimits(max_expanded=100_000, max_plan_length=2)
        )
        assert result.status is SearchStatus.LIMIT_EXCEEDED

    def test_bad_limits_rejected(self):
        with pytest.raises(ValueError):
            SearchLimits(max_expanded=0, max_plan_length=10)
        with pytest.raises(ValueError):
            SearchLimits(max_expanded=10, max_plan_length=-1)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_found_plans_are_shortest(self, seed):
        domain, problems = generate(GenSpec.blocksworld(blocks=3, seed=seed, count=1))
        problem = problems[0]
        result = bfs_plan(domain, problem, SearchLimits(100_000, 30))
        assert result.status is SearchStatus.FOUND
        assert validate_plan(problem, result.plan, domain).is_correct
        assert len(result.plan.steps) == reference_shortest_length(domain, problem)


class TestIndependentExecutor:
    def test_agrees_on_wrong_plan(self, bw_domain, bw5_problem, wrong_plan):
        outcome = run_plan(bw_domain, bw5_problem, wrong_plan)
        assert not outcome.accepted
        assert outcome.failed_step == 9
        assert [str(a) for a in outcome.unmet] == ["(clear b2)"]

    def test_agrees_on_correct_plan(self, bw_domain, bw5_problem, correct_plan):
        outcome = run_plan(bw_domain, bw5_problem, correct_plan)
        assert outcome == ExecutionOutcome(
            failed_step=None, unmet=(), goal_satisfied=True
        )
        assert outcome.accepted

    def test_agrees_on_truncated_plan(self, bw_domain, bw5_problem, correct_plan):
        truncated = Plan(correct_plan.steps[:-1])
        outcome = run_plan(bw_domain, bw5_problem, truncated)
        assert outcome.failed_step is None
        assert not outcome.goal_satisfied
        assert not outcome.accepted

import dataclasses
import json
from pathlib import Path

import pytest

from plancritic.critics import CriticBackend, CriticConfig, CritiqueLabel, CritiqueVerdict, OracleCritic
from plancritic.generators import GenSpec, generate, load_manifest, write_dataset
from plancritic.llm import TransportError
from plancritic.orchestrator import (
    IterationEntry,
    LoopConfig,
    MockPlanner,
    PlannerConfig,
    RunRecord,
    ScriptedPlanner,
    StopReason,
    call_count,
    extract_plan,
    make_planner,
    read_records,
    record_from_dict,
    record_to_dict,
    run_batch,
    run_problem,
    write_records,
)
from plancritic.pddl import Plan, print_plan
from plancritic.search import SearchLimits, bfs_plan

C = CritiqueLabel.CORRECT
W = CritiqueLabel.WRONG


class ScriptedCritic:
    """Returns a fixed label per iteration; the last label repeats."""

    def __init__(self, labels):
        self.labels = list(labels)

    def critique(self, domain, problem, plan, *, problem_id, iteration, prompt=None):
        label = self.labels[min(iteration, len(self.labels) - 1)]
        return CritiqueVerdict(
            label=label, text=f"the plan is {label.value}", sample_count=1, votes={label: 1}
        )


class FailingPlanner:
    def generate(self, prompt, *, problem_id, iteration):
        raise TransportError("planner down")


class FailingCritic:
    def critique(self, domain, problem, plan, *, problem_id, iteration, prompt=None):
        raise TransportError("critic down")


def loop_config(**kwargs):
    kwargs.setdefault("shots", 0)
    return LoopConfig(**kwargs)


class TestCallCount:
    @pytest.mark.parametrize(
        "rounds,n,expected",
        [(10, 1, 20), (10, 5, 60), (0, 1, 0), (1, 1, 2), (3, 1, 6), (4, 3, 16)],
    )
    def test_values(self, rounds, n, expected):
        assert call_count(rounds, n) == expected

    def test_validation(self):
        with pytest.raises(ValueError):
            call_count(-1)
        with pytest.raises(ValueError):
            call_count(2, 0)


class TestExtractPlan:
    def test_numbered_list(self, bw_domain):
        text = "Here is my plan:\n1. (pick-up b3)\n2) (put-down b3)\nDone!"
        plan = extract_plan(text, bw_domain)
        assert print_plan(plan) == "(pick-up b3)\n(put-down b3)"

    def test_bullets_and_blanks(self, bw_domain):
        text = "- (pick-up b3)\n\n* (put-down b3)\n"
        assert len(extract_plan(text, bw_domain).steps) == 2

    def test_prose_and_bad_actions_skipped(self, bw_domain):
        text = "(pick-up b3)\nthen I think about it\n(teleport b3)\n(pick-up b3 b4)\n(put-down b3)"
        plan = extract_plan(text, bw_domain)
        assert print_plan(plan) == "(pick-up b3)\n(put-down b3)"

    def test_no_actions_gives_empty_plan(self, bw_domain):
        assert extract_plan("I give up.", bw_domain) == Plan(())


class TestPlanners:
    def test_mock_golden(self):
        planner = MockPlanner({"p": "(a)\n(b)\n(c)"})
        assert planner.generate("prompt", problem_id="p", iteration=0) == "(a)\n(b)\n(c)"

    def test_mock_always_degrades(self):
        planner = MockPlanner({"p": "(a)\n(b)\n(c)"}, golden_prob=0.0)
        for i in range(5):
            assert planner.generate("prompt", problem_id="p", iteration=i) == "(a)\n(b)"

    def test_mock_seeded(self):
        a = MockPlanner({"p": "(a)\n(b)"}, golden_prob=0.5, seed=3)
        b = MockPlanner({"p": "(a)\n(b)"}, golden_prob=0.5, seed=3)
        outs_a = [a.generate("x", problem_id="p", iteration=i) for i in range(20)]
        outs_b = [b.generate("x", problem_id="p", iteration=i) for i in range(20)]
        assert outs_a == outs_b
        assert len(set(outs_a)) == 2  # both outcomes occur

    def test_mock_missing_golden(self):
        with pytest.raises(KeyError):
            MockPlanner({}).generate("x", problem_id="p", iteration=0)

    def test_scripted_replays_then_repeats(self):
        planner = ScriptedPlanner({"p": ["first", "second"]})
        outs = [planner.generate("x", problem_id="p", iteration=i) for i in range(4)]
        assert outs == ["first", "second", "second", "second"]

    def test_make_planner_mock(self):
        planner = make_planner(PlannerConfig(golden_prob=0.25, seed=9), {"p": "(a)"})
        assert isinstance(planner, MockPlanner)
        assert planner.golden_prob == 0.25


class TestRunProblem:
    def test_immediate_accept(self, bw_domain, bw5_problem, correct_plan):
        golden = print_plan(correct_plan)
        record = run_problem(
            bw_domain,
            bw5_problem,
            loop_config(k=10),
            MockPlanner({"p1": golden}),
            OracleCritic(),
            problem_id="p1",
        )
        assert record.stop_reason is StopReason.CRITIC_ACCEPTED
        assert record.final_plan == golden
        assert len(record.iterations) == 1
        assert record.llm_calls == 2
        assert record.ground_truth == {"verdict": "correct"}
        assert record.error is None

    def test_repair_after_rejection(self, bw_domain, bw5_problem, wrong_plan, correct_plan):
        scripts = {"p1": [print_plan(wrong_plan), print_plan(correct_plan)]}
        record = run_problem(
            bw_domain,
            bw5_problem,
            loop_config(k=10),
            ScriptedPlanner(scripts),
            OracleCritic(),
            problem_id="p1",
        )
        assert record.stop_reason is StopReason.CRITIC_ACCEPTED
        assert [e.critic_label for e in record.iterations] == ["wrong", "correct"]
        assert record.final_plan == print_plan(correct_plan)
        assert record.llm_calls == 4
        # the transcript grows, so the second plan prompt is strictly longer
        assert record.iterations[1].plan_prompt_chars > record.iterations[0].plan_prompt_chars

    @pytest.mark.parametrize("j", [1, 2, 4])
    def test_accept_at_round_j_costs_2j(self, bw_domain, bw5_problem, correct_plan, j):
        golden = print_plan(correct_plan)
        record = run_problem(
            bw_domain,
            bw5_problem,
            loop_config(k=10),
            MockPlanner({"p1": golden}),
            ScriptedCritic([W] * (j - 1) + [C]),
            problem_id="p1",
        )
        assert len(record.iterations) == j
        assert record.llm_calls == 2 * j

    def test_iterations_exhausted(self, bw_domain, bw5_problem, wrong_plan):
        wrong = print_plan(wrong_plan)
        record = run_problem(
            bw_domain,
            bw5_problem,
            loop_config(k=2),
            ScriptedPlanner({"p1": [wrong]}),
            OracleCritic(),
            problem_id="p1",
        )
        assert record.stop_reason is StopReason.ITERATIONS_EXHAUSTED
        assert len(record.iterations) == 3  # baseline plus k retries
        assert record.final_plan == wrong  # the last proposed plan stands
        assert record.llm_calls == 6
        assert record.ground_truth["verdict"] == "wrong_at_step"
        assert record.ground_truth["step"] == 9

    def test_budget_exceeded(self, bw_domain, bw5_problem, wrong_plan):
        wrong = print_plan(wrong_plan)
        planner = ScriptedPlanner({"p1": [wrong]})
        probe = run_problem(
            bw_domain, bw5_problem, loop_config(k=1), planner, OracleCritic(), problem_id="p1"
        )
        first_len = probe.iterations[0].plan_prompt_chars
        record = run_problem(
            bw_domain,
            bw5_problem,
            loop_config(k=5, transcript_budget=first_len),
            planner,
            OracleCritic(),
            problem_id="p1",
        )
        assert record.stop_reason is StopReason.BUDGET_EXCEEDED
        assert len(record.iterations) == 1  # the second prompt blew the cap
        assert record.final_plan == wrong
        assert "budget" in record.error

    def test_planner_transport_failure(self, bw_domain, bw5_problem):
        record = run_problem(
            bw_domain,
            bw5_problem,
            loop_config(),
            FailingPlanner(),
            OracleCritic(),
            problem_id="p1",
        )
        assert record.stop_reason is StopReason.TRANSPORT_FAILURE
        assert record.final_plan == ""
        assert record.iterations == ()
        assert record.llm_calls == 0
        assert record.error.startswith("planner:")

    def test_critic_transport_failure(self, bw_domain, bw5_problem, wrong_plan):
        wrong = print_plan(wrong_plan)
        record = run_problem(
            bw_domain,
            bw5_problem,
            loop_config(),
            ScriptedPlanner({"p1": [wrong]}),
            FailingCritic(),
            problem_id="p1",
        )
        assert record.stop_reason is StopReason.TRANSPORT_FAILURE
        assert record.final_plan == wrong  # keeps the plan that was proposed
        assert record.error.startswith("critic:")

    def test_config_validation(self):
        with pytest.raises(ValueError):
            LoopConfig(k=-1)
        with pytest.raises(ValueError):
            LoopConfig(shots=-2)


class TestRecordPersistence:
    @pytest.fixture()
    def record(self, bw_domain, bw5_problem, wrong_plan, correct_plan):
        scripts = {"p1": [print_plan(wrong_plan), print_plan(correct_plan)]}
        return run_problem(
            bw_domain,
            bw5_problem,
            loop_config(),
            ScriptedPlanner(scripts),
            OracleCritic(),
            problem_id="p1",
        )

    def test_dict_round_trip(self, record):
        data = record_to_dict(record)
        assert record_from_dict(json.loads(json.dumps(data))) == record

    def test_file_round_trip(self, record, tmp_path):
        path = tmp_path / "records.jsonl"
        failure = dataclasses.replace(
            record,
            problem_id="p2",
            stop_reason=StopReason.TRANSPORT_FAILURE,
            ground_truth=None,
            error="boom",
        )
        write_records(path, [record, failure])
        assert read_records(path) == [record, failure]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    """Four solvable 3-block problems with golden plans, one without a plan."""
    out = tmp_path_factory.mktemp("dataset")
    spec = GenSpec(benchmark="blocksworld", seed=11, count=5, blocks=3)
    domain, problems = generate(spec)
    plans = [bfs_plan(domain, p, SearchLimits()).plan for p in problems]
    plans[2] = None  # no golden for this one: the mock planner cannot run it
    manifest = write_dataset(out, domain, problems, spec, plans)
    return load_manifest(manifest)


class TestRunBatch:
    def config(self, **kwargs):
        return loop_config(
            planner=PlannerConfig(golden_prob=1.0),
            critic=CriticConfig(backend=CriticBackend.ORACLE),
            **kwargs,
        )

    def test_manifest_order_and_isolation(self, dataset):
        records = run_batch(dataset, self.config())
        assert [r.problem_id for r in records] == [e.id for e in dataset]
        ok = [r for i, r in enumerate(records) if i != 2]
        assert all(r.stop_reason is StopReason.CRITIC_ACCEPTED for r in ok)
        broken = records[2]  # golden plan missing -> isolated failure record
        assert broken.stop_reason is StopReason.TRANSPORT_FAILURE
        assert "golden" in broken.error
        assert broken.llm_calls == 0

    def test_records_path_appends_and_resumes(self, dataset, tmp_path):
        path = tmp_path / "records.jsonl"
        first = run_batch(dataset, self.config(), records_path=path)
        assert read_records(path) == first
        # tamper with one stored record; a resumed batch must reuse it verbatim
        tampered = dataclasses.replace(first[0], error="cached-sentinel")
        write_records(path, [tampered] + first[1:])
        second = run_batch(dataset, self.config(), records_path=path)
        assert second[0].error == "cached-sentinel"
        assert second[1:] == first[1:]
        assert len(read_records(path)) == len(dataset)  # nothing re-appended

    def test_parallelism_equivalent(self, dataset):
        serial = run_batch(dataset, self.config())
        parallel = run_batch(dataset, self.config(), parallelism=4)
        assert serial == parallel

    def test_shots_need_pool(self, dataset):
        with pytest.raises(ValueError):
            run_batch(dataset, self.config(shots=2))


class TestIterationEntry:
    def test_shape(self):
        entry = IterationEntry(
            step=0,
            plan="(pick-up b3)",
            critic_label="wrong",
            votes={"wrong": 1},
            plan_prompt_chars=100,
            critique_prompt_chars=0,
        )
        assert entry.step == 0
        assert RunRecord(
            problem_id="p",
            max_steps=1,
            self_consistency=1,
            iterations=(entry,),
            final_plan="",
            stop_reason=StopReason.ITERATIONS_EXHAUSTED,
            llm_calls=2,
            ground_truth=None,
        ).iterations == (entry,)

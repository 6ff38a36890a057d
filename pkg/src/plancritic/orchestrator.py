"""The iterative refinement loop and the batch runner.

One problem run alternates plan generation and critique for up to ``k + 1``
rounds (round 0 is the baseline attempt).  A round whose critique says the
plan is correct stops the loop; otherwise the plan and its critique are
appended to the transcript and the next prompt asks for a fix.  When the
prompt outgrows its character budget the loop stops and the previous round's
plan stands.  Each run yields a serializable record of every round, the stop
reason, and the exact number of backend calls: ``rounds`` planner calls plus
``rounds × self_consistency`` critic calls.

Batches execute problems independently (optionally in parallel), persist
records as they finish, and can resume from a partially written record file.
"""

from __future__ import annotations

import json
import logging
import random
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from .critics import Critic, CriticBackend, CriticConfig, CritiqueLabel, make_critic
from .generators import ManifestEntry, load_entry
from .llm import ChatClient, MalformedResponse, TransportError
from .pddl import DomainDef, PddlError, Plan, ProblemDef, parse_plan, print_plan
from .prompting import (
    BudgetExceeded,
    FewShotPool,
    PoolTooSmall,
    Transcript,
    build_critique_prompt,
    build_plan_prompt,
    select_fewshots,
)
from .semantics import validate_plan, verdict_to_dict

log = logging.getLogger(__name__)


class StopReason(str, Enum):
    CRITIC_ACCEPTED = "critic-accepted"
    BUDGET_EXCEEDED = "budget-exceeded"
    ITERATIONS_EXHAUSTED = "iterations-exhausted"
    TRANSPORT_FAILURE = "transport-failure"


def call_count(rounds: int, self_consistency: int = 1) -> int:
    """Backend calls for ``rounds`` executed (plan, critique) rounds."""
    if rounds < 0:
        raise ValueError("rounds must be non-negative")
    if self_consistency < 1:
        raise ValueError("self_consistency must be at least 1")
    return rounds + self_consistency * rounds


# ---------------------------------------------------------------------------
# Planner backends


class PlannerBackend(str, Enum):
    LLM = "llm"
    MOCK = "mock"


@dataclass(frozen=True)
class PlannerConfig:
    backend: PlannerBackend = PlannerBackend.MOCK
    temperature: float = 0.0
    max_output_tokens: int = 2048
    # llm backend
    base_url: str = ""
    model: str = ""
    api_key_env: str = "PLANCRITIC_API_KEY"
    requests_per_second: float = 0.0
    timeout: float = 120.0
    debug_log: str | None = None
    # mock backend
    golden_prob: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.golden_prob <= 1.0:
            raise ValueError("golden_prob must be a probability")


class Planner:
    def generate(self, prompt: str, *, problem_id: str, iteration: int) -> str:
        raise NotImplementedError


class LlmPlanner(Planner):
    def __init__(self, config: PlannerConfig, client: ChatClient | None = None):
        self.config = config
        self.client = client or ChatClient(
            base_url=config.base_url,
            model=config.model,
            api_key_env=config.api_key_env,
            timeout=config.timeout,
            requests_per_second=config.requests_per_second,
            debug_log=config.debug_log,
        )

    def generate(self, prompt, *, problem_id, iteration):
        return self.client.complete(prompt, self.config.temperature, self.config.max_output_tokens)


class MockPlanner(Planner):
    """Emits the problem's golden plan with probability ``golden_prob`` per
    attempt, otherwise the golden plan with its last step dropped (which can
    never reach the goal when the golden plan is shortest).  Draws are seeded
    by (seed, problem id, iteration)."""

    def __init__(self, goldens: Mapping[str, str], golden_prob: float = 1.0, seed: int = 0):
        self.goldens = dict(goldens)
        self.golden_prob = golden_prob
        self.seed = seed

    def generate(self, prompt, *, problem_id, iteration):
        if problem_id not in self.goldens:
            raise KeyError(f"no golden plan for {problem_id!r}")
        golden = self.goldens[problem_id]
        if self.golden_prob < 1.0:
            rng = random.Random(f"{self.seed}:{problem_id}:{iteration}")
            if rng.random() >= self.golden_prob:
                return "\n".join(golden.splitlines()[:-1])
        return golden


class ScriptedPlanner(Planner):
    """Replays fixed plan texts, one per iteration; the last repeats."""

    def __init__(self, scripts: Mapping[str, Sequence[str]]):
        self.scripts = {k: list(v) for k, v in scripts.items()}

    def generate(self, prompt, *, problem_id, iteration):
        script = self.scripts[problem_id]
        return script[min(iteration, len(script) - 1)]


def make_planner(config: PlannerConfig, goldens: Mapping[str, str] | None = None) -> Planner:
    if PlannerBackend(config.backend) is PlannerBackend.LLM:
        return LlmPlanner(config)
    return MockPlanner(goldens or {}, config.golden_prob, config.seed)


# ---------------------------------------------------------------------------
# Loop configuration and records


@dataclass(frozen=True)
class LoopConfig:
    k: int = 10  # critique-and-retry budget after the baseline attempt
    shots: int = 16
    transcript_budget: int | None = 400_000  # characters; None disables the cap
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    critic: CriticConfig = field(default_factory=CriticConfig)

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if self.shots < 0:
            raise ValueError("shots must be non-negative")


@dataclass(frozen=True)
class IterationEntry:
    step: int
    plan: str
    critic_label: str
    votes: dict[str, int]
    plan_prompt_chars: int
    critique_prompt_chars: int


@dataclass(frozen=True)
class RunRecord:
    problem_id: str
    max_steps: int
    self_consistency: int
    iterations: tuple[IterationEntry, ...]
    final_plan: str
    stop_reason: StopReason
    llm_calls: int
    ground_truth: dict | None
    error: str | None = None


_NUMBERING = re.compile(r"^(\d+[.)]\s*|[-*]\s+)")


def extract_plan(text: str, domain: DomainDef) -> Plan:
    """Pull a plan out of raw model output.

    Keeps, in order, every line that parses as a ground action of the domain
    (after stripping list numbering and bullets); all other lines are
    ignored.  Output that contains no action at all yields the empty plan.
    """
    steps = []
    for raw_line in text.splitlines():
        line = _NUMBERING.sub("", raw_line.strip())
        if not (line.startswith("(") and line.endswith(")")):
            continue
        try:
            parsed = parse_plan(line, domain)
        except PddlError:
            continue
        steps.extend(parsed.steps)
    return Plan(tuple(steps))


def run_problem(
    domain: DomainDef,
    problem: ProblemDef,
    config: LoopConfig,
    planner: Planner,
    critic: Critic,
    shots: Sequence = (),
    problem_id: str | None = None,
) -> RunRecord:
    """Run the full refinement loop for one problem."""
    pid = problem_id or problem.name
    transcript = Transcript(char_budget=config.transcript_budget)
    iterations: list[IterationEntry] = []
    prev_plan_text = ""
    final_plan = ""
    stop: StopReason | None = None
    error: str | None = None
    c = config.critic.self_consistency

    for step in range(config.k + 1):
        try:
            plan_prompt = build_plan_prompt(domain, problem, shots, transcript)
        except BudgetExceeded as exc:
            stop = StopReason.BUDGET_EXCEEDED
            final_plan = prev_plan_text
            error = str(exc)
            break
        try:
            raw = planner.generate(plan_prompt, problem_id=pid, iteration=step)
        except (TransportError, MalformedResponse) as exc:
            stop = StopReason.TRANSPORT_FAILURE
            final_plan = prev_plan_text
            error = f"planner: {exc}"
            break
        plan = extract_plan(raw, domain)
        plan_text = print_plan(plan)

        critique_prompt = None
        if CriticBackend(config.critic.backend) is CriticBackend.LLM:
            critique_prompt = build_critique_prompt(
                config.critic.template,
                domain,
                problem,
                plan,
                exemplars=config.critic.exemplars or None,
            )
        try:
            verdict = critic.critique(
                domain, problem, plan, problem_id=pid, iteration=step, prompt=critique_prompt
            )
        except (TransportError, MalformedResponse) as exc:
            stop = StopReason.TRANSPORT_FAILURE
            final_plan = plan_text
            error = f"critic: {exc}"
            break
        iterations.append(
            IterationEntry(
                step=step,
                plan=plan_text,
                critic_label=verdict.label.value,
                votes={label.value: n for label, n in verdict.votes.items()},
                plan_prompt_chars=len(plan_prompt),
                critique_prompt_chars=len(critique_prompt or ""),
            )
        )
        if verdict.label is CritiqueLabel.CORRECT:
            stop = StopReason.CRITIC_ACCEPTED
            final_plan = plan_text
            break
        transcript.append(plan_text, verdict.text)
        prev_plan_text = plan_text
    else:
        stop = StopReason.ITERATIONS_EXHAUSTED
        final_plan = prev_plan_text

    truth = validate_plan(problem, parse_plan(final_plan, domain), domain)
    return RunRecord(
        problem_id=pid,
        max_steps=config.k,
        self_consistency=c,
        iterations=tuple(iterations),
        final_plan=final_plan,
        stop_reason=stop,
        llm_calls=call_count(len(iterations), c),
        ground_truth=verdict_to_dict(truth.verdict),
        error=error,
    )


# ---------------------------------------------------------------------------
# Record persistence


def record_to_dict(record: RunRecord) -> dict:
    return {
        "problem_id": record.problem_id,
        "max_steps": record.max_steps,
        "self_consistency": record.self_consistency,
        "iterations": [
            {
                "step": e.step,
                "plan": e.plan,
                "critic_label": e.critic_label,
                "votes": e.votes,
                "plan_prompt_chars": e.plan_prompt_chars,
                "critique_prompt_chars": e.critique_prompt_chars,
            }
            for e in record.iterations
        ],
        "final_plan": record.final_plan,
        "stop_reason": record.stop_reason.value,
        "llm_calls": record.llm_calls,
        "ground_truth": record.ground_truth,
        "error": record.error,
    }


def record_from_dict(data: dict) -> RunRecord:
    return RunRecord(
        problem_id=data["problem_id"],
        max_steps=data["max_steps"],
        self_consistency=data["self_consistency"],
        iterations=tuple(
            IterationEntry(
                step=e["step"],
                plan=e["plan"],
                critic_label=e["critic_label"],
                votes=dict(e["votes"]),
                plan_prompt_chars=e["plan_prompt_chars"],
                critique_prompt_chars=e["critique_prompt_chars"],
            )
            for e in data["iterations"]
        ),
        final_plan=data["final_plan"],
        stop_reason=StopReason(data["stop_reason"]),
        llm_calls=data["llm_calls"],
        ground_truth=data.get("ground_truth"),
        error=data.get("error"),
    )


def read_records(path: str | Path) -> list[RunRecord]:
    records = []
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(record_from_dict(json.loads(line)))
    return records


def write_records(path: str | Path, records: Sequence[RunRecord]) -> None:
    with Path(path).open("w") as fh:
        for record in records:
            fh.write(json.dumps(record_to_dict(record), sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Batch runner


def run_batch(
    entries: Sequence[ManifestEntry],
    config: LoopConfig,
    *,
    parallelism: int = 1,
    records_path: str | Path | None = None,
    pool: FewShotPool | None = None,
) -> list[RunRecord]:
    """Run every manifest entry, returning records in manifest order.

    If ``records_path`` exists, problems with a record there are skipped and
    their stored records reused; new records are appended as runs finish.
    Failures are isolated: a problem that errors yields a transport-failure
    record and the batch continues.
    """
    if config.shots > 0:
        if pool is None:
            raise ValueError("shots > 0 needs a few-shot pool")
        if config.shots > len(pool):
            raise PoolTooSmall(f"asked for {config.shots} shots, pool has {len(pool)}")

    loaded: dict[str, tuple[DomainDef, ProblemDef, Plan | None]] = {}
    for entry in entries:
        loaded[entry.id] = load_entry(entry)
    goldens = {
        pid: print_plan(plan) for pid, (_, _, plan) in loaded.items() if plan is not None
    }
    planner = make_planner(config.planner, goldens)
    critic = make_critic(config.critic)

    existing: dict[str, RunRecord] = {}
    if records_path is not None and Path(records_path).exists():
        existing = {r.problem_id: r for r in read_records(records_path)}

    write_lock = threading.Lock()

    def work(entry: ManifestEntry) -> RunRecord:
        domain, problem, _ = loaded[entry.id]
        shots = select_fewshots(pool, entry.id, config.shots) if config.shots else ()
        try:
            record = run_problem(
                domain, problem, config, planner, critic, shots=shots, problem_id=entry.id
            )
        except Exception as exc:  # isolate the problem, keep the batch alive
            log.exception("run failed for %s", entry.id)
            record = RunRecord(
                problem_id=entry.id,
                max_steps=config.k,
                self_consistency=config.critic.self_consistency,
                iterations=(),
                final_plan="",
                stop_reason=StopReason.TRANSPORT_FAILURE,
                llm_calls=0,
                ground_truth=None,
                error=str(exc),
            )
        if records_path is not None:
            with write_lock:
                with Path(records_path).open("a") as fh:
                    fh.write(json.dumps(record_to_dict(record), sort_keys=True) + "\n")
        return record

    todo = [e for e in entries if e.id not in existing]
    results: dict[str, RunRecord] = {}
    if parallelism > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as executor:
            for entry, record in zip(todo, executor.map(work, todo)):
                results[entry.id] = record
    else:
        for entry in todo:
            results[entry.id] = work(entry)
    return [existing.get(e.id) or results[e.id] for e in entries]

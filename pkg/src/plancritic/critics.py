"""Plan critics: verdict extraction, self-consistency voting, and backends.

A critic judges a candidate plan and answers with one of three labels,
matching the assessment phrases a critique prompt asks for.  Three backends
exist:

* ``llm``: renders a critique prompt and samples an OpenAI-compatible
  endpoint, once per self-consistency vote.
* ``oracle``: asks the ground-truth validator and writes a step-by-step
  verification as its critique text.
* ``mock``: starts from the oracle's label and flips it with configured
  false-positive / false-negative probabilities, deterministically seeded by
  (seed, problem id, iteration).
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .llm import ChatClient
from .pddl import DomainDef, Plan, ProblemDef
from .prompting import TemplateId
from .semantics import (
    Correct,
    GoalNotReached,
    PHRASE_CORRECT,
    PHRASE_GOAL_NOT_REACHED,
    PHRASE_WRONG,
    format_trace,
    format_verdict,
    validate_plan,
)


class CritiqueLabel(str, Enum):
    CORRECT = "correct"
    WRONG = "wrong"
    GOAL_NOT_REACHED = "goal_not_reached"


_PHRASES = {
    CritiqueLabel.CORRECT: PHRASE_CORRECT,
    CritiqueLabel.WRONG: PHRASE_WRONG,
    CritiqueLabel.GOAL_NOT_REACHED: PHRASE_GOAL_NOT_REACHED,
}


def extract_verdict(text: str) -> CritiqueLabel:
    """Scan case-insensitively for the three assessment phrases.

    The phrase occurring last wins; text mentioning none of them counts as
    a wrong-plan judgement.
    """
    lowered = text.lower()
    best_label = CritiqueLabel.WRONG
    best_pos = -1
    for label, phrase in _PHRASES.items():
        pos = lowered.rfind(phrase)
        if pos > best_pos:
            best_pos = pos
            best_label = label
    return best_label


def self_consistency(labels: Sequence[CritiqueLabel]) -> CritiqueLabel:
    """Majority vote over sampled labels.

    The plan counts as correct only when strictly more votes say correct than
    not; every tie resolves to wrong.  Among not-correct votes, goal-not-
    reached is reported only when it strictly outnumbers wrong.
    """
    if not labels:
        raise ValueError("no votes to aggregate")
    n_correct = sum(1 for l in labels if l is CritiqueLabel.CORRECT)
    n_other = len(labels) - n_correct
    if n_correct > n_other:
        return CritiqueLabel.CORRECT
    if n_correct == n_other:
        return CritiqueLabel.WRONG
    n_gnr = sum(1 for l in labels if l is CritiqueLabel.GOAL_NOT_REACHED)
    if n_gnr > n_other - n_gnr:
        return CritiqueLabel.GOAL_NOT_REACHED
    return CritiqueLabel.WRONG


@dataclass(frozen=True)
class CritiqueVerdict:
    label: CritiqueLabel
    text: str  # raw critique text (a representative sample when N > 1)
    sample_count: int
    votes: dict[CritiqueLabel, int]

    @classmethod
    def from_samples(cls, samples: Sequence[tuple[CritiqueLabel, str]]) -> "CritiqueVerdict":
        labels = [label for label, _ in samples]
        final = self_consistency(labels)
        votes = {label: labels.count(label) for label in CritiqueLabel if label in labels}
        text = next((t for l, t in samples if l is final), samples[-1][1])
        return cls(final, text, len(samples), votes)


class CriticBackend(str, Enum):
    LLM = "llm"
    ORACLE = "oracle"
    MOCK = "mock"


@dataclass(frozen=True)
class CriticConfig:
    backend: CriticBackend = CriticBackend.ORACLE
    self_consistency: int = 1
    template: TemplateId = TemplateId.CRITIQUE_0SHOT_DD
    temperature: float | None = None  # default: 0.0 for N=1, 0.7 otherwise
    exemplars: tuple[str, ...] = ()
    # llm backend
    base_url: str = ""
    model: str = ""
    api_key_env: str = "PLANCRITIC_API_KEY"
    max_output_tokens: int = 4096
    max_concurrency: int = 4
    requests_per_second: float = 0.0
    timeout: float = 120.0
    debug_log: str | None = None
    # mock backend
    false_positive: float = 0.0
    false_negative: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.self_consistency < 1:
            raise ValueError("self_consistency must be at least 1")
        for name in ("false_positive", "false_negative"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must be a probability")

    @property
    def effective_temperature(self) -> float:
        if self.temperature is not None:
            return self.temperature
        return 0.0 if self.self_consistency == 1 else 0.7


class Critic:
    """Interface: judge one plan in the context of one problem."""

    def critique(
        self,
        domain: DomainDef,
        problem: ProblemDef,
        plan: Plan,
        *,
        problem_id: str,
        iteration: int,
        prompt: str | None = None,
    ) -> CritiqueVerdict:
        raise NotImplementedError


def _oracle_sample(domain: DomainDef, problem: ProblemDef, plan: Plan) -> tuple[CritiqueLabel, str]:
    result = validate_plan(problem, plan, domain)
    if isinstance(result.verdict, Correct):
        label = CritiqueLabel.CORRECT
    elif isinstance(result.verdict, GoalNotReached):
        label = CritiqueLabel.GOAL_NOT_REACHED
    else:
        label = CritiqueLabel.WRONG
    trace = format_trace(result)
    text = (trace + "\n\n" if trace else "") + format_verdict(result.verdict)
    return label, text


class OracleCritic(Critic):
    """Always answers with the ground-truth verdict."""

    def __init__(self, config: CriticConfig | None = None):
        self.config = config or CriticConfig(backend=CriticBackend.ORACLE)

    def critique(self, domain, problem, plan, *, problem_id, iteration, prompt=None):
        sample = _oracle_sample(domain, problem, plan)
        samples = [sample] * self.config.self_consistency
        return CritiqueVerdict.from_samples(samples)


class MockCritic(Critic):
    """Ground truth with seeded label noise.

    A truly correct plan is reported wrong with probability
    ``false_negative``; a not-correct plan is reported correct with
    probability ``false_positive``.  The random stream depends only on
    (seed, problem id, iteration), so reruns reproduce the same answers.
    """

    def __init__(self, config: CriticConfig):
        self.config = config

    def critique(self, domain, problem, plan, *, problem_id, iteration, prompt=None):
        true_label, _ = _oracle_sample(domain, problem, plan)
        rng = random.Random(f"{self.config.seed}:{problem_id}:{iteration}")
        samples = []
        for _ in range(self.config.self_consistency):
            label = true_label
            if true_label is CritiqueLabel.CORRECT:
                if rng.random() < self.config.false_negative:
                    label = CritiqueLabel.WRONG
            elif rng.random() < self.config.false_positive:
                label = CritiqueLabel.CORRECT
            samples.append((label, f"Assessment: {_PHRASES[label]}"))
        return CritiqueVerdict.from_samples(samples)


class LlmCritic(Critic):
    """Samples an LLM judge once per self-consistency vote."""

    def __init__(self, config: CriticConfig, client: ChatClient | None = None):
        self.config = config
        self.client = client or ChatClient(
            base_url=config.base_url,
            model=config.model,
            api_key_env=config.api_key_env,
            timeout=config.timeout,
            requests_per_second=config.requests_per_second,
            debug_log=config.debug_log,
        )

    def critique(self, domain, problem, plan, *, problem_id, iteration, prompt=None):
        if prompt is None:
            raise ValueError("llm critic needs a rendered critique prompt")
        n = self.config.self_consistency
        temperature = self.config.effective_temperature

        def one(_: int) -> tuple[CritiqueLabel, str]:
            text = self.client.complete(prompt, temperature, self.config.max_output_tokens)
            return extract_verdict(text), text

        if n == 1 or self.config.max_concurrency <= 1:
            samples = [one(i) for i in range(n)]
        else:
            with ThreadPoolExecutor(max_workers=min(n, self.config.max_concurrency)) as pool:
                samples = list(pool.map(one, range(n)))
        return CritiqueVerdict.from_samples(samples)


def make_critic(config: CriticConfig) -> Critic:
    backend = CriticBackend(config.backend)
    if backend is CriticBackend.ORACLE:
        return OracleCritic(config)
    if backend is CriticBackend.MOCK:
        return MockCritic(config)
    return LlmCritic(config)

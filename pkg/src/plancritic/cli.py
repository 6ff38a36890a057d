"""Command-line interface.

Subcommands: ``generate`` benchmark instances, ``validate`` a plan,
``solve`` with the built-in breadth-first planner, ``obfuscate`` a dataset,
``run`` the full refinement loop over a manifest, ``score`` persisted run
records, and ``report`` them in several formats.

Exit codes: 0 on success, 1 for domain-level failures (unparseable PDDL,
unsolvable instance, backend failures), 2 for usage errors such as missing
files or bad flags.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import generators, report
from .critics import CriticBackend, CriticConfig
from .generators import (
    Benchmark,
    GenSpec,
    InvalidSpec,
    ManifestEntry,
    ObfuscationMap,
    ObfuscationMode,
    deceptive_map,
    identity_map,
    load_manifest,
    nonspecific_map,
    obfuscate,
)
from .llm import TransportError
from .orchestrator import (
    LoopConfig,
    PlannerBackend,
    PlannerConfig,
    read_records,
    run_batch,
)
from .pddl import (
    PddlError,
    parse_domain,
    parse_plan,
    parse_problem,
    print_domain,
    print_plan,
    print_problem,
)
from .prompting import Exemplar, PoolTooSmall, TemplateId, build_pool
from .search import SearchLimits, SearchStatus, bfs_plan
from .semantics import (
    format_trace,
    format_verdict,
    validate_plan,
    validation_to_dict,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _read_text(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    return p.read_text()


# ---------------------------------------------------------------------------
# generate


def _spec_from_args(args) -> GenSpec:
    benchmark = Benchmark(args.benchmark)
    if benchmark is Benchmark.BLOCKSWORLD:
        if args.blocks is None:
            raise UsageError("--blocks is required for blocksworld")
        return GenSpec.blocksworld(args.blocks, args.seed, args.count)
    if benchmark is Benchmark.LOGISTICS:
        if args.preset == "easy":
            return GenSpec.logistics_easy(args.seed, args.count)
        if args.preset == "hard":
            return GenSpec.logistics_hard(args.seed, args.count)
        required = (args.cities, args.places_per_city, args.packages, args.trucks, args.airplanes)
        if any(v is None for v in required):
            raise UsageError("logistics needs --preset or explicit size flags")
        return GenSpec(
            Benchmark.LOGISTICS,
            args.seed,
            args.count,
            cities=args.cities,
            places_per_city=args.places_per_city,
            packages=args.packages,
            trucks=args.trucks,
            airplanes=args.airplanes,
        )
    if args.width is None or args.height is None:
        raise UsageError("--width and --height are required for minigrid")
    return GenSpec.minigrid(args.width, args.height, args.keys, args.seed, args.count)


def _cmd_generate(args) -> int:
    spec = _spec_from_args(args)
    domain, problems = generators.generate(spec)
    plans = None
    if args.solve:
        limits = SearchLimits(args.max_expanded, args.max_length)
        plans = []
        for problem in problems:
            result = bfs_plan(domain, problem, limits)
            if result.status is not SearchStatus.FOUND:
                print(
                    f"error: could not solve generated instance {problem.name} "
                    f"({result.status.value})",
                    file=sys.stderr,
                )
                return EXIT_FAILURE
            plans.append(result.plan)
    manifest = generators.write_dataset(args.out, domain, problems, spec, plans)
    print(f"wrote {len(problems)} instance(s) to {manifest.parent}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate / solve


def _cmd_validate(args) -> int:
    domain = parse_domain(_read_text(args.domain))
    problem = parse_problem(_read_text(args.problem), domain)
    plan = parse_plan(_read_text(args.plan), domain)
    result = validate_plan(problem, plan, domain)
    if args.json:
        print(json.dumps(validation_to_dict(result), indent=2, sort_keys=True))
    else:
        trace = format_trace(result)
        if trace and not args.quiet:
            print(trace)
            print()
        print(format_verdict(result.verdict))
    return EXIT_OK


def _cmd_solve(args) -> int:
    domain = parse_domain(_read_text(args.domain))
    problem = parse_problem(_read_text(args.problem), domain)
    limits = SearchLimits(args.max_expanded, args.max_length)
    result = bfs_plan(domain, problem, limits)
    if result.status is SearchStatus.FOUND:
        text = print_plan(result.plan)
        if args.out:
            Path(args.out).write_text(text + "\n" if text else "")
        print(text if text else "; empty plan (goal already satisfied)")
        return EXIT_OK
    message = (
        "no plan exists"
        if result.status is SearchStatus.NO_PLAN
        else f"search limits exceeded after {result.expanded} expansions"
    )
    print(message, file=sys.stderr)
    return EXIT_FAILURE


# ---------------------------------------------------------------------------
# obfuscate


def _map_from_file(path: str) -> ObfuscationMap:
    raw = json.loads(_read_text(path))
    try:
        return ObfuscationMap(
            mode=ObfuscationMode(raw.get("mode", "identity")),
            predicates=dict(raw["predicates"]),
            actions=dict(raw["actions"]),
            objects=dict(raw.get("objects", {})),
            domain_names=dict(raw.get("domain_names", {})),
            problem_names=dict(raw.get("problem_names", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad map file {path}: {exc}") from exc


def _cmd_obfuscate(args) -> int:
    entries = load_manifest(Path(args.manifest))
    if not entries:
        raise UsageError("empty manifest")
    loaded = [generators.load_entry(entry) for entry in entries]
    domain = loaded[0][0]
    for other, _, _ in loaded[1:]:
        if other != domain:
            print("error: manifest mixes domains", file=sys.stderr)
            return EXIT_FAILURE

    if args.map:
        mapping = _map_from_file(args.map)
    elif args.mode == "deceptive":
        renames = {
            p.name: "MY-" + p.name[3:] if p.name.startswith("BW-") else p.name
            for _, p, _ in loaded
        }
        mapping = deceptive_map(problem_names=renames)
    elif args.mode == "nonspecific":
        mapping = nonspecific_map(domain)
    else:
        mapping = identity_map(domain)

    problems = [p for _, p, _ in loaded]
    plans = [pl for _, _, pl in loaded]
    have_plans = any(pl is not None for pl in plans)
    new_domain, new_problems, new_plans = obfuscate(
        domain, problems, [pl or generators.Plan(()) for pl in plans] if have_plans else None, mapping
    )

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "domain.pddl").write_text(print_domain(new_domain) + "\n")
    with (out / "manifest.jsonl").open("w") as fh:
        for i, entry in enumerate(entries):
            problem_file = entry.problem_file.name
            (out / problem_file).write_text(print_problem(new_problems[i]) + "\n")
            record = {
                "id": entry.id,
                "benchmark": entry.benchmark,
                "seed": entry.seed,
                "index": entry.index,
                "params": {**entry.params, "obfuscation": mapping.mode.value},
                "domain_file": "domain.pddl",
                "problem_file": problem_file,
            }
            if have_plans and entry.plan_file is not None:
                plan_file = entry.plan_file.name
                text = print_plan(new_plans[i])
                (out / plan_file).write_text(text + "\n" if text else "")
                record["plan_file"] = plan_file
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    print(f"wrote obfuscated dataset to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# run


def _config_from_dict(raw: dict) -> LoopConfig:
    def build(cls, data: dict, what: str):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise UsageError(f"unknown {what} option(s): {', '.join(sorted(unknown))}")
        return cls(**data)

    raw = dict(raw)
    planner_raw = dict(raw.pop("planner", {}))
    critic_raw = dict(raw.pop("critic", {}))
    raw.pop("pool_manifest", None)
    raw.pop("pool_seed", None)
    if "backend" in planner_raw:
        planner_raw["backend"] = PlannerBackend(planner_raw["backend"])
    if "backend" in critic_raw:
        critic_raw["backend"] = CriticBackend(critic_raw["backend"])
    if "template" in critic_raw:
        critic_raw["template"] = TemplateId(critic_raw["template"])
    if "exemplars" in critic_raw:
        critic_raw["exemplars"] = tuple(critic_raw["exemplars"])
    planner = build(PlannerConfig, planner_raw, "planner")
    critic = build(CriticConfig, critic_raw, "critic")
    return build(LoopConfig, {**raw, "planner": planner, "critic": critic}, "run")


def _config_from_args(args) -> tuple[LoopConfig, str | None, int]:
    """Returns (config, pool manifest path, pool seed)."""
    if args.config:
        raw = json.loads(_read_text(args.config))
        pool_manifest = raw.get("pool_manifest")
        pool_seed = raw.get("pool_seed", 0)
        return _config_from_dict(raw), pool_manifest, pool_seed

    if args.planner == "mock-golden":
        planner = PlannerConfig(backend=PlannerBackend.MOCK, golden_prob=1.0, seed=args.seed)
    elif args.planner == "mock":
        planner = PlannerConfig(
            backend=PlannerBackend.MOCK, golden_prob=args.golden_prob, seed=args.seed
        )
    else:
        raise UsageError("llm planner runs need --config with endpoint settings")
    if args.critic == "oracle":
        critic = CriticConfig(backend=CriticBackend.ORACLE, self_consistency=args.self_consistency)
    elif args.critic == "mock":
        critic = CriticConfig(
            backend=CriticBackend.MOCK,
            self_consistency=args.self_consistency,
            false_positive=args.fp,
            false_negative=args.fn,
            seed=args.seed,
        )
    else:
        raise UsageError("llm critic runs need --config with endpoint settings")
    config = LoopConfig(
        k=args.k,
        shots=args.shots,
        transcript_budget=args.budget,
        planner=planner,
        critic=critic,
    )
    return config, args.pool, args.pool_seed


def _build_pool(path: str, seed: int):
    entries = load_manifest(Path(path))
    exemplars = []
    domain = None
    for entry in entries:
        if entry.plan_file is None:
            raise UsageError(f"pool entry {entry.id} has no plan file")
        domain, problem, plan = generators.load_entry(entry)
        exemplars.append(Exemplar(problem, plan))
    if domain is None:
        raise UsageError("empty pool manifest")
    return build_pool(domain, exemplars, seed)


def _cmd_run(args) -> int:
    config, pool_path, pool_seed = _config_from_args(args)
    entries = load_manifest(Path(args.manifest)) if Path(args.manifest).is_file() else None
    if entries is None:
        raise UsageError(f"no such file: {args.manifest}")
    pool = _build_pool(pool_path, pool_seed) if config.shots > 0 and pool_path else None
    records = run_batch(
        entries,
        config,
        parallelism=args.parallelism,
        records_path=args.records,
        pool=pool,
    )
    domain, problems = _load_problems(entries)
    metrics = report.score(records, domain, problems)
    stops: dict[str, int] = {}
    for record in records:
        stops[record.stop_reason.value] = stops.get(record.stop_reason.value, 0) + 1
    stop_text = ", ".join(f"{k}={v}" for k, v in sorted(stops.items()))
    print(
        f"n={metrics.n} accuracy={metrics.accuracy:.4f} "
        f"({report.summary_line(metrics)}) stops: {stop_text}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# score / report


def _load_problems(entries: list[ManifestEntry]):
    domain = None
    problems = {}
    for entry in entries:
        entry_domain, problem, _ = generators.load_entry(entry)
        if domain is None:
            domain = entry_domain
        elif entry_domain != domain:
            raise UsageError("manifest mixes domains; score one dataset at a time")
        problems[entry.id] = problem
    if domain is None:
        raise UsageError("empty manifest")
    return domain, problems


def _cmd_score(args) -> int:
    records = read_records(args.records) if Path(args.records).is_file() else None
    if records is None:
        raise UsageError(f"no such file: {args.records}")
    entries = load_manifest(Path(args.manifest))
    domain, problems = _load_problems(entries)
    metrics = report.score(records, domain, problems)
    text = json.dumps(report.metrics_to_dict(metrics), indent=2, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return EXIT_OK


def _cmd_report(args) -> int:
    records = read_records(args.records) if Path(args.records).is_file() else None
    if records is None:
        raise UsageError(f"no such file: {args.records}")
    entries = load_manifest(Path(args.manifest))
    domain, problems = _load_problems(entries)
    metrics = report.score(records, domain, problems)
    written = report.emit_report(metrics, args.format, args.out_dir)
    for path in written:
        print(path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plancritic",
        description="Generate, solve, validate, and iteratively critique STRIPS plans.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate benchmark instances")
    p.add_argument("--benchmark", required=True, choices=[b.value for b in Benchmark])
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--blocks", type=int)
    p.add_argument("--preset", choices=["easy", "hard"])
    p.add_argument("--cities", type=int)
    p.add_argument("--places-per-city", type=int, dest="places_per_city")
    p.add_argument("--packages", type=int)
    p.add_argument("--trucks", type=int)
    p.add_argument("--airplanes", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--keys", type=int, default=0)
    p.add_argument("--solve", action="store_true", help="also write shortest plans")
    p.add_argument("--max-expanded", type=int, default=200_000)
    p.add_argument("--max-length", type=int, default=100)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("validate", help="validate a plan against a problem")
    p.add_argument("--domain", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--json", action="store_true")
    p.add_argument("--quiet", action="store_true", help="print only the verdict")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("solve", help="find a shortest plan by breadth-first search")
    p.add_argument("--domain", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--out")
    p.add_argument("--max-expanded", type=int, default=200_000)
    p.add_argument("--max-length", type=int, default=100)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("obfuscate", help="rename a dataset's vocabulary")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=[m.value for m in ObfuscationMode], default="deceptive")
    p.add_argument("--map", help="JSON map file overriding --mode")
    p.set_defaults(func=_cmd_obfuscate)

    p = sub.add_parser("run", help="run the iterative critique loop over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--records", required=True, help="JSONL output; reused to resume")
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--critic", choices=["oracle", "mock", "llm"], default="oracle")
    p.add_argument("--planner", choices=["mock-golden", "mock", "llm"], default="mock-golden")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--shots", type=int, default=0)
    p.add_argument("--pool", help="manifest of solved problems for few-shot examples")
    p.add_argument("--pool-seed", type=int, default=0, dest="pool_seed")
    p.add_argument("--budget", type=int, default=400_000)
    p.add_argument("--self-consistency", type=int, default=1, dest="self_consistency")
    p.add_argument("--golden-prob", type=float, default=1.0, dest="golden_prob")
    p.add_argument("--fp", type=float, default=0.0)
    p.add_argument("--fn", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallelism", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("score", help="score persisted run records")
    p.add_argument("--records", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("report", help="emit a report from run records")
    p.add_argument("--records", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--format", choices=list(report.REPORT_FORMATS), default="table-text")
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, IsADirectoryError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (
        PddlError,
        InvalidSpec,
        PoolTooSmall,
        TransportError,
        report.MissingProblem,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())

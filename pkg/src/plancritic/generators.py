"""Seeded benchmark instance generation and name obfuscation.

Three instance families are supported:

* blocksworld: random tower configurations over ``bi`` blocks; goals are
  non-empty partial ``on`` sets that are not already satisfied.
* logistics: untyped STRIPS logistics (trucks within cities, airplanes
  between airports, one airport per city).  Each city gets its own truck so
  every delivery goal is reachable.
* minigrid: rooms on a grid joined by the edges of a random spanning tree.
  Some edges on the start-to-target path may be locked; each lock's key is
  placed on the start side of its door, so instances are always solvable.

Instances are a pure function of (spec, seed, index): instance ``i`` of a
run is identical no matter how many instances are requested.

Obfuscation consistently renames predicates, actions, and optionally objects
and domain/problem names across a domain, its problems, and plans.  The
"deceptive" mode ships the fixed blocksworld-to-mystery wordlist; the
"nonspecific" mode numbers every name (``predicate-1``, ``action-1``, ...).
"""

from __future__ import annotations

import dataclasses
import json
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping

from . import domains
from .pddl import (
    Atom,
    DomainDef,
    GroundAction,
    Plan,
    Predicate,
    ActionSchema,
    Literal,
    ProblemDef,
    parse_domain,
    parse_plan,
    parse_problem,
    print_domain,
    print_plan,
    print_problem,
)


class Benchmark(str, Enum):
    BLOCKSWORLD = "blocksworld"
    LOGISTICS = "logistics"
    MINIGRID = "minigrid"


class InvalidSpec(ValueError):
    pass


@dataclass(frozen=True)
class GenSpec:
    benchmark: Benchmark
    seed: int
    count: int
    # blocksworld
    blocks: int | None = None
    # logistics
    cities: int | None = None
    places_per_city: int | None = None
    packages: int | None = None
    trucks: int | None = None
    airplanes: int | None = None
    # minigrid
    grid_width: int | None = None
    grid_height: int | None = None
    keys: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "benchmark", Benchmark(self.benchmark))
        if self.count < 0:
            raise InvalidSpec("count must be non-negative")
        b = self.benchmark
        if b is Benchmark.BLOCKSWORLD:
            if self.blocks is None or not 2 <= self.blocks <= 20:
                raise InvalidSpec("blocksworld needs a block count in [2, 20]")
        elif b is Benchmark.LOGISTICS:
            for name in ("cities", "places_per_city", "packages", "trucks", "airplanes"):
                value = getattr(self, name)
                if value is None or value < 0:
                    raise InvalidSpec(f"logistics needs a non-negative {name}")
            if self.cities < 1 or self.places_per_city < 1:
                raise InvalidSpec("logistics needs at least one city and one place per city")
            if self.trucks < self.cities and self.places_per_city > 1:
                raise InvalidSpec("logistics needs one truck per city to stay solvable")
            if self.airplanes < 1 and self.cities > 1:
                raise InvalidSpec("multi-city logistics needs an airplane")
            if self.packages > 0 and self.cities * self.places_per_city < 2:
                raise InvalidSpec("deliveries need at least two places")
        elif b is Benchmark.MINIGRID:
            if self.grid_width is None or self.grid_height is None or self.keys is None:
                raise InvalidSpec("minigrid needs grid_width, grid_height, and keys")
            if self.grid_width < 1 or self.grid_height < 1 or self.keys < 0:
                raise InvalidSpec("minigrid sizes must be positive (keys may be zero)")

    @classmethod
    def blocksworld(cls, blocks: int, seed: int, count: int) -> "GenSpec":
        return cls(Benchmark.BLOCKSWORLD, seed, count, blocks=blocks)

    @classmethod
    def logistics_easy(cls, seed: int, count: int) -> "GenSpec":
        # four places and two packages
        return cls(
            Benchmark.LOGISTICS, seed, count,
            cities=2, places_per_city=2, packages=2, trucks=2, airplanes=1,
        )

    @classmethod
    def logistics_hard(cls, seed: int, count: int) -> "GenSpec":
        # 4 cities, 2 places per city, 8 packages
        return cls(
            Benchmark.LOGISTICS, seed, count,
            cities=4, places_per_city=2, packages=8, trucks=4, airplanes=2,
        )

    @classmethod
    def minigrid(cls, width: int, height: int, keys: int, seed: int, count: int) -> "GenSpec":
        return cls(Benchmark.MINIGRID, seed, count, grid_width=width, grid_height=height, keys=keys)

    def params(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            if f.name in ("benchmark", "seed", "count"):
                continue
            value = getattr(self, f.name)
            if value is not None:
                out[f.name] = value
        return out


def _rng_for(spec: GenSpec, index: int) -> random.Random:
    return random.Random(f"{spec.benchmark.value}:{spec.seed}:{index}")


# ---------------------------------------------------------------------------
# Blocksworld


def _sample_towers(rng: random.Random, blocks: list[str]) -> dict[str, str | None]:
    """Place each block on the table or on a uniformly chosen clear block."""
    order = list(blocks)
    rng.shuffle(order)
    support: dict[str, str | None] = {}
    clear: list[str] = []
    for block in order:
        choice = rng.choice([None] + clear)
        support[block] = choice
        if choice is not None:
            clear.remove(choice)
        clear.append(block)
    return support


def _blocksworld_instance(spec: GenSpec, index: int) -> ProblemDef:
    rng = _rng_for(spec, index)
    blocks = [f"b{i}" for i in range(1, spec.blocks + 1)]
    support = _sample_towers(rng, blocks)

    init: set[Atom] = {Atom("handempty")}
    supported = set()
    for block, under in support.items():
        if under is None:
            init.add(Atom("ontable", (block,)))
        else:
            init.add(Atom("on", (block, under)))
            supported.add(under)
    for block in blocks:
        if block not in supported:
            init.add(Atom("clear", (block,)))

    for _ in range(10_000):
        goal_support = _sample_towers(rng, blocks)
        ons = [(b, u) for b, u in goal_support.items() if u is not None]
        if not ons:
            continue
        chosen = rng.sample(ons, rng.randint(1, len(ons)))
        goal = tuple(Atom("on", pair) for pair in chosen)
        if not all(atom in init for atom in goal):
            break
    else:  # pragma: no cover - would need a pathological rng
        raise RuntimeError("could not sample an unsatisfied goal")

    objects = list(blocks)
    rng.shuffle(objects)
    return ProblemDef(
        name=f"BW-rand-{spec.blocks}",
        domain_name="blocksworld-4ops",
        objects=tuple(objects),
        init=frozenset(init),
        goal=goal,
    )


def gen_blocksworld(spec: GenSpec) -> list[ProblemDef]:
    if Benchmark(spec.benchmark) is not Benchmark.BLOCKSWORLD:
        raise InvalidSpec("spec is not a blocksworld spec")
    return [_blocksworld_instance(spec, i) for i in range(spec.count)]


# ---------------------------------------------------------------------------
# Logistics


def _logistics_instance(spec: GenSpec, index: int) -> ProblemDef:
    rng = _rng_for(spec, index)
    cities = [f"c{i}" for i in range(1, spec.cities + 1)]
    airports = {c: f"a{i}" for i, c in enumerate(cities, start=1)}
    places: dict[str, list[str]] = {}
    for i, c in enumerate(cities, start=1):
        places[c] = [airports[c]] + [f"l{i}-{j}" for j in range(1, spec.places_per_city)]
    all_places = [p for c in cities for p in places[c]]
    trucks = [f"t{i}" for i in range(1, spec.trucks + 1)]
    airplanes = [f"pl{i}" for i in range(1, spec.airplanes + 1)]
    packages = [f"pkg{i}" for i in range(1, spec.packages + 1)]

    init: set[Atom] = set()
    for c in cities:
        init.add(Atom("city", (c,)))
        init.add(Atom("airport", (airports[c],)))
        for p in places[c]:
            init.add(Atom("location", (p,)))
            init.add(Atom("in-city", (p, c)))
    for i, t in enumerate(trucks):
        home = cities[i % len(cities)]
        init.add(Atom("truck", (t,)))
        init.add(Atom("at", (t, rng.choice(places[home]))))
    for a in airplanes:
        init.add(Atom("airplane", (a,)))
        init.add(Atom("at", (a, airports[rng.choice(cities)])))
    starts = {}
    for p in packages:
        init.add(Atom("package", (p,)))
        starts[p] = rng.choice(all_places)
        init.add(Atom("at", (p, starts[p])))

    goal = tuple(
        Atom("at", (p, rng.choice([loc for loc in all_places if loc != starts[p]])))
        for p in packages
    )
    return ProblemDef(
        name=f"LG-rand-{index}",
        domain_name="logistics-strips",
        objects=tuple(cities + sorted(airports.values()) + [p for c in cities for p in places[c] if p not in airports.values()] + trucks + airplanes + packages),
        init=frozenset(init),
        goal=goal,
    )


def gen_logistics(spec: GenSpec) -> list[ProblemDef]:
    if Benchmark(spec.benchmark) is not Benchmark.LOGISTICS:
        raise InvalidSpec("spec is not a logistics spec")
    return [_logistics_instance(spec, i) for i in range(spec.count)]


# ---------------------------------------------------------------------------
# Minigrid


def _tree_path(tree: dict, start, target) -> list:
    """Rooms from start to target along the spanning tree."""
    prev = {start: None}
    queue = deque([start])
    while queue:
        room = queue.popleft()
        if room == target:
            break
        for nxt in tree[room]:
            if nxt not in prev:
                prev[nxt] = room
                queue.append(nxt)
    path = [target]
    while path[-1] != start:
        path.append(prev[path[-1]])
    path.reverse()
    return path


def _start_side(tree: dict, start, edge: tuple) -> list:
    """Rooms reachable from start without crossing ``edge``."""
    a, b = edge
    seen = {start}
    queue = deque([start])
    while queue:
        room = queue.popleft()
        for nxt in tree[room]:
            if {room, nxt} == {a, b}:
                continue
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return sorted(seen)


def _minigrid_instance(spec: GenSpec, index: int) -> ProblemDef:
    rng = _rng_for(spec, index)
    width, height = spec.grid_width, spec.grid_height
    cells = [(x, y) for y in range(height) for x in range(width)]
    room = {cell: f"room-{cell[0]}-{cell[1]}" for cell in cells}

    # random spanning tree over the grid (randomized Prim)
    tree: dict[tuple, list[tuple]] = {cell: [] for cell in cells}
    tree_edges: list[tuple[tuple, tuple]] = []
    if len(cells) > 1:
        in_tree = {rng.choice(cells)}
        while len(in_tree) < len(cells):
            frontier = []
            for cell in sorted(in_tree):
                x, y = cell
                for nxt in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
                    if nxt in tree and nxt not in in_tree:
                        frontier.append((cell, nxt))
            a, b = rng.choice(frontier)
            in_tree.add(b)
            tree[a].append(b)
            tree[b].append(a)
            tree_edges.append((a, b))

    start = rng.choice(cells)
    target = rng.choice([c for c in cells if c != start]) if len(cells) > 1 else start

    path = _tree_path(tree, start, target)
    path_edges = list(zip(path, path[1:]))
    n_locks = min(spec.keys, len(path_edges))
    locked_idx = sorted(rng.sample(range(len(path_edges)), n_locks))

    keys = [f"key{i}" for i in range(1, spec.keys + 1)]
    key_rooms: dict[str, tuple] = {}
    locked: dict[tuple[tuple, tuple], str] = {}
    for key, edge_idx in zip(keys, locked_idx):
        edge = path_edges[edge_idx]
        locked[edge] = key
        key_rooms[key] = rng.choice(_start_side(tree, start, edge))
    for key in keys[n_locks:]:
        key_rooms[key] = rng.choice(sorted(cells))

    init: set[Atom] = {Atom("arm-free"), Atom("robot-at", (room[start],))}
    for cell in cells:
        init.add(Atom("room", (room[cell],)))
    for key in keys:
        init.add(Atom("key", (key,)))
        init.add(Atom("key-at", (key, room[key_rooms[key]])))
    for a, b in tree_edges:
        edge = next((e for e in ((a, b), (b, a)) if e in locked), None)
        if edge is None:
            init.add(Atom("connected", (room[a], room[b])))
            init.add(Atom("connected", (room[b], room[a])))
        else:
            key = locked[edge]
            init.add(Atom("locked", (room[a], room[b], key)))
            init.add(Atom("locked", (room[b], room[a], key)))

    return ProblemDef(
        name=f"MG-rand-{index}",
        domain_name="minigrid-strips",
        objects=tuple([room[c] for c in cells] + keys),
        init=frozenset(init),
        goal=(Atom("robot-at", (room[target],)),),
    )


def gen_minigrid(spec: GenSpec) -> list[ProblemDef]:
    if Benchmark(spec.benchmark) is not Benchmark.MINIGRID:
        raise InvalidSpec("spec is not a minigrid spec")
    return [_minigrid_instance(spec, i) for i in range(spec.count)]


_GENERATORS = {
    Benchmark.BLOCKSWORLD: (gen_blocksworld, domains.blocksworld_domain),
    Benchmark.LOGISTICS: (gen_logistics, domains.logistics_domain),
    Benchmark.MINIGRID: (gen_minigrid, domains.minigrid_domain),
}


def generate(spec: GenSpec) -> tuple[DomainDef, list[ProblemDef]]:
    """Generate instances plus the domain they belong to."""
    gen, dom = _GENERATORS[Benchmark(spec.benchmark)]
    return dom(), gen(spec)


# ---------------------------------------------------------------------------
# Obfuscation


class ObfuscationMode(str, Enum):
    DECEPTIVE = "deceptive"
    NONSPECIFIC = "nonspecific"
    IDENTITY = "identity"


class IncompleteMap(ValueError):
    pass


class CollidingMap(ValueError):
    pass


@dataclass(frozen=True)
class ObfuscationMap:
    """Bijective renaming tables.

    ``predicates`` and ``actions`` must cover every name the domain declares.
    ``objects`` may be partial; unlisted objects keep their names.  Domain and
    problem names are renamed through the corresponding tables when present.
    """

    mode: ObfuscationMode
    predicates: Mapping[str, str]
    actions: Mapping[str, str]
    objects: Mapping[str, str] = field(default_factory=dict)
    domain_names: Mapping[str, str] = field(default_factory=dict)
    problem_names: Mapping[str, str] = field(default_factory=dict)


DECEPTIVE_PREDICATES = {
    "clear": "province",
    "ontable": "planet",
    "handempty": "harmony",
    "holding": "pain",
    "on": "craves",
}
DECEPTIVE_ACTIONS = {
    "pick-up": "attack",
    "put-down": "succumb",
    "stack": "overcome",
    "unstack": "feast",
}


def deceptive_map(problem_names: Mapping[str, str] | None = None) -> ObfuscationMap:
    """The fixed blocksworld-to-mystery wordlist; objects keep their names."""
    return ObfuscationMap(
        mode=ObfuscationMode.DECEPTIVE,
        predicates=dict(DECEPTIVE_PREDICATES),
        actions=dict(DECEPTIVE_ACTIONS),
        domain_names={"blocksworld-4ops": "mystery-4ops"},
        problem_names=dict(problem_names or {}),
    )


def nonspecific_map(domain: DomainDef) -> ObfuscationMap:
    return ObfuscationMap(
        mode=ObfuscationMode.NONSPECIFIC,
        predicates={p.name: f"predicate-{i}" for i, p in enumerate(domain.predicates, start=1)},
        actions={a.name: f"action-{i}" for i, a in enumerate(domain.actions, start=1)},
        domain_names={domain.name: "nonspecific-domain"},
    )


def identity_map(domain: DomainDef) -> ObfuscationMap:
    return ObfuscationMap(
        mode=ObfuscationMode.IDENTITY,
        predicates={p.name: p.name for p in domain.predicates},
        actions={a.name: a.name for a in domain.actions},
    )


def inverse_map(mapping: ObfuscationMap) -> ObfuscationMap:
    return ObfuscationMap(
        mode=mapping.mode,
        predicates={v: k for k, v in mapping.predicates.items()},
        actions={v: k for k, v in mapping.actions.items()},
        objects={v: k for k, v in mapping.objects.items()},
        domain_names={v: k for k, v in mapping.domain_names.items()},
        problem_names={v: k for k, v in mapping.problem_names.items()},
    )


def _check_map(domain: DomainDef, mapping: ObfuscationMap) -> None:
    missing = [p.name for p in domain.predicates if p.name not in mapping.predicates]
    missing += [a.name for a in domain.actions if a.name not in mapping.actions]
    if missing:
        raise IncompleteMap("map is missing renames for: " + ", ".join(missing))
    for label, table in (("predicate", mapping.predicates), ("action", mapping.actions), ("object", mapping.objects)):
        values = list(table.values())
        if len(values) != len(set(values)):
            raise CollidingMap(f"{label} renames collide")


def _rename_atom(atom: Atom, mapping: ObfuscationMap) -> Atom:
    return Atom(
        mapping.predicates[atom.pred],
        tuple(mapping.objects.get(a, a) for a in atom.args),
    )


def obfuscate(
    domain: DomainDef,
    problems: list[ProblemDef] | None = None,
    plans: list[Plan] | None = None,
    mapping: ObfuscationMap | None = None,
) -> tuple[DomainDef, list[ProblemDef], list[Plan] | None]:
    """Consistently rename a domain and everything that refers to it."""
    if mapping is None:
        raise ValueError("an ObfuscationMap is required")
    _check_map(domain, mapping)

    def rename_schema_atom(atom: Atom) -> Atom:
        # schema atoms carry variables, which are never renamed
        return Atom(mapping.predicates[atom.pred], atom.args)

    new_domain = DomainDef(
        name=mapping.domain_names.get(domain.name, domain.name),
        requirements=domain.requirements,
        predicates=tuple(Predicate(mapping.predicates[p.name], p.params) for p in domain.predicates),
        actions=tuple(
            ActionSchema(
                name=mapping.actions[s.name],
                parameters=s.parameters,
                precondition=tuple(rename_schema_atom(a) for a in s.precondition),
                effects=tuple(
                    Literal(rename_schema_atom(lit.atom), lit.positive) for lit in s.effects
                ),
            )
            for s in domain.actions
        ),
    )

    new_problems = []
    for problem in problems or []:
        renamed_objects = tuple(mapping.objects.get(o, o) for o in problem.objects)
        if len(set(renamed_objects)) != len(renamed_objects):
            raise CollidingMap(f"object renames collide in problem {problem.name}")
        new_problems.append(
            ProblemDef(
                name=mapping.problem_names.get(problem.name, problem.name),
                domain_name=mapping.domain_names.get(problem.domain_name, problem.domain_name),
                objects=renamed_objects,
                init=frozenset(_rename_atom(a, mapping) for a in problem.init),
                goal=tuple(_rename_atom(a, mapping) for a in problem.goal),
            )
        )

    new_plans = None
    if plans is not None:
        for plan in plans:
            for step in plan.steps:
                if step.name not in mapping.actions:
                    raise IncompleteMap(f"map is missing a rename for action {step.name!r}")
        new_plans = [
            Plan(
                tuple(
                    GroundAction(
                        mapping.actions[step.name],
                        tuple(mapping.objects.get(a, a) for a in step.args),
                    )
                    for step in plan.steps
                )
            )
            for plan in plans
        ]
    return new_domain, new_problems, new_plans


# ---------------------------------------------------------------------------
# Dataset files and manifests


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    benchmark: str
    seed: int
    index: int
    params: dict
    domain_file: Path
    problem_file: Path
    plan_file: Path | None = None


def write_dataset(
    out_dir: str | Path,
    domain: DomainDef,
    problems: list[ProblemDef],
    spec: GenSpec,
    plans: list[Plan | None] | None = None,
) -> Path:
    """Write ``domain.pddl``, one problem file per instance, optional plan
    files, and a ``manifest.jsonl`` listing them.  Returns the manifest path.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "domain.pddl").write_text(print_domain(domain) + "\n")
    records = []
    for index, problem in enumerate(problems):
        instance_id = f"{spec.benchmark.value}-{spec.seed}-{index:04d}"
        problem_file = f"{instance_id}.pddl"
        (out / problem_file).write_text(print_problem(problem) + "\n")
        record = {
            "id": instance_id,
            "benchmark": spec.benchmark.value,
            "seed": spec.seed,
            "index": index,
            "params": spec.params(),
            "domain_file": "domain.pddl",
            "problem_file": problem_file,
        }
        plan = plans[index] if plans is not None else None
        if plan is not None:
            plan_file = f"{instance_id}.plan"
            text = print_plan(plan)
            (out / plan_file).write_text(text + "\n" if text else "")
            record["plan_file"] = plan_file
        records.append(record)
    manifest = out / "manifest.jsonl"
    with manifest.open("w") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return manifest


def load_manifest(path: str | Path) -> list[ManifestEntry]:
    path = Path(path)
    base = path.parent
    entries = []
    with path.open() as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            entries.append(
                ManifestEntry(
                    id=raw["id"],
                    benchmark=raw.get("benchmark", ""),
                    seed=raw.get("seed", 0),
                    index=raw.get("index", 0),
                    params=raw.get("params", {}),
                    domain_file=base / raw["domain_file"],
                    problem_file=base / raw["problem_file"],
                    plan_file=base / raw["plan_file"] if raw.get("plan_file") else None,
                )
            )
    return entries


def load_entry(entry: ManifestEntry) -> tuple[DomainDef, ProblemDef, Plan | None]:
    domain = parse_domain(entry.domain_file.read_text())
    problem = parse_problem(entry.problem_file.read_text(), domain)
    plan = None
    if entry.plan_file is not None:
        plan = parse_plan(entry.plan_file.read_text(), domain)
    return domain, problem, plan

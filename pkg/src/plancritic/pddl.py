"""Parser, AST, and printer for the :strips subset of PDDL.

Input is s-expression text; ``;`` starts a comment that runs to end of line.
Keywords (``define``, ``:action``, ``and``, ``not``, ...) are matched
case-insensitively while identifiers keep their case.  The supported subset is
untyped STRIPS: predicate declarations, action schemas with conjunctive
positive preconditions and conjunctive literal effects, plain object lists,
ground positive init atoms, and a conjunctive positive goal.  Everything else
(typing, ADL connectives, quantifiers, conditional effects, numeric fluents,
negated goals) raises :class:`UnsupportedFeature`.

Printing is canonical: lowercase keywords, one init/goal atom per line, init
atoms sorted, fields otherwise in declaration order.  For any value produced
by this package, ``parse(print(x)) == x``.
"""

from __future__ import annotations

from dataclasses import dataclass


class PddlError(Exception):
    """Base class for parse and validation failures."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class PddlSyntaxError(PddlError):
    """Malformed s-expression or section structure."""


class UnsupportedFeature(PddlError):
    """Construct outside the untyped STRIPS subset."""


class ArityMismatch(PddlError):
    """Atom or ground action with the wrong number of arguments."""


class UnknownPredicate(PddlError):
    """Atom over a predicate the domain does not declare."""


class UnknownObject(PddlError):
    """Ground atom argument that is not a declared object."""


class UnknownAction(PddlError):
    """Plan step naming an action the domain does not define."""


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Atom:
    """A predicate applied to arguments (objects or ?-variables)."""

    pred: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return "(" + " ".join((self.pred,) + self.args) + ")"

    def substitute(self, binding: dict[str, str]) -> "Atom":
        return Atom(self.pred, tuple(binding.get(a, a) for a in self.args))

    def sort_key(self) -> tuple:
        return (self.pred, self.args)


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def __str__(self) -> str:
        return str(self.atom) if self.positive else f"(not {self.atom})"


@dataclass(frozen=True)
class Predicate:
    name: str
    params: tuple[str, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(frozen=True)
class ActionSchema:
    name: str
    parameters: tuple[str, ...]
    precondition: tuple[Atom, ...]
    effects: tuple[Literal, ...]

    @property
    def add_effects(self) -> tuple[Atom, ...]:
        return tuple(lit.atom for lit in self.effects if lit.positive)

    @property
    def del_effects(self) -> tuple[Atom, ...]:
        return tuple(lit.atom for lit in self.effects if not lit.positive)


@dataclass(frozen=True)
class DomainDef:
    name: str
    requirements: tuple[str, ...]
    predicates: tuple[Predicate, ...]
    actions: tuple[ActionSchema, ...]

    def predicate(self, name: str) -> Predicate | None:
        for p in self.predicates:
            if p.name == name:
                return p
        return None

    def action(self, name: str) -> ActionSchema | None:
        for a in self.actions:
            if a.name == name:
                return a
        return None


@dataclass(frozen=True)
class ProblemDef:
    name: str
    domain_name: str
    objects: tuple[str, ...]
    init: frozenset[Atom]
    goal: tuple[Atom, ...]


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return "(" + " ".join((self.name,) + self.args) + ")"


@dataclass(frozen=True)
class Plan:
    steps: tuple[GroundAction, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)


# ---------------------------------------------------------------------------
# Tokenizer / reader


@dataclass(frozen=True)
class _Sym:
    text: str
    line: int
    col: int


@dataclass(frozen=True)
class _SList:
    items: tuple
    line: int
    col: int


def _tokenize(text: str):
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch.isspace():
            col += 1
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            yield ch, line, col
            col += 1
            i += 1
        else:
            start = i
            start_col = col
            while i < n and not text[i].isspace() and text[i] not in "();":
                i += 1
                col += 1
            yield text[start:i], line, start_col


def _read_all(text: str) -> list:
    """Read every top-level s-expression in ``text``."""
    stack: list[list] = []
    top: list = []
    positions: list[tuple[int, int]] = []
    for tok, line, col in _tokenize(text):
        if tok == "(":
            stack.append([])
            positions.append((line, col))
        elif tok == ")":
            if not stack:
                raise PddlSyntaxError("unbalanced ')'", line, col)
            items = stack.pop()
            pline, pcol = positions.pop()
            node = _SList(tuple(items), pline, pcol)
            (stack[-1] if stack else top).append(node)
        else:
            node = _Sym(tok, line, col)
            (stack[-1] if stack else top).append(node)
    if stack:
        line, col = positions[-1]
        raise PddlSyntaxError("unbalanced '('", line, col)
    return top


def _read_one(text: str, what: str) -> _SList:
    nodes = _read_all(text)
    if not nodes:
        raise PddlSyntaxError(f"empty {what}")
    if len(nodes) > 1:
        extra = nodes[1]
        raise PddlSyntaxError(f"trailing content after {what}", extra.line, extra.col)
    node = nodes[0]
    if not isinstance(node, _SList):
        raise PddlSyntaxError(f"{what} must be a parenthesized expression", node.line, node.col)
    return node


def _is_kw(node, word: str) -> bool:
    return isinstance(node, _Sym) and node.text.lower() == word


def _sym_text(node, what: str) -> str:
    if not isinstance(node, _Sym):
        raise PddlSyntaxError(f"expected {what}", node.line, node.col)
    return node.text


def _check_name(name: str, node, what: str) -> str:
    if name.startswith(":") or name.startswith("?"):
        raise PddlSyntaxError(f"invalid {what} {name!r}", node.line, node.col)
    if name.lower() == "-" or "-" == name:
        raise UnsupportedFeature("types are not supported", node.line, node.col)
    return name


# ---------------------------------------------------------------------------
# Domain parsing


_ADL_WORDS = {"or", "imply", "exists", "forall", "when", "oneof", "either"}


def _parse_atom(node, *, allow_variables: bool, what: str) -> Atom:
    if not isinstance(node, _SList):
        raise PddlSyntaxError(f"expected atom in {what}", node.line, node.col)
    if not node.items:
        raise PddlSyntaxError(f"empty atom in {what}", node.line, node.col)
    head = node.items[0]
    name = _sym_text(head, f"predicate name in {what}")
    if name.lower() in _ADL_WORDS:
        raise UnsupportedFeature(f"'{name}' is not supported", head.line, head.col)
    if name.lower() in ("and", "not"):
        raise PddlSyntaxError(f"misplaced '{name}' in {what}", head.line, head.col)
    _check_name(name, head, "predicate name")
    args = []
    for item in node.items[1:]:
        arg = _sym_text(item, f"argument in {what}")
        if arg == "-":
            raise UnsupportedFeature("types are not supported", item.line, item.col)
        if arg.startswith("?"):
            if not allow_variables:
                raise PddlSyntaxError(f"variable {arg!r} in ground atom", item.line, item.col)
        elif allow_variables:
            # schema atoms must be fully lifted; bare constants would need a
            # :constants section, which the subset does not include
            raise UnsupportedFeature(f"constant {arg!r} in action definition", item.line, item.col)
        args.append(arg)
    return Atom(name, tuple(args))


def _parse_conjunction(node, *, allow_variables: bool, what: str) -> tuple[Atom, ...]:
    """Parse ``(and atom...)``, a bare atom, or ``(and)`` for empty."""
    if not isinstance(node, _SList):
        raise PddlSyntaxError(f"expected {what}", node.line, node.col)
    if node.items and _is_kw(node.items[0], "and"):
        return tuple(
            _parse_atom(item, allow_variables=allow_variables, what=what) for item in node.items[1:]
        )
    if node.items and _is_kw(node.items[0], "not"):
        raise UnsupportedFeature(f"negation is not supported in {what}", node.line, node.col)
    return (_parse_atom(node, allow_variables=allow_variables, what=what),)


def _parse_literal(node, what: str) -> Literal:
    if isinstance(node, _SList) and node.items and _is_kw(node.items[0], "not"):
        if len(node.items) != 2:
            raise PddlSyntaxError("'not' takes exactly one atom", node.line, node.col)
        return Literal(_parse_atom(node.items[1], allow_variables=True, what=what), positive=False)
    return Literal(_parse_atom(node, allow_variables=True, what=what), positive=True)


def _parse_effect(node, what: str) -> tuple[Literal, ...]:
    if not isinstance(node, _SList):
        raise PddlSyntaxError(f"expected {what}", node.line, node.col)
    if node.items and isinstance(node.items[0], _Sym) and node.items[0].text.lower() in _ADL_WORDS:
        raise UnsupportedFeature(
            f"'{node.items[0].text}' is not supported", node.line, node.col
        )
    if node.items and _is_kw(node.items[0], "and"):
        return tuple(_parse_literal(item, what) for item in node.items[1:])
    return (_parse_literal(node, what),)


def _parse_params(node, action: str) -> tuple[str, ...]:
    if not isinstance(node, _SList):
        raise PddlSyntaxError(f"expected parameter list for {action}", node.line, node.col)
    params = []
    for item in node.items:
        text = _sym_text(item, "parameter")
        if text == "-":
            raise UnsupportedFeature("typed parameters are not supported", item.line, item.col)
        if not text.startswith("?"):
            raise PddlSyntaxError(f"parameter {text!r} must start with '?'", item.line, item.col)
        if text in params:
            raise PddlSyntaxError(f"duplicate parameter {text!r}", item.line, item.col)
        params.append(text)
    return tuple(params)


def _parse_action(node) -> ActionSchema:
    items = node.items
    if len(items) < 2:
        raise PddlSyntaxError("incomplete action definition", node.line, node.col)
    name = _check_name(_sym_text(items[1], "action name"), items[1], "action name")
    params: tuple[str, ...] = ()
    precond: tuple[Atom, ...] = ()
    effects: tuple[Literal, ...] = ()
    seen: set[str] = set()
    i = 2
    while i < len(items):
        key_node = items[i]
        key = _sym_text(key_node, "action section keyword").lower()
        if key in seen:
            raise PddlSyntaxError(f"duplicate {key} in action {name}", key_node.line, key_node.col)
        seen.add(key)
        if i + 1 >= len(items):
            raise PddlSyntaxError(f"missing value for {key}", key_node.line, key_node.col)
        value = items[i + 1]
        if key == ":parameters":
            params = _parse_params(value, name)
        elif key == ":precondition":
            precond = _parse_conjunction(
                value, allow_variables=True, what=f"precondition of {name}"
            )
        elif key == ":effect":
            effects = _parse_effect(value, f"effect of {name}")
        else:
            raise UnsupportedFeature(f"action section {key!r}", key_node.line, key_node.col)
        i += 2

    param_set = set(params)
    for atom in precond + tuple(lit.atom for lit in effects):
        for arg in atom.args:
            if arg not in param_set:
                raise PddlSyntaxError(f"unbound variable {arg!r} in action {name}", node.line, node.col)
    adds = {lit.atom for lit in effects if lit.positive}
    dels = {lit.atom for lit in effects if not lit.positive}
    conflict = adds & dels
    if conflict:
        raise PddlSyntaxError(
            f"effect of {name} both adds and deletes {next(iter(conflict))}", node.line, node.col
        )
    return ActionSchema(name, params, precond, effects)


def parse_domain(text: str) -> DomainDef:
    """Parse a PDDL domain, validating it against the :strips subset."""
    root = _read_one(text, "domain")
    items = root.items
    if not items or not _is_kw(items[0], "define"):
        raise PddlSyntaxError("domain must start with (define ...)", root.line, root.col)
    if len(items) < 2 or not isinstance(items[1], _SList):
        raise PddlSyntaxError("missing (domain NAME)", root.line, root.col)
    head = items[1].items
    if len(head) != 2 or not _is_kw(head[0], "domain"):
        raise PddlSyntaxError("missing (domain NAME)", items[1].line, items[1].col)
    name = _check_name(_sym_text(head[1], "domain name"), head[1], "domain name")

    requirements: tuple[str, ...] | None = None
    predicates: list[Predicate] = []
    actions: list[ActionSchema] = []
    saw_predicates = False
    for section in items[2:]:
        if not isinstance(section, _SList) or not section.items:
            raise PddlSyntaxError("expected a domain section", section.line, section.col)
        key = _sym_text(section.items[0], "section keyword").lower()
        if key == ":requirements":
            reqs = tuple(_sym_text(item, "requirement") for item in section.items[1:])
            for req in reqs:
                if req.lower() != ":strips":
                    raise UnsupportedFeature(
                        f"requirement {req} is not supported", section.line, section.col
                    )
            requirements = (":strips",)
        elif key == ":predicates":
            if saw_predicates:
                raise PddlSyntaxError("duplicate :predicates section", section.line, section.col)
            saw_predicates = True
            for decl in section.items[1:]:
                atom = _parse_atom(decl, allow_variables=True, what=":predicates")
                if any(p.name == atom.pred for p in predicates):
                    raise PddlSyntaxError(
                        f"duplicate predicate {atom.pred!r}", decl.line, decl.col
                    )
                predicates.append(Predicate(atom.pred, atom.args))
        elif key == ":action":
            schema = _parse_action(section)
            if any(a.name == schema.name for a in actions):
                raise PddlSyntaxError(f"duplicate action {schema.name!r}", section.line, section.col)
            actions.append(schema)
        else:
            raise UnsupportedFeature(f"domain section {key!r}", section.line, section.col)

    if requirements is None:
        requirements = (":strips",)  # implicit STRIPS

    by_name = {p.name: p for p in predicates}
    for schema in actions:
        for atom in schema.precondition + tuple(lit.atom for lit in schema.effects):
            decl = by_name.get(atom.pred)
            if decl is None:
                raise UnknownPredicate(f"undeclared predicate {atom.pred!r} in action {schema.name}")
            if decl.arity != len(atom.args):
                raise ArityMismatch(
                    f"{atom.pred} expects {decl.arity} argument(s), got {len(atom.args)} in action {schema.name}"
                )
    return DomainDef(name, requirements, tuple(predicates), tuple(actions))


# ---------------------------------------------------------------------------
# Problem parsing


def parse_problem(text: str, domain: DomainDef) -> ProblemDef:
    """Parse a PDDL problem and check it is consistent with ``domain``."""
    root = _read_one(text, "problem")
    items = root.items
    if not items or not _is_kw(items[0], "define"):
        raise PddlSyntaxError("problem must start with (define ...)", root.line, root.col)
    if len(items) < 2 or not isinstance(items[1], _SList):
        raise PddlSyntaxError("missing (problem NAME)", root.line, root.col)
    head = items[1].items
    if len(head) != 2 or not _is_kw(head[0], "problem"):
        raise PddlSyntaxError("missing (problem NAME)", items[1].line, items[1].col)
    name = _check_name(_sym_text(head[1], "problem name"), head[1], "problem name")

    domain_name: str | None = None
    objects: list[str] = []
    init: list[Atom] = []
    goal: tuple[Atom, ...] | None = None
    seen: set[str] = set()
    for section in items[2:]:
        if not isinstance(section, _SList) or not section.items:
            raise PddlSyntaxError("expected a problem section", section.line, section.col)
        key = _sym_text(section.items[0], "section keyword").lower()
        if key in seen:
            raise PddlSyntaxError(f"duplicate {key} section", section.line, section.col)
        seen.add(key)
        if key == ":domain":
            if len(section.items) != 2:
                raise PddlSyntaxError("(:domain NAME) takes one name", section.line, section.col)
            domain_name = _sym_text(section.items[1], "domain name")
        elif key == ":objects":
            for item in section.items[1:]:
                obj = _sym_text(item, "object name")
                if obj == "-":
                    raise UnsupportedFeature("typed objects are not supported", item.line, item.col)
                if obj.startswith("?") or obj.startswith(":"):
                    raise PddlSyntaxError(f"invalid object name {obj!r}", item.line, item.col)
                if obj in objects:
                    raise PddlSyntaxError(f"duplicate object {obj!r}", item.line, item.col)
                objects.append(obj)
        elif key == ":init":
            for item in section.items[1:]:
                if isinstance(item, _SList) and item.items and _is_kw(item.items[0], "not"):
                    raise UnsupportedFeature("negated init atoms are not supported", item.line, item.col)
                init.append(_parse_atom(item, allow_variables=False, what=":init"))
        elif key == ":goal":
            if len(section.items) != 2:
                raise PddlSyntaxError("(:goal ...) takes one formula", section.line, section.col)
            formula = section.items[1]
            if isinstance(formula, _SList) and formula.items and _is_kw(formula.items[0], "not"):
                raise UnsupportedFeature("negated goals are not supported", formula.line, formula.col)
            if (
                isinstance(formula, _SList)
                and formula.items
                and _is_kw(formula.items[0], "and")
            ):
                for sub in formula.items[1:]:
                    if isinstance(sub, _SList) and sub.items and _is_kw(sub.items[0], "not"):
                        raise UnsupportedFeature("negated goals are not supported", sub.line, sub.col)
            goal = _parse_conjunction(formula, allow_variables=False, what=":goal")
        else:
            raise UnsupportedFeature(f"problem section {key!r}", section.line, section.col)

    if domain_name is None:
        raise PddlSyntaxError("problem is missing a (:domain ...) section")
    if domain_name != domain.name:
        raise PddlSyntaxError(
            f"problem references domain {domain_name!r}, expected {domain.name!r}"
        )
    if goal is None:
        raise PddlSyntaxError("problem is missing a (:goal ...) section")

    object_set = set(objects)
    for where, atoms in (("init", init), ("goal", list(goal))):
        for atom in atoms:
            decl = domain.predicate(atom.pred)
            if decl is None:
                raise UnknownPredicate(f"undeclared predicate {atom.pred!r} in {where}")
            if decl.arity != len(atom.args):
                raise ArityMismatch(
                    f"{atom.pred} expects {decl.arity} argument(s), got {len(atom.args)} in {where}"
                )
            for arg in atom.args:
                if arg not in object_set:
                    raise UnknownObject(f"undeclared object {arg!r} in {where}")
    return ProblemDef(name, domain_name, tuple(objects), frozenset(init), tuple(goal))


# ---------------------------------------------------------------------------
# Plan parsing


def parse_plan(text: str, domain: DomainDef) -> Plan:
    """Parse a plan: one parenthesized ground action per line.

    Blank lines and ``;`` comments are skipped.  Action names must be defined
    by ``domain`` and argument counts must match the schema's parameters.
    """
    steps: list[GroundAction] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        nodes = _read_all(line)
        if len(nodes) != 1 or not isinstance(nodes[0], _SList):
            raise PddlSyntaxError("expected one (action args...) per line", lineno, 1)
        node = nodes[0]
        if not node.items:
            raise PddlSyntaxError("empty action", lineno, 1)
        name = _sym_text(node.items[0], "action name")
        args = []
        for item in node.items[1:]:
            arg = _sym_text(item, "action argument")
            if arg.startswith("?"):
                raise PddlSyntaxError(f"variable {arg!r} in ground action", item.line, item.col)
            args.append(arg)
        schema = domain.action(name)
        if schema is None:
            raise UnknownAction(f"unknown action {name!r}", lineno, node.col)
        if len(schema.parameters) != len(args):
            raise ArityMismatch(
                f"{name} expects {len(schema.parameters)} argument(s), got {len(args)}",
                lineno,
                node.col,
            )
        steps.append(GroundAction(name, tuple(args)))
    return Plan(tuple(steps))


# ---------------------------------------------------------------------------
# Printing


def _format_conjunction(parts: tuple) -> str:
    if not parts:
        return "(and)"
    if len(parts) == 1:
        return str(parts[0])
    return "(and " + " ".join(str(p) for p in parts) + ")"


def print_domain(domain: DomainDef) -> str:
    lines = [f"(define (domain {domain.name})", "(:requirements " + " ".join(domain.requirements) + ")"]
    if domain.predicates:
        decls = [
            "(" + " ".join((p.name,) + p.params) + ")" for p in domain.predicates
        ]
        pred_lines = ["(:predicates " + decls[0]]
        pred_lines.extend(" " * len("(:predicates ") + d for d in decls[1:])
        pred_lines[-1] += ")"
        lines.extend(pred_lines)
    else:
        lines.append("(:predicates)")
    blocks = ["\n".join(lines)]
    for schema in domain.actions:
        blocks.append(
            "\n".join(
                [
                    f"(:action {schema.name}",
                    "  :parameters (" + " ".join(schema.parameters) + ")",
                    "  :precondition " + _format_conjunction(schema.precondition),
                    "  :effect " + _format_conjunction(schema.effects) + ")",
                ]
            )
        )
    return "\n\n".join(blocks) + ")"


def print_problem(problem: ProblemDef) -> str:
    lines = [
        f"(define (problem {problem.name})",
        f"(:domain {problem.domain_name})",
        "(:objects " + " ".join(problem.objects) + ")" if problem.objects else "(:objects)",
        "(:init",
    ]
    lines.extend(str(atom) for atom in sorted(problem.init, key=Atom.sort_key))
    lines.append(")")
    if problem.goal:
        lines.append("(:goal (and")
        lines.extend(str(atom) for atom in problem.goal)
        lines.append("))")
    else:
        lines.append("(:goal (and))")
    lines.append(")")
    return "\n".join(lines)


def print_plan(plan: Plan) -> str:
    return "\n".join(str(step) for step in plan.steps)

"""Event level and control level: regions, chronology, programs, simulation."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple, Optional

from .core import find_machine, resolve
from .errors import (
    ChronologyViolation,
    DisconnectedRegion,
    DuplicateId,
    EmptyRegion,
    InvalidInput,
    MissingBinding,
    NotFound,
    UnknownEvent,
    UnknownPath,
)
from .model import (
    Cond,
    Diagnostic,
    Event,
    EventKind,
    Fire,
    If,
    Machine,
    Model,
    P,
    Path,
    Program,
    Repeat,
    error,
    iter_fires,
)

RESERVED_EVENT_IDS = frozenset({"if", "else", "repeat"})


# -- regions ----------------------------------------------------------------

def region_components(model: Model, region: Iterable[Path]) -> list[list[Path]]:
    """Connected components of a region, in first-seen order.

    Two region elements are adjacent when they are stages of one machine,
    or when a flow or trigger runs between stages they cover (a machine
    element covers everything inside it).
    """
    nodes = list(dict.fromkeys(region))
    parent = list(range(len(nodes)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        parent[find(i)] = find(j)

    by_machine: dict[Path, int] = {}
    for i, n in enumerate(nodes):
        if n.stage is not None:
            first = by_machine.setdefault(n.machine, i)
            union(i, first)

    # keyed by plain tuples: hashing Path objects is the hot spot here
    def key(p: Path) -> tuple:
        return p.segments, p.stage.value if p.stage else None

    index: dict[tuple, list[int]] = {}
    for i, n in enumerate(nodes):
        index.setdefault(key(n), []).append(i)

    def covering(end: Path) -> list[int]:
        # the stage itself plus every machine on the way down to it
        hits = list(index.get(key(end), ()))
        segs = end.segments
        for k in range(1, len(segs) + 1):
            hits += index.get((segs[:k], None), ())
        return hits

    for edge in list(model.flows) + list(model.triggers):
        src = covering(edge.source)
        if src:
            dst = covering(edge.target)
            for i in src:
                for j in dst:
                    union(i, j)

    groups: dict[int, list[Path]] = {}
    for i, n in enumerate(nodes):
        groups.setdefault(find(i), []).append(n)
    return list(groups.values())


def _region_problem(model: Model, region) -> Optional[tuple[type, str]]:
    if not region:
        return EmptyRegion, "region is empty"
    for p in region:
        try:
            resolve(model, p)
        except NotFound as exc:
            return UnknownPath, f"region path {p}: {exc}"
    parts = region_components(model, region)
    if len(parts) > 1:
        pieces = " | ".join(", ".join(map(str, c)) for c in parts)
        return DisconnectedRegion, f"region falls apart into {len(parts)} pieces: {pieces}"
    return None


def define_event(model: Model, event_id: str, label: str, region, *, kind=EventKind.PLAIN,
                 target=None, time: Optional[str] = None, meta: Optional[str] = None) -> Event:
    """Create an event over ``region`` and append it to the model."""
    region = tuple(dict.fromkeys(P(p) for p in region))
    if model.event(event_id) is not None:
        raise DuplicateId(f"event {event_id} already defined")
    problem = _region_problem(model, region)
    if problem is not None:
        cls, msg = problem
        raise cls(msg)
    event = Event(event_id, label, region, time, meta, kind, P(target) if target else None)
    model.events.append(event)
    return event


# -- chronology -------------------------------------------------------------

def successors(chronology: Iterable[tuple[str, str]]) -> dict[str, set[str]]:
    """Transitive closure of the precedence relation, as a successor map."""
    direct: dict[str, list[str]] = {}
    for a, b in chronology:
        direct.setdefault(a, []).append(b)
    closure = {}
    for start in direct:
        seen, stack = set(), list(direct[start])
        while stack:
            n = stack.pop()
            if n not in seen:
                seen.add(n)
                stack.extend(direct.get(n, ()))
        closure[start] = seen
    return closure


def validate_chronology(model: Model) -> list[Diagnostic]:
    out = []
    known = {e.id for e in model.events}
    for a, b in model.chronology:
        for x in (a, b):
            if x not in known:
                out.append(error("UNKNOWN_EVENT", f"chronology names undefined event {x}", f"{a} -> {b}"))
    closure = successors(model.chronology)
    # one diagnostic per strongly connected component that contains a cycle
    done = set()
    order = list(dict.fromkeys(x for pair in model.chronology for x in pair))
    for n in order:
        if n in done or n not in closure.get(n, ()):
            continue
        scc = [m for m in order if m == n or (m in closure.get(n, ()) and n in closure.get(m, ()))]
        done.update(scc)
        out.append(error("CHRONO_CYCLE", "events precede each other: " + ", ".join(scc),
                         "chronology"))
    return sorted(out, key=Diagnostic.sort_key)


class Violation(NamedTuple):
    first: str
    then: str

    def __str__(self) -> str:
        return f"{self.first} must occur before {self.then}"


class ChronologyChecker:
    """Feeds firings one by one and reports the first precedence violation."""

    def __init__(self, chronology):
        self.closure = successors(chronology)
        self.fired: list[str] = []

    def feed(self, event_id: str) -> Optional[Violation]:
        if event_id in self.fired:
            return None
        after = self.closure.get(event_id, set())
        for earlier in self.fired:
            if earlier in after:
                return Violation(event_id, earlier)
        self.fired.append(event_id)
        return None


def check_actualization(sequence: Iterable[str], chronology) -> Optional[Violation]:
    """Return None if ``sequence`` respects the chronology, else the first offending pair.

    Only first occurrences are ordered, so repeated firings are fine.
    """
    checker = ChronologyChecker(chronology)
    for e in sequence:
        v = checker.feed(e)
        if v is not None:
            return v
    return None


# -- state and conditions ---------------------------------------------------

_INT_RE = re.compile(r"[+-]?[0-9]+")


def conforms(value: Optional[str], type_name: str) -> bool:
    if value is None:
        return True
    if type_name == "String":
        return True
    if type_name == "char":
        return len(value) == 1
    if type_name == "int":
        return _INT_RE.fullmatch(value) is not None
    return False


def store_paths(model: Model) -> list[Path]:
    return [p for p, m in model.walk() if m.role == "store"]


def initial_state(model: Model) -> dict[Path, Optional[str]]:
    return {p: None for p in store_paths(model)}


def _store_of(model: Model, path: Path) -> Optional[Path]:
    m = find_machine(model, path)
    if m is None or path.stage is not None:
        return None
    if m.role == "store":
        return path
    stores = [c for c in m.children if c.role == "store"]
    return path.child(stores[0].name) if len(stores) == 1 else None


def resolve_store(model: Model, path: Path) -> Path:
    """Find the store a condition or event refers to.

    ``path`` may name the store itself, a machine with a single store
    child, or (when it does not resolve from the top) a unique suffix of
    such a machine's path, so ``name`` finds ``Author.name.store``.
    """
    store = _store_of(model, path)
    if store is not None:
        return store
    if path.stage is None and find_machine(model, path) is None:
        n = len(path.segments)
        hits = {s for p, _ in model.walk() if p.segments[-n:] == path.segments
                for s in [_store_of(model, p)] if s is not None}
        if len(hits) == 1:
            return hits.pop()
        if hits:
            raise NotFound(f"{path} is ambiguous: " + ", ".join(sorted(map(str, hits))))
    raise NotFound(f"{path} does not lead to a store")


def declared_type(model: Model, attribute: Path) -> str:
    m = find_machine(model, attribute)
    descs = [c for c in (m.children if m else ()) if c.role == "typedesc"]
    if len(descs) != 1 or "type" not in descs[0].metadata:
        raise NotFound(f"{attribute} has no type descriptor")
    return descs[0].metadata["type"]


def evaluate(cond: Cond, value: Optional[str]) -> bool:
    rhs = cond.rhs if cond.rhs is None else str(cond.rhs)
    equal = value == rhs
    return equal if cond.op == "==" else not equal


# -- program validation and expansion --------------------------------------

def validate_programs(model: Model) -> list[Diagnostic]:
    out = []
    known = {e.id for e in model.events}
    seen = set()
    for prog in model.programs:
        where = f"program {prog.name}"
        if prog.name in seen:
            out.append(error("DUPLICATE_PROGRAM", f"program {prog.name} defined twice", where))
        seen.add(prog.name)
        for fire in iter_fires(prog.body):
            if fire.event not in known:
                out.append(error("UNKNOWN_EVENT", f"program fires undefined event {fire.event}", where))
        for stmt in _iter_stmts(prog.body):
            if isinstance(stmt, Repeat) and (not isinstance(stmt.count, int) or stmt.count < 0):
                out.append(error("BAD_REPEAT", f"repeat count {stmt.count!r} is not a non-negative integer",
                                 where))
            if isinstance(stmt, If):
                if stmt.cond.op not in ("==", "!="):
                    out.append(error("BAD_COND", f"unknown operator {stmt.cond.op!r}", where))
                try:
                    resolve_store(model, stmt.cond.lhs)
                except NotFound as exc:
                    out.append(error("BAD_COND", str(exc), where))
    return out


def _iter_stmts(body) -> Iterator:
    for s in body:
        yield s
        if isinstance(s, If):
            yield from _iter_stmts(s.then)
            yield from _iter_stmts(s.orelse or ())
        elif isinstance(s, Repeat):
            yield from _iter_stmts(s.body)


def validate_events(model: Model) -> list[Diagnostic]:
    out = []
    seen = set()
    for e in model.events:
        where = f"event {e.id}"
        if e.id in seen:
            out.append(error("DUPLICATE_EVENT", f"event {e.id} defined twice", where))
        seen.add(e.id)
        if e.id in RESERVED_EVENT_IDS:
            out.append(error("RESERVED_NAME", f"{e.id!r} cannot name an event", where))
        problem = _region_problem(model, e.region)
        if problem is not None:
            cls, msg = problem
            out.append(error(cls.code, msg, where))
        if e.kind in (EventKind.SET, EventKind.GET):
            if e.target is None or find_machine(model, e.target) is None or e.target.stage:
                out.append(error("BAD_EVENT_TARGET", f"{e.kind.value} event needs an attribute machine",
                                 where))
        elif e.target is not None:
            out.append(error("BAD_EVENT_TARGET", f"{e.kind.value} event takes no target", where))
    return out


def validate_dynamics(model: Model) -> list[Diagnostic]:
    out = validate_events(model) + validate_chronology(model) + validate_programs(model)
    return sorted(set(out), key=Diagnostic.sort_key)


def _walk(body, state: Mapping, model: Model) -> Iterator[str]:
    # Lazy on purpose: the caller applies each yielded firing before the
    # next condition is evaluated.
    for stmt in body:
        if isinstance(stmt, Fire):
            yield stmt.event
        elif isinstance(stmt, If):
            value = state.get(resolve_store(model, stmt.cond.lhs))
            branch = stmt.then if evaluate(stmt.cond, value) else (stmt.orelse or ())
            yield from _walk(branch, state, model)
        elif isinstance(stmt, Repeat):
            for _ in range(stmt.count):
                yield from _walk(stmt.body, state, model)


# -- simulation -------------------------------------------------------------

@dataclass(frozen=True)
class Change:
    path: Path
    old: Optional[str]
    new: Optional[str]


@dataclass(frozen=True)
class Firing:
    step: int
    event: str
    kind: EventKind
    outcome: str  # "applied" | "rejected"
    delta: tuple[Change, ...] = ()
    output: Optional[str] = None  # meaningful for get events only


def _show(value: Optional[str]) -> str:
    return "null" if value is None else json.dumps(value, ensure_ascii=False)


def format_firing(f: Firing) -> str:
    if f.delta:
        detail = "; ".join(f"{c.path}: {_show(c.old)} -> {_show(c.new)}" for c in f.delta)
    elif f.kind is EventKind.GET and f.outcome == "applied":
        detail = f"out {_show(f.output)}"
    else:
        detail = "-"
    return f"{f.step}\t{f.event}\t{f.outcome}\t{detail}"


def format_trace(trace: Iterable[Firing]) -> str:
    return "".join(format_firing(f) + "\n" for f in trace)


class Simulator:
    """Runs one program against one model; owns its state."""

    def __init__(self, model: Model, bindings: Mapping[str, Optional[str]] = None):
        self.model = model
        self.bindings = dict(bindings or {})
        self.state = initial_state(model)
        self.trace: list[Firing] = []

    def fire(self, event_id: str) -> Firing:
        event = self.model.event(event_id)
        if event is None:
            raise UnknownEvent(f"undefined event {event_id}")
        step = len(self.trace)
        kind = event.kind
        if kind is EventKind.CTOR:
            delta = tuple(Change(p, v, None) for p, v in self.state.items() if v is not None)
            for c in delta:
                self.state[c.path] = None
            firing = Firing(step, event_id, kind, "applied", delta)
        elif kind is EventKind.SET:
            if event_id not in self.bindings:
                raise MissingBinding(f"set event {event_id} has no bound value")
            value = self.bindings[event_id]
            store = resolve_store(self.model, event.target)
            if conforms(value, declared_type(self.model, event.target)):
                delta = (Change(store, self.state.get(store), value),)
                self.state[store] = value
                firing = Firing(step, event_id, kind, "applied", delta)
            else:
                firing = Firing(step, event_id, kind, "rejected")
        elif kind is EventKind.GET:
            store = resolve_store(self.model, event.target)
            firing = Firing(step, event_id, kind, "applied", output=self.state.get(store))
        else:
            firing = Firing(step, event_id, kind, "applied")
        self.trace.append(firing)
        return firing

    def run(self, program: Program) -> list[Firing]:
        checker = ChronologyChecker(self.model.chronology)
        for event_id in _walk(program.body, self.state, self.model):
            violation = checker.feed(event_id)
            if violation is not None:
                raise ChronologyViolation(f"step {len(self.trace)}: {violation}", violation, self.trace)
            self.fire(event_id)
        return self.trace


def _program(model: Model, program) -> Program:
    if isinstance(program, Program):
        return program
    found = model.program(program)
    if found is None:
        raise NotFound(f"no program {program}")
    return found


def _require_dynamics_valid(model: Model) -> None:
    from .checks import validate_all

    diags = validate_all(model)
    if diags:
        raise InvalidInput(f"model does not validate ({diags[0]})", diags)


def expand(model: Model, program, state: Optional[Mapping] = None,
           bindings: Optional[Mapping] = None) -> list[str]:
    """Flatten a program into the event ids it fires.

    Conditions read the store as it stands when the ``if`` is reached, so
    set events fired earlier in the program are taken into account.
    """
    program = _program(model, program)
    known = {e.id for e in model.events}
    for fire in iter_fires(program.body):
        if fire.event not in known:
            raise UnknownEvent(f"program {program.name} fires undefined event {fire.event}")
    sim = Simulator(model, bindings)
    if state is not None:
        sim.state.update(state)
    fired = []
    for event_id in _walk(program.body, sim.state, model):
        fired.append(event_id)
        if model.event(event_id).kind is not EventKind.SET or event_id in sim.bindings:
            sim.fire(event_id)
    return fired


def simulate(model: Model, program, bindings: Optional[Mapping] = None) -> list[Firing]:
    """Fire the program's events in order and return the trace.

    Raises ChronologyViolation (carrying the partial trace) as soon as a
    firing breaks the chronology, and MissingBinding for unbound set events.
    """
    _require_dynamics_valid(model)
    program = _program(model, program)
    sim = Simulator(model, bindings)
    return sim.run(program)


def state_after(model: Model, trace: Iterable[Firing]) -> dict[Path, Optional[str]]:
    """Replay the deltas of a trace onto the initial state."""
    state = initial_state(model)
    for firing in trace:
        for change in firing.delta:
            state[change.path] = change.new
    return state

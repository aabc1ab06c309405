"""Path resolution, flow grammar, static validation and structural transforms."""

from __future__ import annotations

import itertools
from typing import Iterable, NamedTuple, Optional, Union

from .errors import (
    CrossMachineNonTransfer,
    Duplicate,
    FlowGrammarError,
    InvalidInput,
    NameClash,
    NotFound,
    NotSiblings,
    SelfLoop,
)
from .model import (
    NAME_RE,
    STAGE_NAMES,
    Cond,
    Diagnostic,
    Event,
    Flow,
    If,
    Machine,
    Model,
    P,
    Path,
    Program,
    Repeat,
    StageKind,
    Trigger,
    error,
)

C, PR, RC, RL, T = (StageKind.CREATE, StageKind.PROCESS, StageKind.RECEIVE,
                    StageKind.RELEASE, StageKind.TRANSFER)

#: Ordered stage-kind pairs a flow may connect inside one machine.
FLOW_GRAMMAR = frozenset({
    (C, PR), (C, RL), (PR, RL), (RC, PR), (RC, RL), (RL, T), (T, RC),
})


class StageRef(NamedTuple):
    path: Path
    machine: Machine
    kind: StageKind


Element = Union[Machine, StageRef]


def find_machine(model: Model, path: Path) -> Optional[Machine]:
    machines = model.machines
    found = None
    for name in path.segments:
        found = next((m for m in machines if m.name == name), None)
        if found is None:
            return None
        machines = found.children
    return found


def resolve(model: Model, path: Union[str, Path]) -> Element:
    """Return the machine or stage named by ``path``; raise NotFound otherwise."""
    path = P(path)
    machine = find_machine(model, path)
    if machine is None:
        raise NotFound(f"no machine {'.'.join(path.segments)!r}")
    if path.stage is None:
        return machine
    if path.stage not in machine.stages:
        raise NotFound(f"machine {'.'.join(path.segments)!r} has no {path.stage.value} stage")
    return StageRef(path, machine, path.stage)


def _resolves(model: Model, path: Path) -> bool:
    try:
        resolve(model, path)
    except NotFound:
        return False
    return True


def _check_flow(src: Path, dst: Path) -> Optional[Diagnostic]:
    if src.machine == dst.machine:
        if (src.stage, dst.stage) not in FLOW_GRAMMAR:
            return error("FLOW_GRAMMAR",
                         f"flow {src.stage.label} -> {dst.stage.label} is not allowed inside a machine",
                         f"{src} -> {dst}")
    elif not (src.stage is T and dst.stage is T):
        return error("CROSS_MACHINE_FLOW",
                     "flows between machines must go transfer -> transfer",
                     f"{src} -> {dst}")
    return None


def _stage(model: Model, path) -> Path:
    path = P(path)
    ref = resolve(model, path)
    if not isinstance(ref, StageRef):
        raise NotFound(f"{path} is a machine, not a stage")
    return path


def add_flow(model: Model, source, target) -> Flow:
    src, dst = _stage(model, source), _stage(model, target)
    flow = Flow(src, dst)
    if flow in model.flows:
        raise Duplicate(f"flow {src} -> {dst} already exists")
    problem = _check_flow(src, dst)
    if problem is not None:
        cls = FlowGrammarError if problem.code == "FLOW_GRAMMAR" else CrossMachineNonTransfer
        raise cls(problem.message)
    model.flows.append(flow)
    return flow


def add_trigger(model: Model, source, target) -> Trigger:
    src, dst = _stage(model, source), _stage(model, target)
    if src == dst:
        raise SelfLoop(f"trigger {src} => {dst} loops on itself")
    trigger = Trigger(src, dst)
    if trigger in model.triggers:
        raise Duplicate(f"trigger {src} => {dst} already exists")
    model.triggers.append(trigger)
    return trigger


# -- validation -------------------------------------------------------------

def _check_names(model: Model, out: list) -> None:
    def rec(prefix, machines):
        seen = set()
        for m in machines:
            where = ".".join(prefix + (m.name,))
            if not NAME_RE.match(m.name or ""):
                out.append(error("BAD_NAME", f"{m.name!r} is not a valid machine name", where))
            elif m.name in STAGE_NAMES:
                out.append(error("RESERVED_NAME", f"{m.name!r} is a stage keyword", where))
            if m.name in seen:
                out.append(error("DUPLICATE_NAME", f"machine name {m.name!r} used twice", where))
            seen.add(m.name)
            for kind in m.stages:
                if not isinstance(kind, StageKind):
                    out.append(error("BAD_STAGE", f"unknown stage {kind!r}", where))
            rec(prefix + (m.name,), m.children)

    rec((), model.machines)


def _check_owners(model: Model, out: list) -> None:
    top = {m.name for m in model.machines}
    for path, m in model.walk():
        owner = m.of_owner
        if owner is None:
            continue
        if owner.stage is not None or len(owner.segments) != 1 or owner.segments[0] not in top:
            out.append(error("BAD_OWNER", f"owner {owner} is not a top-level machine", path))
        elif owner.segments[0] in path.segments:
            out.append(error("BAD_OWNER", f"owner {owner} is the machine itself or an ancestor", path))


def _check_edges(model: Model, out: list, relaxed: bool) -> None:
    for label, edges, is_flow in (("flow", model.flows, True), ("trigger", model.triggers, False)):
        arrow = "->" if is_flow else "=>"
        seen = set()
        for edge in edges:
            where = f"{edge.source} {arrow} {edge.target}"
            bad = False
            for end in (edge.source, edge.target):
                if not _resolves(model, end):
                    out.append(error("DANGLING_PATH", f"{label} endpoint {end} does not resolve", where))
                    bad = True
                elif relaxed and end.stage is not None:
                    out.append(error("NOT_A_MACHINE", f"{label} endpoint {end} names a stage", where))
                    bad = True
                elif not relaxed and end.stage is None:
                    out.append(error("NOT_A_STAGE", f"{label} endpoint {end} names a machine", where))
                    bad = True
            key = (edge.source, edge.target)
            if key in seen:
                out.append(error(f"DUPLICATE_{label.upper()}", f"duplicate {label}", where))
            seen.add(key)
            if edge.source == edge.target:
                out.append(error(f"{label.upper()}_SELF_LOOP", f"{label} loops on itself", where)
                           if not is_flow or relaxed else
                           error("FLOW_GRAMMAR", "flow from a stage to itself", where))
                continue
            if bad or relaxed or not is_flow:
                continue
            problem = _check_flow(edge.source, edge.target)
            if problem is not None:
                out.append(problem)


def validate(model: Model, *, relaxed: bool = False) -> list[Diagnostic]:
    """Check the static invariants; an empty list means the model is valid.

    With ``relaxed=True`` the stage-free rules of an elided model apply:
    machines carry no stages and edges connect machines directly.
    """
    out: list[Diagnostic] = []
    _check_names(model, out)
    _check_owners(model, out)
    if relaxed:
        for path, m in model.walk():
            if m.stages:
                out.append(error("STAGE_IN_ELIDED", "elided model still has stages", path))
    _check_edges(model, out, relaxed)
    return sorted(out, key=Diagnostic.sort_key)


def is_elided(model: Model) -> bool:
    return all(not m.stages for _, m in model.walk()) and all(
        e.source.stage is None and e.target.stage is None
        for e in itertools.chain(model.flows, model.triggers))


def _require_valid(model: Model) -> None:
    diags = validate(model, relaxed=is_elided(model))
    if diags:
        raise InvalidInput(f"model does not validate ({diags[0]})", diags)


# -- transforms -------------------------------------------------------------

def _dedupe(items: Iterable) -> list:
    return list(dict.fromkeys(items))


def _map_edges(edges, cls, fn) -> list:
    """Map both endpoints through ``fn``; drop self-loops and duplicates."""
    mapped = (cls(fn(e.source), fn(e.target)) for e in edges)
    return _dedupe(e for e in mapped if e.source != e.target)


def _map_event_paths(events: list[Event], fn) -> list[Event]:
    return [
        Event(e.id, e.label, _dedupe(fn(p) for p in e.region), e.time, e.meta, e.kind,
              fn(e.target) if e.target is not None else None)
        for e in events
    ]


def _map_program_paths(programs: list[Program], fn) -> list[Program]:
    def block(stmts):
        out = []
        for s in stmts:
            if isinstance(s, If):
                out.append(If(Cond(fn(s.cond.lhs), s.cond.op, s.cond.rhs), block(s.then),
                              None if s.orelse is None else block(s.orelse)))
            elif isinstance(s, Repeat):
                out.append(Repeat(s.count, block(s.body)))
            else:
                out.append(s)
        return tuple(out)

    return [Program(p.name, block(p.body)) for p in programs]


def _strip_stages(machines) -> list[Machine]:
    return [Machine(m.name, (), _strip_stages(m.children), m.of_owner, m.metadata) for m in machines]


def lift(path: Path) -> Path:
    return path.machine


def elide_stages(model: Model) -> Model:
    """Drop all stage nodes and lift every edge to a machine-to-machine edge.

    Edges that collapse onto a single machine disappear; the rest are
    deduplicated in first-seen order.  Event regions are lifted the same way.
    """
    _require_valid(model)
    return model.copy(
        machines=_strip_stages(model.machines),
        flows=_map_edges(model.flows, Flow, lift),
        triggers=_map_edges(model.triggers, Trigger, lift),
        events=_map_event_paths(model.events, lift),
    )


def lifted_edges(model: Model) -> set[tuple[str, Path, Path]]:
    """Machine-level edge set of a model, tagged by edge type."""
    out = set()
    for tag, edges in (("flow", model.flows), ("trigger", model.triggers)):
        for e in edges:
            src, dst = lift(e.source), lift(e.target)
            if src != dst:
                out.add((tag, src, dst))
    return out


def _replace_in_tree(machines, parent: tuple, fn) -> list[Machine]:
    if not parent:
        return fn(list(machines))
    out = []
    for m in machines:
        if m.name == parent[0]:
            m = Machine(m.name, m.stages, _replace_in_tree(m.children, parent[1:], fn),
                        m.of_owner, m.metadata)
        out.append(m)
    return out


def merge_machines(model: Model, paths, merged_name: str) -> Model:
    """Replace sibling machines by one machine called ``merged_name``.

    Stage sets are unioned, children are renamed ``<original>_<child>``,
    and every path into a merged machine is re-targeted.  Edges that become
    self-loops or duplicates are dropped.
    """
    paths = [P(p) for p in paths]
    if len(set(paths)) < 2:
        raise NotSiblings("merging needs at least two distinct machines")
    for p in paths:
        if p.stage is not None or find_machine(model, p) is None:
            raise NotFound(f"no machine {p}")
    parent = paths[0].segments[:-1]
    if any(p.segments[:-1] != parent for p in paths):
        raise NotSiblings("machines to merge must share a parent")
    names = {p.segments[-1] for p in paths}
    if not NAME_RE.match(merged_name) or merged_name in STAGE_NAMES:
        raise NameClash(f"{merged_name!r} is not a usable machine name")

    siblings = model.machines if not parent else find_machine(model, Path(parent)).children
    if any(s.name == merged_name for s in siblings if s.name not in names):
        raise NameClash(f"{merged_name!r} is already used by a sibling")
    merging = [s for s in siblings if s.name in names]

    stages, children, metadata, owner = set(), [], {}, None
    for m in merging:
        stages |= m.stages
        children.extend(Machine(f"{m.name}_{c.name}", c.stages, c.children, c.of_owner, c.metadata)
                        for c in m.children)
        for k, v in m.metadata.items():
            metadata.setdefault(k, v)
        owner = owner or m.of_owner
    child_names = [c.name for c in children]
    if len(set(child_names)) != len(child_names):
        raise NameClash("renamed children collide")
    merged = Machine(merged_name, stages, children, owner, metadata)

    def rebuild(level: list[Machine]) -> list[Machine]:
        out, placed = [], False
        for m in level:
            if m.name in names:
                if not placed:
                    out.append(merged)
                    placed = True
            else:
                out.append(m)
        return out

    depth = len(parent)

    def retarget(p: Path) -> Path:
        segs = p.segments
        if segs[:depth] != parent or len(segs) <= depth or segs[depth] not in names:
            return p
        rest = segs[depth + 1:]
        if rest:
            rest = (f"{segs[depth]}_{rest[0]}",) + rest[1:]
        return Path(parent + (merged_name,) + rest, p.stage)

    def reown(m: Machine) -> Machine:
        owner = retarget(m.of_owner) if m.of_owner is not None else None
        return Machine(m.name, m.stages, [reown(c) for c in m.children], owner, m.metadata)

    machines = [reown(m) for m in _replace_in_tree(model.machines, parent, rebuild)]
    return model.copy(
        machines=machines,
        flows=_map_edges(model.flows, Flow, retarget),
        triggers=_map_edges(model.triggers, Trigger, retarget),
        events=_map_event_paths(model.events, retarget),
        programs=_map_program_paths(model.programs, retarget),
    )


def remove_machines(model: Model, doomed: Iterable[Path]) -> Model:
    """Delete machines (with their subtrees) and every edge or region entry touching them."""
    doomed = [P(d) for d in doomed]

    def gone(p: Path) -> bool:
        return any(d.contains(p) for d in doomed)

    def prune(prefix, machines):
        return [Machine(m.name, m.stages, prune(prefix + (m.name,), m.children), m.of_owner, m.metadata)
                for m in machines if not gone(Path(prefix + (m.name,)))]

    keep = lambda e: not (gone(e.source) or gone(e.target))
    events = [Event(e.id, e.label, [p for p in e.region if not gone(p)], e.time, e.meta, e.kind,
                    e.target) for e in model.events]
    return model.copy(
        machines=prune((), model.machines),
        flows=[f for f in model.flows if keep(f)],
        triggers=[t for t in model.triggers if keep(t)],
        events=events,
    )


def foreign_parts(model: Model, grand) -> list[tuple[Path, Path]]:
    """Descendants of ``grand`` that are projected parts of other things."""
    grand = P(grand)
    if grand.stage is not None or find_machine(model, grand) is None:
        raise NotFound(f"no machine {grand}")
    return [(path, m.of_owner) for path, m in model.walk()
            if m.of_owner is not None and path != grand and grand.contains(path)]


def stage_paths(model: Model, machine) -> list[tuple[StageKind, ...]]:
    """Simple stage sequences from a source stage to the machine's Transfer.

    Sources are Create and Transfer (acting as input port); a path that
    starts at Transfer may return to it as its sink.  Result is sorted
    lexicographically by stage name.
    """
    mpath = P(machine)
    if not isinstance(resolve(model, mpath), Machine):
        raise NotFound(f"{mpath} is not a machine")
    succ: dict[StageKind, list[StageKind]] = {}
    for f in model.flows:
        if f.source.machine == mpath and f.target.machine == mpath:
            succ.setdefault(f.source.stage, []).append(f.target.stage)

    found = []

    def dfs(node, trail):
        for nxt in succ.get(node, ()):
            if nxt is T:
                found.append(tuple(trail) + (T,))
            elif nxt not in trail:
                dfs(nxt, trail + [nxt])

    for src in (C, T):
        dfs(src, [src])
    return sorted(set(found), key=lambda seq: [k.value for k in seq])

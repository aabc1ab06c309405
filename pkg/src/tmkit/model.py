"""Thinging-machine metamodel: machines, stages, edges, events, programs.

Machines and paths are frozen values.  :class:`Model` is a plain container
that is filled during construction (parser, generators, ``add_flow``) and
treated as immutable afterwards; every transform returns a fresh model.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Union

NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class StageKind(enum.Enum):
    CREATE = "create"
    PROCESS = "process"
    RECEIVE = "receive"
    RELEASE = "release"
    TRANSFER = "transfer"

    @property
    def label(self) -> str:
        return self.value.capitalize()

    def __lt__(self, other):
        if not isinstance(other, StageKind):
            return NotImplemented
        return self.value < other.value


STAGE_NAMES = {k.value: k for k in StageKind}


@dataclass(frozen=True)
class Path:
    """Dotted reference to a machine, optionally ending in a stage kind."""

    segments: tuple[str, ...]
    stage: Optional[StageKind] = None

    def __post_init__(self):
        if not self.segments:
            raise ValueError("path needs at least one machine segment")

    @classmethod
    def parse(cls, text: str) -> "Path":
        parts = text.split(".")
        if any(not p for p in parts):
            raise ValueError(f"malformed path {text!r}")
        stage = STAGE_NAMES.get(parts[-1]) if len(parts) > 1 else None
        if stage is not None:
            parts = parts[:-1]
        return cls(tuple(parts), stage)

    @property
    def machine(self) -> "Path":
        """The machine part of this path (drops the stage, if any)."""
        return Path(self.segments) if self.stage else self

    def sort_key(self):
        return (self.segments, self.stage.value if self.stage else "")

    @property
    def is_stage(self) -> bool:
        return self.stage is not None

    def child(self, name: str) -> "Path":
        return Path(self.segments + (name,))

    def at(self, kind: StageKind) -> "Path":
        return Path(self.segments, kind)

    def contains(self, other: "Path") -> bool:
        """True if ``other`` lies in the machine named by this path (or is it)."""
        if self.stage is not None:
            return self == other
        return other.segments[: len(self.segments)] == self.segments

    def __str__(self) -> str:
        text = ".".join(self.segments)
        return f"{text}.{self.stage.value}" if self.stage else text


def P(text: Union[str, Path]) -> Path:
    return text if isinstance(text, Path) else Path.parse(text)


@dataclass(frozen=True)
class Machine:
    name: str
    stages: frozenset = frozenset()
    children: tuple["Machine", ...] = ()
    of_owner: Optional[Path] = None
    metadata: dict = field(default_factory=dict, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "stages", frozenset(self.stages))
        object.__setattr__(self, "children", tuple(self.children))
        object.__setattr__(self, "metadata", dict(self.metadata))

    def child(self, name: str) -> Optional["Machine"]:
        for c in self.children:
            if c.name == name:
                return c
        return None

    @property
    def role(self) -> Optional[str]:
        return self.metadata.get("role")

    def sorted_stages(self) -> list[StageKind]:
        return sorted(self.stages)


@dataclass(frozen=True)
class Flow:
    source: Path
    target: Path


@dataclass(frozen=True)
class Trigger:
    source: Path
    target: Path


class EventKind(str, enum.Enum):
    CTOR = "ctor"
    SET = "set"
    GET = "get"
    PLAIN = "plain"


@dataclass(frozen=True)
class Event:
    id: str
    label: str = ""
    region: tuple[Path, ...] = ()
    time: Optional[str] = None
    meta: Optional[str] = None
    kind: EventKind = EventKind.PLAIN
    # attribute machine that set/get events act on
    target: Optional[Path] = None

    def __post_init__(self):
        object.__setattr__(self, "region", tuple(self.region))
        object.__setattr__(self, "kind", EventKind(self.kind))


# -- programs ---------------------------------------------------------------

Literal = Union[str, int, None]


@dataclass(frozen=True)
class Cond:
    lhs: Path
    op: str  # "==" or "!="
    rhs: Literal


@dataclass(frozen=True)
class Fire:
    event: str


@dataclass(frozen=True)
class If:
    cond: Cond
    then: tuple = ()
    orelse: Optional[tuple] = None


@dataclass(frozen=True)
class Repeat:
    count: int
    body: tuple = ()


Stmt = Union[Fire, If, Repeat]


@dataclass(frozen=True)
class Program:
    name: str
    body: tuple = ()


def iter_fires(body) -> Iterator[Fire]:
    """All Fire statements in a block, recursively, in source order."""
    for stmt in body:
        if isinstance(stmt, Fire):
            yield stmt
        elif isinstance(stmt, If):
            yield from iter_fires(stmt.then)
            yield from iter_fires(stmt.orelse or ())
        elif isinstance(stmt, Repeat):
            yield from iter_fires(stmt.body)


# -- OO side ----------------------------------------------------------------

class Attribute(NamedTuple):
    name: str
    type: str


class MethodKind(str, enum.Enum):
    CONSTRUCTOR = "constructor"
    SETTER = "setter"
    GETTER = "getter"
    PLAIN = "plain"


class Method(NamedTuple):
    name: str
    kind: MethodKind = MethodKind.PLAIN
    attr: Optional[str] = None


def infer_method(class_name: str, attributes, name: str) -> Method:
    """Guess a method's kind from its name (``Author``, ``setName``, ``getName``)."""
    if name == class_name:
        return Method(name, MethodKind.CONSTRUCTOR)
    for a in attributes:
        cap = a.name[:1].upper() + a.name[1:]
        if name == "set" + cap:
            return Method(name, MethodKind.SETTER, a.name)
        if name == "get" + cap:
            return Method(name, MethodKind.GETTER, a.name)
    return Method(name, MethodKind.PLAIN)


@dataclass(frozen=True)
class ClassSpec:
    """A class: attributes plus methods.  Bare method names get their kind inferred."""

    name: str
    attributes: tuple[Attribute, ...] = ()
    methods: tuple[Method, ...] = ()
    superclass: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(Attribute(*a) for a in self.attributes))
        object.__setattr__(
            self,
            "methods",
            tuple(Method(m[0], MethodKind(m[1]), *m[2:]) if not isinstance(m, str)
                  else infer_method(self.name, self.attributes, m)
                  for m in self.methods),
        )


# -- the model --------------------------------------------------------------

@dataclass
class Model:
    machines: list[Machine] = field(default_factory=list)
    flows: list[Flow] = field(default_factory=list)
    triggers: list[Trigger] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)
    chronology: list[tuple[str, str]] = field(default_factory=list)
    programs: list[Program] = field(default_factory=list)
    classes: list[ClassSpec] = field(default_factory=list)

    def copy(self, **changes) -> "Model":
        parts = dict(
            machines=list(self.machines),
            flows=list(self.flows),
            triggers=list(self.triggers),
            events=list(self.events),
            chronology=list(self.chronology),
            programs=list(self.programs),
            classes=list(self.classes),
        )
        parts.update({k: list(v) for k, v in changes.items()})
        return Model(**parts)

    def walk(self) -> Iterator[tuple[Path, Machine]]:
        """Every machine with its path, depth-first in document order."""

        def rec(prefix: tuple, machines):
            for m in machines:
                path = Path(prefix + (m.name,))
                yield path, m
                yield from rec(path.segments, m.children)

        yield from rec((), self.machines)

    def event(self, event_id: str) -> Optional[Event]:
        for e in self.events:
            if e.id == event_id:
                return e
        return None

    def program(self, name: str) -> Optional[Program]:
        for p in self.programs:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True, order=True)
class SourceSpan:
    line: int
    column: int
    length: int = 1


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    location: str = ""
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def sort_key(self):
        return (self.location, self.code, self.message)

    def __str__(self) -> str:
        where = f"{self.location}: " if self.location else ""
        return f"{self.severity}[{self.code}] {where}{self.message}"


def error(code: str, message: str, location="") -> Diagnostic:
    return Diagnostic("error", code, message, str(location))

"""Textual TM notation: tokenizer, recursive-descent parser and formatter.

Paths written inside a ``machine`` block are relative to that machine;
everywhere else they are absolute.  ``->`` is a flow, ``=>`` a trigger.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from .checks import validate_all
from .errors import InvalidInput, ParseError
from .model import (
    STAGE_NAMES,
    Attribute,
    ClassSpec,
    Cond,
    Event,
    EventKind,
    Fire,
    Flow,
    If,
    Machine,
    Method,
    MethodKind,
    Model,
    Path,
    Program,
    Repeat,
    SourceSpan,
    Trigger,
)
from .oo import infer_method

HEADER = "# tm-dsl v1"
MAX_DEPTH = 100

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>-?[0-9]+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<sym>->|=>|==|!=|[{}:;,.=])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # name | int | string | sym | eof
    value: str
    span: SourceSpan


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            ch = text[pos]
            if ch == '"':
                end = text.find("\n", pos)
                length = (end if end >= 0 else len(text)) - pos
                raise ParseError("unterminated string", SourceSpan(line, col, length))
            raise ParseError(f"unexpected character {ch!r}", SourceSpan(line, col, 1))
        kind = m.lastgroup
        value = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, value, SourceSpan(line, col, len(value))))
        pos = m.end()
    last = tokens[-1].span if tokens else SourceSpan(1, 1, 0)
    tokens.append(Token("eof", "", last))
    return tokens


@dataclass
class Document:
    model: Model
    source_map: dict[str, SourceSpan] = field(default_factory=dict)


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0
        self.depth = 0
        self.model = Model()
        self.spans: dict[str, SourceSpan] = {}

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def fail(self, message: str, token: Optional[Token] = None):
        token = token or self.tok
        raise ParseError(message, token.span)

    def at(self, value: str) -> bool:
        return self.tok.kind in ("name", "sym") and self.tok.value == value

    def take(self) -> Token:
        tok = self.tok
        if tok.kind != "eof":
            self.i += 1
        return tok

    def expect(self, value: str) -> Token:
        if not self.at(value):
            self.fail(f"expected {value!r}, found {self.describe()}")
        return self.take()

    def describe(self) -> str:
        return "end of input" if self.tok.kind == "eof" else repr(self.tok.value)

    def name(self, what: str = "name") -> Token:
        if self.tok.kind != "name":
            self.fail(f"expected {what}, found {self.describe()}")
        return self.take()

    def string(self) -> str:
        tok = self.tok
        if tok.kind != "string":
            self.fail(f"expected a string, found {self.describe()}")
        self.take()
        try:
            return json.loads(tok.value)
        except json.JSONDecodeError:
            self.fail("bad escape in string", tok)

    def integer(self) -> int:
        tok = self.tok
        if tok.kind != "int":
            self.fail(f"expected an integer, found {self.describe()}")
        self.take()
        return int(tok.value)

    def path(self, prefix: tuple = ()) -> Path:
        parts = [self.name("a path").value]
        while self.at("."):
            self.take()
            parts.append(self.name("a path segment").value)
        segs = tuple(prefix) + tuple(parts)
        stage = STAGE_NAMES.get(segs[-1]) if len(segs) > 1 else None
        if stage is not None:
            segs = segs[:-1]
        return Path(segs, stage)

    def nest(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            self.fail(f"nesting deeper than {MAX_DEPTH} levels")

    # -- grammar

    def document(self) -> Document:
        while self.tok.kind != "eof":
            start = self.tok
            kw = start.value if start.kind == "name" else None
            if kw == "machine":
                self.model.machines.append(self.machine(()))
            elif kw == "flow":
                self.edge(())
            elif kw == "trigger":
                self.edge(())
            elif kw == "event":
                self.event()
            elif kw == "chronology":
                self.chronology()
            elif kw == "program":
                self.program()
            elif kw == "class":
                self.klass()
            else:
                self.fail(f"expected a declaration, found {self.describe()}")
        return Document(self.model, self.spans)

    def machine(self, prefix: tuple) -> Machine:
        start = self.expect("machine")
        self.nest()
        name = self.name("a machine name").value
        here = prefix + (name,)
        self.spans[".".join(here)] = start.span
        owner = None
        if self.at("of"):
            self.take()
            owner = self.path()
        self.expect("{")
        stages, children, meta = [], [], {}
        while not self.at("}"):
            tok = self.tok
            if self.at("stage"):
                self.take()
                kind_tok = self.name("a stage kind")
                kind = STAGE_NAMES.get(kind_tok.value)
                if kind is None:
                    self.fail(f"unknown stage kind {kind_tok.value!r}", kind_tok)
                if kind in stages:
                    self.fail(f"stage {kind.value} declared twice", kind_tok)
                stages.append(kind)
            elif self.at("meta"):
                self.take()
                key = self.name("a metadata key")
                self.expect("=")
                if key.value in meta:
                    self.fail(f"metadata {key.value!r} set twice", key)
                meta[key.value] = self.string()
            elif self.at("machine"):
                children.append(self.machine(here))
            elif self.at("flow") or self.at("trigger"):
                self.edge(here)
            else:
                self.fail(f"expected stage, meta, machine, flow or trigger, found {self.describe()}", tok)
        self.take()
        self.depth -= 1
        return Machine(name, stages, children, owner, meta)

    def edge(self, prefix: tuple) -> None:
        start = self.take()
        is_flow = start.value == "flow"
        src = self.path(prefix)
        self.expect("->" if is_flow else "=>")
        dst = self.path(prefix)
        if is_flow:
            self.spans[f"flow:{len(self.model.flows)}"] = start.span
            self.model.flows.append(Flow(src, dst))
        else:
            self.spans[f"trigger:{len(self.model.triggers)}"] = start.span
            self.model.triggers.append(Trigger(src, dst))

    def event(self) -> None:
        start = self.expect("event")
        event_id = self.name("an event id").value
        label = self.string() if self.tok.kind == "string" else ""
        self.expect("{")
        self.expect("region")
        self.expect(":")
        region = [self.path()]
        while self.at(","):
            self.take()
            region.append(self.path())
        kind, target, time, meta = EventKind.PLAIN, None, None, None
        if self.at("kind"):
            self.take()
            self.expect(":")
            kind_tok = self.name("an event kind")
            try:
                kind = EventKind(kind_tok.value)
            except ValueError:
                self.fail(f"unknown event kind {kind_tok.value!r}", kind_tok)
            if self.tok.kind == "name" and self.tok.value not in ("time", "meta"):
                target = self.path()
        if self.at("time"):
            self.take()
            self.expect(":")
            time = self.string()
        if self.at("meta"):
            self.take()
            self.expect(":")
            meta = self.string()
        self.expect("}")
        self.spans.setdefault(f"event:{event_id}", start.span)
        self.model.events.append(Event(event_id, label, region, time, meta, kind, target))

    def chronology(self) -> None:
        start = self.expect("chronology")
        self.expect("{")
        while not self.at("}"):
            a = self.name("an event id").value
            self.expect("->")
            b = self.name("an event id").value
            self.spans[f"chronology:{len(self.model.chronology)}"] = start.span
            self.model.chronology.append((a, b))
        self.take()

    def program(self) -> None:
        start = self.expect("program")
        name = self.name("a program name").value
        self.spans.setdefault(f"program:{name}", start.span)
        self.model.programs.append(Program(name, self.block()))

    def block(self) -> tuple:
        self.expect("{")
        self.nest()
        body = []
        while not self.at("}"):
            body.append(self.stmt())
        self.take()
        self.depth -= 1
        return tuple(body)

    def stmt(self):
        if self.at("if"):
            self.take()
            lhs = self.path()
            if not (self.at("==") or self.at("!=")):
                self.fail(f"expected '==' or '!=', found {self.describe()}")
            op = self.take().value
            rhs = self.literal()
            then = self.block()
            orelse = None
            if self.at("else"):
                self.take()
                orelse = self.block()
            return If(Cond(lhs, op, rhs), then, orelse)
        if self.at("repeat"):
            self.take()
            tok = self.tok
            count = self.integer()
            if count < 0:
                self.fail("repeat count must not be negative", tok)
            return Repeat(count, self.block())
        event_id = self.name("an event id, 'if' or 'repeat'").value
        self.expect(";")
        return Fire(event_id)

    def literal(self):
        if self.tok.kind == "string":
            return self.string()
        if self.tok.kind == "int":
            return self.integer()
        if self.at("null"):
            self.take()
            return None
        self.fail(f"expected a string, integer or null, found {self.describe()}")

    def klass(self) -> None:
        start = self.expect("class")
        name = self.name("a class name").value
        self.spans.setdefault(f"class:{name}", start.span)
        superclass = None
        if self.at("extends"):
            self.take()
            superclass = self.name("a superclass name").value
        self.expect("{")
        attrs, methods = [], []
        while not self.at("}"):
            if self.at("attr"):
                self.take()
                attr = self.name("an attribute name").value
                self.expect(":")
                attrs.append(Attribute(attr, self.name("a type name").value))
                self.expect(";")
            elif self.at("method"):
                self.take()
                mname = self.name("a method name").value
                explicit = None
                if self.at(":"):
                    self.take()
                    kind_tok = self.name("a method kind")
                    try:
                        mkind = MethodKind(kind_tok.value)
                    except ValueError:
                        self.fail(f"unknown method kind {kind_tok.value!r}", kind_tok)
                    attr = self.name("an attribute name").value if self.tok.kind == "name" else None
                    explicit = Method(mname, mkind, attr)
                self.expect(";")
                methods.append((mname, explicit))
            else:
                self.fail(f"expected 'attr' or 'method', found {self.describe()}")
        self.take()
        resolved = [m if m is not None else infer_method(name, attrs, n) for n, m in methods]
        self.model.classes.append(ClassSpec(name, attrs, resolved, superclass))


def parse(text: str, *, check: bool = True) -> Document:
    """Parse TM notation.

    With ``check`` (the default) the model must also validate; otherwise
    InvalidInput carries the diagnostics.
    """
    doc = _Parser(text).document()
    if check:
        diags = validate_all(doc.model)
        if diags:
            raise InvalidInput(f"{len(diags)} validation problem(s); first: {diags[0]}", diags)
    return doc


# -- formatting -------------------------------------------------------------

def _q(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def _literal(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, int):
        return str(v)
    return _q(v)


def _machine_lines(m: Machine, indent: str) -> list[str]:
    head = f"machine {m.name}" + (f" of {m.of_owner}" if m.of_owner else "")
    inner = indent + "  "
    lines = [f"{indent}{head} {{"]
    lines += [f"{inner}meta {k} = {_q(v)}" for k, v in m.metadata.items()]
    lines += [f"{inner}stage {k.value}" for k in m.sorted_stages()]
    for c in m.children:
        lines += _machine_lines(c, inner)
    lines.append(f"{indent}}}")
    return lines


def _block_lines(body, indent: str) -> list[str]:
    lines = []
    inner = indent + "  "
    for s in body:
        if isinstance(s, Fire):
            lines.append(f"{indent}{s.event};")
        elif isinstance(s, Repeat):
            lines.append(f"{indent}repeat {s.count} {{")
            lines += _block_lines(s.body, inner)
            lines.append(f"{indent}}}")
        else:
            c = s.cond
            lines.append(f"{indent}if {c.lhs} {c.op} {_literal(c.rhs)} {{")
            lines += _block_lines(s.then, inner)
            if s.orelse is not None:
                lines.append(f"{indent}}} else {{")
                lines += _block_lines(s.orelse, inner)
            lines.append(f"{indent}}}")
    return lines


def _event_lines(e: Event) -> list[str]:
    head = f"event {e.id}" + (f" {_q(e.label)}" if e.label else "")
    lines = [head + " {", "  region: " + ", ".join(map(str, e.region))]
    if e.kind is not EventKind.PLAIN or e.target is not None:
        lines.append(f"  kind: {e.kind.value}" + (f" {e.target}" if e.target else ""))
    if e.time is not None:
        lines.append(f"  time: {_q(e.time)}")
    if e.meta is not None:
        lines.append(f"  meta: {_q(e.meta)}")
    lines.append("}")
    return lines


def _class_lines(spec: ClassSpec) -> list[str]:
    head = f"class {spec.name}" + (f" extends {spec.superclass}" if spec.superclass else "")
    lines = [head + " {"]
    lines += [f"  attr {a.name} : {a.type};" for a in spec.attributes]
    for m in spec.methods:
        if infer_method(spec.name, spec.attributes, m.name) == m:
            lines.append(f"  method {m.name};")
        else:
            lines.append(f"  method {m.name} : {m.kind.value}" + (f" {m.attr}" if m.attr else "") + ";")
    lines.append("}")
    return lines


def format_model(model: Model) -> str:
    """Canonical text for a valid model; parse(format_model(m)).model == m."""
    diags = validate_all(model)
    if diags:
        raise InvalidInput(f"cannot format an invalid model: {diags[0]}", diags)
    sections: list[list[str]] = []
    for m in model.machines:
        sections.append(_machine_lines(m, ""))
    if model.flows:
        sections.append([f"flow {f.source} -> {f.target}" for f in model.flows])
    if model.triggers:
        sections.append([f"trigger {t.source} => {t.target}" for t in model.triggers])
    for e in model.events:
        sections.append(_event_lines(e))
    if model.chronology:
        sections.append(["chronology {"] + [f"  {a} -> {b}" for a, b in model.chronology] + ["}"])
    for p in model.programs:
        sections.append([f"program {p.name} {{"] + _block_lines(p.body, "  ") + ["}"])
    for c in model.classes:
        sections.append(_class_lines(c))
    return "\n\n".join(["\n".join([HEADER])] + ["\n".join(s) for s in sections]) + "\n"


format = format_model  # noqa: A001  (public name mirrors parse/format pairing)

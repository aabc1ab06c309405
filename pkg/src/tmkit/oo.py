"""Class specifications <-> thinging-machine models.

``from_class`` expands each attribute into the attribute pattern (input
transfer/receive, type check, type descriptor, store, output) and derives
one event per method plus the chronology.  ``to_class`` goes back through
the simplification pipeline.  ``from_hierarchy``/``to_hierarchy`` model
inheritance as behaviour flowing from superclass to subclass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional

import jsonschema

from .core import add_flow, add_trigger, elide_stages, merge_machines, remove_machines
from .dynamics import define_event
from .errors import (
    InheritanceCycle,
    InvalidSpec,
    NotClassShaped,
    NotHierarchyShaped,
    SchemaError,
    TMError,
    UnknownSuperclass,
)
from .model import (
    NAME_RE,
    STAGE_NAMES,
    Attribute,
    ClassSpec,
    EventKind,
    Machine,
    Method,
    MethodKind,
    Model,
    Path,
    StageKind,
    infer_method,
)

TYPES = ("String", "char", "int")
INHERITED = "_inherited"

C, PR, RC, RL, T = (StageKind.CREATE, StageKind.PROCESS, StageKind.RECEIVE,
                    StageKind.RELEASE, StageKind.TRANSFER)


def _cap(name: str) -> str:
    return name[:1].upper() + name[1:]


def spec_problems(spec: ClassSpec) -> list[str]:
    problems = []

    def check_name(what, name):
        if not isinstance(name, str) or not NAME_RE.match(name):
            problems.append(f"{what} {name!r} is not an identifier")
        elif name in STAGE_NAMES:
            problems.append(f"{what} {name!r} is a stage keyword")

    check_name("class name", spec.name)
    if spec.superclass is not None:
        check_name("superclass", spec.superclass)
    attr_names = [a.name for a in spec.attributes]
    for a in spec.attributes:
        check_name("attribute", a.name)
        if a.type not in TYPES:
            problems.append(f"attribute {a.name!r} has unsupported type {a.type!r}")
    if len(set(attr_names)) != len(attr_names):
        problems.append("attribute names are not unique")
    names = [m.name for m in spec.methods]
    if len(set(names)) != len(names):
        problems.append("method names are not unique")
    ctors = 0
    accessors = set()
    for m in spec.methods:
        check_name("method", m.name)
        if m.kind is MethodKind.CONSTRUCTOR:
            ctors += 1
            if m.attr is not None:
                problems.append(f"constructor {m.name!r} cannot name an attribute")
        elif m.kind in (MethodKind.SETTER, MethodKind.GETTER):
            if m.attr not in attr_names:
                problems.append(f"{m.kind.value} {m.name!r} refers to unknown attribute {m.attr!r}")
            elif (m.kind, m.attr) in accessors:
                problems.append(f"attribute {m.attr!r} has two {m.kind.value}s")
            accessors.add((m.kind, m.attr))
        elif m.attr is not None:
            problems.append(f"plain method {m.name!r} cannot name an attribute")
    if ctors > 1:
        problems.append("more than one constructor")
    return problems


def check_spec(spec: ClassSpec) -> None:
    problems = spec_problems(spec)
    if problems:
        raise InvalidSpec(f"class {spec.name}: " + "; ".join(problems))


def normalize(spec: ClassSpec) -> ClassSpec:
    """Fill in missing constructor/setters/getters and put methods in canonical order.

    Canonical order: constructor, then setter and getter per attribute in
    declaration order, then plain methods as given.
    """
    check_spec(spec)
    ctor = next((m for m in spec.methods if m.kind is MethodKind.CONSTRUCTOR),
                Method(spec.name, MethodKind.CONSTRUCTOR))
    accessor = {(m.kind, m.attr): m for m in spec.methods if m.attr is not None}
    methods = [ctor]
    for a in spec.attributes:
        for kind, prefix in ((MethodKind.SETTER, "set"), (MethodKind.GETTER, "get")):
            methods.append(accessor.get((kind, a.name), Method(prefix + _cap(a.name), kind, a.name)))
    methods += [m for m in spec.methods if m.kind is MethodKind.PLAIN]
    out = ClassSpec(spec.name, spec.attributes, methods, spec.superclass)
    check_spec(out)  # synthesized names may collide with plain ones
    return out


# -- class -> model -----------------------------------------------------------

def from_class(spec: ClassSpec) -> Model:
    """Generate the static model, events and chronology for one class."""
    spec = normalize(spec)
    plain = [m.name for m in spec.methods if m.kind is MethodKind.PLAIN]
    if plain:
        raise InvalidSpec(f"class {spec.name}: plain methods have no attribute pattern: {', '.join(plain)}")

    meta = {"role": "class"}
    if spec.superclass:
        meta["extends"] = spec.superclass
    attrs = [
        Machine(a.name, {C, T, RC, PR, RL}, [
            Machine("typedesc", {RL, T}, metadata={"role": "typedesc", "type": a.type}),
            Machine("store", {T, RC, RL}, metadata={"role": "store"}),
        ], metadata={"role": "attribute"})
        for a in spec.attributes
    ]
    model = Model(machines=[Machine(spec.name, {C}, attrs, metadata=meta)])

    cls = Path((spec.name,))
    for a in spec.attributes:
        ap = cls.child(a.name)
        td, st = ap.child("typedesc"), ap.child("store")
        for src, dst in (
            (ap.at(T), ap.at(RC)),    # value arrives from outside
            (ap.at(RC), ap.at(PR)),   # ... and is checked for its type
            (ap.at(C), ap.at(RL)),    # null value made on construction
            (ap.at(RL), ap.at(T)),
            (td.at(RL), td.at(T)),    # type description fetched for the check
            (td.at(T), ap.at(T)),
            (ap.at(T), st.at(T)),     # into the store
            (st.at(T), st.at(RC)),
            (st.at(RL), st.at(T)),    # out of the store (get)
            (st.at(T), ap.at(T)),
        ):
            add_flow(model, src, dst)
    for a in spec.attributes:
        ap = cls.child(a.name)
        add_trigger(model, cls.at(C), ap.at(C))
        add_trigger(model, ap.at(PR), ap.child("store").at(T))

    ids = iter(f"E{i}" for i in range(1, 2 * len(spec.attributes) + 2))
    ctor_region = [cls.at(C)]
    for a in spec.attributes:
        ap = cls.child(a.name)
        ctor_region += [ap.at(C), ap.at(RL), ap.at(T), ap.child("store").at(T), ap.child("store").at(RC)]
    first = next(ids)
    define_event(model, first, spec.methods[0].name, ctor_region, kind=EventKind.CTOR)

    pairs = []
    for a, setter, getter in zip(spec.attributes, spec.methods[1::2], spec.methods[2::2]):
        ap = cls.child(a.name)
        td, st = ap.child("typedesc"), ap.child("store")
        set_id, get_id = next(ids), next(ids)
        define_event(model, set_id, setter.name,
                     [ap.at(T), ap.at(RC), ap.at(PR), td.at(RL), td.at(T), st.at(T), st.at(RC)],
                     kind=EventKind.SET, target=ap)
        define_event(model, get_id, getter.name, [st.at(RL), st.at(T), ap.at(T)],
                     kind=EventKind.GET, target=ap)
        pairs.append((set_id, get_id))
    model.chronology = [(first, e.id) for e in model.events[1:]] + pairs
    return model


# -- model -> class -----------------------------------------------------------

@dataclass
class ClassView:
    """Intermediate results of the simplification pipeline."""

    checked: Model   # type-check machinery and stages removed
    merged: Model    # attribute machines merged into one
    spec: ClassSpec  # methods read off the events


_KIND_FOR_EVENT = {
    EventKind.CTOR: MethodKind.CONSTRUCTOR,
    EventKind.SET: MethodKind.SETTER,
    EventKind.GET: MethodKind.GETTER,
}


def class_view(model: Model) -> ClassView:
    if len(model.machines) != 1 or model.machines[0].role != "class":
        raise NotClassShaped("expected exactly one top-level machine with role 'class'")
    grand = model.machines[0]
    cls = Path((grand.name,))

    attributes, doomed = [], []
    for child in grand.children:
        descs = [c for c in child.children if c.role == "typedesc"]
        if child.role != "attribute" or len(descs) != 1 or "type" not in descs[0].metadata:
            raise NotClassShaped(f"{cls.child(child.name)} is not an attribute with a type descriptor")
        attributes.append(Attribute(child.name, descs[0].metadata["type"]))
        doomed.append(cls.child(child.name).child(descs[0].name))

    checked = elide_stages(remove_machines(model, doomed))
    if len(attributes) >= 2:
        merged = merge_machines(checked, [cls.child(a.name) for a in attributes], "attributes")
    else:
        merged = checked

    methods = []
    for e in model.events:
        if e.kind not in _KIND_FOR_EVENT:
            raise NotClassShaped(f"event {e.id} is not a constructor, setter or getter")
        attr = None
        if e.kind is not EventKind.CTOR:
            if e.target is None or e.target.segments[:-1] != cls.segments:
                raise NotClassShaped(f"event {e.id} does not act on an attribute of {grand.name}")
            attr = e.target.segments[-1]
        methods.append(Method(e.label, _KIND_FOR_EVENT[e.kind], attr))

    spec = ClassSpec(grand.name, attributes, methods, grand.metadata.get("extends"))
    return ClassView(checked, merged, spec)


def to_class(model: Model) -> ClassSpec:
    """Recover the class a model was generated from.

    The match is strict: the model must be exactly what ``from_class``
    produces for the recovered spec, otherwise NotClassShaped.
    """
    spec = class_view(model).spec
    try:
        expected = from_class(spec)
    except InvalidSpec as exc:
        raise NotClassShaped(str(exc)) from None
    for part in ("machines", "flows", "triggers", "events", "chronology"):
        if getattr(model, part) != getattr(expected, part):
            raise NotClassShaped(f"{part} differ from the pattern generated for class {spec.name}")
    return spec


# -- inheritance --------------------------------------------------------------

def _hierarchy_order(specs: list[ClassSpec]) -> dict[str, Optional[str]]:
    parents = {}
    for s in specs:
        if s.name in parents:
            raise InvalidSpec(f"class {s.name} declared twice")
        parents[s.name] = s.superclass
    for name, sup in parents.items():
        if sup is not None and sup not in parents:
            raise UnknownSuperclass(f"class {name} extends unknown class {sup}")
    for name in parents:
        seen, cur = set(), name
        while cur is not None:
            if cur in seen:
                raise InheritanceCycle(f"class {name} inherits from itself")
            seen.add(cur)
            cur = parents[cur]
    return parents


def from_hierarchy(specs: Iterable[ClassSpec]) -> Model:
    """One machine per class; inherited behaviour flows down from the superclass."""
    specs = list(specs)
    for s in specs:
        problems = spec_problems(s)
        if s.attributes:
            problems.append("hierarchy view carries behaviour only, not attributes")
        for m in s.methods:
            if m.kind is not MethodKind.PLAIN:
                problems.append(f"method {m.name!r} is a {m.kind.value}, only plain methods flow")
            if m.name.endswith(INHERITED):
                problems.append(f"method {m.name!r} uses the reserved suffix {INHERITED!r}")
        if problems:
            raise InvalidSpec(f"class {s.name}: " + "; ".join(problems))
    parents = _hierarchy_order(specs)
    by_name = {s.name: s for s in specs}

    behaviour: dict[str, list[tuple[str, Path]]] = {}

    def behaviours(name: str) -> list[tuple[str, Path]]:
        # (method, machine providing it inside class `name`)
        if name not in behaviour:
            sup = parents[name]
            inherited = [(m, Path((name, m + INHERITED))) for m, _ in behaviours(sup)] if sup else []
            own = [(m.name, Path((name, m.name))) for m in by_name[name].methods]
            clash = {m for m, _ in inherited} & {m for m, _ in own}
            if clash:
                raise InvalidSpec(f"class {name} redefines inherited {', '.join(sorted(clash))}")
            behaviour[name] = inherited + own
        return behaviour[name]

    machines = []
    for s in specs:
        sup = parents[s.name]
        own = [Machine(m.name, {C, RL, T}) for m in s.methods]
        inh = [Machine(m + INHERITED, {T, RC}) for m, _ in behaviours(sup)] if sup else []
        machines.append(Machine(s.name, (), own + inh))
    model = Model(machines=machines)

    for s in specs:
        cls = Path((s.name,))
        for m in s.methods:
            add_flow(model, cls.child(m.name).at(C), cls.child(m.name).at(RL))
            add_flow(model, cls.child(m.name).at(RL), cls.child(m.name).at(T))
        sup = parents[s.name]
        for m, source in (behaviours(sup) if sup else []):
            here = cls.child(m + INHERITED)
            add_flow(model, source.at(T), here.at(T))
            add_flow(model, here.at(T), here.at(RC))
    return model


def to_hierarchy(model: Model) -> list[ClassSpec]:
    """Rebuild class specs (own methods plus extends edges) from a hierarchy model."""
    own: dict[str, list[Method]] = {}
    for top in model.machines:
        if top.stages or top.of_owner is not None:
            raise NotHierarchyShaped(f"{top.name} does not look like a class machine")
        methods = []
        for c in top.children:
            if StageKind.CREATE in c.stages:
                methods.append(Method(c.name))
            elif not c.name.endswith(INHERITED):
                raise NotHierarchyShaped(f"{top.name}.{c.name} is neither own nor inherited behaviour")
        own[top.name] = methods

    parents: dict[str, set[str]] = {}
    for f in model.flows:
        src, dst = f.source.segments[0], f.target.segments[0]
        if src != dst and f.target.segments[-1].endswith(INHERITED):
            parents.setdefault(dst, set()).add(src)
    for name, sups in parents.items():
        if len(sups) > 1:
            raise NotHierarchyShaped(f"{name} receives behaviour from {', '.join(sorted(sups))}")

    specs = [ClassSpec(name, (), methods, next(iter(parents.get(name, ())), None))
             for name, methods in own.items()]
    try:
        expected = from_hierarchy(specs)
    except TMError as exc:
        raise NotHierarchyShaped(str(exc)) from None
    if (model.machines != expected.machines or set(model.flows) != set(expected.flows)
            or set(model.triggers) != set(expected.triggers)):
        raise NotHierarchyShaped("model differs from the generated inheritance pattern")
    return specs


# -- JSON class documents -----------------------------------------------------

CLASS_SCHEMA = {
    "type": "object",
    "required": ["name"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "extends": {"type": ["string", "null"]},
        "attributes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "type"],
                "additionalProperties": False,
                "properties": {"name": {"type": "string"}, "type": {"type": "string"}},
            },
        },
        "methods": {
            "type": "array",
            "items": {
                "oneOf": [
                    {"type": "string"},
                    {
                        "type": "object",
                        "required": ["name"],
                        "additionalProperties": False,
                        "properties": {
                            "name": {"type": "string"},
                            "kind": {"enum": [k.value for k in MethodKind]},
                            "attr": {"type": ["string", "null"]},
                        },
                    },
                ]
            },
        },
    },
}

_CLASS_VALIDATOR = jsonschema.Draft202012Validator(CLASS_SCHEMA)


def pointer(parts) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in parts)


def class_from_dict(doc, where: str = "") -> ClassSpec:
    try:
        _CLASS_VALIDATOR.validate(doc)
    except jsonschema.ValidationError as exc:
        raise SchemaError(exc.message, where + pointer(exc.absolute_path)) from None
    attrs = [Attribute(a["name"], a["type"]) for a in doc.get("attributes", [])]
    methods = []
    for m in doc.get("methods", []):
        if isinstance(m, str) or "kind" not in m:
            name = m if isinstance(m, str) else m["name"]
            methods.append(infer_method(doc["name"], attrs, name))
        else:
            methods.append(Method(m["name"], MethodKind(m["kind"]), m.get("attr")))
    return ClassSpec(doc["name"], attrs, methods, doc.get("extends"))


def class_to_dict(spec: ClassSpec) -> dict:
    return {
        "name": spec.name,
        "extends": spec.superclass,
        "attributes": [{"name": a.name, "type": a.type} for a in spec.attributes],
        "methods": [{"name": m.name, "kind": m.kind.value, "attr": m.attr} for m in spec.methods],
    }


def load_classes(text: str) -> list[ClassSpec]:
    """Parse a JSON class document: one class object or a list of them."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not JSON: {exc.msg} at line {exc.lineno}") from None
    if isinstance(doc, list):
        return [class_from_dict(d, f"/{i}") for i, d in enumerate(doc)]
    return [class_from_dict(doc)]


def dump_classes(specs: list[ClassSpec]) -> str:
    doc = class_to_dict(specs[0]) if len(specs) == 1 else [class_to_dict(s) for s in specs]
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"

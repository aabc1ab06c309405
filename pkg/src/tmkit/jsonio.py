"""Lossless JSON interchange for whole models."""

from __future__ import annotations

import json

import jsonschema

from .checks import validate_all
from .core import find_machine
from .errors import InvalidInput, SchemaError
from .model import (
    STAGE_NAMES,
    Cond,
    Event,
    EventKind,
    Fire,
    Flow,
    If,
    Machine,
    Model,
    Path,
    Program,
    Repeat,
    Trigger,
)
from .oo import class_from_dict, class_to_dict, pointer

_PATH = {"type": "string", "pattern": r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$"}
_EDGE = {
    "type": "object",
    "required": ["from", "to"],
    "additionalProperties": False,
    "properties": {"from": _PATH, "to": _PATH},
}
_LITERAL = {"type": ["string", "integer", "null"]}

MODEL_SCHEMA = {
    "$defs": {
        "machine": {
            "type": "object",
            "required": ["name"],
            "additionalProperties": False,
            "properties": {
                "name": {"type": "string"},
                "stages": {"type": "array", "items": {"enum": sorted(STAGE_NAMES)}, "uniqueItems": True},
                "children": {"type": "array", "items": {"$ref": "#/$defs/machine"}},
                "of": {"anyOf": [_PATH, {"type": "null"}]},
                "metadata": {"type": "object", "additionalProperties": {"type": "string"}},
            },
        },
        "block": {"type": "array", "items": {"$ref": "#/$defs/stmt"}},
        "stmt": {
            "oneOf": [
                {
                    "type": "object",
                    "required": ["fire"],
                    "additionalProperties": False,
                    "properties": {"fire": {"type": "string"}},
                },
                {
                    "type": "object",
                    "required": ["if", "then"],
                    "additionalProperties": False,
                    "properties": {
                        "if": {
                            "type": "object",
                            "required": ["path", "op", "value"],
                            "additionalProperties": False,
                            "properties": {"path": _PATH, "op": {"enum": ["==", "!="]}, "value": _LITERAL},
                        },
                        "then": {"$ref": "#/$defs/block"},
                        "else": {"anyOf": [{"$ref": "#/$defs/block"}, {"type": "null"}]},
                    },
                },
                {
                    "type": "object",
                    "required": ["repeat", "body"],
                    "additionalProperties": False,
                    "properties": {
                        "repeat": {"type": "integer", "minimum": 0},
                        "body": {"$ref": "#/$defs/block"},
                    },
                },
            ]
        },
    },
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "machines": {"type": "array", "items": {"$ref": "#/$defs/machine"}},
        "flows": {"type": "array", "items": _EDGE},
        "triggers": {"type": "array", "items": _EDGE},
        "events": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "region"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string"},
                    "label": {"type": "string"},
                    "region": {"type": "array", "items": _PATH},
                    "time": {"type": ["string", "null"]},
                    "meta": {"type": ["string", "null"]},
                    "kind": {"enum": [k.value for k in EventKind]},
                    "target": {"anyOf": [_PATH, {"type": "null"}]},
                },
            },
        },
        "chronology": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2},
        },
        "programs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "body"],
                "additionalProperties": False,
                "properties": {"name": {"type": "string"}, "body": {"$ref": "#/$defs/block"}},
            },
        },
        "classes": {"type": "array"},
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(MODEL_SCHEMA)


# -- export -----------------------------------------------------------------

def _machine_doc(m: Machine) -> dict:
    return {
        "name": m.name,
        "stages": [k.value for k in m.sorted_stages()],
        "children": [_machine_doc(c) for c in m.children],
        "of": str(m.of_owner) if m.of_owner else None,
        "metadata": dict(m.metadata),
    }


def _block_doc(body) -> list:
    out = []
    for s in body:
        if isinstance(s, Fire):
            out.append({"fire": s.event})
        elif isinstance(s, Repeat):
            out.append({"repeat": s.count, "body": _block_doc(s.body)})
        else:
            out.append({
                "if": {"path": str(s.cond.lhs), "op": s.cond.op, "value": s.cond.rhs},
                "then": _block_doc(s.then),
                "else": None if s.orelse is None else _block_doc(s.orelse),
            })
    return out


def model_to_dict(model: Model) -> dict:
    return {
        "machines": [_machine_doc(m) for m in model.machines],
        "flows": [{"from": str(f.source), "to": str(f.target)} for f in model.flows],
        "triggers": [{"from": str(t.source), "to": str(t.target)} for t in model.triggers],
        "events": [
            {
                "id": e.id,
                "label": e.label,
                "region": [str(p) for p in e.region],
                "time": e.time,
                "meta": e.meta,
                "kind": e.kind.value,
                "target": str(e.target) if e.target else None,
            }
            for e in model.events
        ],
        "chronology": [[a, b] for a, b in model.chronology],
        "programs": [{"name": p.name, "body": _block_doc(p.body)} for p in model.programs],
        "classes": [class_to_dict(c) for c in model.classes],
    }


def export_json(model: Model) -> str:
    diags = validate_all(model)
    if diags:
        raise InvalidInput(f"cannot export an invalid model: {diags[0]}", diags)
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# -- import -----------------------------------------------------------------

def _machine_from(doc: dict) -> Machine:
    return Machine(
        doc["name"],
        [STAGE_NAMES[s] for s in doc.get("stages", [])],
        [_machine_from(c) for c in doc.get("children", [])],
        Path.parse(doc["of"]) if doc.get("of") else None,
        doc.get("metadata", {}),
    )


def _block_from(items) -> tuple:
    out = []
    for s in items:
        if "fire" in s:
            out.append(Fire(s["fire"]))
        elif "repeat" in s:
            out.append(Repeat(s["repeat"], _block_from(s["body"])))
        else:
            c = s["if"]
            orelse = s.get("else")
            out.append(If(Cond(Path.parse(c["path"]), c["op"], c["value"]), _block_from(s["then"]),
                          None if orelse is None else _block_from(orelse)))
    return tuple(out)


def _resolvable(model: Model, path: Path) -> bool:
    m = find_machine(model, path)
    return m is not None and (path.stage is None or path.stage in m.stages)


def model_from_dict(doc) -> Model:
    try:
        _VALIDATOR.validate(doc)
    except jsonschema.ValidationError as exc:
        raise SchemaError(exc.message, pointer(exc.absolute_path)) from None

    model = Model(machines=[_machine_from(m) for m in doc.get("machines", [])])
    for key, cls in (("flows", Flow), ("triggers", Trigger)):
        for i, e in enumerate(doc.get(key, [])):
            edge = cls(Path.parse(e["from"]), Path.parse(e["to"]))
            for end, path in (("from", edge.source), ("to", edge.target)):
                if not _resolvable(model, path):
                    raise SchemaError(f"{path} does not resolve", f"/{key}/{i}/{end}")
            getattr(model, key).append(edge)
    for i, e in enumerate(doc.get("events", [])):
        region = [Path.parse(p) for p in e["region"]]
        for j, p in enumerate(region):
            if not _resolvable(model, p):
                raise SchemaError(f"{p} does not resolve", f"/events/{i}/region/{j}")
        target = Path.parse(e["target"]) if e.get("target") else None
        model.events.append(Event(e["id"], e.get("label", ""), region, e.get("time"), e.get("meta"),
                                  EventKind(e.get("kind", "plain")), target))
    model.chronology = [(a, b) for a, b in doc.get("chronology", [])]
    model.programs = [Program(p["name"], _block_from(p["body"])) for p in doc.get("programs", [])]
    model.classes = [class_from_dict(c, f"/classes/{i}") for i, c in enumerate(doc.get("classes", []))]
    return model


def import_json(text: str) -> Model:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not JSON: {exc.msg} at line {exc.lineno} column {exc.colno}") from None
    return model_from_dict(doc)

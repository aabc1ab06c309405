"""Whole-model validation: static structure, events, chronology, programs, classes."""

from __future__ import annotations

from .core import is_elided, validate
from .dynamics import validate_dynamics
from .model import Diagnostic, Model, error
from .oo import spec_problems


def validate_all(model: Model) -> list[Diagnostic]:
    out = validate(model, relaxed=is_elided(model) and bool(model.flows or model.triggers))
    out += validate_dynamics(model)
    seen = set()
    for spec in model.classes:
        where = f"class {spec.name}"
        if spec.name in seen:
            out.append(error("DUPLICATE_CLASS", f"class {spec.name} declared twice", where))
        seen.add(spec.name)
        out += [error("INVALID_SPEC", p, where) for p in spec_problems(spec)]
    return sorted(dict.fromkeys(out), key=Diagnostic.sort_key)

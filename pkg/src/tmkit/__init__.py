"""Thinging-machine modelling toolkit.

Build hierarchical five-stage machine models, check them, simulate their
event programs, and translate to and from class specifications.
"""

from .core import (
    FLOW_GRAMMAR,
    add_flow,
    add_trigger,
    elide_stages,
    foreign_parts,
    lifted_edges,
    merge_machines,
    resolve,
    stage_paths,
    validate,
)
from .checks import validate_all
from .dsl import Document, format_model, parse
from .dynamics import (
    Violation,
    check_actualization,
    define_event,
    expand,
    format_trace,
    simulate,
    validate_chronology,
)
from .errors import TMError
from .jsonio import export_json, import_json
from .model import (
    Attribute,
    ClassSpec,
    Cond,
    Diagnostic,
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
    StageKind,
    Trigger,
)
from .oo import from_class, from_hierarchy, normalize, to_class, to_hierarchy
from .render import RenderOptions, render_dot

__version__ = "0.1.0"

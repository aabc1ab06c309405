"""Graphviz DOT output.

Machines become nested clusters and stages become boxes.  Flows are solid
edges and triggers dashed ones.  At the elided level each machine gets an
invisible anchor node that the lifted edges attach to.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .checks import validate_all
from .core import elide_stages, is_elided
from .errors import InvalidInput, UnknownEvent
from .model import Machine, Model, Path

PALETTE = ("red", "blue", "darkgreen", "darkorange", "purple", "brown", "deeppink", "teal")


@dataclass(frozen=True)
class RenderOptions:
    level: str = "full"  # "full" | "elided"
    show_triggers: bool = True
    events: Optional[tuple[str, ...]] = None


def _q(text: str) -> str:
    return '"' + str(text).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _attrs(**kw) -> str:
    parts = [f"{k}={_q(v)}" for k, v in kw.items() if v is not None]
    return f" [{', '.join(parts)}]" if parts else ""


class _Highlight:
    def __init__(self, model: Model, event_ids):
        self.regions = []
        for i, eid in enumerate(event_ids or ()):
            event = model.event(eid)
            if event is None:
                raise UnknownEvent(f"no event {eid} to highlight")
            self.regions.append((eid, PALETTE[i % len(PALETTE)], event.region))

    def of(self, path: Path) -> tuple[Optional[str], Optional[str]]:
        """Colour and tooltip for an element, or (None, None)."""
        hits = [(eid, colour) for eid, colour, region in self.regions
                if any(r.contains(path) for r in region)]
        if not hits:
            return None, None
        return hits[0][1], " ".join(eid for eid, _ in hits)


def render_dot(model: Model, opts: RenderOptions = RenderOptions()) -> str:
    if opts.level not in ("full", "elided"):
        raise ValueError(f"unknown level {opts.level!r}")
    diags = validate_all(model)
    if diags:
        raise InvalidInput(f"cannot render an invalid model: {diags[0]}", diags)
    elided = opts.level == "elided" or is_elided(model)
    if opts.level == "elided":
        model = elide_stages(model)
    highlight = _Highlight(model, opts.events)

    lines = ["digraph TM {", "  compound=true;", "  node [shape=box, fontname=\"Helvetica\"];"]

    def emit(m: Machine, path: Path, indent: str):
        inner = indent + "  "
        colour, tip = highlight.of(path)
        label = m.name + (f" (of {m.of_owner})" if m.of_owner else "")
        lines.append(f"{indent}subgraph {_q('cluster_' + str(path))} {{")
        lines.append(f"{inner}label={_q(label)};")
        if m.of_owner:
            lines.append(f"{inner}style=dashed;")
        if colour and elided:
            lines.append(f"{inner}color={_q(colour)};")
            lines.append(f"{inner}penwidth=2;")
        if elided or not (m.stages or m.children):
            lines.append(f"{inner}{_q(path)}{_attrs(shape='point', style='invis', label='')};")
        for kind in m.sorted_stages():
            node = path.at(kind)
            colour, tip = highlight.of(node)
            extra = _attrs(label=kind.label, color=colour, penwidth="2" if colour else None, tooltip=tip)
            lines.append(f"{inner}{_q(node)}{extra};")
        for c in m.children:
            emit(c, path.child(c.name), inner)
        lines.append(f"{indent}}}")

    for m in model.machines:
        emit(m, Path((m.name,)), "  ")

    def edge(src: Path, dst: Path, style: Optional[str]):
        colour = None
        c1, _ = highlight.of(src)
        c2, _ = highlight.of(dst)
        if c1 and c1 == c2:
            colour = c1
        ends = {}
        if elided:
            if not src.contains(dst) and not dst.contains(src):
                ends = {"ltail": f"cluster_{src}", "lhead": f"cluster_{dst}"}
        lines.append(f"  {_q(src)} -> {_q(dst)}{_attrs(style=style, color=colour, **ends)};")

    for f in model.flows:
        edge(f.source, f.target, None)
    if opts.show_triggers:
        for t in model.triggers:
            edge(t.source, t.target, "dashed")
    lines.append("}")
    return "\n".join(lines) + "\n"

"""``tm`` command-line tool.

Exit codes: 0 success, 1 validation or transform error, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path as FilePath
from typing import Optional, Sequence

from . import dsl, jsonio, oo
from .checks import validate_all
from .dynamics import ChronologyViolation, format_trace, simulate
from .errors import InvalidInput, ParseError, SchemaError, TMError
from .model import Diagnostic, Model
from .render import RenderOptions, render_dot

OK, FAILED, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _use_color() -> bool:
    return "TM_NO_COLOR" not in os.environ and sys.stderr.isatty()


def report(code: str, message: str, where: str = "", severity: str = "error") -> None:
    tag = f"{severity}[{code}]"
    if _use_color():
        tag = f"\033[{'31' if severity == 'error' else '33'}m{tag}\033[0m"
    prefix = f"{where}: " if where else ""
    print(f"{prefix}{tag} {message}", file=sys.stderr)


def report_diagnostics(diags: Sequence[Diagnostic], filename: str) -> None:
    for d in diags:
        msg = f"{d.location}: {d.message}" if d.location else d.message
        report(d.code, msg, filename, d.severity)


def write_atomic(target: str, text: str) -> None:
    """Write through a temp file in the same directory, then rename over the target."""
    path = FilePath(target)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, out: Optional[str]) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def read_text(filename: str) -> str:
    with open(filename, encoding="utf-8") as fh:
        return fh.read()


def load_model(filename: str, *, check: bool = True) -> Model:
    text = read_text(filename)
    if filename.endswith(".json"):
        model = jsonio.import_json(text)
        if check:
            diags = validate_all(model)
            if diags:
                raise InvalidInput(f"{len(diags)} validation problem(s)", diags)
        return model
    return dsl.parse(text, check=check).model


# -- subcommands --------------------------------------------------------------

def cmd_parse(args) -> int:
    model = load_model(args.file, check=False)
    diags = validate_all(model)
    report_diagnostics(diags, args.file)
    if diags:
        return FAILED
    print(f"ok: {sum(1 for _ in model.walk())} machines, {len(model.flows)} flows, "
          f"{len(model.triggers)} triggers, {len(model.events)} events, "
          f"{len(model.programs)} programs, {len(model.classes)} classes")
    return OK


def cmd_validate(args) -> int:
    model = load_model(args.file, check=False)
    diags = validate_all(model)
    report_diagnostics(diags, args.file)
    return FAILED if diags else OK


def cmd_format(args) -> int:
    emit(dsl.format_model(load_model(args.file)), args.output)
    return OK


def cmd_export(args) -> int:
    emit(jsonio.export_json(load_model(args.file)), args.output)
    return OK


def cmd_render(args) -> int:
    events = tuple(e for e in args.events.split(",") if e) if args.events else None
    opts = RenderOptions(level=args.level, show_triggers=not args.hide_triggers, events=events)
    emit(render_dot(load_model(args.file), opts), args.output)
    return OK


def _bindings(pairs) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise UsageError(f"--bind expects EVENT=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        out[key] = None if value == "null" else value
    return out


def cmd_simulate(args) -> int:
    model = load_model(args.file)
    bindings = _bindings(args.bind)
    try:
        trace = simulate(model, args.program, bindings)
    except ChronologyViolation as exc:
        sys.stdout.write(format_trace(exc.trace))
        raise
    text = format_trace(trace)
    sys.stdout.write(text)
    if args.trace:
        write_atomic(args.trace, text)
    return OK


def _classes_from(filename: str):
    text = read_text(filename)
    if filename.endswith(".json"):
        return oo.load_classes(text)
    return dsl.parse(text).model.classes


def cmd_from_class(args) -> int:
    specs = _classes_from(args.file)
    if args.class_name:
        specs = [s for s in specs if s.name == args.class_name]
        if not specs:
            raise InvalidInput(f"no class {args.class_name} in {args.file}")
    if len(specs) != 1:
        raise InvalidInput(f"expected exactly one class, found {len(specs)}; pick one with --class")
    emit(dsl.format_model(oo.from_class(specs[0])), args.output)
    return OK


def cmd_to_class(args) -> int:
    spec = oo.to_class(load_model(args.file))
    emit(oo.dump_classes([spec]), args.output)
    return OK


def cmd_events(args) -> int:
    model = load_model(args.file)
    for e in model.events:
        target = f" {e.target}" if e.target else ""
        label = f" {e.label!r}" if e.label else ""
        print(f"event {e.id}{label} {e.kind.value}{target}: " + ", ".join(map(str, e.region)))
    for a, b in model.chronology:
        print(f"chronology {a} -> {b}")
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="tm", description="Thinging-machine modelling toolkit")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_ArgumentParser)
    sub.required = True

    def add(name, func, help_text, out=False):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("file", metavar="FILE")
        if out:
            p.add_argument("-o", "--output", metavar="OUT", help="write here instead of stdout")
        p.set_defaults(func=func)
        return p

    add("parse", cmd_parse, "parse and validate, print a summary")
    add("validate", cmd_validate, "print validation diagnostics")
    add("format", cmd_format, "print the canonical text form", out=True)
    add("export", cmd_export, "export the model as JSON", out=True)
    p = add("render", cmd_render, "render Graphviz DOT", out=True)
    p.add_argument("--level", choices=("full", "elided"), default="full")
    p.add_argument("--events", metavar="E1,E2", help="highlight these event regions")
    p.add_argument("--hide-triggers", action="store_true")
    p = add("simulate", cmd_simulate, "run a program and print its trace")
    p.add_argument("--program", required=True)
    p.add_argument("--bind", action="append", metavar="EVENT=VALUE", help="value for a set event")
    p.add_argument("--trace", metavar="OUT", help="also write the trace here")
    p = add("from-class", cmd_from_class, "generate a TM model from a class", out=True)
    p.add_argument("--class", dest="class_name", metavar="NAME")
    add("to-class", cmd_to_class, "recover the class of a generated model", out=True)
    add("events", cmd_events, "list events and chronology")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        report("USAGE", str(exc))
        return USAGE
    except OSError as exc:
        report("IO_ERROR", f"{exc.strerror or exc}: {exc.filename or ''}".rstrip(": "))
        return USAGE
    except ParseError as exc:
        where = getattr(args, "file", "")
        report(exc.code, str(exc), where)
        return USAGE
    except SchemaError as exc:
        report(exc.code, str(exc), getattr(args, "file", ""))
        return USAGE
    except InvalidInput as exc:
        if exc.diagnostics:
            report_diagnostics(exc.diagnostics, args.file)
        else:
            report(exc.code, str(exc), getattr(args, "file", ""))
        return FAILED
    except TMError as exc:
        report(exc.code, str(exc), getattr(args, "file", ""))
        return FAILED


def cli(argv: Optional[Sequence[str]] = None) -> int:
    """Like ``main`` but turns argparse's own exits (``--help``) into a return code."""
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE


def run() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    run()

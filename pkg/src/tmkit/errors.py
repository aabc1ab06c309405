"""Exception hierarchy.

Every error carries a short ``code`` tag; the CLI prints it on each
diagnostic line so failures are greppable.
"""

from __future__ import annotations


class TMError(Exception):
    code = "TM_ERROR"

    def __init__(self, message: str = ""):
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return self.message


class NotFound(TMError):
    code = "NOT_FOUND"


class Duplicate(TMError):
    code = "DUPLICATE"


class FlowGrammarError(TMError):
    code = "FLOW_GRAMMAR"


class CrossMachineNonTransfer(TMError):
    code = "CROSS_MACHINE_FLOW"


class SelfLoop(TMError):
    code = "SELF_LOOP"


class InvalidInput(TMError):
    """Raised when an operation's precondition (a valid model) fails.

    ``diagnostics`` holds whatever the validator reported.
    """

    code = "INVALID_INPUT"

    def __init__(self, message: str = "", diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class NotSiblings(TMError):
    code = "NOT_SIBLINGS"


class NameClash(TMError):
    code = "NAME_CLASH"


class ParseError(TMError):
    code = "PARSE_ERROR"

    def __init__(self, message: str, span=None):
        super().__init__(message)
        self.span = span

    def __str__(self) -> str:
        if self.span is None:
            return self.message
        return f"{self.span.line}:{self.span.column}: {self.message}"


class SchemaError(TMError):
    code = "SCHEMA_ERROR"

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(message)
        self.pointer = pointer

    def __str__(self) -> str:
        return f"{self.pointer or '/'}: {self.message}"


# -- dynamics -------------------------------------------------------------

class EmptyRegion(TMError):
    code = "EMPTY_REGION"


class DisconnectedRegion(TMError):
    code = "DISCONNECTED_REGION"


class UnknownPath(TMError):
    code = "UNKNOWN_PATH"


class DuplicateId(TMError):
    code = "DUPLICATE_EVENT"


class UnknownEvent(TMError):
    code = "UNKNOWN_EVENT"


class MissingBinding(TMError):
    code = "MISSING_BINDING"


class ChronologyViolation(TMError):
    """Aborted simulation; ``trace`` holds the firings made before the abort."""

    code = "CHRONO_VIOLATION"

    def __init__(self, message: str, violation=None, trace=()):
        super().__init__(message)
        self.violation = violation
        self.trace = list(trace)


# -- OO bridge ------------------------------------------------------------

class InvalidSpec(TMError):
    code = "INVALID_SPEC"


class NotClassShaped(TMError):
    code = "NOT_CLASS_SHAPED"


class UnknownSuperclass(TMError):
    code = "UNKNOWN_SUPERCLASS"


class InheritanceCycle(TMError):
    code = "INHERITANCE_CYCLE"


class NotHierarchyShaped(TMError):
    code = "NOT_HIERARCHY_SHAPED"

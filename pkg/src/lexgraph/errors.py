"""Engine error hierarchy.

Every error carries a stable ``code`` drawn from a closed set; the service and
CLI map codes to transport status without inspecting messages.
"""

from __future__ import annotations

from typing import Any, Dict, Optional


class LexGraphError(Exception):
    code = "InternalError"

    def __init__(self, message: str = "", details: Optional[Dict[str, Any]] = None):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.details = dict(details or {})

    def to_dict(self) -> Dict[str, Any]:
        return {"code": self.code, "message": self.message, "details": self.details}


class NotFound(LexGraphError):
    code = "NotFound"

    def __init__(self, kind: str, entity_id: Any):
        super().__init__(f"{kind} {entity_id!r} not found", {"kind": kind, "id": entity_id})


class NoValidVersion(LexGraphError):
    code = "NoValidVersion"

    def __init__(self, item_id: str, timestamp: Any):
        super().__init__(
            f"item {item_id!r} has no version valid at {timestamp}",
            {"item_id": item_id, "timestamp": str(timestamp)},
        )


class NoTextUnit(LexGraphError):
    code = "NoTextUnit"

    def __init__(self, version_id: str, language: str):
        super().__init__(
            f"version {version_id!r} has no canonical text in {language!r}",
            {"version_id": version_id, "language": language},
        )


class NoVersions(LexGraphError):
    code = "NoVersions"


class MissingProvenance(LexGraphError):
    code = "MissingProvenance"


class DifferentItems(LexGraphError):
    code = "DifferentItems"


class NoComparableText(LexGraphError):
    code = "NoComparableText"


class InvalidInterval(LexGraphError):
    code = "InvalidInterval"


class NotAWork(LexGraphError):
    code = "NotAWork"


class ConflictingScope(LexGraphError):
    code = "ConflictingScope"


class UnknownId(LexGraphError):
    code = "UnknownId"


class InvalidArgument(LexGraphError):
    code = "InvalidArgument"


class DuplicateId(LexGraphError):
    code = "DuplicateId"


class ValidationFailed(LexGraphError):
    code = "ValidationFailed"

    def __init__(self, report):
        self.report = report
        super().__init__(
            f"corpus failed validation with {len(report)} violation(s)",
            {"violations": [v.to_dict() for v in report]},
        )


class CorpusFormatError(LexGraphError):
    code = "CorpusFormatError"


class SnapshotError(LexGraphError):
    code = "SnapshotError"


class UnknownPrimitive(LexGraphError):
    code = "UnknownPrimitive"


class PlanError(LexGraphError):
    """Structural plan problems; ``diagnostics`` lists every violation found."""

    code = "PlanError"

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        first = self.diagnostics[0]
        self.code = first["kind"]
        super().__init__(
            "; ".join(f"{d['kind']} at {d.get('step') or '<plan>'}: {d['reason']}" for d in self.diagnostics),
            {"diagnostics": self.diagnostics},
        )


class AmbiguousResolution(LexGraphError):
    code = "AmbiguousResolution"


class NoMatch(LexGraphError):
    code = "NoMatch"


class StepFailed(LexGraphError):
    code = "StepFailed"

    def __init__(self, step_id: str, cause: LexGraphError, audit=None, outputs=None):
        self.step_id = step_id
        self.cause = cause
        self.audit = audit if audit is not None else []
        self.outputs = outputs if outputs is not None else {}
        super().__init__(
            f"step {step_id!r} failed: {cause.code}: {cause.message}",
            {"step_id": step_id, "cause": cause.to_dict()},
        )


class Busy(LexGraphError):
    code = "Busy"


# code -> HTTP status; closed set, every engine error class appears here.
HTTP_STATUS = {
    "NotFound": 404,
    "NoValidVersion": 404,
    "NoTextUnit": 404,
    "NoVersions": 404,
    "UnknownId": 404,
    "MissingProvenance": 409,
    "DifferentItems": 409,
    "NoComparableText": 409,
    "ConflictingScope": 409,
    "AmbiguousResolution": 409,
    "NoMatch": 409,
    "InvalidInterval": 400,
    "NotAWork": 400,
    "InvalidArgument": 400,
    "SchemaViolation": 400,
    "UnknownPrimitive": 404,
    "ParseError": 400,
    "CycleDetected": 400,
    "BadBinding": 400,
    "BadArgument": 400,
    "PlanError": 400,
    "StepFailed": 422,
    "ValidationFailed": 422,
    "DuplicateId": 422,
    "CorpusFormatError": 422,
    "SnapshotError": 422,
    "Busy": 503,
}


class SchemaViolation(LexGraphError):
    code = "SchemaViolation"

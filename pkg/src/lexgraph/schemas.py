"""JSON Schemas for primitive parameters and results, derived from the registry."""

from __future__ import annotations

from typing import Any, Dict

from .registry import Param, Primitive

DATE = {"type": "string", "description": "ISO date or instant; truncated to a calendar date"}
NULLABLE_STR = {"type": ["string", "null"]}
METADATA = {
    "type": "object",
    "additionalProperties": {"type": ["string", "number", "boolean", "null"]},
}


def _obj(props: Dict[str, Any], required=None) -> Dict[str, Any]:
    return {
        "type": "object",
        "properties": props,
        "required": list(required if required is not None else props),
        "additionalProperties": False,
    }


def _ref(name: str) -> Dict[str, str]:
    return {"$ref": f"#/components/schemas/{name}"}


COMPONENTS: Dict[str, Dict[str, Any]] = {
    "TimeInterval": _obj({"start": {"type": "string"}, "end": NULLABLE_STR}),
    "Item": _obj({
        "id": {"type": "string"},
        "kind": {"type": "string", "enum": ["Work", "WorkComponent"]},
        "type_id": {"type": "string"},
        "label": {"type": "string"},
        "uri": NULLABLE_STR,
        "parent": NULLABLE_STR,
        "children": {"type": "array", "items": {"type": "string"}},
        "metadata": METADATA,
    }),
    "Theme": _obj({
        "id": {"type": "string"},
        "label": {"type": "string"},
        "uri": NULLABLE_STR,
        "parents": {"type": "array", "items": {"type": "string"}},
        "children": {"type": "array", "items": {"type": "string"}},
        "members": {"type": "array", "items": {"type": "string"}},
        "metadata": METADATA,
    }),
    "Version": _obj({
        "id": {"type": "string"},
        "item": {"type": "string"},
        "validity_interval": _ref("TimeInterval"),
        "uri": NULLABLE_STR,
        "parents": {"type": "array", "items": {"type": "string"}},
        "metadata": METADATA,
    }),
    "Action": _obj({
        "id": {"type": "string"},
        "type": {"type": "string"},
        "date": {"type": "string"},
        "source_version": {"type": "string"},
        "terminates_version": NULLABLE_STR,
        "produces_version": NULLABLE_STR,
        "metadata": METADATA,
    }),
    "TextUnit": _obj({
        "id": {"type": "string"},
        "source_node_type": {"type": "string", "enum": ["Item", "Theme", "Version", "Action"]},
        "source_node_id": {"type": "string"},
        "language": {"type": "string"},
        "aspect": {"type": "string"},
        "content": {"type": "string"},
    }),
    "RankedCandidate": _obj({"id": {"type": "string"}, "confidence": {"type": "number"}}),
    "ScoredTextUnit": _obj({"text_unit": _ref("TextUnit"), "score": {"type": "number"}}),
    "ScoredItem": _obj({"item": _ref("Item"), "score": {"type": "number"}}),
    "TextEdit": _obj({
        "op": {"type": "string", "enum": ["insert", "delete", "replace"]},
        "position": {"type": "integer"},
        "tokens_a": {"type": "array", "items": {"type": "string"}},
        "tokens_b": {"type": "array", "items": {"type": "string"}},
    }),
    "StructuralChange": _obj({
        "change": {"type": "string", "enum": ["component_added", "component_removed"]},
        "item": {"type": "string"},
    }),
    "TextDiffReport": _obj({
        "version_a": {"type": "string"},
        "version_b": {"type": "string"},
        "language": {"type": "string"},
        "textual_edits": {"type": "array", "items": _ref("TextEdit")},
        "structural_changes": {"type": "array", "items": _ref("StructuralChange")},
    }),
    "Causality": _obj({
        "creating_action": _ref("Action"),
        "terminating_action": {"anyOf": [_ref("Action"), {"type": "null"}]},
    }),
    "ApiError": _obj(
        {"error": _obj(
            {"code": {"type": "string"}, "message": {"type": "string"}, "details": {"type": "object"}},
            ["code", "message"],
        )}
    ),
    "VerificationReport": _obj({
        "ok": {"type": "boolean"},
        "issues": {"type": "array", "items": {"type": "string"}},
        "steps": {"type": "array", "items": _obj({
            "step_id": NULLABLE_STR,
            "status": {"type": "string", "enum": ["verified", "replay-mismatch", "chain-broken"]},
            "reason": {"type": "string"},
        })},
    }),
}


def param_schema(param: Param) -> Dict[str, Any]:
    t = param.type
    if t in ("string", "id"):
        s: Dict[str, Any] = {"type": "string"}
        if t == "id":
            s["minLength"] = 1
    elif t in ("ids", "strings"):
        s = {"type": "array", "items": {"type": "string"}}
    elif t == "date":
        s = dict(DATE)
    elif t == "int":
        s = {"type": "integer"}
    elif t == "number":
        s = {"type": "number"}
    elif t == "bool":
        s = {"type": "boolean"}
    elif t == "enum":
        s = {"type": "string", "enum": list(param.choices)}
    elif t == "object":
        s = {"type": "object"}
    elif t == "list":
        s = {"type": "array"}
    elif t == "requests":
        s = {"type": "array", "items": {"type": "object"}}
    else:
        s = {}
    if param.description:
        s["description"] = param.description
    return s


def request_schema(prim: Primitive) -> Dict[str, Any]:
    return {
        "type": "object",
        "properties": {p.name: param_schema(p) for p in prim.params},
        "required": [p.name for p in prim.params if p.required],
        "additionalProperties": False,
    }


def result_schema(prim: Primitive) -> Dict[str, Any]:
    r = prim.returns
    many = r.endswith("[]")
    base = r[:-2] if many else r
    if base in COMPONENTS:
        one: Dict[str, Any] = _ref(base)
    elif base in ("string", "id"):
        one = {"type": "string"}
    else:
        one = {}
    return {"type": "array", "items": one} if many else one

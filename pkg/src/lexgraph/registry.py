"""Primitive registry: the single source of names, parameter schemas and
categories shared by the plan executor, the HTTP service and the CLI.

Every invocation goes JSON args -> coerced python args -> engine call ->
canonical JSON value, so all three front ends serialize identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from . import canonical
from .errors import InvalidArgument, LexGraphError, NoMatch, SchemaViolation, UnknownPrimitive
from .model import as_date
from .text import tokenize

DETERMINISTIC = "deterministic"
DISCOVERY = "discovery"
COMBINATOR = "combinator"


@dataclass(frozen=True)
class Param:
    name: str
    type: str
    required: bool = False
    description: str = ""
    choices: Tuple[str, ...] = ()


@dataclass(frozen=True)
class Primitive:
    name: str
    category: str
    params: Tuple[Param, ...]
    call: Callable[..., Any]
    description: str = ""
    resolver: bool = False
    returns: str = "object"

    def param(self, name: str) -> Optional[Param]:
        for p in self.params:
            if p.name == name:
                return p
        return None


REGISTRY: Dict[str, Primitive] = {}

# Names that appear in prose but are not registered, with the primitive meant.
ALIAS_HINTS = {
    "getBatchTexts": "getBatchTextUnits",
    "getItemHistoryBatch": "getItemHistory",
    "getValidVersions": "getBatchValidVersions",
}


def register(name, category, params, call, description="", resolver=False, returns="object"):
    REGISTRY[name] = Primitive(name, category, tuple(params), call, description, resolver, returns)


def lookup(name: str) -> Primitive:
    prim = REGISTRY.get(name)
    if prim is None:
        hint = ALIAS_HINTS.get(name)
        raise UnknownPrimitive(
            f"unknown primitive {name!r}" + (f"; did you mean {hint!r}?" if hint else ""),
            {"primitive": name, "hint": hint},
        )
    return prim


# ---------------------------------------------------------------------------
# Argument checking
# ---------------------------------------------------------------------------


def _is_str_list(v: Any) -> bool:
    return isinstance(v, list) and all(isinstance(x, str) for x in v)


def check_value(param: Param, value: Any) -> Any:
    """Type-check a JSON-level value; return the python value for the call."""
    t = param.type
    if value is None:
        if param.required:
            raise SchemaViolation(f"parameter {param.name!r} is required")
        return None
    ok = True
    if t in ("string", "id"):
        ok = isinstance(value, str) and (t == "string" or bool(value))
    elif t in ("ids", "strings"):
        ok = _is_str_list(value)
    elif t == "date":
        if isinstance(value, str):
            try:
                as_date(value)
            except LexGraphError:
                ok = False
        else:
            ok = False
    elif t == "int":
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif t == "number":
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif t == "bool":
        ok = isinstance(value, bool)
    elif t == "enum":
        ok = value in param.choices
    elif t == "object":
        ok = isinstance(value, dict)
    elif t == "list":
        ok = isinstance(value, list)
    elif t == "requests":
        ok = isinstance(value, list) and all(isinstance(x, dict) for x in value)
    if not ok:
        raise SchemaViolation(
            f"parameter {param.name!r} expects {t}" + (f" in {list(param.choices)}" if param.choices else "")
            + f", got {value!r}",
            {"parameter": param.name, "expected": t},
        )
    return value


def check_args(prim: Primitive, args: Mapping[str, Any]) -> Dict[str, Any]:
    if not isinstance(args, Mapping):
        raise SchemaViolation(f"{prim.name}: arguments must be an object")
    known = {p.name for p in prim.params}
    unknown = sorted(set(args) - known)
    if unknown:
        raise SchemaViolation(f"{prim.name}: unknown parameter(s) {unknown}", {"unknown": unknown})
    return {p.name: check_value(p, args.get(p.name)) for p in prim.params if args.get(p.name) is not None or p.required}


def invoke(engine, name: str, args: Mapping[str, Any]) -> Any:
    """Call a primitive with JSON args; return its canonical JSON value."""
    prim = lookup(name)
    kwargs = check_args(prim, args)
    return canonical.to_jsonable(prim.call(engine, **kwargs))


# ---------------------------------------------------------------------------
# Primitive table
# ---------------------------------------------------------------------------

P = Param
ENTITY_KIND = P("kind", "enum", True, "Entity kind", ("Item", "Theme", "Version", "Action"))
HIER_KIND = P("kind", "enum", True, "Hierarchy kind", ("Item", "Theme", "Version", "ItemType"))
DEPTH = P("depth", "int", False, "1 = direct children; omitted or negative = all descendants")
TOP_K = P("top_k", "int", False, "Maximum number of results")
WEIGHTS = P("weights", "object", False, "Fusion weights {lexical, semantic}")

# -- discovery
register(
    "resolveItemReference", DISCOVERY,
    [P("reference_text", "string", True), P("context_id", "id"), TOP_K],
    lambda e, **kw: e.resolve_item_reference(**kw),
    "Ranked candidate Item ids for a natural-language reference", resolver=True, returns="RankedCandidate[]",
)
register(
    "resolveThemeReference", DISCOVERY,
    [P("reference_text", "string", True), TOP_K],
    lambda e, **kw: e.resolve_theme_reference(**kw),
    "Ranked candidate Theme ids for a theme name", resolver=True, returns="RankedCandidate[]",
)
register(
    "searchTextUnits", DISCOVERY,
    [
        P("version_ids", "ids"), P("item_ids", "ids"), P("theme_ids", "ids"),
        P("metadata_filter", "object"), P("timestamp", "date"),
        P("semantic_query", "string"), P("lexical_query", "string"),
        P("language", "string"), P("aspects", "strings"), TOP_K, WEIGHTS,
    ],
    lambda e, **kw: e.search_text_units(**kw),
    "Hybrid lexical/semantic search over version TextUnits", returns="ScoredTextUnit[]",
)
register(
    "searchItems", DISCOVERY,
    [
        P("item_ids", "ids"), P("theme_ids", "ids"), P("item_metadata_filter", "object"),
        P("semantic_query", "string"), P("lexical_query", "string"), TOP_K, WEIGHTS,
    ],
    lambda e, **kw: e.search_items(**kw),
    "Time-agnostic hybrid search for Items", returns="ScoredItem[]",
)

# -- fetch
register("getEntity", DETERMINISTIC, [ENTITY_KIND, P("id", "id", True)], lambda e, **kw: e.get_entity(**kw))
for _kind in ("Item", "Theme", "Version", "Action"):
    register(
        f"get{_kind}", DETERMINISTIC, [P("id", "id", True)],
        (lambda k: lambda e, id: e.get_entity(k, id))(_kind),
        f"Fetch one {_kind} by id", returns=_kind,
    )
register(
    "getValidVersion", DETERMINISTIC, [P("item_id", "id", True), P("timestamp", "date", True)],
    lambda e, item_id, timestamp: e.get_valid_version(item_id, timestamp),
    "The Version of an Item valid at a date", returns="Version",
)
register(
    "getTextForVersion", DETERMINISTIC, [P("version_id", "id", True), P("language", "string", True)],
    lambda e, **kw: e.get_text_for_version(**kw),
    "Canonical TextUnit of a Version in a language", returns="TextUnit",
)

# -- navigation
register(
    "getHierarchy", DETERMINISTIC, [HIER_KIND, P("root_id", "id", True), DEPTH],
    lambda e, **kw: e.get_hierarchy(**kw), "Descendant ids in pre-order", returns="id[]",
)
for _kind, _param in (("Item", "item_id"), ("Theme", "theme_id"), ("Version", "version_id"), ("ItemType", "item_type_id")):
    register(
        f"get{_kind}Hierarchy", DETERMINISTIC, [P(_param, "id", True), DEPTH],
        (lambda k, p: lambda e, depth=None, **kw: e.get_hierarchy(k, kw[p], depth))(_kind, _param),
        f"Descendant {_kind} ids in pre-order", returns="id[]",
    )
register(
    "getItemAncestors", DETERMINISTIC, [P("item_id", "id", True)],
    lambda e, **kw: e.get_item_ancestors(**kw), "Structural path below the Work", returns="Item[]",
)
register(
    "getThemesForItem", DETERMINISTIC, [P("item_id", "id", True)],
    lambda e, **kw: e.get_themes_for_item(**kw), "Themes directly classifying an Item", returns="Theme[]",
)

# -- causal / lineage
register(
    "getItemHistory", DETERMINISTIC, [P("item_id", "id", True)],
    lambda e, **kw: e.get_item_history(**kw), "Actions that created or terminated the Item's versions",
    returns="Action[]",
)
register(
    "traceCausality", DETERMINISTIC, [P("version_id", "id", True)],
    lambda e, **kw: e.trace_causality(**kw), "Creating and terminating Action of a Version",
    returns="Causality",
)
register(
    "getVersionsInInterval", DETERMINISTIC,
    [P("item_ids", "ids", True), P("start_date", "date", True), P("end_date", "date", True)],
    lambda e, **kw: e.get_versions_in_interval(**kw), "Versions overlapping a window", returns="Version[]",
)
register(
    "compareVersions", DETERMINISTIC, [P("version_id_a", "id", True), P("version_id_b", "id", True)],
    lambda e, **kw: e.compare_versions(**kw), "Token and structural diff of two Versions",
    returns="TextDiffReport",
)
register(
    "getActionsBySource", DETERMINISTIC, [P("source_work_id", "id", True), P("action_types", "strings")],
    lambda e, **kw: e.get_actions_by_source(**kw), "Actions authorized by a Work", returns="Action[]",
)

# -- introspection
register(
    "getTemporalCoverage", DETERMINISTIC, [P("item_id", "id", True)],
    lambda e, **kw: e.get_temporal_coverage(**kw), "Span of an Item's version history", returns="TimeInterval",
)
register("getAvailableLanguages", DETERMINISTIC, [], lambda e: e.get_available_languages(), returns="string[]")
register("getSupportedActionTypes", DETERMINISTIC, [], lambda e: e.get_supported_action_types(), returns="string[]")
register("getRootThemes", DETERMINISTIC, [], lambda e: e.get_root_themes(), returns="Theme[]")

# -- batch
register(
    "getBatch", DETERMINISTIC, [ENTITY_KIND, P("ids", "ids", True)],
    lambda e, **kw: e.get_batch(**kw), "Fetch many entities; misses dropped", returns="object[]",
)
for _kind in ("Item", "Theme", "Version", "Action"):
    register(
        f"getBatch{_kind}s", DETERMINISTIC, [P("ids", "ids", True)],
        (lambda k: lambda e, ids: e.get_batch(k, ids))(_kind),
        f"Fetch many {_kind}s; misses dropped", returns=f"{_kind}[]",
    )
register(
    "getBatchValidVersions", DETERMINISTIC, [P("item_ids", "ids", True), P("timestamp", "date", True)],
    lambda e, **kw: e.get_batch_valid_versions(**kw), "Valid Versions of many Items at one date",
    returns="Version[]",
)
register(
    "getBatchTextUnits", DETERMINISTIC, [P("requests", "requests", True)],
    lambda e, **kw: e.get_batch_text_units(**kw), "TextUnits for many sources, request order kept",
    returns="TextUnit[]",
)


# ---------------------------------------------------------------------------
# Plan combinators: pure helpers over JSON values, logged like any step.
# ---------------------------------------------------------------------------


def select_path(value: Any, path: Sequence[Any]) -> Any:
    for seg in path:
        if isinstance(value, list):
            try:
                value = value[int(seg)]
            except (ValueError, IndexError):
                raise InvalidArgument(f"path segment {seg!r} is not a valid index") from None
        elif isinstance(value, dict):
            if seg not in value:
                raise InvalidArgument(f"field {seg!r} not present")
            value = value[seg]
        else:
            raise InvalidArgument(f"cannot select {seg!r} from {type(value).__name__}")
    return value


def _split(path: str) -> List[str]:
    return [p for p in path.split(".") if p] if path else []


def _select_by_rank(e, candidates, rank=1):
    if rank < 1 or rank > len(candidates):
        raise NoMatch(f"no candidate at rank {rank} (have {len(candidates)})")
    return candidates[rank - 1]


def _extract_field(e, value, path, drop_missing=True):
    segs = _split(path)
    if not isinstance(value, list):
        return select_path(value, segs)
    out = []
    for v in value:
        try:
            got = select_path(v, segs)
        except InvalidArgument:
            if drop_missing:
                continue
            raise
        if got is None and drop_missing:
            continue
        out.append(got)
    return out


def _fill(template, placeholder, value):
    if isinstance(template, str) and template == placeholder:
        return value
    if isinstance(template, dict):
        return {k: _fill(v, placeholder, value) for k, v in template.items()}
    if isinstance(template, list):
        return [_fill(v, placeholder, value) for v in template]
    return template


def _map_template(e, values, template, placeholder="$value"):
    return [_fill(template, placeholder, v) for v in values]


def _first_text_containing_token(e, text_units, token):
    wanted = tokenize(token)
    if len(wanted) != 1:
        raise InvalidArgument(f"token must be a single word, got {token!r}")
    for tu in text_units:
        if isinstance(tu, dict) and wanted[0] in tokenize(str(tu.get("content", ""))):
            return tu
    raise NoMatch(f"no text contains token {token!r}")


def _find_first(e, records, field, equals):
    segs = _split(field)
    for r in records:
        try:
            if select_path(r, segs) == equals:
                return r
        except InvalidArgument:
            continue
    raise NoMatch(f"no record with {field} == {equals!r}")


def _set_union(e, lists):
    seen = set()
    out = []
    for lst in lists:
        if not isinstance(lst, list):
            raise InvalidArgument("setUnion expects a list of lists")
        for v in lst:
            key = canonical.canonical_bytes(v)
            if key not in seen:
                seen.add(key)
                out.append(v)
    return out


def _map_over_list(e, primitive, over, param, args=None, flatten=False):
    prim = lookup(primitive)
    if prim.category == DISCOVERY:
        raise InvalidArgument(f"mapOverList only maps deterministic primitives, not {primitive!r}")
    results = []
    for v in over:
        res = invoke(e, primitive, {**(args or {}), param: v})
        if flatten and isinstance(res, list):
            results.extend(res)
        else:
            results.append(res)
    return results


def _filter_by_date(e, records, field, on_or_after=None, before=None):
    lo = as_date(on_or_after) if on_or_after else None
    hi = as_date(before) if before else None
    out = []
    for r in records:
        d = as_date(select_path(r, _split(field)))
        if (lo is None or d >= lo) and (hi is None or d < hi):
            out.append(r)
    return out


register(
    "selectByRank", COMBINATOR, [P("candidates", "list", True), P("rank", "int")],
    lambda e, candidates, rank=1: _select_by_rank(e, candidates, rank), "Element at a 1-based rank",
)
register(
    "extractField", COMBINATOR,
    [P("value", "any", True), P("path", "string", True), P("drop_missing", "bool")],
    lambda e, value, path, drop_missing=True: _extract_field(e, value, path, drop_missing),
    "Dotted-path field of a value, or of each element of a list",
)
register(
    "mapTemplate", COMBINATOR,
    [P("values", "list", True), P("template", "any", True), P("placeholder", "string")],
    lambda e, values, template, placeholder="$value": _map_template(e, values, template, placeholder),
    "Instantiate a template once per value",
)
register(
    "firstTextContainingToken", COMBINATOR, [P("text_units", "list", True), P("token", "string", True)],
    lambda e, **kw: _first_text_containing_token(e, **kw), "First TextUnit whose content has the token",
)
register(
    "findFirst", COMBINATOR, [P("records", "list", True), P("field", "string", True), P("equals", "any", True)],
    lambda e, **kw: _find_first(e, **kw), "First record whose field equals a value",
)
register(
    "setUnion", COMBINATOR, [P("lists", "list", True)],
    lambda e, **kw: _set_union(e, **kw), "Order-preserving union of lists",
)
register(
    "mapOverList", COMBINATOR,
    [
        P("primitive", "string", True), P("over", "list", True), P("param", "string", True),
        P("args", "object"), P("flatten", "bool"),
    ],
    lambda e, primitive, over, param, args=None, flatten=False: _map_over_list(e, primitive, over, param, args, flatten),
    "Apply a deterministic primitive to each element",
)
register(
    "filterByDate", COMBINATOR,
    [P("records", "list", True), P("field", "string", True), P("on_or_after", "date"), P("before", "date")],
    lambda e, records, field, on_or_after=None, before=None: _filter_by_date(e, records, field, on_or_after, before),
    "Keep records whose date field lies in [on_or_after, before)",
)

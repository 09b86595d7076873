"""Domain types, the corpus container, corpus interchange I/O and validation."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import CorpusFormatError, DuplicateId, InvalidArgument

DEFAULT_ACTION_TYPES = ("Amendment", "Creation", "Revocation")
CORPUS_SCHEMA_VERSION = 1

DateLike = Union[date, datetime, str]


class ItemKind(str, Enum):
    WORK = "Work"
    COMPONENT = "WorkComponent"


class NodeType(str, Enum):
    ITEM = "Item"
    THEME = "Theme"
    VERSION = "Version"
    ACTION = "Action"


_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}")


def as_date(value: DateLike) -> date:
    """Coerce a date, datetime or ISO 8601 string to a calendar date.

    Time-of-day is truncated; datetimes carrying a UTC offset are first
    converted to UTC.
    """
    if isinstance(value, datetime):
        if value.tzinfo is not None:
            value = value.astimezone(timezone.utc)
        return value.date()
    if isinstance(value, date):
        return value
    if isinstance(value, str) and _DATE_RE.match(value):
        text = value.strip()
        if len(text) == 10:
            return date.fromisoformat(text)
        return as_date(parse_instant(text))
    raise InvalidArgument(f"not an ISO 8601 date: {value!r}")


def parse_instant(value: DateLike) -> datetime:
    """Parse an instant; naive values are taken as UTC."""
    if isinstance(value, datetime):
        dt = value
    elif isinstance(value, date):
        dt = datetime(value.year, value.month, value.day)
    elif isinstance(value, str):
        text = value.strip()
        if text.endswith("Z") or text.endswith("z"):
            text = text[:-1] + "+00:00"
        try:
            dt = datetime.fromisoformat(text)
        except ValueError:
            raise InvalidArgument(f"not an ISO 8601 instant: {value!r}") from None
    else:
        raise InvalidArgument(f"not an ISO 8601 instant: {value!r}")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_instant(dt: datetime) -> str:
    return parse_instant(dt).strftime("%Y-%m-%dT%H:%M:%SZ")


def _freeze_metadata(meta: Optional[Mapping[str, Any]]) -> Mapping[str, Any]:
    return MappingProxyType(dict(sorted((meta or {}).items())))


@dataclass(frozen=True)
class TimeInterval:
    start: date
    end: Optional[date] = None

    def contains(self, t: date) -> bool:
        return self.start <= t and (self.end is None or t < self.end)

    def overlaps(self, start: date, end: date) -> bool:
        """Half-open self against the closed window [start, end]."""
        return self.start <= end and (self.end is None or self.end > start)

    def to_dict(self) -> Dict[str, Any]:
        return {"start": self.start.isoformat(), "end": self.end.isoformat() if self.end else None}


@dataclass(frozen=True)
class Item:
    id: str
    kind: ItemKind
    type_id: str
    label: str
    uri: Optional[str] = None
    parent: Optional[str] = None
    children: Tuple[str, ...] = ()
    metadata: Mapping[str, Any] = field(default_factory=lambda: MappingProxyType({}))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "type_id": self.type_id,
            "label": self.label,
            "uri": self.uri,
            "parent": self.parent,
            "children": list(self.children),
            "metadata": dict(self.metadata),
        }


@dataclass(frozen=True)
class Theme:
    id: str
    label: str
    uri: Optional[str] = None
    parents: Tuple[str, ...] = ()
    children: Tuple[str, ...] = ()
    members: Tuple[str, ...] = ()
    metadata: Mapping[str, Any] = field(default_factory=lambda: MappingProxyType({}))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "label": self.label,
            "uri": self.uri,
            "parents": list(self.parents),
            "children": list(self.children),
            "members": list(self.members),
            "metadata": dict(self.metadata),
        }


@dataclass(frozen=True)
class Version:
    id: str
    item: str
    validity_interval: TimeInterval
    uri: Optional[str] = None
    parents: Tuple[str, ...] = ()
    metadata: Mapping[str, Any] = field(default_factory=lambda: MappingProxyType({}))

    @property
    def start(self) -> date:
        return self.validity_interval.start

    @property
    def end(self) -> Optional[date]:
        return self.validity_interval.end

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "item": self.item,
            "validity_interval": self.validity_interval.to_dict(),
            "uri": self.uri,
            "parents": list(self.parents),
            "metadata": dict(self.metadata),
        }


@dataclass(frozen=True)
class Action:
    id: str
    type: str
    date: date
    source_version: str
    terminates_version: Optional[str] = None
    produces_version: Optional[str] = None
    metadata: Mapping[str, Any] = field(default_factory=lambda: MappingProxyType({}))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "type": self.type,
            "date": self.date.isoformat(),
            "source_version": self.source_version,
            "terminates_version": self.terminates_version,
            "produces_version": self.produces_version,
            "metadata": dict(self.metadata),
        }


@dataclass(frozen=True)
class TextUnit:
    id: str
    source_node_type: NodeType
    source_node_id: str
    language: str
    aspect: str
    content: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "source_node_type": self.source_node_type.value,
            "source_node_id": self.source_node_id,
            "language": self.language,
            "aspect": self.aspect,
            "content": self.content,
        }


@dataclass(frozen=True)
class ItemType:
    """Node of the item-type taxonomy (Article, Paragraph, ...)."""

    id: str
    label: str = ""
    parents: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {"id": self.id, "label": self.label, "parents": list(self.parents)}


@dataclass(frozen=True)
class Corpus:
    items: Tuple[Item, ...] = ()
    themes: Tuple[Theme, ...] = ()
    versions: Tuple[Version, ...] = ()
    actions: Tuple[Action, ...] = ()
    textunits: Tuple[TextUnit, ...] = ()
    action_types: Tuple[str, ...] = DEFAULT_ACTION_TYPES
    item_types: Tuple[ItemType, ...] = ()

    def counts(self) -> Dict[str, int]:
        return {
            "items": len(self.items),
            "themes": len(self.themes),
            "versions": len(self.versions),
            "actions": len(self.actions),
            "textunits": len(self.textunits),
        }

    def to_documents(self) -> Dict[str, Any]:
        """One JSON-ready document per file of the interchange format."""
        return {
            "corpus": {
                "schema_version": CORPUS_SCHEMA_VERSION,
                "action_types": list(self.action_types),
                "item_types": [t.to_dict() for t in self.item_types],
            },
            "items": [x.to_dict() for x in self.items],
            "themes": [x.to_dict() for x in self.themes],
            "versions": [x.to_dict() for x in self.versions],
            "actions": [x.to_dict() for x in self.actions],
            "textunits": [x.to_dict() for x in self.textunits],
        }


# ---------------------------------------------------------------------------
# Interchange parsing
# ---------------------------------------------------------------------------

_SCALARS = (str, int, float, bool)


def _check_fields(kind: str, record: Any, required: Iterable[str], optional: Iterable[str]) -> None:
    if not isinstance(record, dict):
        raise CorpusFormatError(f"{kind} record must be an object, got {type(record).__name__}")
    required = set(required)
    allowed = required | set(optional)
    unknown = sorted(set(record) - allowed)
    if unknown:
        raise CorpusFormatError(f"{kind} record {record.get('id')!r}: unknown field(s) {unknown}")
    missing = sorted(required - set(record))
    if missing:
        raise CorpusFormatError(f"{kind} record {record.get('id')!r}: missing field(s) {missing}")


def _str(kind: str, record: dict, name: str, optional: bool = False) -> Optional[str]:
    value = record.get(name)
    if value is None and optional:
        return None
    if not isinstance(value, str):
        raise CorpusFormatError(f"{kind} {record.get('id')!r}: field {name!r} must be a string")
    return value


def _str_list(kind: str, record: dict, name: str) -> Tuple[str, ...]:
    value = record.get(name) or []
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise CorpusFormatError(f"{kind} {record.get('id')!r}: field {name!r} must be a list of strings")
    return tuple(value)


def _metadata(kind: str, record: dict) -> Mapping[str, Any]:
    meta = record.get("metadata") or {}
    if not isinstance(meta, dict):
        raise CorpusFormatError(f"{kind} {record.get('id')!r}: metadata must be an object")
    for key, value in meta.items():
        if value is not None and not isinstance(value, _SCALARS):
            raise CorpusFormatError(f"{kind} {record.get('id')!r}: metadata {key!r} is not a scalar")
    return _freeze_metadata(meta)


def _date(kind: str, record: dict, value: Any, name: str) -> date:
    if not isinstance(value, str):
        raise CorpusFormatError(f"{kind} {record.get('id')!r}: {name} must be an ISO 8601 string")
    try:
        return as_date(value)
    except (InvalidArgument, ValueError):
        raise CorpusFormatError(f"{kind} {record.get('id')!r}: bad date {value!r} in {name}") from None


def item_from_dict(r: dict) -> Item:
    _check_fields("item", r, ["id", "kind", "type_id", "label"], ["uri", "parent", "children", "metadata"])
    try:
        kind = ItemKind(r["kind"])
    except ValueError:
        raise CorpusFormatError(f"item {r['id']!r}: bad kind {r['kind']!r}") from None
    return Item(
        id=_str("item", r, "id"),
        kind=kind,
        type_id=_str("item", r, "type_id"),
        label=_str("item", r, "label"),
        uri=_str("item", r, "uri", optional=True),
        parent=_str("item", r, "parent", optional=True),
        children=_str_list("item", r, "children"),
        metadata=_metadata("item", r),
    )


def theme_from_dict(r: dict) -> Theme:
    _check_fields("theme", r, ["id", "label"], ["uri", "parents", "children", "members", "metadata"])
    return Theme(
        id=_str("theme", r, "id"),
        label=_str("theme", r, "label"),
        uri=_str("theme", r, "uri", optional=True),
        parents=_str_list("theme", r, "parents"),
        children=_str_list("theme", r, "children"),
        members=_str_list("theme", r, "members"),
        metadata=_metadata("theme", r),
    )


def version_from_dict(r: dict) -> Version:
    _check_fields("version", r, ["id", "item", "validity_interval"], ["uri", "parents", "metadata"])
    iv = r["validity_interval"]
    if isinstance(iv, list) and len(iv) == 2:
        iv = {"start": iv[0], "end": iv[1]}
    _check_fields("validity_interval", iv, ["start"], ["end"])
    end = iv.get("end")
    interval = TimeInterval(
        _date("version", r, iv["start"], "validity_interval.start"),
        _date("version", r, end, "validity_interval.end") if end is not None else None,
    )
    return Version(
        id=_str("version", r, "id"),
        item=_str("version", r, "item"),
        validity_interval=interval,
        uri=_str("version", r, "uri", optional=True),
        parents=_str_list("version", r, "parents"),
        metadata=_metadata("version", r),
    )


def action_from_dict(r: dict) -> Action:
    _check_fields(
        "action",
        r,
        ["id", "type", "date", "source_version"],
        ["terminates_version", "produces_version", "metadata"],
    )
    return Action(
        id=_str("action", r, "id"),
        type=_str("action", r, "type"),
        date=_date("action", r, r["date"], "date"),
        source_version=_str("action", r, "source_version"),
        terminates_version=_str("action", r, "terminates_version", optional=True),
        produces_version=_str("action", r, "produces_version", optional=True),
        metadata=_metadata("action", r),
    )


def textunit_from_dict(r: dict) -> TextUnit:
    _check_fields(
        "textunit", r, ["id", "source_node_type", "source_node_id", "language", "aspect", "content"], []
    )
    try:
        node_type = NodeType(r["source_node_type"])
    except ValueError:
        raise CorpusFormatError(f"textunit {r['id']!r}: bad source_node_type {r['source_node_type']!r}") from None
    return TextUnit(
        id=_str("textunit", r, "id"),
        source_node_type=node_type,
        source_node_id=_str("textunit", r, "source_node_id"),
        language=_str("textunit", r, "language"),
        aspect=_str("textunit", r, "aspect"),
        content=_str("textunit", r, "content"),
    )


def item_type_from_dict(r: dict) -> ItemType:
    _check_fields("item_type", r, ["id"], ["label", "parents"])
    return ItemType(
        id=_str("item_type", r, "id"),
        label=_str("item_type", r, "label", optional=True) or "",
        parents=_str_list("item_type", r, "parents"),
    )


ENTITY_FILES = ("items", "themes", "versions", "actions", "textunits")
_PARSERS = {
    "items": item_from_dict,
    "themes": theme_from_dict,
    "versions": version_from_dict,
    "actions": action_from_dict,
    "textunits": textunit_from_dict,
}


def corpus_from_documents(docs: Mapping[str, Any]) -> Corpus:
    unknown = sorted(set(docs) - set(ENTITY_FILES) - {"corpus"})
    if unknown:
        raise CorpusFormatError(f"unknown corpus section(s): {unknown}")
    parsed: Dict[str, tuple] = {}
    for name in ENTITY_FILES:
        records = docs.get(name, [])
        if not isinstance(records, list):
            raise CorpusFormatError(f"{name}: expected a list of records")
        parsed[name] = tuple(_PARSERS[name](r) for r in records)
    manifest = docs.get("corpus") or {}
    _check_fields("corpus", manifest, [], ["schema_version", "action_types", "item_types"])
    schema = manifest.get("schema_version", CORPUS_SCHEMA_VERSION)
    if schema != CORPUS_SCHEMA_VERSION:
        raise CorpusFormatError(f"unsupported corpus schema_version {schema!r}")
    action_types = manifest.get("action_types", list(DEFAULT_ACTION_TYPES))
    if not isinstance(action_types, list) or not all(isinstance(t, str) for t in action_types):
        raise CorpusFormatError("corpus.action_types must be a list of strings")
    item_types = manifest.get("item_types", [])
    if not isinstance(item_types, list):
        raise CorpusFormatError("corpus.item_types must be a list")
    return Corpus(
        action_types=tuple(action_types),
        item_types=tuple(item_type_from_dict(t) for t in item_types),
        **parsed,
    )


def read_corpus(path: Union[str, Path]) -> Corpus:
    """Read a corpus directory (``items.json`` ... ``textunits.json`` plus an
    optional ``corpus.json`` manifest). Missing entity files mean empty lists."""
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {root}")
    docs: Dict[str, Any] = {}
    for name in ("corpus",) + ENTITY_FILES:
        file = root / f"{name}.json"
        if not file.exists():
            continue
        try:
            docs[name] = json.loads(file.read_text(encoding="utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CorpusFormatError(f"{file}: {exc}") from None
    return corpus_from_documents(docs)


def write_corpus(corpus: Corpus, path: Union[str, Path]) -> None:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    for name, doc in corpus.to_documents().items():
        (root / f"{name}.json").write_text(json.dumps(doc, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Violation:
    invariant: str
    ids: Tuple[str, ...]
    message: str = field(default="", compare=False)

    def to_dict(self) -> Dict[str, Any]:
        return {"invariant": self.invariant, "ids": list(self.ids), "message": self.message}


def find_duplicate_ids(corpus: Corpus) -> List[Tuple[str, str]]:
    dups = []
    for kind in ENTITY_FILES:
        seen = set()
        for entity in getattr(corpus, kind):
            if entity.id in seen:
                dups.append((kind, entity.id))
            seen.add(entity.id)
    return sorted(set(dups))


def check_unique_ids(corpus: Corpus) -> None:
    dups = find_duplicate_ids(corpus)
    if dups:
        raise DuplicateId(
            f"duplicate id(s): {', '.join(f'{k}:{i}' for k, i in dups)}",
            {"duplicates": [{"kind": k, "id": i} for k, i in dups]},
        )


def validate_corpus(corpus: Corpus) -> List[Violation]:
    """Check every model invariant; return violations sorted by (invariant, ids)."""
    out: List[Violation] = []

    def bad(invariant: str, *ids: str, message: str = "") -> None:
        out.append(Violation(invariant, tuple(str(i) for i in ids), message))

    for kind, entity_id in find_duplicate_ids(corpus):
        bad("id-uniqueness", entity_id, message=f"duplicate {kind} id")
    for kind in ENTITY_FILES:
        for entity in getattr(corpus, kind):
            if not entity.id:
                bad("id-nonempty", entity.id, message=f"empty {kind} id")

    items = {i.id: i for i in corpus.items}
    themes = {t.id: t for t in corpus.themes}
    versions = {v.id: v for v in corpus.versions}
    actions = {a.id: a for a in corpus.actions}
    item_types = {t.id: t for t in corpus.item_types}

    # -- items
    for item in corpus.items:
        if item.kind is ItemKind.WORK and item.parent is not None:
            bad("work-has-no-parent", item.id)
        if item.kind is ItemKind.COMPONENT:
            if item.parent is None or item.parent not in items:
                bad("component-parent-exists", item.id, message=f"parent {item.parent!r}")
        if item.parent is not None and item.parent in items and item.id not in items[item.parent].children:
            bad("item-parent-child-consistency", item.id, item.parent, message="parent does not list child")
        for child in item.children:
            if child not in items:
                bad("item-child-exists", item.id, child)
            elif items[child].parent != item.id:
                bad("item-parent-child-consistency", item.id, child, message="child does not point back")
        if len(set(item.children)) != len(item.children):
            bad("item-children-distinct", item.id)
        if item_types and item.type_id not in item_types:
            bad("item-type-exists", item.id, item.type_id)
    for item in corpus.items:
        seen = {item.id}
        cur = item.parent
        while cur is not None and cur in items:
            if cur in seen:
                bad("item-forest-acyclic", item.id)
                break
            seen.add(cur)
            cur = items[cur].parent

    # -- item types
    for t in corpus.item_types:
        for p in t.parents:
            if p not in item_types:
                bad("item-type-parent-exists", t.id, p)
    if _has_cycle({t.id: [p for p in t.parents if p in item_types] for t in corpus.item_types}):
        bad("item-type-dag-acyclic", *sorted(item_types)[:1])

    # -- themes
    for theme in corpus.themes:
        for p in theme.parents:
            if p not in themes:
                bad("theme-parent-exists", theme.id, p)
            elif theme.id not in themes[p].children:
                bad("theme-parent-child-consistency", theme.id, p, message="parent does not list child")
        for c in theme.children:
            if c not in themes:
                bad("theme-child-exists", theme.id, c)
            elif theme.id not in themes[c].parents:
                bad("theme-parent-child-consistency", theme.id, c, message="child does not list parent")
        for m in theme.members:
            if m not in items:
                bad("theme-member-exists", theme.id, m)
    cyclic = _cycle_nodes({t.id: [p for p in t.parents if p in themes] for t in corpus.themes})
    for tid in cyclic:
        bad("theme-dag-acyclic", tid)

    # -- versions
    by_item: Dict[str, List[Version]] = {}
    for v in corpus.versions:
        if v.item not in items:
            bad("version-item-exists", v.id, v.item)
        else:
            by_item.setdefault(v.item, []).append(v)
        if v.end is not None and not v.start < v.end:
            bad("version-interval-order", v.id)
        if v.item in items:
            item = items[v.item]
            if item.kind is ItemKind.WORK and v.parents:
                bad("version-parent-alignment", v.id, message="a Work's version has parents")
            for p in v.parents:
                if p not in versions:
                    bad("version-parent-exists", v.id, p)
                elif versions[p].item != item.parent:
                    bad("version-parent-alignment", v.id, p, message="parent version is not of the parent item")
    for item_id, vs in by_item.items():
        open_ended = sorted(v.id for v in vs if v.end is None)
        if len(open_ended) > 1:
            bad("open-ended-version-uniqueness", *open_ended)
        ordered = sorted(vs, key=lambda v: (v.start, v.id))
        for a, b in zip(ordered, ordered[1:]):
            if a.end is None or a.end > b.start:
                bad("version-interval-disjoint", a.id, b.id)

    # -- actions
    supported = set(corpus.action_types)
    produced_by: Dict[str, List[str]] = {}
    terminated_by: Dict[str, List[str]] = {}
    for a in corpus.actions:
        if a.type not in supported:
            bad("action-type-supported", a.id, message=a.type)
        if a.source_version not in versions:
            bad("action-version-exists", a.id, a.source_version, message="source_version")
        if a.terminates_version is None and a.produces_version is None:
            bad("action-effect-present", a.id)
        if a.produces_version is not None:
            pv = versions.get(a.produces_version)
            if pv is None:
                bad("action-version-exists", a.id, a.produces_version, message="produces_version")
            else:
                produced_by.setdefault(pv.id, []).append(a.id)
                if pv.start != a.date:
                    bad("action-produces-start-alignment", a.id, pv.id)
        if a.terminates_version is not None:
            tv = versions.get(a.terminates_version)
            if tv is None:
                bad("action-version-exists", a.id, a.terminates_version, message="terminates_version")
            else:
                terminated_by.setdefault(tv.id, []).append(a.id)
                if tv.end != a.date:
                    bad("action-terminates-end-alignment", a.id, tv.id)
        if a.terminates_version in versions and a.produces_version in versions:
            if versions[a.terminates_version].item != versions[a.produces_version].item:
                bad("action-same-item", a.id)
    for vid, acts in produced_by.items():
        if len(acts) > 1:
            bad("action-produces-unique", vid, *sorted(acts))
    for vid, acts in terminated_by.items():
        if len(acts) > 1:
            bad("action-terminates-unique", vid, *sorted(acts))

    # -- text units
    tables = {NodeType.ITEM: items, NodeType.THEME: themes, NodeType.VERSION: versions, NodeType.ACTION: actions}
    seen_triples: Dict[Tuple[str, str, str], str] = {}
    for tu in corpus.textunits:
        if tu.source_node_id not in tables[tu.source_node_type]:
            bad("textunit-source-exists", tu.id, tu.source_node_id)
        key = (tu.source_node_id, tu.language, tu.aspect)
        if key in seen_triples:
            bad("textunit-uniqueness", seen_triples[key], tu.id)
        else:
            seen_triples[key] = tu.id

    return sorted(out)


def _cycle_nodes(edges: Dict[str, List[str]]) -> List[str]:
    """Nodes lying on a directed cycle (Tarjan SCCs of size > 1 or self-loops)."""
    index: Dict[str, int] = {}
    low: Dict[str, int] = {}
    on_stack = set()
    stack: List[str] = []
    result: List[str] = []
    counter = 0
    for root in sorted(edges):
        if root in index:
            continue
        work = [(root, iter(sorted(edges.get(root, ()))))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(sorted(edges.get(nxt, ())))))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                if len(comp) > 1 or node in edges.get(node, ()):
                    result.extend(comp)
    return sorted(result)


def _has_cycle(edges: Dict[str, List[str]]) -> bool:
    return bool(_cycle_nodes(edges))


def merge_corpora(corpora: Sequence[Corpus]) -> Corpus:
    """Concatenate several corpora; vocabularies are unioned, first declaration wins."""
    if len(corpora) == 1:
        return corpora[0]
    action_types: List[str] = []
    item_types: Dict[str, ItemType] = {}
    tables: Dict[str, list] = {name: [] for name in ENTITY_FILES}
    for c in corpora:
        action_types.extend(t for t in c.action_types if t not in action_types)
        for t in c.item_types:
            item_types.setdefault(t.id, t)
        for name in ENTITY_FILES:
            tables[name].extend(getattr(c, name))
    return Corpus(
        action_types=tuple(action_types),
        item_types=tuple(item_types.values()),
        **{name: tuple(rows) for name, rows in tables.items()},
    )

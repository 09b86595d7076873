"""Deterministic primitives: fetch, temporal resolution, navigation, causal
lineage, introspection and batch variants. All are pure reads over a
frozen :class:`~lexgraph.store.GraphStore`."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import (
    DifferentItems,
    InvalidArgument,
    InvalidInterval,
    MissingProvenance,
    NoComparableText,
    NotAWork,
    NotFound,
    NoTextUnit,
    NoValidVersion,
    NoVersions,
)
from .model import Action, DateLike, Item, ItemKind, NodeType, TextUnit, Theme, TimeInterval, Version, as_date
from .store import GraphStore
from .text import TextEdit, diff_tokens, token_diff

ENTITY_KINDS = ("Item", "Theme", "Version", "Action")
HIERARCHY_KINDS = ("Item", "Theme", "Version", "ItemType")
CANONICAL = "canonical"


@dataclass(frozen=True)
class StructuralChange:
    change: str  # component_added | component_removed
    item: str

    def to_dict(self):
        return {"change": self.change, "item": self.item}


@dataclass(frozen=True)
class TextDiffReport:
    version_a: str
    version_b: str
    language: str
    textual_edits: Tuple[TextEdit, ...]
    structural_changes: Tuple[StructuralChange, ...]

    def to_dict(self):
        return {
            "version_a": self.version_a,
            "version_b": self.version_b,
            "language": self.language,
            "textual_edits": [e.to_dict() for e in self.textual_edits],
            "structural_changes": [c.to_dict() for c in self.structural_changes],
        }


@dataclass(frozen=True)
class Causality:
    creating_action: Action
    terminating_action: Optional[Action]

    def to_dict(self):
        return {
            "creating_action": self.creating_action.to_dict(),
            "terminating_action": self.terminating_action.to_dict() if self.terminating_action else None,
        }


@dataclass(frozen=True)
class TextRequest:
    source_node_type: NodeType
    source_node_id: str
    language: str
    aspects: Tuple[str, ...] = (CANONICAL,)

    @classmethod
    def coerce(cls, value: Any) -> "TextRequest":
        if isinstance(value, TextRequest):
            return value
        if not isinstance(value, Mapping):
            raise InvalidArgument(f"text request must be an object, got {value!r}")
        extra = set(value) - {"source_node_type", "source_node_id", "language", "aspects"}
        if extra:
            raise InvalidArgument(f"text request has unknown field(s) {sorted(extra)}")
        try:
            node_type = NodeType(value["source_node_type"])
            node_id = value["source_node_id"]
            language = value["language"]
        except (KeyError, ValueError) as exc:
            raise InvalidArgument(f"bad text request {dict(value)!r}: {exc}") from None
        aspects = value.get("aspects")
        if aspects is None:
            aspects = [CANONICAL]
        if not isinstance(node_id, str) or not isinstance(language, str) or not isinstance(aspects, (list, tuple)):
            raise InvalidArgument(f"bad text request {dict(value)!r}")
        return cls(node_type, node_id, language, tuple(aspects))


class DeterministicPrimitives:
    store: GraphStore

    # -- fetch ----------------------------------------------------------------

    def get_entity(self, kind: str, id: str):
        getter = {
            "Item": self.store.item,
            "Theme": self.store.theme,
            "Version": self.store.version,
            "Action": self.store.action,
        }.get(kind)
        if getter is None:
            raise InvalidArgument(f"kind must be one of {ENTITY_KINDS}, got {kind!r}")
        return getter(id)

    def get_item(self, id: str) -> Item:
        return self.store.item(id)

    def get_theme(self, id: str) -> Theme:
        return self.store.theme(id)

    def get_version(self, id: str) -> Version:
        return self.store.version(id)

    def get_action(self, id: str) -> Action:
        return self.store.action(id)

    def get_valid_version(self, item_id: str, timestamp: DateLike) -> Version:
        t = as_date(timestamp)
        v = self.store.lookup_valid_version(item_id, t)
        if v is None:
            raise NoValidVersion(item_id, t.isoformat())
        return v

    def get_text_for_version(self, version_id: str, language: str) -> TextUnit:
        self.store.version(version_id)
        tu = self.store.text_unit(version_id, language, CANONICAL)
        if tu is None:
            raise NoTextUnit(version_id, language)
        return tu

    def get_text_unit(self, source_node_type: str, source_node_id: str, language: str, aspect: str) -> Optional[TextUnit]:
        """Single-key text lookup; ``None`` when absent or of another node type."""
        tu = self.store.text_unit(source_node_id, language, aspect)
        if tu is None or tu.source_node_type.value != NodeType(source_node_type).value:
            return None
        return tu

    # -- navigation -----------------------------------------------------------

    def get_hierarchy(self, kind: str, root_id: str, depth: Optional[int] = None) -> List[str]:
        """Pre-order descendants of ``root_id`` (root excluded), first visit wins."""
        if kind not in HIERARCHY_KINDS:
            raise InvalidArgument(f"kind must be one of {HIERARCHY_KINDS}, got {kind!r}")
        {
            "Item": self.store.item,
            "Theme": self.store.theme,
            "Version": self.store.version,
            "ItemType": self.store.item_type,
        }[kind](root_id)
        if depth is not None and not isinstance(depth, int):
            raise InvalidArgument("depth must be an integer")
        limit = None if depth is None or depth < 0 else depth
        out: List[str] = []
        seen = {root_id}
        stack: List[Tuple[str, int]] = [(c, 1) for c in reversed(self.store.children_of(kind, root_id))]
        while stack:
            node, level = stack.pop()
            if limit is not None and level > limit:
                continue
            if node in seen:
                continue
            seen.add(node)
            out.append(node)
            stack.extend((c, level + 1) for c in reversed(self.store.children_of(kind, node)))
        return out

    def get_item_ancestors(self, item_id: str) -> List[Item]:
        item = self.store.item(item_id)
        path: List[Item] = []
        cur = item.parent
        while cur is not None:
            node = self.store.item(cur)
            if node.kind is ItemKind.WORK:
                break
            path.append(node)
            cur = node.parent
        path.reverse()
        return path

    def get_themes_for_item(self, item_id: str) -> List[Theme]:
        self.store.item(item_id)
        return [self.store.themes[t] for t in self.store.themes_of_item(item_id)]

    # -- causal / lineage -------------------------------------------------------

    def get_item_history(self, item_id: str) -> List[Action]:
        self.store.item(item_id)
        return [self.store.actions[a] for a in self.store.actions_for_item(item_id)]

    def trace_causality(self, version_id: str) -> Causality:
        self.store.version(version_id)
        creating = self.store.action_producing(version_id)
        if creating is None:
            raise MissingProvenance(
                f"version {version_id!r} has no creating action", {"version_id": version_id}
            )
        return Causality(creating, self.store.action_terminating(version_id))

    def get_versions_in_interval(self, item_ids: Sequence[str], start_date: DateLike, end_date: DateLike) -> List[Version]:
        if not item_ids:
            raise InvalidArgument("item_ids must be a non-empty list")
        start, end = as_date(start_date), as_date(end_date)
        if start > end:
            raise InvalidInterval(f"start_date {start} is after end_date {end}")
        for item_id in item_ids:
            self.store.item(item_id)
        found = {
            v.id: v
            for item_id in item_ids
            for v in self.store.versions_of(item_id)
            if v.validity_interval.overlaps(start, end)
        }
        return sorted(found.values(), key=lambda v: (v.start, v.item, v.id))

    def compare_versions(self, version_id_a: str, version_id_b: str) -> TextDiffReport:
        va = self.store.version(version_id_a)
        vb = self.store.version(version_id_b)
        if va.id == vb.id:
            raise InvalidArgument("compareVersions needs two distinct versions")
        if va.item != vb.item:
            raise DifferentItems(
                f"{va.id} is of {va.item}, {vb.id} is of {vb.item}",
                {"version_a": va.id, "version_b": vb.id},
            )
        langs_a = {t.language for t in self.store.texts_of(va.id) if t.aspect == CANONICAL}
        langs_b = {t.language for t in self.store.texts_of(vb.id) if t.aspect == CANONICAL}
        shared = sorted(langs_a & langs_b)
        if not shared:
            raise NoComparableText(
                f"{va.id} and {vb.id} share no canonical text language",
                {"version_a": va.id, "version_b": vb.id},
            )
        lang = shared[0]
        tokens_a = diff_tokens(self.store.text_unit(va.id, lang, CANONICAL).content)
        tokens_b = diff_tokens(self.store.text_unit(vb.id, lang, CANONICAL).content)
        comps_a = self.child_components(va.id)
        comps_b = self.child_components(vb.id)
        changes = [StructuralChange("component_added", i) for i in comps_b - comps_a]
        changes += [StructuralChange("component_removed", i) for i in comps_a - comps_b]
        changes.sort(key=lambda c: (c.item, c.change))
        return TextDiffReport(va.id, vb.id, lang, tuple(token_diff(tokens_a, tokens_b)), tuple(changes))

    def child_components(self, version_id: str) -> frozenset:
        """Items of the versions that list ``version_id`` as a parent."""
        return frozenset(self.store.versions[c].item for c in self.store.version_children(version_id))

    def get_actions_by_source(self, source_work_id: str, action_types: Optional[Sequence[str]] = None) -> List[Action]:
        work = self.store.item(source_work_id)
        if work.kind is not ItemKind.WORK:
            raise NotAWork(f"{source_work_id!r} is a {work.kind.value}", {"id": source_work_id})
        wanted = None if action_types is None else set(action_types)
        acts = (self.store.actions[a] for a in self.store.actions_for_work(source_work_id))
        return [a for a in acts if wanted is None or a.type in wanted]

    # -- introspection ----------------------------------------------------------

    def get_temporal_coverage(self, item_id: str) -> TimeInterval:
        versions = self.store.versions_of(item_id)
        if not versions:
            raise NoVersions(f"item {item_id!r} has no versions", {"item_id": item_id})
        start = min(v.start for v in versions)
        end = None if any(v.end is None for v in versions) else max(v.end for v in versions)
        return TimeInterval(start, end)

    def get_available_languages(self) -> List[str]:
        return list(self.store.languages())

    def get_supported_action_types(self) -> List[str]:
        return list(self.store.action_types)

    def get_root_themes(self) -> List[Theme]:
        return [self.store.themes[t] for t in self.store.root_theme_ids()]

    # -- batch ----------------------------------------------------------------

    def get_batch(self, kind: str, ids: Sequence[str]) -> list:
        if kind not in ENTITY_KINDS:
            raise InvalidArgument(f"kind must be one of {ENTITY_KINDS}, got {kind!r}")
        out = []
        for i in ids:
            try:
                out.append(self.get_entity(kind, i))
            except NotFound:
                pass
        return out

    def get_batch_valid_versions(self, item_ids: Sequence[str], timestamp: DateLike) -> List[Version]:
        t = as_date(timestamp)
        out = []
        for item_id in item_ids:
            if item_id not in self.store.items:
                continue
            v = self.store.lookup_valid_version(item_id, t)
            if v is not None:
                out.append(v)
        return out

    def get_batch_text_units(self, requests: Sequence[Any]) -> List[TextUnit]:
        out = []
        for raw in requests:
            req = TextRequest.coerce(raw)
            for aspect in req.aspects:
                tu = self.get_text_unit(req.source_node_type.value, req.source_node_id, req.language, aspect)
                if tu is not None:
                    out.append(tu)
        return out

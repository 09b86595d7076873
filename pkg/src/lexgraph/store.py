"""Frozen, indexed graph store.

All indices are derived from the entity tables at load time; nothing is
mutated afterwards, so concurrent readers need no coordination.
"""

from __future__ import annotations

import bisect
import json
import zlib
from collections import defaultdict
from datetime import date
from pathlib import Path
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

from . import canonical
from .errors import NotFound, SnapshotError, ValidationFailed
from .model import (
    Action,
    Corpus,
    Item,
    ItemKind,
    ItemType,
    NodeType,
    TextUnit,
    Theme,
    Version,
    check_unique_ids,
    corpus_from_documents,
    validate_corpus,
)
from .text import tokenize

SNAPSHOT_MAGIC = b"LXGSNAP"
SNAPSHOT_FORMAT_VERSION = 1


class GraphStore:
    """Read-only repository over a validated corpus.

    Build one with :meth:`load`; the constructor is internal.
    """

    def __init__(self, corpus: Corpus):
        self.corpus = corpus
        self.items: Mapping[str, Item] = MappingProxyType({i.id: i for i in corpus.items})
        self.themes: Mapping[str, Theme] = MappingProxyType({t.id: t for t in corpus.themes})
        self.versions: Mapping[str, Version] = MappingProxyType({v.id: v for v in corpus.versions})
        self.actions: Mapping[str, Action] = MappingProxyType({a.id: a for a in corpus.actions})
        self.textunits: Mapping[str, TextUnit] = MappingProxyType({t.id: t for t in corpus.textunits})
        self.item_types: Mapping[str, ItemType] = MappingProxyType(self._item_type_table(corpus))
        self.action_types: Tuple[str, ...] = tuple(sorted(set(corpus.action_types)))
        self._build_indices()
        self.digest = canonical.digest(corpus.to_documents())

    # -- construction -------------------------------------------------------

    @classmethod
    def load(cls, corpus: Corpus) -> "GraphStore":
        check_unique_ids(corpus)
        report = validate_corpus(corpus)
        if report:
            raise ValidationFailed(report)
        return cls(corpus)

    @staticmethod
    def _item_type_table(corpus: Corpus) -> Dict[str, ItemType]:
        table = {t.id: t for t in corpus.item_types}
        # Undeclared taxonomy: every used type id becomes a root type.
        for item in corpus.items:
            table.setdefault(item.type_id, ItemType(item.type_id))
        return dict(sorted(table.items()))

    def _build_indices(self) -> None:
        # Per-item interval index: versions sorted by start, plus the start keys.
        by_item: Dict[str, List[Version]] = defaultdict(list)
        for v in self.versions.values():
            by_item[v.item].append(v)
        self._item_versions: Dict[str, Tuple[Version, ...]] = {}
        self._item_starts: Dict[str, Tuple[date, ...]] = {}
        for item_id, vs in by_item.items():
            vs.sort(key=lambda v: (v.start, v.id))
            for a, b in zip(vs, vs[1:]):
                assert a.end is not None and a.end <= b.start, f"overlapping versions {a.id}, {b.id}"
            self._item_versions[item_id] = tuple(vs)
            self._item_starts[item_id] = tuple(v.start for v in vs)

        # Root work of every item.
        self._root_work: Dict[str, str] = {}
        for item_id in self.items:
            chain = []
            cur = item_id
            while cur not in self._root_work and self.items[cur].parent is not None:
                chain.append(cur)
                cur = self.items[cur].parent
            root = self._root_work.get(cur, cur)
            self._root_work[cur] = root
            for c in chain:
                self._root_work[c] = root

        # Version hierarchy: children in document order of their items.
        self._version_children: Dict[str, Tuple[str, ...]] = {}
        kids: Dict[str, List[Version]] = defaultdict(list)
        for v in self.versions.values():
            for p in v.parents:
                kids[p].append(v)
        for parent_id, vs in kids.items():
            parent_item = self.items[self.versions[parent_id].item]
            position = {c: i for i, c in enumerate(parent_item.children)}
            vs.sort(key=lambda v: (position.get(v.item, len(position)), v.start, v.id))
            self._version_children[parent_id] = tuple(v.id for v in vs)

        # Item-type hierarchy: children by id.
        type_kids: Dict[str, Set[str]] = defaultdict(set)
        for t in self.item_types.values():
            for p in t.parents:
                type_kids[p].add(t.id)
        self._type_children = {k: tuple(sorted(v)) for k, v in type_kids.items()}

        # Theme membership (inverse).
        themes_of: Dict[str, Set[str]] = defaultdict(set)
        for t in self.themes.values():
            for m in t.members:
                themes_of[m].add(t.id)
        self._themes_of_item = {k: tuple(sorted(v)) for k, v in themes_of.items()}
        self._root_themes = tuple(sorted(t.id for t in self.themes.values() if not t.parents))

        # Causal indices.
        self._action_by_produced: Dict[str, str] = {}
        self._action_by_terminated: Dict[str, str] = {}
        acts_by_item: Dict[str, Set[str]] = defaultdict(set)
        acts_by_work: Dict[str, List[Action]] = defaultdict(list)
        for a in self.actions.values():
            if a.produces_version is not None:
                self._action_by_produced[a.produces_version] = a.id
                acts_by_item[self.versions[a.produces_version].item].add(a.id)
            if a.terminates_version is not None:
                self._action_by_terminated[a.terminates_version] = a.id
                acts_by_item[self.versions[a.terminates_version].item].add(a.id)
            acts_by_work[self._root_work[self.versions[a.source_version].item]].append(a)
        self._actions_by_item = {
            k: tuple(sorted(v, key=lambda i: (self.actions[i].date, i))) for k, v in acts_by_item.items()
        }
        self._actions_by_work = {
            k: tuple(a.id for a in sorted(v, key=lambda a: (a.date, a.id))) for k, v in acts_by_work.items()
        }

        # Text indices.
        self._text_by_key: Dict[Tuple[str, str, str], str] = {}
        text_by_node: Dict[str, List[str]] = defaultdict(list)
        postings: Dict[str, Set[str]] = defaultdict(set)
        self._tokens: Dict[str, Tuple[str, ...]] = {}
        for tu in sorted(self.textunits.values(), key=lambda t: t.id):
            self._text_by_key[(tu.source_node_id, tu.language, tu.aspect)] = tu.id
            text_by_node[tu.source_node_id].append(tu.id)
            toks = tuple(tokenize(tu.content))
            self._tokens[tu.id] = toks
            for tok in set(toks):
                postings[tok].add(tu.id)
        self._text_by_node = {k: tuple(v) for k, v in text_by_node.items()}
        self._postings = {k: frozenset(v) for k, v in postings.items()}
        self._languages = tuple(sorted({t.language for t in self.textunits.values()}))

    # -- snapshots ----------------------------------------------------------

    def save_snapshot(self, path: Union[str, Path]) -> None:
        """Write ``MAGIC | u16 format version | zlib(canonical corpus JSON)``."""
        body = zlib.compress(canonical.canonical_bytes(self.corpus.to_documents()), 9)
        Path(path).write_bytes(SNAPSHOT_MAGIC + SNAPSHOT_FORMAT_VERSION.to_bytes(2, "big") + body)

    @classmethod
    def load_snapshot(cls, path: Union[str, Path]) -> "GraphStore":
        raw = Path(path).read_bytes()
        if not raw.startswith(SNAPSHOT_MAGIC):
            raise SnapshotError(f"{path}: not a store snapshot")
        version = int.from_bytes(raw[len(SNAPSHOT_MAGIC) : len(SNAPSHOT_MAGIC) + 2], "big")
        if version != SNAPSHOT_FORMAT_VERSION:
            raise SnapshotError(f"{path}: unsupported snapshot format {version}")
        try:
            docs = json.loads(zlib.decompress(raw[len(SNAPSHOT_MAGIC) + 2 :]).decode("utf-8"))
        except (zlib.error, UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise SnapshotError(f"{path}: corrupt snapshot ({exc})") from None
        return cls.load(corpus_from_documents(docs))

    # -- lookups --------------------------------------------------------------

    def counts(self) -> Dict[str, int]:
        return self.corpus.counts()

    def item(self, item_id: str) -> Item:
        try:
            return self.items[item_id]
        except (KeyError, TypeError):
            raise NotFound("Item", item_id) from None

    def theme(self, theme_id: str) -> Theme:
        try:
            return self.themes[theme_id]
        except (KeyError, TypeError):
            raise NotFound("Theme", theme_id) from None

    def version(self, version_id: str) -> Version:
        try:
            return self.versions[version_id]
        except (KeyError, TypeError):
            raise NotFound("Version", version_id) from None

    def action(self, action_id: str) -> Action:
        try:
            return self.actions[action_id]
        except (KeyError, TypeError):
            raise NotFound("Action", action_id) from None

    def item_type(self, type_id: str) -> ItemType:
        try:
            return self.item_types[type_id]
        except (KeyError, TypeError):
            raise NotFound("ItemType", type_id) from None

    def versions_of(self, item_id: str) -> Tuple[Version, ...]:
        self.item(item_id)
        return self._item_versions.get(item_id, ())

    def lookup_valid_version(self, item_id: str, t: date) -> Optional[Version]:
        """Binary search on start; the candidate is the last version starting at or before t."""
        self.item(item_id)
        starts = self._item_starts.get(item_id)
        if not starts:
            return None
        idx = bisect.bisect_right(starts, t) - 1
        if idx < 0:
            return None
        v = self._item_versions[item_id][idx]
        return v if v.end is None or t < v.end else None

    def root_work(self, item_id: str) -> str:
        self.item(item_id)
        return self._root_work[item_id]

    def children_of(self, kind: str, node_id: str) -> Sequence[str]:
        if kind == "Item":
            return self.items[node_id].children
        if kind == "Theme":
            return tuple(sorted(self.themes[node_id].children))
        if kind == "Version":
            return self._version_children.get(node_id, ())
        if kind == "ItemType":
            return self._type_children.get(node_id, ())
        raise ValueError(kind)

    def version_children(self, version_id: str) -> Tuple[str, ...]:
        return self._version_children.get(version_id, ())

    def themes_of_item(self, item_id: str) -> Tuple[str, ...]:
        return self._themes_of_item.get(item_id, ())

    def root_theme_ids(self) -> Tuple[str, ...]:
        return self._root_themes

    def action_producing(self, version_id: str) -> Optional[Action]:
        aid = self._action_by_produced.get(version_id)
        return self.actions[aid] if aid else None

    def action_terminating(self, version_id: str) -> Optional[Action]:
        aid = self._action_by_terminated.get(version_id)
        return self.actions[aid] if aid else None

    def actions_for_item(self, item_id: str) -> Tuple[str, ...]:
        return self._actions_by_item.get(item_id, ())

    def actions_for_work(self, work_id: str) -> Tuple[str, ...]:
        return self._actions_by_work.get(work_id, ())

    def text_unit(self, node_id: str, language: str, aspect: str) -> Optional[TextUnit]:
        tid = self._text_by_key.get((node_id, language, aspect))
        return self.textunits[tid] if tid else None

    def texts_of(self, node_id: str) -> Tuple[TextUnit, ...]:
        return tuple(self.textunits[t] for t in self._text_by_node.get(node_id, ()))

    def tokens_of(self, textunit_id: str) -> Tuple[str, ...]:
        return self._tokens[textunit_id]

    def postings(self, token: str) -> frozenset:
        return self._postings.get(token, frozenset())

    def languages(self) -> Tuple[str, ...]:
        return self._languages


def load(corpus: Corpus) -> GraphStore:
    return GraphStore.load(corpus)


def load_snapshot(path: Union[str, Path]) -> GraphStore:
    return GraphStore.load_snapshot(path)

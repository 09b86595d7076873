"""Probabilistic entry points: reference resolution and hybrid search.

Scores are ordinal relevance values in [0, 1], not calibrated probabilities.
Ranking is deterministic: (score desc, id asc), scores rounded to 6 places.
"""

from __future__ import annotations

import operator
import threading
from dataclasses import dataclass
from datetime import date
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .errors import ConflictingScope, InvalidArgument, UnknownId
from .model import DateLike, Item, ItemKind, TextUnit, Version, as_date
from .primitives import CANONICAL
from .store import GraphStore
from .text import SemanticScorer, label_similarity, lexical_score, score_round

DEFAULT_TOP_K = 3
OUT_OF_CONTEXT_FACTOR = 0.8
DESCRIPTION_FACTOR = 0.5


# ---------------------------------------------------------------------------
# Result types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RankedCandidate:
    id: str
    confidence: float

    def to_dict(self):
        return {"id": self.id, "confidence": self.confidence}


@dataclass(frozen=True)
class ScoredTextUnit:
    text_unit: TextUnit
    score: float

    def to_dict(self):
        return {"text_unit": self.text_unit.to_dict(), "score": self.score}


@dataclass(frozen=True)
class ScoredItem:
    item: Item
    score: float

    def to_dict(self):
        return {"item": self.item.to_dict(), "score": self.score}


# ---------------------------------------------------------------------------
# Metadata predicates
# ---------------------------------------------------------------------------

_RANGE_OPS = {"lt": operator.lt, "le": operator.le, "gt": operator.gt, "ge": operator.ge}
_OP_ALIASES = {"<": "lt", "<=": "le", ">": "gt", ">=": "ge", "==": "eq", "=": "eq"}


def _comparable(a: Any, b: Any) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool)
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return True
    return type(a) is type(b)


@dataclass(frozen=True)
class Predicate:
    """Conjunction of clauses: ("eq", v) | ("in", (v, ...)) | (range-op, v)."""

    clauses: Tuple[Tuple[str, Any], ...]

    @classmethod
    def parse(cls, spec: Any) -> "Predicate":
        if not isinstance(spec, Mapping):
            if isinstance(spec, (list, tuple)):
                return cls((("in", tuple(spec)),))
            return cls((("eq", spec),))
        clauses = []
        for raw_op, value in sorted(spec.items()):
            op = _OP_ALIASES.get(raw_op, raw_op)
            if op == "eq":
                clauses.append(("eq", value))
            elif op == "in":
                if not isinstance(value, (list, tuple)):
                    raise InvalidArgument(f"'in' predicate needs a list, got {value!r}")
                clauses.append(("in", tuple(value)))
            elif op in _RANGE_OPS:
                if isinstance(value, (list, dict, tuple)) or value is None:
                    raise InvalidArgument(f"range predicate needs a scalar, got {value!r}")
                clauses.append((op, value))
            else:
                raise InvalidArgument(f"unknown predicate operator {raw_op!r}")
        if not clauses:
            raise InvalidArgument("empty predicate")
        return cls(tuple(clauses))

    def test(self, metadata: Mapping[str, Any], key: str) -> bool:
        if key not in metadata:
            return False
        actual = metadata[key]
        for op, expected in self.clauses:
            if op == "eq":
                if not _comparable(actual, expected) or actual != expected:
                    return False
            elif op == "in":
                if not any(_comparable(actual, e) and actual == e for e in expected):
                    return False
            else:
                if not _comparable(actual, expected) or not _RANGE_OPS[op](actual, expected):
                    return False
        return True


@dataclass(frozen=True)
class MetadataFilter:
    item_metadata_filter: Tuple[Tuple[str, Predicate], ...] = ()
    version_metadata_filter: Tuple[Tuple[str, Predicate], ...] = ()

    @classmethod
    def parse(cls, spec: Any) -> "MetadataFilter":
        if spec is None:
            return cls()
        if isinstance(spec, MetadataFilter):
            return spec
        if not isinstance(spec, Mapping):
            raise InvalidArgument("metadata_filter must be an object")
        extra = set(spec) - {"item_metadata_filter", "version_metadata_filter"}
        if extra:
            raise InvalidArgument(f"metadata_filter has unknown clause(s) {sorted(extra)}")
        return cls(
            _parse_predicates(spec.get("item_metadata_filter")),
            _parse_predicates(spec.get("version_metadata_filter")),
        )

    def accepts_item(self, item: Item) -> bool:
        return all(p.test(item.metadata, k) for k, p in self.item_metadata_filter)

    def accepts_version(self, version: Version) -> bool:
        return all(p.test(version.metadata, k) for k, p in self.version_metadata_filter)

    def __bool__(self) -> bool:
        return bool(self.item_metadata_filter or self.version_metadata_filter)


def _parse_predicates(spec: Any) -> Tuple[Tuple[str, Predicate], ...]:
    if spec is None:
        return ()
    if not isinstance(spec, Mapping):
        raise InvalidArgument("metadata filter clause must be an object")
    return tuple((k, Predicate.parse(v)) for k, v in sorted(spec.items()))


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------


def _ranked(pairs: Iterable[Tuple[str, float]], top_k: Optional[int]) -> List[Tuple[str, float]]:
    ordered = sorted(((i, s) for i, s in pairs if s > 0), key=lambda p: (-p[1], p[0]))
    return ordered if top_k is None else ordered[:top_k]


def _check_top_k(top_k: Optional[int]) -> None:
    if top_k is not None and (not isinstance(top_k, int) or isinstance(top_k, bool) or top_k < 0):
        raise InvalidArgument(f"top_k must be a non-negative integer, got {top_k!r}")


class DiscoveryPrimitives:
    store: GraphStore
    scorer: SemanticScorer
    weights: Tuple[float, float]  # (lexical, semantic)
    _scorer_lock: threading.Lock

    def now(self) -> date:  # provided by Engine
        raise NotImplementedError

    def _semantic(self, query: str, content: str) -> float:
        if getattr(self.scorer, "serialized", False):
            with self._scorer_lock:
                return self.scorer.score(query, content)
        return self.scorer.score(query, content)

    # -- resolvers ------------------------------------------------------------

    def _item_label_paths(self, item: Item) -> List[str]:
        labels = [item.label]
        cur = item.parent
        while cur is not None:
            parent = self.store.items[cur]
            labels.append(parent.label)
            cur = parent.parent
        # own label, and own label qualified by every ancestor up to the Work
        return [item.label, " ".join(labels)]

    def resolve_item_reference(
        self, reference_text: str, context_id: Optional[str] = None, top_k: Optional[int] = None
    ) -> List[RankedCandidate]:
        if not isinstance(reference_text, str) or not reference_text.strip():
            raise InvalidArgument("reference_text must be a non-empty string")
        _check_top_k(top_k)
        context_root = self.store.root_work(context_id) if context_id is not None else None
        scored = []
        for item in self.store.items.values():
            s = max(label_similarity(reference_text, text) for text in self._item_label_paths(item))
            if context_root is not None and self.store.root_work(item.id) != context_root:
                s = score_round(s * OUT_OF_CONTEXT_FACTOR)
            scored.append((item.id, s))
        k = DEFAULT_TOP_K if top_k is None else top_k
        return [RankedCandidate(i, s) for i, s in _ranked(scored, k)]

    def resolve_theme_reference(self, reference_text: str, top_k: Optional[int] = None) -> List[RankedCandidate]:
        if not isinstance(reference_text, str) or not reference_text.strip():
            raise InvalidArgument("reference_text must be a non-empty string")
        _check_top_k(top_k)
        scored = []
        for theme in self.store.themes.values():
            s = label_similarity(reference_text, theme.label)
            for tu in self.store.texts_of(theme.id):
                if tu.aspect == "description":
                    s = max(s, score_round(DESCRIPTION_FACTOR * lexical_score(reference_text, tu.content)))
            scored.append((theme.id, s))
        k = DEFAULT_TOP_K if top_k is None else top_k
        return [RankedCandidate(i, s) for i, s in _ranked(scored, k)]

    # -- hybrid search ---------------------------------------------------------

    def _fused(
        self,
        tu: TextUnit,
        lexical_query: Optional[str],
        semantic_query: Optional[str],
        weights: Tuple[float, float],
    ) -> float:
        """Weighted mean over the queries present; a lexical query must hit."""
        if lexical_query is None and semantic_query is None:
            return 1.0
        total = 0.0
        norm = 0.0
        if lexical_query is not None:
            lex = lexical_score(lexical_query, tu.content, self.store.tokens_of(tu.id))
            if lex <= 0:
                return 0.0
            total += weights[0] * lex
            norm += weights[0]
        if semantic_query is not None:
            total += weights[1] * self._semantic(semantic_query, tu.content)
            norm += weights[1]
        return score_round(total / norm) if norm > 0 else 0.0

    def _weights(self, weights: Optional[Mapping[str, float]]) -> Tuple[float, float]:
        if weights is None:
            return self.weights
        try:
            w = (float(weights.get("lexical", self.weights[0])), float(weights.get("semantic", self.weights[1])))
        except (TypeError, ValueError, AttributeError):
            raise InvalidArgument(f"bad fusion weights {weights!r}") from None
        if min(w) < 0 or sum(w) <= 0:
            raise InvalidArgument(f"fusion weights must be non-negative and not all zero: {weights!r}")
        return w

    def _check_ids(self, label: str, ids: Optional[Sequence[str]], table: Mapping[str, Any]) -> None:
        if ids is None:
            return
        if not isinstance(ids, (list, tuple)):
            raise InvalidArgument(f"{label} must be a list")
        missing = [i for i in ids if i not in table]
        if missing:
            raise UnknownId(f"unknown id(s) in {label}: {missing}", {"parameter": label, "ids": missing})

    def _scope_items(self, item_ids: Optional[Sequence[str]], theme_ids: Optional[Sequence[str]]) -> Optional[Set[str]]:
        if item_ids is None and theme_ids is None:
            return None
        scope: Set[str] = set(item_ids or ())
        for t in theme_ids or ():
            scope.update(self.store.themes[t].members)
        return scope

    def search_text_units(
        self,
        version_ids: Optional[Sequence[str]] = None,
        item_ids: Optional[Sequence[str]] = None,
        theme_ids: Optional[Sequence[str]] = None,
        metadata_filter: Any = None,
        timestamp: Optional[DateLike] = None,
        semantic_query: Optional[str] = None,
        lexical_query: Optional[str] = None,
        language: Optional[str] = None,
        aspects: Optional[Sequence[str]] = None,
        top_k: Optional[int] = None,
        weights: Optional[Mapping[str, float]] = None,
    ) -> List[ScoredTextUnit]:
        if version_ids is not None and (item_ids is not None or theme_ids is not None or timestamp is not None):
            raise ConflictingScope(
                "version_ids is mutually exclusive with item_ids/theme_ids/timestamp",
                {"version_ids": list(version_ids)},
            )
        mfilter = MetadataFilter.parse(metadata_filter)
        if all(
            x is None for x in (version_ids, item_ids, theme_ids, metadata_filter, timestamp, semantic_query, lexical_query)
        ):
            raise InvalidArgument("searchTextUnits needs a query or a scope parameter")
        _check_top_k(top_k)
        self._check_ids("version_ids", version_ids, self.store.versions)
        self._check_ids("item_ids", item_ids, self.store.items)
        self._check_ids("theme_ids", theme_ids, self.store.themes)
        w = self._weights(weights)
        wanted_aspects = set(aspects) if aspects is not None else {CANONICAL}

        if version_ids is not None:
            versions = [self.store.versions[v] for v in dict.fromkeys(version_ids)]
        else:
            t = as_date(timestamp) if timestamp is not None else self.now()
            scope = self._scope_items(item_ids, theme_ids)
            candidates = sorted(scope) if scope is not None else sorted(self.store.items)
            versions = []
            for item_id in candidates:
                v = self.store.lookup_valid_version(item_id, t)
                if v is not None:
                    versions.append(v)
        if mfilter:
            versions = [
                v for v in versions if mfilter.accepts_version(v) and mfilter.accepts_item(self.store.items[v.item])
            ]

        if lexical_query is not None and not lexical_query.strip():
            lexical_query = None
        if semantic_query is not None and not semantic_query.strip():
            semantic_query = None
        hits = []
        for v in versions:
            for tu in self.store.texts_of(v.id):
                if tu.aspect not in wanted_aspects or (language is not None and tu.language != language):
                    continue
                s = self._fused(tu, lexical_query, semantic_query, w)
                if s > 0:
                    hits.append((tu, s))
        hits.sort(key=lambda h: (-h[1], h[0].id))
        if top_k is not None:
            hits = hits[:top_k]
        return [ScoredTextUnit(tu, s) for tu, s in hits]

    def search_items(
        self,
        item_ids: Optional[Sequence[str]] = None,
        theme_ids: Optional[Sequence[str]] = None,
        item_metadata_filter: Optional[Mapping[str, Any]] = None,
        semantic_query: Optional[str] = None,
        lexical_query: Optional[str] = None,
        top_k: Optional[int] = None,
        weights: Optional[Mapping[str, float]] = None,
    ) -> List[ScoredItem]:
        if all(x is None for x in (item_ids, theme_ids, item_metadata_filter, semantic_query, lexical_query)):
            raise InvalidArgument("searchItems needs at least one criterion")
        _check_top_k(top_k)
        self._check_ids("item_ids", item_ids, self.store.items)
        self._check_ids("theme_ids", theme_ids, self.store.themes)
        mfilter = MetadataFilter.parse({"item_metadata_filter": item_metadata_filter})
        w = self._weights(weights)
        if lexical_query is not None and not lexical_query.strip():
            lexical_query = None
        if semantic_query is not None and not semantic_query.strip():
            semantic_query = None
        scope = self._scope_items(item_ids, theme_ids)
        candidates = sorted(scope) if scope is not None else sorted(self.store.items)
        hits = []
        for item_id in candidates:
            item = self.store.items[item_id]
            if not mfilter.accepts_item(item):
                continue
            if lexical_query is None and semantic_query is None:
                hits.append((item, 1.0))
                continue
            texts = list(self.store.texts_of(item_id))
            for v in self.store.versions_of(item_id):
                texts.extend(self.store.texts_of(v.id))
            best = max((self._fused(tu, lexical_query, semantic_query, w) for tu in texts), default=0.0)
            if best > 0:
                hits.append((item, best))
        hits.sort(key=lambda h: (-h[1], h[0].id))
        if top_k is not None:
            hits = hits[:top_k]
        return [ScoredItem(item, s) for item, s in hits]

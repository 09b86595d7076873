"""Tokenization, lexical and semantic scorers, and the token-level LCS diff."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

_WORD = re.compile(r"\w+", re.UNICODE)


def tokenize(text: str) -> List[str]:
    """Lowercase Unicode word tokens; no stemming, diacritics kept."""
    return _WORD.findall(text.lower())


def diff_tokens(text: str) -> List[str]:
    """Whitespace tokens with punctuation attached (the diff granularity)."""
    return text.split()


def score_round(x: float) -> float:
    return round(min(1.0, max(0.0, x)), 6)


# ---------------------------------------------------------------------------
# Lexical scoring
# ---------------------------------------------------------------------------

PHRASE_WEIGHT = 0.2


def _longest_query_run(query: Sequence[str], doc: Sequence[str]) -> int:
    """Longest run of consecutive query tokens appearing contiguously in doc."""
    best = 0
    if not query or not doc:
        return 0
    prev = [0] * (len(doc) + 1)
    for q in query:
        cur = [0] * (len(doc) + 1)
        for j, d in enumerate(doc, 1):
            if q == d:
                cur[j] = prev[j - 1] + 1
                if cur[j] > best:
                    best = cur[j]
        prev = cur
    return best


def lexical_score(query: str, content: str, doc_tokens: Optional[Sequence[str]] = None) -> float:
    """Token-overlap score in [0, 1] with a bonus for contiguous phrase hits.

    ``coverage`` is the fraction of distinct query tokens present in the
    document; the phrase term is the longest in-order contiguous run divided
    by the query length. Zero iff no query token occurs.
    """
    q = tokenize(query)
    if not q:
        return 0.0
    doc = list(doc_tokens) if doc_tokens is not None else tokenize(content)
    vocab = set(doc)
    distinct = list(dict.fromkeys(q))
    hits = sum(1 for t in distinct if t in vocab)
    if hits == 0:
        return 0.0
    coverage = hits / len(distinct)
    phrase = _longest_query_run(q, doc) / len(q)
    return score_round((1 - PHRASE_WEIGHT) * coverage + PHRASE_WEIGHT * phrase)


def label_similarity(query: str, label: str) -> float:
    """Token F1 between a reference and a label; exact token match is 1.0.

    Partial matches are capped below 1 so an exact label always outranks them.
    """
    q = tokenize(query)
    c = tokenize(label)
    if not q or not c:
        return 0.0
    if q == c:
        return 1.0
    common = len(set(q) & set(c))
    if common == 0:
        return 0.0
    precision = common / len(set(c))
    recall = common / len(set(q))
    f1 = 2 * precision * recall / (precision + recall)
    return score_round(min(f1, 0.99))


# ---------------------------------------------------------------------------
# Semantic scorers (pluggable)
# ---------------------------------------------------------------------------


class SemanticScorer:
    """Interface: a pure map (query, content) -> score in [0, 1].

    Implementations that are not safe for concurrent calls set
    ``serialized = True`` and the engine serializes invocations.
    """

    name = "abstract"
    serialized = False

    def score(self, query: str, content: str) -> float:  # pragma: no cover - interface
        raise NotImplementedError


class NgramCosineScorer(SemanticScorer):
    """Character n-gram cosine similarity over lowercased, space-padded text."""

    name = "ngram-cosine"

    def __init__(self, n: int = 3):
        self.n = n
        self._cache: Dict[str, Tuple[Counter, float]] = {}

    def _profile(self, text: str) -> Tuple[Counter, float]:
        hit = self._cache.get(text)
        if hit is not None:
            return hit
        padded = " " + " ".join(tokenize(text)) + " "
        grams = Counter(padded[i : i + self.n] for i in range(max(0, len(padded) - self.n + 1)))
        norm = math.sqrt(sum(v * v for v in grams.values()))
        if len(self._cache) < 50_000:
            self._cache[text] = (grams, norm)
        return grams, norm

    def score(self, query: str, content: str) -> float:
        qg, qn = self._profile(query)
        cg, cn = self._profile(content)
        if not qn or not cn:
            return 0.0
        if len(qg) > len(cg):
            qg, cg = cg, qg
        dot = sum(v * cg.get(k, 0) for k, v in qg.items())
        return score_round(dot / (qn * cn))


class TokenOverlapScorer(SemanticScorer):
    """Falls back to the lexical measure; useful for tests and as a baseline."""

    name = "token-overlap"

    def score(self, query: str, content: str) -> float:
        return lexical_score(query, content)


SCORERS: Dict[str, Callable[[], SemanticScorer]] = {
    NgramCosineScorer.name: NgramCosineScorer,
    TokenOverlapScorer.name: TokenOverlapScorer,
}


def register_scorer(name: str, factory: Callable[[], SemanticScorer]) -> None:
    SCORERS[name] = factory


def make_scorer(name: str) -> SemanticScorer:
    try:
        return SCORERS[name]()
    except KeyError:
        from .errors import InvalidArgument

        raise InvalidArgument(f"unknown scorer {name!r}; known: {sorted(SCORERS)}") from None


# ---------------------------------------------------------------------------
# Token diff
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TextEdit:
    op: str  # insert | delete | replace
    position: int  # token index in A where the edit applies
    tokens_a: Tuple[str, ...]
    tokens_b: Tuple[str, ...]

    def to_dict(self):
        return {
            "op": self.op,
            "position": self.position,
            "tokens_a": list(self.tokens_a),
            "tokens_b": list(self.tokens_b),
        }


def lcs_matches(a: Sequence[str], b: Sequence[str]) -> List[Tuple[int, int]]:
    """Index pairs of one longest common subsequence of a and b.

    Common prefix/suffix are peeled off before the quadratic table; ties in
    the backtrack prefer advancing in ``a`` (deletions before insertions).
    """
    n, m = len(a), len(b)
    pre = 0
    while pre < n and pre < m and a[pre] == b[pre]:
        pre += 1
    suf = 0
    while suf < n - pre and suf < m - pre and a[n - 1 - suf] == b[m - 1 - suf]:
        suf += 1
    core_a = a[pre : n - suf]
    core_b = b[pre : m - suf]
    rows, cols = len(core_a), len(core_b)
    # table[i][j] = LCS length of core_a[i:], core_b[j:]
    table = [[0] * (cols + 1) for _ in range(rows + 1)]
    for i in range(rows - 1, -1, -1):
        row, below = table[i], table[i + 1]
        ai = core_a[i]
        for j in range(cols - 1, -1, -1):
            if ai == core_b[j]:
                row[j] = below[j + 1] + 1
            else:
                row[j] = below[j] if below[j] >= row[j + 1] else row[j + 1]
    pairs = [(k, k) for k in range(pre)]
    i = j = 0
    while i < rows and j < cols:
        if core_a[i] == core_b[j]:
            pairs.append((pre + i, pre + j))
            i += 1
            j += 1
        elif table[i + 1][j] >= table[i][j + 1]:
            i += 1
        else:
            j += 1
    pairs.extend((n - suf + k, m - suf + k) for k in range(suf))
    return pairs


def token_diff(a: Sequence[str], b: Sequence[str]) -> List[TextEdit]:
    """Minimal edit script between token lists, grouped into hunks."""
    edits: List[TextEdit] = []
    ia = ib = 0
    for ma, mb in lcs_matches(a, b) + [(len(a), len(b))]:
        if ma > ia or mb > ib:
            ta, tb = tuple(a[ia:ma]), tuple(b[ib:mb])
            op = "replace" if ta and tb else ("delete" if ta else "insert")
            edits.append(TextEdit(op, ia, ta, tb))
        ia, ib = ma + 1, mb + 1
    return edits


def apply_edits(a: Sequence[str], edits: Sequence[TextEdit]) -> List[str]:
    """Apply an edit script (positions refer to ``a``) and return the result."""
    out: List[str] = []
    cursor = 0
    for e in sorted(edits, key=lambda e: (e.position, e.op != "insert")):
        if e.position < cursor:
            raise ValueError("overlapping edits")
        out.extend(a[cursor : e.position])
        if list(a[e.position : e.position + len(e.tokens_a)]) != list(e.tokens_a):
            raise ValueError(f"edit at {e.position} does not match source tokens")
        out.extend(e.tokens_b)
        cursor = e.position + len(e.tokens_a)
    out.extend(a[cursor:])
    return out

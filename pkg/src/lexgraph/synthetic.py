"""Seeded generator of valid random corpora for property and acceptance tests."""

from __future__ import annotations

import random
from datetime import date, timedelta
from typing import Dict, List, Optional, Tuple

from .model import (
    Action,
    Corpus,
    Item,
    ItemKind,
    ItemType,
    NodeType,
    TextUnit,
    Theme,
    TimeInterval,
    Version,
    _freeze_metadata,
)

BASE_DATE = date(1988, 10, 5)
WORDS = (
    "direito dever lei norma prazo estado união município cidadão tributo saúde educação trabalho "
    "lazer segurança previdência proteção dados privacidade rede sistema crime pena multa contrato "
    "servidor público recurso tribunal processo juiz prova documento registro acesso informação"
).split()
COMPONENT_LABELS = ("Article", "Paragraph", "Item", "Subitem")


def _component_type(depth: int) -> str:
    return ("type:article", "type:paragraph", "type:item", "type:subitem")[min(depth - 1, 3)]


def generate_corpus(
    seed: int,
    n_items: int = 120,
    n_themes: int = 20,
    n_actions: Optional[int] = None,
    min_versions: int = 1,
    max_extra_versions: int = 3,
    n_works: Optional[int] = None,
    second_language_rate: float = 0.3,
    digital_security: bool = True,
) -> Corpus:
    """Build a corpus that passes ``validate_corpus``.

    With ``n_actions`` set the corpus has exactly that many actions (one
    Creation per item plus the rest spread at random); otherwise every item
    gets between ``min_versions`` and ``min_versions + max_extra_versions``
    versions.
    """
    rng = random.Random(seed)
    n_works = n_works or max(2, n_items // 25)
    if n_items < n_works:
        raise ValueError("n_items must be at least n_works")

    # -- item forest -----------------------------------------------------------
    parent: Dict[str, Optional[str]] = {}
    children: Dict[str, List[str]] = {}
    depth: Dict[str, int] = {}
    order: List[str] = []
    for w in range(n_works):
        wid = f"w{w:03d}"
        parent[wid] = None
        children[wid] = []
        depth[wid] = 0
        order.append(wid)
    for c in range(n_items - n_works):
        cid = f"c{c:04d}"
        candidates = [i for i in order if depth[i] < 4]
        weights = [1.0 / (1 + depth[i]) ** 2 for i in candidates]
        p = rng.choices(candidates, weights)[0]
        parent[cid] = p
        children[cid] = []
        children[p].append(cid)
        depth[cid] = depth[p] + 1
        order.append(cid)

    items = []
    for iid in order:
        meta = {"jurisdiction": rng.choice(["federal", "state"]), "rank": rng.randint(1, 9)}
        if parent[iid] is None:
            n = int(iid[1:])
            label = "Constitution of 1988" if n == 0 else f"Law No. {n}"
            items.append(
                Item(iid, ItemKind.WORK, "type:work", label, f"urn:test:{iid}", None, tuple(children[iid]),
                     _freeze_metadata(meta))
            )
        else:
            pos = children[parent[iid]].index(iid) + 1
            label = f"{COMPONENT_LABELS[min(depth[iid] - 1, 3)]} {pos}"
            items.append(
                Item(iid, ItemKind.COMPONENT, _component_type(depth[iid]), label, None, parent[iid],
                     tuple(children[iid]), _freeze_metadata(meta))
            )
    item_types = (
        ItemType("type:work", "Work"),
        ItemType("type:article", "Article"),
        ItemType("type:paragraph", "Paragraph", ("type:article",)),
        ItemType("type:item", "Item", ("type:paragraph",)),
        ItemType("type:subitem", "Subitem", ("type:item",)),
    )

    # -- event budgets -------------------------------------------------------------
    if n_actions is not None:
        if n_actions < n_items:
            raise ValueError("n_actions must be at least n_items (one Creation each)")
        budget = {iid: 1 for iid in order}
        for _ in range(n_actions - n_items):
            budget[rng.choice(order)] += 1
    else:
        budget = {iid: min_versions + rng.randint(0, max_extra_versions) for iid in order}

    # -- timelines ---------------------------------------------------------------
    # events: (kind, date, terminated_version_index, produced_version_index)
    versions_by_item: Dict[str, List[Tuple[date, Optional[date]]]] = {}
    events_by_item: Dict[str, List[Tuple[str, date, Optional[int], Optional[int]]]] = {}
    for iid in order:
        start = BASE_DATE + timedelta(days=rng.randint(0, 2500) if parent[iid] is None else rng.randint(0, 4000))
        spans: List[List] = []
        events = []
        is_open = False
        d = start
        for k in range(budget[iid]):
            left = budget[iid] - k
            if not is_open:
                spans.append([d, None])
                events.append(("Creation", d, None, len(spans) - 1))
                is_open = True
            else:
                need = max(0, min_versions - len(spans))
                can_revoke = left - 1 >= need + (1 if need else 0) and left > 1 or (left == 1 and need == 0)
                if can_revoke and rng.random() < 0.2:
                    spans[-1][1] = d
                    events.append(("Revocation", d, len(spans) - 1, None))
                    is_open = False
                else:
                    spans[-1][1] = d
                    spans.append([d, None])
                    events.append(("Amendment", d, len(spans) - 2, len(spans) - 1))
            d = d + timedelta(days=rng.randint(30, 1500))
        versions_by_item[iid] = [tuple(s) for s in spans]
        events_by_item[iid] = events

    def vid(iid: str, k: int) -> str:
        return f"{iid}_v{k}"

    # -- versions with snapshot parents ---------------------------------------------
    def valid_index(iid: str, t: date) -> Optional[int]:
        for k, (s, e) in enumerate(versions_by_item[iid]):
            if s <= t and (e is None or t < e):
                return k
        return None

    versions = []
    for iid in order:
        for k, (s, e) in enumerate(versions_by_item[iid]):
            parents: Tuple[str, ...] = ()
            p = parent[iid]
            if p is not None:
                pk = valid_index(p, s)
                if pk is not None:
                    parents = (vid(p, pk),)
            versions.append(
                Version(vid(iid, k), iid, TimeInterval(s, e), None, parents,
                        _freeze_metadata({"publication_date": s.isoformat(), "seq": k}))
            )
    all_version_ids = [v.id for v in versions]

    # -- actions -------------------------------------------------------------------
    actions = []
    n = 0
    for iid in order:
        for kind, d, term, prod in events_by_item[iid]:
            if kind == "Creation" and parent[iid] is None and term is None:
                source = vid(iid, prod)
            else:
                source = rng.choice(all_version_ids)
            actions.append(
                Action(
                    f"a{n:05d}", kind, d, source,
                    vid(iid, term) if term is not None else None,
                    vid(iid, prod) if prod is not None else None,
                    _freeze_metadata({}),
                )
            )
            n += 1

    # -- texts ---------------------------------------------------------------------
    textunits = []
    fresh = [0]

    def word() -> str:
        if rng.random() < 0.08:
            fresh[0] += 1
            return f"novo{seed}x{fresh[0]}"
        w = rng.choice(WORDS)
        return w + "," if rng.random() < 0.15 else w

    for iid in order:
        langs = ["pt-BR"] + (["en"] if rng.random() < second_language_rate else [])
        base = {lang: [word() for _ in range(rng.randint(8, 30))] for lang in langs}
        for k in range(len(versions_by_item[iid])):
            for lang in langs:
                toks = list(base[lang])
                if k > 0:
                    for _ in range(rng.randint(1, 3)):
                        r = rng.random()
                        pos = rng.randrange(len(toks) + 1)
                        if r < 0.4 or not toks:
                            toks.insert(pos, word())
                        elif r < 0.7:
                            del toks[min(pos, len(toks) - 1)]
                        else:
                            toks[min(pos, len(toks) - 1)] = word()
                    if not toks:
                        toks = [word()]
                base[lang] = toks
                textunits.append(
                    TextUnit(f"tu_{vid(iid, k)}_{lang}", NodeType.VERSION, vid(iid, k), lang, "canonical", " ".join(toks))
                )
        if rng.random() < 0.2:
            textunits.append(
                TextUnit(f"tu_{iid}_meta", NodeType.ITEM, iid, "pt-BR", "textual_metadata",
                         " ".join(rng.choice(WORDS) for _ in range(6)))
            )

    # -- themes --------------------------------------------------------------------
    theme_ids = [f"t{j:03d}" for j in range(n_themes)]
    t_parents: Dict[str, List[str]] = {t: [] for t in theme_ids}
    for j in range(1, n_themes):
        if rng.random() < 0.75:
            pool = theme_ids[:j]
            chosen = {rng.choice(pool[: max(1, min(len(pool), 4))]) if rng.random() < 0.4 else rng.choice(pool)}
            if rng.random() < 0.25:
                chosen.add(rng.choice(pool))
            t_parents[theme_ids[j]] = sorted(chosen)
    t_children: Dict[str, List[str]] = {t: [] for t in theme_ids}
    for t, ps in t_parents.items():
        for p in ps:
            t_children[p].append(t)
    themes = []
    for j, t in enumerate(theme_ids):
        label = "Digital Security" if (digital_security and j == 0) else f"Topic {j} {rng.choice(WORDS).title()}"
        members = sorted(rng.sample(order, rng.randint(0, min(5, len(order)))))
        themes.append(
            Theme(t, label, None, tuple(t_parents[t]), tuple(sorted(t_children[t])), tuple(members), _freeze_metadata({}))
        )
        if rng.random() < 0.5:
            textunits.append(
                TextUnit(f"tu_{t}_desc", NodeType.THEME, t, "pt-BR", "description",
                         " ".join(rng.choice(WORDS) for _ in range(10)))
            )

    return Corpus(
        items=tuple(items),
        themes=tuple(themes),
        versions=tuple(versions),
        actions=tuple(actions),
        textunits=tuple(textunits),
        action_types=("Amendment", "Creation", "Repeal", "Revocation"),
        item_types=item_types,
    )

import copy
import random
from datetime import date

import pytest

from lexgraph import Engine, load
from lexgraph.errors import (
    DifferentItems,
    InvalidArgument,
    InvalidInterval,
    LexGraphError,
    MissingProvenance,
    NotAWork,
    NotFound,
    NoTextUnit,
    NoValidVersion,
    NoVersions,
)
from lexgraph.model import Corpus, corpus_from_documents
from lexgraph.registry import invoke
from lexgraph.synthetic import generate_corpus

from oracles import actions_by_source, item_history, versions_overlapping


def ids(records):
    return [r["id"] for r in records]


def call(engine, name, **args):
    return invoke(engine, name, args)


class TestEntities:
    def test_item(self, engine):
        assert call(engine, "getEntity", kind="Item", id="art6_cpt")["parent"] == "art6"

    def test_action(self, engine):
        a = call(engine, "getEntity", kind="Action", id="act_ec26")
        assert (a["type"], a["date"]) == ("Amendment", "2000-02-14")

    def test_missing_theme(self, engine):
        with pytest.raises(NotFound):
            call(engine, "getEntity", kind="Theme", id="no-such-id")

    def test_typed_getters_agree(self, engine):
        assert call(engine, "getVersion", id="v2") == call(engine, "getEntity", kind="Version", id="v2")


class TestTemporal:
    @pytest.mark.parametrize("t, vid", [("2001-05-20", "v2"), ("2000-02-14", "v2"), ("2000-02-13", "v1")])
    def test_valid_version(self, engine, t, vid):
        assert call(engine, "getValidVersion", item_id="art6_cpt", timestamp=t)["id"] == vid

    def test_pre_history(self, engine):
        with pytest.raises(NoValidVersion):
            call(engine, "getValidVersion", item_id="art6_cpt", timestamp="1980-01-01")

    def test_instant_truncates_to_date(self, engine):
        assert call(engine, "getValidVersion", item_id="art6_cpt", timestamp="2000-02-14T00:00:01Z")["id"] == "v2"

    @pytest.mark.parametrize("start, end, expected", [
        ("1999-01-01", "2001-01-01", ["v1", "v2"]),
        ("2005-01-01", "2006-01-01", ["v2"]),
        ("1980-01-01", "1981-01-01", []),
    ])
    def test_versions_in_interval(self, engine, start, end, expected):
        got = call(engine, "getVersionsInInterval", item_ids=["art6_cpt"], start_date=start, end_date=end)
        assert ids(got) == expected

    def test_inverted_interval(self, engine):
        with pytest.raises(InvalidInterval):
            call(engine, "getVersionsInInterval", item_ids=["art6_cpt"], start_date="2001-01-01", end_date="2000-01-01")

    def test_interval_matches_oracle(self):
        corpus = generate_corpus(17, n_items=60, min_versions=3)
        e = Engine(load(corpus))
        rng = random.Random(17)
        item_ids = [i.id for i in corpus.items]
        for _ in range(200):
            picked = rng.sample(item_ids, rng.randint(1, 5))
            a = date(1988, 1, 1).toordinal() + rng.randint(0, 12000)
            b = a + rng.randint(0, 3000)
            s, t = date.fromordinal(a), date.fromordinal(b)
            got = call(e, "getVersionsInInterval", item_ids=picked, start_date=s.isoformat(), end_date=t.isoformat())
            assert ids(got) == versions_overlapping(corpus, set(picked), s, t)

    def test_coverage(self, engine):
        assert call(engine, "getTemporalCoverage", item_id="art6_cpt") == {"start": "1988-10-05", "end": None}

    def test_coverage_no_versions(self, engine):
        with pytest.raises(NoVersions):
            call(engine, "getTemporalCoverage", item_id="art6")

    def test_coverage_of_revoked_item(self):
        corpus = generate_corpus(2, n_items=80, min_versions=2)
        e = Engine(load(corpus))
        by_item = {}
        for v in corpus.versions:
            by_item.setdefault(v.item, []).append(v.validity_interval)
        closed = [i for i, spans in by_item.items() if all(s.end is not None for s in spans)]
        assert closed
        for item in closed:
            spans = by_item[item]
            expected = {"start": min(s.start for s in spans).isoformat(), "end": max(s.end for s in spans).isoformat()}
            assert call(e, "getTemporalCoverage", item_id=item) == expected


class TestText:
    def test_v2_mentions_moradia(self, engine):
        assert "moradia" in call(engine, "getTextForVersion", version_id="v2", language="pt-BR")["content"]

    def test_v1_lacks_moradia(self, engine):
        assert "moradia" not in call(engine, "getTextForVersion", version_id="v1", language="pt-BR")["content"]

    def test_unknown_language(self, engine):
        with pytest.raises(NoTextUnit):
            call(engine, "getTextForVersion", version_id="v2", language="xx")


class TestHierarchy:
    def test_work_children(self, engine):
        assert call(engine, "getHierarchy", kind="Item", root_id="cf88_work", depth=1) == ["art6"]

    def test_all_descendants(self, engine):
        assert call(engine, "getHierarchy", kind="Item", root_id="art6") == ["art6_cpt"]
        assert call(engine, "getItemHierarchy", item_id="cf88_work") == ["art6", "art6_cpt"]

    def test_leaf(self, engine):
        assert call(engine, "getHierarchy", kind="Item", root_id="art6_cpt", depth=1) == []

    def test_depth_zero(self, engine):
        assert call(engine, "getHierarchy", kind="Item", root_id="cf88_work", depth=0) == []

    def test_item_types(self, engine):
        assert call(engine, "getItemTypeHierarchy", item_type_id="type:article") == ["type:caput"]

    @pytest.mark.parametrize("item, expected", [("art6_cpt", ["art6"]), ("art6", []), ("cf88_work", [])])
    def test_ancestors(self, engine, item, expected):
        assert ids(call(engine, "getItemAncestors", item_id=item)) == expected

    def test_themes_for_item(self, engine):
        assert ids(call(engine, "getThemesForItem", item_id="art6")) == ["theme_social_rights"]
        assert call(engine, "getThemesForItem", item_id="art6_cpt") == []
        with pytest.raises(NotFound):
            call(engine, "getThemesForItem", item_id="no-such")

    def test_theme_dag_visits_shared_child_once(self):
        corpus = generate_corpus(4, n_items=30, n_themes=40)
        e = Engine(load(corpus))
        for t in corpus.themes:
            got = call(e, "getThemeHierarchy", theme_id=t.id)
            assert len(got) == len(set(got))
            assert t.id not in got


class TestCausality:
    def test_history(self, engine):
        assert ids(call(engine, "getItemHistory", item_id="art6_cpt")) == ["act_creation", "act_ec26"]

    def test_single_creation_history(self):
        corpus = generate_corpus(8, n_items=50, n_actions=50)
        e = Engine(load(corpus))
        item = corpus.items[0].id
        hist = call(e, "getItemHistory", item_id=item)
        assert [a["type"] for a in hist] == ["Creation"]

    def test_trace_v1(self, engine):
        got = call(engine, "traceCausality", version_id="v1")
        assert (got["creating_action"]["id"], got["terminating_action"]["id"]) == ("act_creation", "act_ec26")

    def test_trace_v2(self, engine):
        got = call(engine, "traceCausality", version_id="v2")
        assert got["creating_action"]["id"] == "act_ec26"
        assert got["terminating_action"] is None

    def test_missing_provenance(self, engine):
        with pytest.raises(MissingProvenance):
            call(engine, "traceCausality", version_id="ec26_v1")

    def test_actions_by_source(self, engine):
        assert ids(call(engine, "getActionsBySource", source_work_id="ec26_work")) == ["act_ec26"]
        assert call(engine, "getActionsBySource", source_work_id="ec26_work", action_types=["Revocation"]) == []

    def test_actions_by_source_needs_work(self, engine):
        with pytest.raises(NotAWork):
            call(engine, "getActionsBySource", source_work_id="art6")

    def test_actions_by_source_oracle(self):
        corpus = generate_corpus(21, n_items=100, n_actions=260)
        e = Engine(load(corpus))
        for work in (i.id for i in corpus.items if i.parent is None):
            assert ids(call(e, "getActionsBySource", source_work_id=work)) == actions_by_source(corpus, work)
            got = call(e, "getActionsBySource", source_work_id=work, action_types=["Amendment"])
            assert ids(got) == actions_by_source(corpus, work, {"Amendment"})


class TestDiff:
    def test_moradia_insert(self, engine):
        report = call(engine, "compareVersions", version_id_a="v1", version_id_b="v2")
        assert report["structural_changes"] == []
        [edit] = report["textual_edits"]
        assert edit["op"] == "insert" and edit["tokens_b"] == ["moradia"]
        a_tokens = call(engine, "getTextForVersion", version_id="v1", language="pt-BR")["content"].split()
        assert a_tokens[edit["position"] - 1] == "lazer,"

    def test_identical_texts(self, cf88_corpus):
        docs = copy.deepcopy(cf88_corpus.to_documents())
        v1 = next(t for t in docs["textunits"] if t["id"] == "tu_v1_pt")
        next(t for t in docs["textunits"] if t["id"] == "tu_v2_pt")["content"] = v1["content"]
        e = Engine(load(corpus_from_documents(docs)))
        assert call(e, "compareVersions", version_id_a="v1", version_id_b="v2")["textual_edits"] == []

    def test_different_items(self, engine):
        with pytest.raises(DifferentItems):
            call(engine, "compareVersions", version_id_a="v1", version_id_b="ec26_v1")

    def test_same_version(self, engine):
        with pytest.raises(InvalidArgument):
            call(engine, "compareVersions", version_id_a="v1", version_id_b="v1")

    def test_structural_changes(self):
        corpus = generate_corpus(31, n_items=120, min_versions=3)
        e = Engine(load(corpus))
        seen = 0
        for v in corpus.versions:
            if not v.parents:
                continue
            p = v.parents[0]
            siblings = [w for w in corpus.versions if w.item == e.store.version(p).item and w.id != p]
            for w in siblings[:1]:
                report = call(e, "compareVersions", version_id_a=p, version_id_b=w.id)
                kids_a = set(e.store.version_children(p))
                kids_b = set(e.store.version_children(w.id))
                items_a = {e.store.version(k).item for k in kids_a}
                items_b = {e.store.version(k).item for k in kids_b}
                expected = sorted(
                    [("component_added", i) for i in items_b - items_a]
                    + [("component_removed", i) for i in items_a - items_b]
                )
                got = sorted((c["change"], c["item"]) for c in report["structural_changes"])
                assert got == expected
                seen += 1
        assert seen


class TestListing:
    def test_languages(self, engine):
        assert call(engine, "getAvailableLanguages") == ["pt-BR"]

    def test_action_types(self, engine):
        assert {"Amendment", "Creation", "Revocation"} <= set(call(engine, "getSupportedActionTypes"))

    def test_root_themes(self, engine):
        assert ids(call(engine, "getRootThemes")) == ["theme_social_rights"]

    def test_empty_store(self):
        e = Engine(load(Corpus(action_types=())))
        assert [call(e, n) for n in ("getAvailableLanguages", "getSupportedActionTypes", "getRootThemes")] == [[], [], []]


class TestBatch:
    def test_drop_misses(self, engine):
        got = call(engine, "getBatch", kind="Item", ids=["art6", "nope", "art6_cpt"])
        assert ids(got) == ["art6", "art6_cpt"]

    def test_valid_versions(self, engine):
        got = call(engine, "getBatchValidVersions", item_ids=["art6_cpt", "art6"], timestamp="2001-05-20")
        assert ids(got) == ["v2"]

    def test_text_units(self, engine):
        got = call(engine, "getBatchTextUnits", requests=[
            {"source_node_type": "Version", "source_node_id": "v1", "language": "pt-BR"},
            {"source_node_type": "Theme", "source_node_id": "theme_social_rights", "language": "pt-BR",
             "aspects": ["description"]},
        ])
        assert ids(got) == ["tu_v1_pt", "tu_theme_social_rights_pt"]

    def test_batch_history_via_map(self):
        corpus = generate_corpus(12, n_items=40, min_versions=2)
        e = Engine(load(corpus))
        for item in corpus.items[:20]:
            assert ids(call(e, "getItemHistory", item_id=item.id)) == item_history(corpus, item.id)

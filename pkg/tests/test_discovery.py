import copy
import random

import pytest

from lexgraph import Engine, load
from lexgraph.errors import ConflictingScope, InvalidArgument, UnknownId
from lexgraph.model import corpus_from_documents
from lexgraph.registry import invoke
from lexgraph.synthetic import generate_corpus
from lexgraph.text import SemanticScorer, register_scorer


def call(engine, name, **args):
    return invoke(engine, name, args)


def tu_ids(results):
    return [r["text_unit"]["id"] for r in results]


@pytest.fixture(scope="module")
def two_article_ones(cf88_corpus):
    """cf88-mini plus an "Article 1" under each of the two works."""
    docs = copy.deepcopy(cf88_corpus.to_documents())
    items = {i["id"]: i for i in docs["items"]}
    for work, aid in (("cf88_work", "cf88_art1"), ("ec26_work", "ec26_art1")):
        docs["items"].append({
            "id": aid, "kind": "WorkComponent", "type_id": "type:article", "label": "Article 1",
            "parent": work, "children": [],
        })
        items[work]["children"] = [aid] + list(items[work].get("children", []))
    return Engine(load(corpus_from_documents(docs)), pinned_now="2025-01-01T00:00:00Z")


class TestResolvers:
    def test_use_case_reference(self, engine):
        got = call(engine, "resolveItemReference", reference_text="Article 6, caput of the Brazilian Constitution")
        assert got[0]["id"] == "art6_cpt"

    def test_exact_label(self, engine):
        got = call(engine, "resolveItemReference", reference_text="Constitution of 1988")
        assert got[0] == {"id": "cf88_work", "confidence": 1.0}

    def test_context_breaks_tie(self, two_article_ones):
        got = call(two_article_ones, "resolveItemReference", reference_text="Article 1", context_id="ec26_work")
        ranked = [c["id"] for c in got]
        assert ranked.index("ec26_art1") < ranked.index("cf88_art1")
        plain = call(two_article_ones, "resolveItemReference", reference_text="Article 1")
        assert plain[0]["confidence"] == plain[1]["confidence"]

    def test_theme_by_label(self, engine):
        got = call(engine, "resolveThemeReference", reference_text="Social Rights")
        assert got[0] == {"id": "theme_social_rights", "confidence": 1.0}

    def test_gibberish_is_not_an_error(self, engine):
        got = call(engine, "resolveThemeReference", reference_text="completely unrelated gibberish")
        assert all(c["confidence"] < 0.5 for c in got)

    def test_top_k_and_order(self):
        e = Engine(load(generate_corpus(9, n_items=80)))
        got = call(e, "resolveItemReference", reference_text="Article 2", top_k=5)
        assert len(got) <= 5
        assert got == sorted(got, key=lambda c: (-c["confidence"], c["id"]))
        with pytest.raises(InvalidArgument):
            call(e, "resolveItemReference", reference_text="Article 2", top_k=-1)


class TestSearchTextUnits:
    def test_current_moradia(self, engine):
        assert tu_ids(call(engine, "searchTextUnits", lexical_query="moradia"))[0] == "tu_v2_pt"

    def test_moradia_before_amendment(self, engine):
        assert call(engine, "searchTextUnits", lexical_query="moradia", timestamp="1999-01-01") == []

    def test_singleton_scope(self, engine):
        assert tu_ids(call(engine, "searchTextUnits", version_ids=["v1"], lexical_query="lazer")) == ["tu_v1_pt"]

    def test_conflicting_scope(self, engine):
        with pytest.raises(ConflictingScope):
            call(engine, "searchTextUnits", version_ids=["v1"], timestamp="2001-05-20")

    def test_unknown_scope_id(self, engine):
        with pytest.raises(UnknownId):
            call(engine, "searchTextUnits", item_ids=["ghost"], lexical_query="lazer")

    def test_needs_some_criterion(self, engine):
        with pytest.raises(InvalidArgument):
            call(engine, "searchTextUnits")

    def test_language_and_aspects(self, engine):
        assert call(engine, "searchTextUnits", lexical_query="lazer", language="en") == []
        got = call(engine, "searchTextUnits", lexical_query="moradia", aspects=["canonical"], language="pt-BR")
        assert tu_ids(got) == ["tu_v2_pt"]

    def test_metadata_filter(self, engine):
        hit = call(engine, "searchTextUnits", lexical_query="lazer",
                   metadata_filter={"item_metadata_filter": {"jurisdiction": "federal"}})
        miss = call(engine, "searchTextUnits", lexical_query="lazer",
                    metadata_filter={"item_metadata_filter": {"jurisdiction": "state"}})
        assert tu_ids(hit) == ["tu_v2_pt"] and miss == []

    def test_temporal_consistency(self):
        corpus = generate_corpus(13, n_items=60, min_versions=3)
        e = Engine(load(corpus))
        rng = random.Random(13)
        words = ["direito", "lei", "saúde", "dados", "rede"]
        for v in rng.sample(list(corpus.versions), 60):
            t = v.validity_interval.start.isoformat()
            got = call(e, "searchTextUnits", item_ids=[v.item], timestamp=t, lexical_query=rng.choice(words))
            assert {r["text_unit"]["source_node_id"] for r in got} <= {v.id}

    def test_ranking_is_deterministic(self):
        corpus = generate_corpus(14, n_items=60)
        a = Engine(load(corpus), pinned_now="2024-06-01")
        b = Engine(load(corpus), pinned_now="2024-06-01")
        args = {"lexical_query": "direito lei", "semantic_query": "proteção de dados"}
        first = invoke(a, "searchTextUnits", args)
        assert first == invoke(b, "searchTextUnits", args)
        keys = [(-r["score"], r["text_unit"]["id"]) for r in first]
        assert keys == sorted(keys)


class TestSearchItems:
    def test_whole_history(self, cf88_corpus):
        # drop the word from the current text: only history still holds it
        docs = copy.deepcopy(cf88_corpus.to_documents())
        v2 = next(t for t in docs["textunits"] if t["id"] == "tu_v2_pt")
        v1 = next(t for t in docs["textunits"] if t["id"] == "tu_v1_pt")
        v1["content"], v2["content"] = v2["content"], v1["content"]
        e = Engine(load(corpus_from_documents(docs)), pinned_now="2025-01-01")
        assert [r["item"]["id"] for r in call(e, "searchItems", lexical_query="moradia")] == ["art6_cpt"]
        assert call(e, "searchTextUnits", lexical_query="moradia") == []

    def test_theme_scope(self, engine):
        got = call(engine, "searchItems", theme_ids=["theme_social_rights"], lexical_query="lazer")
        assert {r["item"]["id"] for r in got} <= {"art6", "art6_cpt"}

    def test_scoped_miss(self, two_article_ones):
        assert call(two_article_ones, "searchItems", item_ids=["ec26_art1"], lexical_query="moradia-absent-token") == []


class TestScorerPlugin:
    def test_custom_scorer_by_name(self, store):
        class Constant(SemanticScorer):
            name = "constant"

            def score(self, query, content):
                return 0.25

        register_scorer("constant", Constant)
        e = Engine(store, scorer="constant", pinned_now="2025-01-01")
        got = call(e, "searchTextUnits", semantic_query="anything")
        assert got and all(r["score"] == 0.25 for r in got)

    def test_unknown_scorer(self, store):
        with pytest.raises(InvalidArgument):
            Engine(store, scorer="no-such-scorer")

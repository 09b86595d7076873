import json
import warnings

import jsonschema
import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from lexgraph import Engine, plan_path
from lexgraph.plan import execute_plan, parse_plan
from lexgraph.registry import REGISTRY
from lexgraph.service import PINNED_HEADER, call_primitive, create_app

from conftest import PINNED


@pytest.fixture(scope="module")
def client(store):
    return TestClient(create_app(Engine(store)))


def post(client, name, body, pinned=PINNED):
    return client.post(f"/v1/primitives/{name}", json=body, headers={PINNED_HEADER: pinned})


def test_valid_version(client):
    r = post(client, "getValidVersion", {"item_id": "art6_cpt", "timestamp": "2001-05-20"})
    assert r.status_code == 200 and r.json()["id"] == "v2"
    assert r.headers[PINNED_HEADER] == PINNED


def test_conflicting_scope(client):
    r = post(client, "searchTextUnits", {"version_ids": ["v1"], "timestamp": "2001-05-20"})
    assert r.status_code == 409 and r.json()["error"]["code"] == "ConflictingScope"


def test_not_found(client):
    r = post(client, "getTheme", {"id": "missing"})
    assert r.status_code == 404 and r.json()["error"]["code"] == "NotFound"


@pytest.mark.parametrize("body", [{"id": 5}, {"idd": "x"}, {}])
def test_schema_violations_are_400(client, body):
    r = post(client, "getTheme", body)
    assert r.status_code == 400 and r.json()["error"]["code"] == "SchemaViolation"


def test_malformed_body(client):
    r = client.post("/v1/primitives/getTheme", content=b"{oops")
    assert r.status_code == 400


def test_unknown_primitive(client):
    r = post(client, "getBatchTexts", {})
    assert r.status_code == 404 and r.json()["error"]["details"]["hint"] == "getBatchTextUnits"


def test_discovery_carries_scores(client):
    r = post(client, "resolveItemReference", {"reference_text": "Article 6"})
    assert all("confidence" in c for c in r.json())


def test_pinned_instant_echoed_when_defaulted(client):
    r = client.post("/v1/primitives/getRootThemes", json={})
    assert r.headers[PINNED_HEADER].endswith("Z")


def test_body_equals_engine_bytes(client, engine):
    args = {"lexical_query": "lazer"}
    assert post(client, "searchTextUnits", args).content == call_primitive(engine, "searchTextUnits", args)


@pytest.fixture(scope="module")
def openapi(client):
    return client.get("/openapi.json").json()


def test_interface_lists_every_primitive_and_param(openapi):
    for name, prim in REGISTRY.items():
        op = openapi["paths"][f"/v1/primitives/{name}"]["post"]
        props = op["requestBody"]["content"]["application/json"]["schema"]["properties"]
        assert set(props) == {p.name for p in prim.params}


def test_versioned_interface_path(client, openapi):
    assert client.get("/v1/openapi.json").json() == openapi


@pytest.mark.parametrize("name, body", [
    ("getItem", {"id": "art6"}),
    ("getValidVersion", {"item_id": "art6_cpt", "timestamp": "2001-05-20"}),
    ("traceCausality", {"version_id": "v1"}),
    ("compareVersions", {"version_id_a": "v1", "version_id_b": "v2"}),
    ("getItemHistory", {"item_id": "art6_cpt"}),
    ("getTemporalCoverage", {"item_id": "art6_cpt"}),
    ("resolveItemReference", {"reference_text": "Article 6"}),
    ("searchTextUnits", {"lexical_query": "lazer"}),
    ("searchItems", {"lexical_query": "moradia"}),
    ("getRootThemes", {}),
    ("getBatchTextUnits", {"requests": [{"source_node_type": "Version", "source_node_id": "v1", "language": "pt-BR"}]}),
])
def test_responses_validate_against_served_schema(client, openapi, name, body):
    op = openapi["paths"][f"/v1/primitives/{name}"]["post"]
    schema = op["responses"]["200"]["content"]["application/json"]["schema"]
    jsonschema.validate(post(client, name, body).json(), {**schema, "components": openapi["components"]})


def test_error_body_matches_schema(client, openapi):
    body = post(client, "getTheme", {"id": "missing"}).json()
    jsonschema.validate(body, {"$ref": "#/components/schemas/ApiError", "components": openapi["components"]})


def test_plan_stream_matches_executor(client, engine):
    doc = json.loads(plan_path("uc1").read_text(encoding="utf-8"))
    r = client.post("/v1/plans/execute", json={"plan": doc, "pinned_now": PINNED})
    assert r.status_code == 200
    expected = execute_plan(parse_plan(doc), engine, PINNED).audit.to_bytes()
    assert r.content == expected
    report = client.post("/v1/plans/verify", content=r.content).json()
    assert report["ok"]


def test_bad_plan_is_400(client):
    r = client.post("/v1/plans/execute", json={"plan": {"plan_id": "x", "steps": [{"id": "a", "primitive": "nope"}]}})
    assert r.status_code == 400 and r.json()["error"]["code"] == "UnknownPrimitive"


def test_plan_inflight_limit(store):
    busy = TestClient(create_app(Engine(store), max_inflight_plans=0))
    doc = json.loads(plan_path("uc1").read_text(encoding="utf-8"))
    r = busy.post("/v1/plans/execute", json={"plan": doc})
    assert r.status_code == 503 and r.json()["error"]["code"] == "Busy"

import json
import os
import subprocess
import sys

import pytest

from lexgraph import fixture_path, plan_path, write_corpus
from lexgraph.model import corpus_from_documents
from lexgraph.registry import invoke
from lexgraph.service import call_primitive

NOW = "2025-01-01T00:00:00Z"


def run(*args, env=None):
    return subprocess.run(
        [sys.executable, "-m", "lexgraph.cli", *args],
        capture_output=True,
        env={**os.environ, **(env or {})},
    )


def query(*args):
    return run("query", *args, "--corpus", "cf88-mini", "--now", NOW)


class TestValidate:
    def test_fixture(self):
        assert run("validate", str(fixture_path())).returncode == 0

    def test_corrupted(self, tmp_path, cf88_corpus):
        docs = cf88_corpus.to_documents()
        for v in docs["versions"]:
            v["validity_interval"]["end"] = None
        write_corpus(corpus_from_documents(docs), tmp_path)
        r = run("validate", str(tmp_path))
        assert r.returncode == 1
        assert b"open-ended-version-uniqueness" in r.stdout

    def test_missing_path(self, tmp_path):
        assert run("validate", str(tmp_path / "nope")).returncode == 2

    def test_malformed_file(self, tmp_path, cf88_corpus):
        write_corpus(cf88_corpus, tmp_path)
        (tmp_path / "versions.json").write_text("{", encoding="utf-8")
        assert run("validate", str(tmp_path)).returncode == 2


class TestQuery:
    def test_valid_version(self, engine):
        r = query("getValidVersion", "--item", "art6_cpt", "--at", "2001-05-20")
        assert r.returncode == 0
        assert json.loads(r.stdout)["id"] == "v2"

    def test_history(self):
        r = query("getItemHistory", "--item_id", "art6_cpt")
        assert [a["id"] for a in json.loads(r.stdout)] == ["act_creation", "act_ec26"]

    def test_missing_theme(self):
        r = query("getTheme", "--id", "missing")
        assert r.returncode == 1
        assert json.loads(r.stderr)["error"]["code"] == "NotFound"

    @pytest.mark.parametrize("name, flags, args", [
        ("getValidVersion", ["--item-id", "art6_cpt", "--timestamp", "2001-05-20"],
         {"item_id": "art6_cpt", "timestamp": "2001-05-20"}),
        ("getBatch", ["--kind", "Item", "--ids", "art6,nope,art6_cpt"],
         {"kind": "Item", "ids": ["art6", "nope", "art6_cpt"]}),
        ("getItemHierarchy", ["--item_id", "cf88_work", "--depth", "1"], {"item_id": "cf88_work", "depth": 1}),
        ("searchTextUnits", ["--lexical_query", "moradia"], {"lexical_query": "moradia"}),
        ("compareVersions", ["--args", '{"version_id_a": "v1", "version_id_b": "v2"}'],
         {"version_id_a": "v1", "version_id_b": "v2"}),
    ])
    def test_output_equals_service_body(self, engine, name, flags, args):
        r = query(name, *flags)
        assert r.returncode == 0, r.stderr
        assert r.stdout == call_primitive(engine.pinned(NOW), name, args) + b"\n"

    def test_canonical_is_byte_stable(self):
        a = query("searchItems", "--lexical_query", "lazer").stdout
        assert a == query("searchItems", "--lexical_query", "lazer").stdout

    def test_unknown_flag(self):
        assert query("getTheme", "--colour", "x").returncode == 2

    def test_config_file(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"corpus": str(fixture_path()), "now": NOW, "output": "human"}))
        r = run("query", "getRootThemes", env={"LEXGRAPH_CONFIG": str(cfg)})
        assert r.returncode == 0 and b"\n  " in r.stdout
        r = run("query", "getRootThemes", "--output", "canonical", env={"LEXGRAPH_CONFIG": str(cfg)})
        assert b"\n  " not in r.stdout


def test_snapshot_then_query(tmp_path):
    snap = tmp_path / "s.snap"
    assert run("snapshot", "create", "--corpus", "cf88-mini", "--out", str(snap)).returncode == 0
    r = run("query", "getValidVersion", "--snapshot", str(snap), "--item", "art6_cpt", "--at", "2001-05-20")
    assert json.loads(r.stdout)["id"] == "v2"


class TestPlan:
    def test_run_and_verify(self, tmp_path):
        audit = tmp_path / "uc1.audit"
        r = run("plan", "run", str(plan_path("uc1")), "--corpus", "cf88-mini", "--now", NOW, "--out", str(audit))
        assert r.returncode == 0, r.stderr
        assert len(audit.read_bytes().splitlines()) == 4  # header + 3 records
        assert json.loads(r.stdout)["final"]["id"] == "tu_v2_pt"
        assert run("plan", "verify", str(audit), "--corpus", "cf88-mini").returncode == 0

        raw = audit.read_bytes()
        i = raw.index(b"moradia")
        tampered = tmp_path / "tampered.audit"
        tampered.write_bytes(raw[:i] + b"n" + raw[i + 1:])
        r = run("plan", "verify", str(tampered), "--corpus", "cf88-mini")
        assert r.returncode == 1
        assert b"s3_text" in r.stderr and b"chain-broken" in r.stderr

    def test_failed_step_named(self, tmp_path):
        plan = tmp_path / "bad.plan.json"
        plan.write_text(json.dumps({"plan_id": "bad", "steps": [
            {"id": "only", "primitive": "getValidVersion", "args": {"item_id": "art6_cpt", "timestamp": "1970-01-01"}}]}))
        r = run("plan", "run", str(plan), "--corpus", "cf88-mini", "--out", str(tmp_path / "bad.audit"))
        assert r.returncode == 1
        assert b"only" in r.stderr
        assert (tmp_path / "bad.audit").exists()

import json

import pytest

from lexgraph import Engine, load, plan_path
from lexgraph.errors import PlanError, StepFailed
from lexgraph.plan import execute_plan, parse_plan, verify_audit_log
from lexgraph.synthetic import generate_corpus

from conftest import PINNED
from oracles import uc3_actions


def plan_doc(name):
    return json.loads(plan_path(name).read_text(encoding="utf-8"))


def steps_plan(*steps, **options):
    return {"schema_version": 1, "plan_id": "t", "options": options, "steps": list(steps)}


def diag_kinds(document):
    with pytest.raises(PlanError) as info:
        parse_plan(document)
    return [d["kind"] for d in info.value.diagnostics], info.value


class TestParse:
    def test_use_case_plans_parse(self):
        assert [s.primitive for s in parse_plan(plan_doc("uc1")).steps] == [
            "resolveItemReference", "getValidVersion", "getTextForVersion"]
        parse_plan(plan_doc("uc2"))
        parse_plan(plan_doc("uc3"))

    def test_forward_reference(self):
        kinds, _ = diag_kinds(steps_plan(
            {"id": "a", "primitive": "getItem", "args": {"id": {"$ref": "b.parent"}}},
            {"id": "b", "primitive": "getItem", "args": {"id": "art6"}},
        ))
        assert set(kinds) & {"BadBinding", "CycleDetected"}

    def test_cycle(self):
        kinds, _ = diag_kinds(steps_plan(
            {"id": "a", "primitive": "getItem", "args": {"id": {"$ref": "a.parent"}}},
        ))
        assert "CycleDetected" in kinds

    def test_unknown_primitive_hint(self):
        kinds, err = diag_kinds(steps_plan({"id": "a", "primitive": "getBatchTexts", "args": {"requests": []}}))
        assert kinds == ["UnknownPrimitive"]
        assert "getBatchTextUnits" in err.message

    def test_bad_arguments(self):
        kinds, _ = diag_kinds(steps_plan(
            {"id": "a", "primitive": "getItem", "args": {"idd": "x"}},
            {"id": "b", "primitive": "getItemHierarchy", "args": {"item_id": "x", "depth": "deep"}},
        ))
        assert kinds.count("BadArgument") >= 2

    def test_reports_every_problem(self):
        kinds, _ = diag_kinds(steps_plan(
            {"id": "a", "primitive": "nope"},
            {"id": "a", "primitive": "getItem", "args": {}},
        ))
        assert len(kinds) >= 2

    def test_malformed_json(self):
        kinds, _ = diag_kinds(b"{not json")
        assert kinds == ["ParseError"]


class TestExecute:
    def test_uc1(self, engine, store):
        result = execute_plan(parse_plan(plan_doc("uc1")), engine, PINNED)
        assert len(result.audit) == 3
        assert result.final["id"] == "tu_v2_pt"
        assert result.final == store.textunits["tu_v2_pt"].to_dict()

    def test_uc2(self, engine):
        result = execute_plan(parse_plan(plan_doc("uc2")), engine, PINNED)
        assert result.outputs["pivotal_action"]["id"] == "act_ec26"
        report = result.final
        assert [e["tokens_b"] for e in report["textual_edits"]] == [["moradia"]]
        assert report["structural_changes"] == []

    def test_uc3_against_oracle(self):
        corpus = generate_corpus(101, n_items=200, n_themes=50, n_actions=500)
        result = execute_plan(parse_plan(plan_doc("uc3")), Engine(load(corpus)), PINNED)
        assert {a["id"] for a in result.final} == uc3_actions(corpus)

    def test_empty_plan(self, engine):
        result = execute_plan(parse_plan(steps_plan()), engine, PINNED)
        assert result.outputs == {} and len(result.audit) == 0

    def test_byte_identical_replay(self, engine):
        plan = parse_plan(plan_doc("uc2"))
        assert execute_plan(plan, engine, PINNED).audit.to_bytes() == execute_plan(plan, engine, PINNED).audit.to_bytes()

    def test_pinned_now_drives_defaults(self, engine):
        plan = parse_plan(steps_plan({"id": "s", "primitive": "searchTextUnits", "args": {"lexical_query": "moradia"}}))
        assert execute_plan(plan, engine, "1999-06-01T00:00:00Z").final == []
        assert execute_plan(plan, engine, "2001-06-01T00:00:00Z").final

    def test_step_failure_keeps_partial_audit(self, engine):
        plan = parse_plan(steps_plan(
            {"id": "a", "primitive": "getItem", "args": {"id": "art6"}},
            {"id": "b", "primitive": "getValidVersion", "args": {"item_id": {"$ref": "a.id"}, "timestamp": "2001-01-01"}},
        ))
        with pytest.raises(StepFailed) as info:
            execute_plan(plan, engine, PINNED)
        assert info.value.step_id == "b"
        assert info.value.cause.code == "NoValidVersion"
        assert [r.status for r in info.value.audit.records] == ["ok", "error"]

    def test_require_unique_policy(self, engine):
        plan = parse_plan(steps_plan(
            {"id": "r", "primitive": "resolveItemReference", "args": {"reference_text": "Article 6"}},
            candidate_policy={"policy": "require_unique", "threshold": 0.1},
        ))
        with pytest.raises(StepFailed) as info:
            execute_plan(plan, engine, PINNED)
        assert info.value.cause.code == "AmbiguousResolution"
        loose = execute_plan(plan, engine, PINNED, {"policy": "require_unique", "threshold": 0.9})
        assert loose.final["selected"] == "art6"

    def test_threshold_policy(self, engine):
        plan = parse_plan(steps_plan(
            {"id": "r", "primitive": "resolveThemeReference", "args": {"reference_text": "zzz"}},
            candidate_policy={"policy": "threshold", "threshold": 0.5},
        ))
        with pytest.raises(StepFailed):
            execute_plan(plan, engine, PINNED)

    def test_selected_feeds_next_step(self, engine):
        result = execute_plan(parse_plan(plan_doc("uc1")), engine, PINNED)
        first = result.audit.records[0]
        assert first.result["selected"] == result.audit.records[1].args["item_id"]


@pytest.fixture(scope="module")
def uc1_log(engine):
    return execute_plan(parse_plan(plan_doc("uc1")), engine, PINNED).audit.to_bytes()


class TestVerify:
    def test_clean_log(self, uc1_log, store):
        report = verify_audit_log(parse_plan(plan_doc("uc1")), uc1_log, store)
        assert report.ok
        assert [s.status for s in report.steps] == ["verified"] * 3

    def test_flipped_result_byte(self, uc1_log, store):
        i = uc1_log.index(b"moradia")
        tampered = uc1_log[:i] + b"M" + uc1_log[i + 1:]
        report = verify_audit_log(None, tampered, store)
        assert not report.ok
        assert [s.status for s in report.steps] == ["verified", "verified", "chain-broken"]

    def test_break_propagates(self, uc1_log, store):
        lines = uc1_log.splitlines(keepends=True)
        i = lines[1].index(b'"seq":0')
        lines[1] = lines[1][:i] + b'"seq":7' + lines[1][i + 7:]
        report = verify_audit_log(None, b"".join(lines), store)
        assert [s.status for s in report.steps] == ["chain-broken"] * 3

    def test_other_plan_rejected(self, uc1_log, store):
        assert not verify_audit_log(parse_plan(plan_doc("uc2")), uc1_log, store).ok

    def test_other_store_rejected(self, uc1_log):
        assert not verify_audit_log(None, uc1_log, load(generate_corpus(1, n_items=10))).ok

    def test_truncation_detected(self, uc1_log, store):
        truncated = b"".join(uc1_log.splitlines(keepends=True)[:-1])
        assert not verify_audit_log(parse_plan(plan_doc("uc1")), truncated, store).ok

    def test_timestamp_sensitive_replay(self, engine, store):
        plan = parse_plan(steps_plan({"id": "s", "primitive": "searchTextUnits", "args": {"lexical_query": "lazer"}}))
        log = execute_plan(plan, engine, "1995-01-01T00:00:00Z").audit
        assert verify_audit_log(plan, log, store).ok

    def test_forged_consistent_chain_fails_replay(self, engine, store):
        # rewrite a result and recompute every digest: the chain is intact but replay disagrees
        from lexgraph.plan import AuditLog, chain_digest, outcome_digest

        plan = parse_plan(plan_doc("uc1"))
        log = execute_plan(plan, engine, PINNED).audit
        records = log.records
        records[2].result = dict(records[2].result, content="forged")
        prev = plan.digest
        for r in records:
            r.prev_digest = prev
            r.result_digest = outcome_digest(r.result, r.error)
            r.digest = chain_digest(prev, r.body())
            prev = r.digest
        report = verify_audit_log(plan, AuditLog(log.header, records), store)
        assert [s.status for s in report.steps][-1] == "replay-mismatch"

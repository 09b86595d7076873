"""DAG plans of primitives, sequential execution and hash-chained audit logs.

Plan document (JSON)::

    {"schema_version": 1, "plan_id": "uc1",
     "options": {"pinned_now": "...", "candidate_policy": {"policy": "take_top"}},
     "steps": [{"id": "ground", "primitive": "resolveItemReference",
                "args": {"reference_text": "..."}, "bind_as": "item"},
               {"id": "version", "primitive": "getValidVersion",
                "args": {"item_id": {"$ref": "ground.selected"}, "timestamp": "2001-05-20"}}]}

A binding is ``{"$ref": "<step id>[.<field or index>...]"}`` anywhere inside
``args``. Audit logs are newline-delimited canonical JSON: one header line,
then one record per attempted step. Each record's ``digest`` is
``sha256(prev_digest || canonical(record without digest))``; the first
record chains from the plan digest.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import time
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Set, Tuple, Union

from . import canonical, registry
from .canonical import HASH_ALGORITHM
from .errors import AmbiguousResolution, InvalidArgument, LexGraphError, PlanError, StepFailed
from .model import format_instant, parse_instant

PLAN_SCHEMA_VERSION = 1
AUDIT_SCHEMA_VERSION = 1
REF_KEY = "$ref"

VERIFIED = "verified"
REPLAY_MISMATCH = "replay-mismatch"
CHAIN_BROKEN = "chain-broken"


# ---------------------------------------------------------------------------
# Plan model and parsing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CandidatePolicy:
    policy: str = "take_top"  # take_top | require_unique | threshold
    threshold: float = 0.0

    @classmethod
    def parse(cls, spec: Any) -> "CandidatePolicy":
        if spec is None:
            return cls()
        if isinstance(spec, CandidatePolicy):
            return spec
        if isinstance(spec, str):
            spec = {"policy": spec}
        if not isinstance(spec, dict) or set(spec) - {"policy", "threshold"}:
            raise InvalidArgument(f"bad candidate_policy {spec!r}")
        policy = spec.get("policy", "take_top")
        if policy not in ("take_top", "require_unique", "threshold"):
            raise InvalidArgument(f"unknown candidate policy {policy!r}")
        theta = spec.get("threshold", 0.0)
        if not isinstance(theta, (int, float)) or isinstance(theta, bool) or not 0 <= theta <= 1:
            raise InvalidArgument(f"candidate policy threshold must be in [0, 1], got {theta!r}")
        return cls(policy, float(theta))

    def to_dict(self):
        return {"policy": self.policy, "threshold": self.threshold}

    def select(self, candidates: Sequence[Mapping[str, Any]]) -> str:
        if self.policy == "require_unique":
            above = [c for c in candidates if c["confidence"] >= self.threshold]
            if len(above) != 1:
                raise AmbiguousResolution(
                    f"{len(above)} candidate(s) at or above {self.threshold}; exactly one required",
                    {"candidates": list(candidates)},
                )
            return above[0]["id"]
        if not candidates:
            raise AmbiguousResolution("resolver returned no candidates", {"candidates": []})
        top = candidates[0]
        if self.policy == "threshold" and top["confidence"] < self.threshold:
            raise AmbiguousResolution(
                f"top candidate {top['id']!r} below threshold {self.threshold}", {"candidates": list(candidates)}
            )
        return top["id"]


@dataclass(frozen=True)
class PlanStep:
    id: str
    primitive: str
    args: Mapping[str, Any] = field(default_factory=dict)
    bind_as: Optional[str] = None

    def to_dict(self):
        out = {"id": self.id, "primitive": self.primitive, "args": dict(self.args)}
        if self.bind_as is not None:
            out["bind_as"] = self.bind_as
        return out


@dataclass(frozen=True)
class Plan:
    id: str
    steps: Tuple[PlanStep, ...] = ()
    pinned_now: Optional[str] = None
    candidate_policy: CandidatePolicy = CandidatePolicy()

    def to_dict(self):
        options: Dict[str, Any] = {"candidate_policy": self.candidate_policy.to_dict()}
        if self.pinned_now is not None:
            options["pinned_now"] = self.pinned_now
        return {
            "schema_version": PLAN_SCHEMA_VERSION,
            "plan_id": self.id,
            "options": options,
            "steps": [s.to_dict() for s in self.steps],
        }

    @property
    def digest(self) -> str:
        return canonical.digest(self.to_dict())

    def step(self, step_id: str) -> PlanStep:
        for s in self.steps:
            if s.id == step_id:
                return s
        raise KeyError(step_id)


def find_refs(value: Any) -> List[str]:
    """All binding references inside an argument value, in traversal order."""
    out: List[str] = []
    if isinstance(value, dict):
        if set(value) == {REF_KEY}:
            out.append(value[REF_KEY])
        else:
            for v in value.values():
                out.extend(find_refs(v))
    elif isinstance(value, list):
        for v in value:
            out.extend(find_refs(v))
    return out


def _ref_step(ref: Any) -> Optional[str]:
    if not isinstance(ref, str) or not ref:
        return None
    return ref.split(".", 1)[0]


def parse_plan(document: Union[str, bytes, Mapping[str, Any]]) -> Plan:
    """Parse and structurally validate a plan; raise PlanError listing every problem."""
    diags: List[Dict[str, Any]] = []

    def diag(kind: str, step: Optional[str], reason: str) -> None:
        diags.append({"kind": kind, "step": step, "reason": reason})

    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise PlanError([{"kind": "ParseError", "step": None, "reason": f"malformed JSON: {exc}"}]) from None
    if not isinstance(document, Mapping):
        raise PlanError([{"kind": "ParseError", "step": None, "reason": "plan must be an object"}])
    extra = sorted(set(document) - {"schema_version", "plan_id", "options", "steps"})
    if extra:
        diag("ParseError", None, f"unknown plan field(s) {extra}")
    if document.get("schema_version", PLAN_SCHEMA_VERSION) != PLAN_SCHEMA_VERSION:
        diag("ParseError", None, f"unsupported schema_version {document.get('schema_version')!r}")
    plan_id = document.get("plan_id")
    if not isinstance(plan_id, str) or not plan_id:
        diag("ParseError", None, "plan_id must be a non-empty string")
    options = document.get("options") or {}
    pinned_now = None
    policy = CandidatePolicy()
    if not isinstance(options, Mapping) or set(options) - {"pinned_now", "candidate_policy"}:
        diag("ParseError", None, f"bad options {options!r}")
    else:
        if options.get("pinned_now") is not None:
            try:
                pinned_now = format_instant(parse_instant(options["pinned_now"]))
            except LexGraphError as exc:
                diag("ParseError", None, exc.message)
        try:
            policy = CandidatePolicy.parse(options.get("candidate_policy"))
        except LexGraphError as exc:
            diag("ParseError", None, exc.message)
    raw_steps = document.get("steps", [])
    if not isinstance(raw_steps, list):
        diag("ParseError", None, "steps must be a list")
        raw_steps = []

    steps: List[PlanStep] = []
    position: Dict[str, int] = {}
    bind_names: Set[str] = set()
    for idx, raw in enumerate(raw_steps):
        if not isinstance(raw, Mapping):
            diag("ParseError", None, f"step #{idx} must be an object")
            continue
        sid = raw.get("id")
        if not isinstance(sid, str) or not sid:
            diag("ParseError", None, f"step #{idx} needs a non-empty string id")
            continue
        extra = sorted(set(raw) - {"id", "primitive", "args", "bind_as"})
        if extra:
            diag("ParseError", sid, f"unknown step field(s) {extra}")
        if sid in position:
            diag("ParseError", sid, "duplicate step id")
            continue
        args = raw.get("args") or {}
        if not isinstance(args, Mapping):
            diag("ParseError", sid, "args must be an object")
            args = {}
        bind_as = raw.get("bind_as")
        if bind_as is not None:
            if not isinstance(bind_as, str) or not bind_as:
                diag("ParseError", sid, "bind_as must be a non-empty string")
                bind_as = None
            elif bind_as in bind_names:
                diag("BadBinding", sid, f"bind_as name {bind_as!r} already used")
            else:
                bind_names.add(bind_as)
        name = raw.get("primitive")
        if not isinstance(name, str):
            diag("ParseError", sid, "primitive must be a string")
            name = ""
        position[sid] = idx
        steps.append(PlanStep(sid, name, dict(args), bind_as))

    deps: Dict[str, Set[str]] = {}
    for step in steps:
        deps[step.id] = set()
        for ref in find_refs(step.args):
            target = _ref_step(ref)
            if target is None:
                diag("BadBinding", step.id, f"malformed reference {ref!r}")
            elif target == step.id:
                diag("CycleDetected", step.id, "step references itself")
            elif target not in position:
                diag("BadBinding", step.id, f"reference to unknown step {target!r}")
            else:
                deps[step.id].add(target)
                if position[target] > position[step.id]:
                    diag("BadBinding", step.id, f"forward reference to later step {target!r}")
        # Primitive and literal argument checks.
        try:
            prim = registry.lookup(step.primitive)
        except LexGraphError as exc:
            diag("UnknownPrimitive", step.id, exc.message)
            continue
        for key in sorted(step.args):
            param = prim.param(key)
            if param is None:
                diag("BadArgument", step.id, f"{step.primitive} has no parameter {key!r}")
                continue
            value = step.args[key]
            if not find_refs(value):
                try:
                    registry.check_value(param, value)
                except LexGraphError as exc:
                    diag("BadArgument", step.id, exc.message)
        for param in prim.params:
            if param.required and param.name not in step.args:
                diag("BadArgument", step.id, f"missing required parameter {param.name!r}")

    cycle = _cycle_members(deps)
    for sid in cycle:
        diag("CycleDetected", sid, "step is part of a dependency cycle")
    if diags:
        raise PlanError(diags)
    return Plan(plan_id, tuple(steps), pinned_now, policy)


def _cycle_members(deps: Mapping[str, Set[str]]) -> List[str]:
    from .model import _cycle_nodes

    return _cycle_nodes({k: sorted(v) for k, v in deps.items()})


def execution_order(plan: Plan) -> List[PlanStep]:
    """Topological order; among ready steps the smallest step id runs first."""
    deps = {s.id: {_ref_step(r) for r in find_refs(s.args)} for s in plan.steps}
    dependents: Dict[str, List[str]] = {s.id: [] for s in plan.steps}
    for sid, ds in deps.items():
        for d in ds:
            dependents[d].append(sid)
    remaining = {sid: len(ds) for sid, ds in deps.items()}
    ready = [sid for sid, n in remaining.items() if n == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        sid = heapq.heappop(ready)
        order.append(plan.step(sid))
        for nxt in dependents[sid]:
            remaining[nxt] -= 1
            if remaining[nxt] == 0:
                heapq.heappush(ready, nxt)
    return order


def resolve_args(value: Any, results: Mapping[str, Any]) -> Any:
    if isinstance(value, dict):
        if set(value) == {REF_KEY}:
            ref = value[REF_KEY]
            sid, _, path = ref.partition(".")
            if sid not in results:
                raise InvalidArgument(f"binding {ref!r} has no result")
            return registry.select_path(results[sid], [p for p in path.split(".") if p])
        return {k: resolve_args(v, results) for k, v in value.items()}
    if isinstance(value, list):
        return [resolve_args(v, results) for v in value]
    return value


# ---------------------------------------------------------------------------
# Audit records and logs
# ---------------------------------------------------------------------------


@dataclass
class AuditRecord:
    seq: int
    step_id: str
    primitive: str
    category: str
    args: Any
    status: str  # ok | error
    result: Any
    error: Optional[Dict[str, Any]]
    result_digest: str
    pinned_now: str
    prev_digest: str
    digest: str = ""
    duration_ms: float = 0.0  # informational; not serialized, not chained

    def body(self) -> Dict[str, Any]:
        return {
            "type": "record",
            "seq": self.seq,
            "step_id": self.step_id,
            "primitive": self.primitive,
            "category": self.category,
            "args": self.args,
            "status": self.status,
            "result": self.result,
            "error": self.error,
            "result_digest": self.result_digest,
            "pinned_now": self.pinned_now,
            "prev_digest": self.prev_digest,
        }

    def to_dict(self) -> Dict[str, Any]:
        return {**self.body(), "digest": self.digest}


def chain_digest(prev_digest: str, body: Mapping[str, Any]) -> str:
    return hashlib.sha256(prev_digest.encode("ascii") + canonical.canonical_bytes(body)).hexdigest()


def outcome_digest(result: Any, error: Optional[Mapping[str, Any]]) -> str:
    return canonical.digest({"result": result, "error": error})


@dataclass
class AuditLog:
    header: Dict[str, Any]
    records: List[AuditRecord]

    def lines(self) -> List[bytes]:
        return [canonical.canonical_bytes(self.header)] + [canonical.canonical_bytes(r.to_dict()) for r in self.records]

    def to_bytes(self) -> bytes:
        return b"".join(line + b"\n" for line in self.lines())

    def __len__(self) -> int:
        return len(self.records)


@dataclass
class ExecutionResult:
    outputs: Dict[str, Any]
    results: Dict[str, Any]
    audit: AuditLog

    @property
    def final(self) -> Any:
        return self.audit.records[-1].result if self.audit.records else None


class PlanRun:
    """One sequential execution; iterate :meth:`stream` to get log lines as produced."""

    def __init__(self, plan: Plan, engine, pinned_now=None, candidate_policy=None):
        self.plan = plan
        instant = pinned_now if pinned_now is not None else plan.pinned_now
        self.engine = engine.pinned(instant)
        self.pinned_now = format_instant(self.engine.now_instant())
        self.policy = CandidatePolicy.parse(candidate_policy) if candidate_policy is not None else plan.candidate_policy
        self.header = {
            "type": "header",
            "schema_version": AUDIT_SCHEMA_VERSION,
            "hash_algorithm": HASH_ALGORITHM,
            "plan_id": plan.id,
            "plan_digest": plan.digest,
            "plan": plan.to_dict(),
            "store_digest": engine.store.digest,
            "pinned_now": self.pinned_now,
            "candidate_policy": self.policy.to_dict(),
        }
        self.records: List[AuditRecord] = []
        self.results: Dict[str, Any] = {}
        self.outputs: Dict[str, Any] = {}
        self.failure: Optional[StepFailed] = None

    def stream(self) -> Iterator[AuditRecord]:
        prev = self.plan.digest
        for seq, step in enumerate(execution_order(self.plan)):
            prim = registry.lookup(step.primitive)
            started = time.perf_counter()
            args: Any = None
            result: Any = None
            error = None
            try:
                args = resolve_args(step.args, self.results)
                result = run_step(self.engine, prim, args, self.policy)
            except LexGraphError as exc:
                error = exc.to_dict()
                result = None
            record = AuditRecord(
                seq=seq,
                step_id=step.id,
                primitive=step.primitive,
                category=prim.category,
                args=canonical.to_jsonable(args) if args is not None else None,
                status="ok" if error is None else "error",
                result=result,
                error=error,
                result_digest=outcome_digest(result, error),
                pinned_now=self.pinned_now,
                prev_digest=prev,
                duration_ms=round((time.perf_counter() - started) * 1000, 3),
            )
            record.digest = chain_digest(prev, record.body())
            prev = record.digest
            self.records.append(record)
            yield record
            if error is not None:
                cause = LexGraphError(error["message"], error["details"])
                cause.code = error["code"]
                self.failure = StepFailed(step.id, cause, self.log(), dict(self.outputs))
                return
            self.results[step.id] = result
            if step.bind_as:
                self.outputs[step.bind_as] = result

    def log(self) -> AuditLog:
        return AuditLog(self.header, list(self.records))


def run_step(engine, prim: registry.Primitive, args: Mapping[str, Any], policy: CandidatePolicy) -> Any:
    value = registry.invoke(engine, prim.name, args)
    if prim.resolver:
        return {"candidates": value, "selected": policy.select(value), "policy": policy.to_dict()}
    return value


def execute_plan(plan: Plan, engine, pinned_now=None, candidate_policy=None) -> ExecutionResult:
    """Run every step; on failure raise StepFailed carrying the partial audit log."""
    run = PlanRun(plan, engine, pinned_now, candidate_policy)
    for _ in run.stream():
        pass
    if run.failure is not None:
        raise run.failure
    return ExecutionResult(run.outputs, run.results, run.log())


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


@dataclass
class StepVerdict:
    step_id: Optional[str]
    status: str
    reason: str = ""

    def to_dict(self):
        return {"step_id": self.step_id, "status": self.status, "reason": self.reason}


@dataclass
class VerificationReport:
    issues: List[str]
    steps: List[StepVerdict]

    @property
    def ok(self) -> bool:
        return not self.issues and all(s.status == VERIFIED for s in self.steps)

    def first_failure(self) -> Optional[StepVerdict]:
        return next((s for s in self.steps if s.status != VERIFIED), None)

    def to_dict(self):
        return {"ok": self.ok, "issues": list(self.issues), "steps": [s.to_dict() for s in self.steps]}


def _parse_line(line: bytes) -> Tuple[Optional[dict], str]:
    try:
        obj = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        return None, f"unparseable line ({exc.__class__.__name__})"
    if not isinstance(obj, dict):
        return None, "line is not an object"
    try:
        if canonical.canonical_bytes(obj) != line:
            return None, "line is not in canonical form"
    except (TypeError, ValueError):
        return None, "line holds non-canonical values"
    return obj, ""


_RECORD_KEYS = {
    "type", "seq", "step_id", "primitive", "category", "args", "status", "result", "error",
    "result_digest", "pinned_now", "prev_digest", "digest",
}
_HEADER_KEYS = {
    "type", "schema_version", "hash_algorithm", "plan_id", "plan_digest", "plan", "store_digest",
    "pinned_now", "candidate_policy",
}


def verify_audit_log(plan: Optional[Plan], audit: Union[AuditLog, bytes], store, engine=None) -> VerificationReport:
    """Check chain integrity, then replay deterministic steps against ``store``.

    ``plan`` may be None, in which case the plan embedded in the log header is
    used (after checking it against the header's plan digest).
    """
    from .engine import Engine

    raw = audit.to_bytes() if isinstance(audit, AuditLog) else bytes(audit)
    issues: List[str] = []
    verdicts: List[StepVerdict] = []
    if not raw.endswith(b"\n"):
        issues.append("log does not end with a newline")
    lines = raw.split(b"\n")
    if lines and lines[-1] == b"":
        lines = lines[:-1]
    if not lines:
        return VerificationReport(["empty log"], [])

    header, why = _parse_line(lines[0])
    if header is None or header.get("type") != "header" or set(header) != _HEADER_KEYS:
        return VerificationReport(
            [f"bad header: {why or 'unexpected fields'}"],
            [StepVerdict(None, CHAIN_BROKEN, "header unreadable") for _ in lines[1:]],
        )
    if header["schema_version"] != AUDIT_SCHEMA_VERSION:
        issues.append(f"unsupported audit schema_version {header['schema_version']!r}")
    if header["hash_algorithm"] != HASH_ALGORITHM:
        issues.append(f"unsupported hash algorithm {header['hash_algorithm']!r}")
    if canonical.digest(header["plan"]) != header["plan_digest"]:
        issues.append("embedded plan does not match plan_digest")
    if plan is None:
        try:
            plan = parse_plan(header["plan"])
        except LexGraphError as exc:
            issues.append(f"embedded plan invalid: {exc.message}")
            return VerificationReport(issues, [StepVerdict(None, CHAIN_BROKEN, "no plan") for _ in lines[1:]])
    elif plan.digest != header["plan_digest"]:
        issues.append("plan_digest does not match the supplied plan")
    if plan.id != header["plan_id"]:
        issues.append("plan_id does not match the plan")
    if header["store_digest"] != store.digest:
        issues.append("store_digest does not match the supplied store")
    try:
        policy = CandidatePolicy.parse(header["candidate_policy"])
        pinned = format_instant(parse_instant(header["pinned_now"]))
        if pinned != header["pinned_now"]:
            raise InvalidArgument("pinned_now not normalized")
    except LexGraphError as exc:
        issues.append(f"bad header option: {exc.message}")
        policy, pinned = CandidatePolicy(), None

    base_engine = engine if engine is not None else Engine(store)
    replay_engine = base_engine.pinned(pinned) if pinned else base_engine
    order = execution_order(plan)
    expected_prev = plan.digest
    broken = False
    results: Dict[str, Any] = {}
    last_status = None
    for idx, line in enumerate(lines[1:]):
        rec, why = _parse_line(line)
        step = order[idx] if idx < len(order) else None
        sid = step.id if step else (rec.get("step_id") if isinstance(rec, dict) else None)
        if broken:
            verdicts.append(StepVerdict(sid, CHAIN_BROKEN, "follows a broken link"))
            continue
        reason = ""
        if rec is None:
            reason = why
        elif set(rec) != _RECORD_KEYS or rec.get("type") != "record":
            reason = "unexpected record fields"
        elif step is None:
            reason = "more records than plan steps"
        elif rec["prev_digest"] != expected_prev:
            reason = "prev_digest does not chain"
        elif chain_digest(expected_prev, {k: v for k, v in rec.items() if k != "digest"}) != rec["digest"]:
            reason = "record digest mismatch"
        elif outcome_digest(rec["result"], rec["error"]) != rec["result_digest"]:
            reason = "result_digest mismatch"
        elif rec["seq"] != idx or rec["step_id"] != step.id or rec["primitive"] != step.primitive:
            reason = "record out of plan order"
        elif rec["pinned_now"] != header["pinned_now"]:
            reason = "pinned_now differs from header"
        if reason:
            broken = True
            verdicts.append(StepVerdict(sid, CHAIN_BROKEN, reason))
            continue
        expected_prev = rec["digest"]
        last_status = rec["status"]
        verdicts.append(_replay(step, rec, results, replay_engine, policy))
        if rec["status"] == "ok":
            results[step.id] = rec["result"]
        elif idx + 2 < len(lines):
            issues.append("records continue after a failed step")
    n_records = len(lines) - 1
    if not broken and last_status != "error" and n_records < len(order):
        issues.append(f"log is incomplete: {n_records} of {len(order)} steps recorded")
    return VerificationReport(issues, verdicts)


def _replay(step: PlanStep, rec: Mapping[str, Any], results: Mapping[str, Any], engine, policy) -> StepVerdict:
    try:
        expected_args = resolve_args(step.args, results)
    except LexGraphError:
        expected_args = None
    if expected_args is None:
        if rec["status"] == "error" and rec["args"] is None:
            return StepVerdict(step.id, VERIFIED, "binding failure reproduced")
        return StepVerdict(step.id, REPLAY_MISMATCH, "arguments cannot be re-derived")
    if expected_args is not None and canonical.to_jsonable(expected_args) != rec["args"]:
        return StepVerdict(step.id, REPLAY_MISMATCH, "logged arguments differ from plan bindings")
    prim = registry.lookup(step.primitive)
    if prim.category == registry.DISCOVERY:
        if prim.resolver and rec["status"] == "ok":
            try:
                if policy.select(rec["result"]["candidates"]) != rec["result"]["selected"]:
                    return StepVerdict(step.id, REPLAY_MISMATCH, "selection does not follow the policy")
            except (LexGraphError, KeyError, TypeError):
                return StepVerdict(step.id, REPLAY_MISMATCH, "resolver result malformed")
        return StepVerdict(step.id, VERIFIED, "chain and argument provenance")
    try:
        result, error = run_step(engine, prim, rec["args"] or {}, policy), None
    except LexGraphError as exc:
        result, error = None, exc.to_dict()
    if outcome_digest(result, error) != rec["result_digest"]:
        return StepVerdict(step.id, REPLAY_MISMATCH, "replayed result differs")
    return StepVerdict(step.id, VERIFIED, "replayed")

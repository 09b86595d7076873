"""Command line: validate, snapshot, query, plan run/verify, serve.

Exit codes: 0 success, 1 domain failure (violations, primitive error, failed
verification), 2 unusable input (missing or malformed files, bad flags).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from . import canonical, registry
from .engine import Engine
from .errors import LexGraphError, SchemaViolation
from .fixtures import fixture_path
from .model import merge_corpora, read_corpus, validate_corpus
from .plan import StepFailed, execute_plan, parse_plan, verify_audit_log
from .store import GraphStore

CONFIG_ENV = "LEXGRAPH_CONFIG"
CONFIG_KEYS = {"corpus", "snapshot", "scorer", "weights", "now", "output"}

# Short flags accepted by ``query`` next to the exact parameter names.
FLAG_ALIASES = {"item": "item_id", "at": "timestamp", "version": "version_id", "theme": "theme_id"}


class UsageError(Exception):
    """Input the command cannot work with; exit status 2."""


def _corpus_dir(path: str) -> Path:
    p = Path(path)
    if not p.exists() and fixture_path(path).is_dir():
        return fixture_path(path)
    return p


def _load_config(path: Optional[str]) -> Dict[str, Any]:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict) or set(cfg) - CONFIG_KEYS:
        raise UsageError(f"config {path}: expected an object with keys among {sorted(CONFIG_KEYS)}")
    return cfg


def _settings(args) -> Dict[str, Any]:
    cfg = _load_config(args.config)
    corpus = args.corpus or cfg.get("corpus") or []
    if isinstance(corpus, str):
        corpus = [corpus]
    weights = args.weights or cfg.get("weights")
    if isinstance(weights, str):
        try:
            weights = [float(w) for w in weights.split(",")]
        except ValueError:
            raise UsageError(f"--weights expects two comma-separated numbers, got {weights!r}") from None
    if weights is not None and len(weights) != 2:
        raise UsageError("weights must have two values (lexical, semantic)")
    return {
        "corpus": list(corpus),
        "snapshot": args.snapshot or cfg.get("snapshot"),
        "scorer": args.scorer or cfg.get("scorer"),
        "weights": tuple(weights) if weights is not None else (0.5, 0.5),
        "now": args.now or cfg.get("now"),
        "output": args.output or cfg.get("output") or "canonical",
    }


def _load_store(settings) -> GraphStore:
    try:
        if settings["snapshot"]:
            return GraphStore.load_snapshot(settings["snapshot"])
        if not settings["corpus"]:
            raise UsageError("no corpus or snapshot given (use --corpus, --snapshot or a config file)")
        return GraphStore.load(merge_corpora([read_corpus(_corpus_dir(p)) for p in settings["corpus"]]))
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _engine(settings) -> Engine:
    try:
        return Engine(_load_store(settings), settings["scorer"], settings["weights"], settings["now"])
    except KeyError as exc:
        raise UsageError(f"unknown scorer {exc}") from None


def _emit(value: Any, mode: str) -> None:
    if mode == "human":
        print(json.dumps(value, ensure_ascii=False, indent=2, sort_keys=True))
    else:
        sys.stdout.buffer.write(canonical.canonical_bytes(value) + b"\n")
        sys.stdout.flush()


def _fail(exc: LexGraphError) -> int:
    sys.stderr.write(canonical.dumps({"error": exc.to_dict()}) + "\n")
    return 1


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        corpus = read_corpus(_corpus_dir(args.path))
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    except LexGraphError as exc:
        raise UsageError(f"{exc.code}: {exc.message}") from None
    violations = validate_corpus(corpus)
    for v in violations:
        print(f"{v.invariant}\t{','.join(v.ids)}\t{v.message}")
    counts = corpus.counts()
    summary = " ".join(f"{k}={n}" for k, n in counts.items())
    sys.stderr.write(f"{len(violations)} violation(s); {summary}\n")
    return 1 if violations else 0


def cmd_snapshot(args) -> int:
    settings = _settings(args)
    settings["snapshot"] = None
    try:
        store = _load_store(settings)
    except LexGraphError as exc:
        return _fail(exc)
    store.save_snapshot(args.out)
    sys.stderr.write(f"wrote {args.out} (store digest {store.digest})\n")
    return 0


def _coerce_flag(param: registry.Param, raw: str) -> Any:
    if param.type in ("string", "id", "date", "enum"):
        return raw
    if param.type in ("ids", "strings") and not raw.lstrip().startswith("["):
        return [s for s in raw.split(",") if s]
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        raise UsageError(f"--{param.name} expects JSON for type {param.type}, got {raw!r}") from None


def parse_query_flags(prim: registry.Primitive, tokens: Sequence[str]) -> Dict[str, Any]:
    """Turn ``--param value`` pairs into primitive arguments (``--args`` takes a JSON object)."""
    out: Dict[str, Any] = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise UsageError(f"unexpected argument {tok!r}")
        name, eq, value = tok[2:].partition("=")
        if not eq:
            if i + 1 >= len(tokens):
                raise UsageError(f"{tok} needs a value")
            value = tokens[i + 1]
            i += 1
        i += 1
        if name == "args":
            try:
                extra = json.loads(value)
            except json.JSONDecodeError as exc:
                raise UsageError(f"--args is not JSON: {exc}") from None
            if not isinstance(extra, dict):
                raise UsageError("--args must be a JSON object")
            out.update(extra)
            continue
        key = name.replace("-", "_")
        param = prim.param(key) or prim.param(FLAG_ALIASES.get(key, ""))
        if param is None:
            raise UsageError(f"{prim.name} has no parameter {name!r}; known: {[p.name for p in prim.params]}")
        out[param.name] = _coerce_flag(param, value)
    return out


def cmd_query(args, rest: List[str]) -> int:
    try:
        prim = registry.lookup(args.primitive)
    except LexGraphError as exc:
        return _fail(exc)
    call_args = parse_query_flags(prim, rest)
    settings = _settings(args)
    try:
        engine = _engine(settings).pinned(settings["now"])
        value = registry.invoke(engine, prim.name, call_args)
    except LexGraphError as exc:
        return _fail(exc)
    _emit(value, settings["output"])
    return 0


def _read_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def cmd_plan_run(args) -> int:
    settings = _settings(args)
    try:
        plan = parse_plan(_read_json(args.plan))
        engine = _engine(settings)
    except LexGraphError as exc:
        return _fail(exc)
    policy = json.loads(args.policy) if args.policy else None
    out = Path(args.out) if args.out else Path(args.plan).with_suffix("").with_suffix(".audit")
    try:
        result = execute_plan(plan, engine, settings["now"], policy)
    except StepFailed as exc:
        out.write_bytes(exc.audit.to_bytes())
        sys.stderr.write(f"step {exc.step_id} failed; partial audit written to {out}\n")
        return _fail(exc)
    out.write_bytes(result.audit.to_bytes())
    sys.stderr.write(f"{len(result.audit)} record(s) written to {out}\n")
    _emit({"outputs": result.outputs, "final": result.final}, settings["output"])
    return 0


def cmd_plan_verify(args) -> int:
    settings = _settings(args)
    try:
        raw = Path(args.audit).read_bytes()
    except OSError as exc:
        raise UsageError(str(exc)) from None
    try:
        plan = parse_plan(_read_json(args.plan)) if args.plan else None
        engine = _engine(settings)
    except LexGraphError as exc:
        return _fail(exc)
    report = verify_audit_log(plan, raw, engine.store, engine)
    _emit(report.to_dict(), settings["output"])
    if report.ok:
        return 0
    bad = report.first_failure()
    if bad is not None:
        sys.stderr.write(f"step {bad.step_id}: {bad.status}: {bad.reason}\n")
    for issue in report.issues:
        sys.stderr.write(f"{issue}\n")
    return 1


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    settings = _settings(args)
    try:
        engine = _engine(settings)
    except LexGraphError as exc:
        return _fail(exc)
    uvicorn.run(create_app(engine, args.max_inflight), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--corpus", action="append", help="corpus directory (repeatable) or bundled fixture name")
    common.add_argument("--snapshot", help="store snapshot file")
    common.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV})")
    common.add_argument("--scorer", help="semantic scorer name")
    common.add_argument("--weights", help="fusion weights 'lexical,semantic'")
    common.add_argument("--now", help="pinned instant for defaulted timestamps")
    common.add_argument("--output", choices=("canonical", "human"))

    parser = argparse.ArgumentParser(prog="lexgraph", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a corpus against every model invariant")
    p.add_argument("path")

    p = sub.add_parser("snapshot", help="write a store snapshot", parents=[common])
    p.add_argument("action", choices=("create",))
    p.add_argument("--out", required=True)

    p = sub.add_parser("query", help="call one primitive; remaining --flags are its parameters", parents=[common])
    p.add_argument("primitive")

    p = sub.add_parser("plan", help="run or verify a plan")
    plan_sub = p.add_subparsers(dest="plan_command", required=True)
    r = plan_sub.add_parser("run", parents=[common])
    r.add_argument("plan")
    r.add_argument("--out", help="audit log path (default: PLAN with .audit suffix)")
    r.add_argument("--policy", help="candidate policy JSON overriding the plan's")
    v = plan_sub.add_parser("verify", parents=[common])
    v.add_argument("audit")
    v.add_argument("--plan", help="expected plan file; defaults to the plan embedded in the log")

    p = sub.add_parser("serve", help="run the HTTP service", parents=[common])
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--max-inflight", type=int, default=4)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args, rest = parser.parse_known_args(argv)
    try:
        if args.command == "query":
            return cmd_query(args, rest)
        if rest:
            parser.error(f"unrecognized arguments: {' '.join(rest)}")
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "snapshot":
            return cmd_snapshot(args)
        if args.command == "plan":
            return cmd_plan_run(args) if args.plan_command == "run" else cmd_plan_verify(args)
        return cmd_serve(args)
    except UsageError as exc:
        sys.stderr.write(f"lexgraph: {exc}\n")
        return 2
    except SchemaViolation as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())

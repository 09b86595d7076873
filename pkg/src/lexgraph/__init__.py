"""Temporal graph store and retrieval engine for versioned legal corpora."""

from .engine import Engine
from .errors import LexGraphError
from .fixtures import fixture_path, plan_path
from .model import Corpus, read_corpus, validate_corpus, write_corpus
from .plan import execute_plan, parse_plan, verify_audit_log
from .store import GraphStore, load, load_snapshot

__all__ = [
    "Corpus",
    "Engine",
    "GraphStore",
    "LexGraphError",
    "execute_plan",
    "fixture_path",
    "load",
    "load_snapshot",
    "parse_plan",
    "plan_path",
    "read_corpus",
    "validate_corpus",
    "verify_audit_log",
    "write_corpus",
]

__version__ = "0.1.0"

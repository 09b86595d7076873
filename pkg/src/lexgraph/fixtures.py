"""Paths to the bundled sample corpus and use-case plans."""

from __future__ import annotations

from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent / "data"


def fixture_path(name: str = "cf88-mini") -> Path:
    return DATA_DIR / name


def plan_path(name: str) -> Path:
    return DATA_DIR / "plans" / f"{name}.plan.json"

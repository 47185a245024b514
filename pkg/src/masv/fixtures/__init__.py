"""Bundled case-study specs."""

from pathlib import Path

FIXTURE_DIR = Path(__file__).parent
FIXTURE_NAMES = ["tower", "coffee", "hazard", "grid"]


def fixture_path(name: str) -> Path:
    return FIXTURE_DIR / f"{name}.masv"


def fixture_source(name: str) -> str:
    return fixture_path(name).read_text(encoding="utf-8")

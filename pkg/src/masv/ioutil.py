"""Canonical JSON and NDJSON helpers; all artifacts are byte-deterministic."""

from __future__ import annotations

import json
from typing import Iterable


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def pretty_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1)


def ndjson_lines(records: Iterable[dict]) -> str:
    return "".join(canonical_json(r) + "\n" for r in records)


def read_ndjson(text: str) -> list[dict]:
    records = []
    for i, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {i}: invalid JSON record: {exc}") from exc
    return records

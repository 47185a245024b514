"""Scripted sensors and the data-processing stand-in.

A scenario is an ordered list of records delivered at scheduled steps.
Raw records ({"t","agent","channel","payload"}) pass through a declarative
conversion table that maps payloads to ground-predicate updates; ground
records ({"t","agent","kind","op","atom"}) are delivered as-is.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .mental import World
from .runtime import Feeder, NodeState, Trace, make_node, run_loop

_NUMERIC_OPS = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


@dataclass(frozen=True)
class ConversionRule:
    """channel + payload predicate -> ground update template.

    Numeric comparators compare the payload against `value`; the "is"
    comparator matches symbolic payloads exactly. `{payload}` inside the
    atom template is replaced by the payload text.
    """

    channel: str
    comparator: str
    value: object
    kind: str  # "belief" | "goal"
    op: str  # "insert" | "delete"
    atom: str

    def matches(self, payload) -> bool:
        if self.comparator == "is":
            return str(payload) == str(self.value)
        op = _NUMERIC_OPS.get(self.comparator)
        if op is None:
            return False
        try:
            return op(float(payload), float(self.value))
        except (TypeError, ValueError):
            return False

    def render_atom(self, payload) -> str:
        return self.atom.replace("{payload}", str(payload))


def load_conversion_rules(data) -> list[ConversionRule]:
    """Parse the conversion table from decoded JSON (a list of rule objects
    or {"rules": [...]})."""
    entries = data.get("rules", []) if isinstance(data, dict) else data
    rules = []
    for i, entry in enumerate(entries):
        try:
            rules.append(
                ConversionRule(
                    channel=entry["channel"],
                    comparator=entry.get("comparator", "is"),
                    value=entry.get("value", entry.get("threshold")),
                    kind=entry.get("kind", "belief"),
                    op=entry["op"],
                    atom=entry["atom"],
                )
            )
        except KeyError as exc:
            raise ValueError(f"conversion rule {i}: missing field {exc}") from exc
    return rules


def data_processing(
    record: dict, rules: list[ConversionRule]
) -> tuple[Optional[dict], Optional[str]]:
    """Convert one raw record to a ground update via the first matching
    rule; first result is None on rejection, second carries the reason."""
    channel = record.get("channel")
    payload = record.get("payload")
    channel_rules = [r for r in rules if r.channel == channel]
    if not channel_rules:
        return None, f"unknown channel {channel!r}"
    for rule in channel_rules:
        if rule.matches(payload):
            return (
                {
                    "agent": record.get("agent"),
                    "kind": rule.kind,
                    "op": rule.op,
                    "atom": rule.render_atom(payload),
                },
                None,
            )
    return None, f"payload {payload!r} matches no rule for channel {channel!r}"


def load_scenario(records: list[dict]) -> list[dict]:
    """Validate scheduling: deliver-at steps must be nondecreasing."""
    last = None
    for i, record in enumerate(records):
        t = record.get("t")
        if not isinstance(t, int) or t < 0:
            raise ValueError(f"scenario record {i}: 't' must be a nonnegative integer")
        if last is not None and t < last:
            raise ValueError(
                f"scenario record {i}: deliver-at step {t} decreases (previous {last})"
            )
        last = t
    return list(records)


class ScenarioFeeder(Feeder):
    """Delivers scenario records exactly at their scheduled steps, in
    record order; raw records are converted on delivery."""

    def __init__(self, records: list[dict], rules: Optional[list[ConversionRule]] = None):
        self.records = load_scenario(records)
        self.rules = rules
        self.pos = 0

    def pending(self) -> bool:
        return self.pos < len(self.records)

    def take(self, step: int) -> list[dict]:
        deliveries = []
        while self.pos < len(self.records) and self.records[self.pos].get("t", 0) <= step:
            record = self.records[self.pos]
            self.pos += 1
            if "channel" in record:
                if self.rules is None:
                    deliveries.append(
                        {"record": record, "update": None,
                         "error": "raw sensor record but no conversion table loaded"}
                    )
                    continue
                update, error = data_processing(record, self.rules)
                deliveries.append({"record": record, "update": update, "error": error})
            else:
                update = {k: record.get(k) for k in ("agent", "kind", "op", "atom")}
                deliveries.append({"record": record, "update": update, "error": None})
        return deliveries


def run_scenario(
    world: World,
    scenario: list[dict],
    seed: int = 0,
    *,
    conversions: Optional[list[ConversionRule]] = None,
    max_steps: int = 10_000,
    quiesce: int = 3,
    wall_ms: Optional[int] = None,
    trace_sink=None,
    action_sink=None,
) -> tuple[NodeState, Trace]:
    """Drive a node with scheduled sensor deliveries; an empty scenario is
    exactly run_loop."""
    node = make_node(world, seed)
    feeder = ScenarioFeeder(scenario, conversions)
    return run_loop(
        node,
        max_steps=max_steps,
        quiesce=quiesce,
        wall_ms=wall_ms,
        trace_sink=trace_sink,
        action_sink=action_sink,
        feeder=feeder,
    )

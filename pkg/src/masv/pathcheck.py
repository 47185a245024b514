"""Path-membership checking: is a committed runtime trajectory a path of
the statically generated transition system?

Works purely on serialized documents (ts.json contents and trace report
dicts), so it is independent of the engine that produced either side.
"""

from __future__ import annotations

from .ioutil import canonical_json


class PathError(AssertionError):
    pass


def verify_trace_path(ts: dict, reports: list[dict]) -> list[int]:
    """Verify every committed step follows a transition of `ts` whose
    decision matches and whose sampled target state matches; returns the
    visited state id sequence. Only valid for runs without sensor input."""
    state_ids = {canonical_json(doc): i for i, doc in enumerate(ts["states"])}
    by_source: dict[int, list[dict]] = {}
    for t in ts["transitions"]:
        by_source.setdefault(t["source"], []).append(t)

    current = ts["initial"]
    visited = [current]
    for report in reports:
        if report.get("drained"):
            raise PathError(
                f"step {report['step']}: trace has sensor input; path membership "
                f"only applies to sensor-free runs"
            )
        state_key = canonical_json(report["state"])
        target = state_ids.get(state_key)
        if target is None:
            raise PathError(
                f"step {report['step']}: post-step state is not a state of the "
                f"transition system"
            )
        if not report["committed"]:
            if target != current:
                raise PathError(
                    f"step {report['step']}: non-committing step changed state "
                    f"{current} -> {target}"
                )
            continue
        chosen = report["chosen"]
        match = None
        for t in by_source.get(current, []):
            if t["decision"] == chosen:
                match = t
                break
        if match is None:
            raise PathError(
                f"step {report['step']}: no transition from state {current} "
                f"with decision {chosen!r}"
            )
        if not any(b["target"] == target for b in match["branches"]):
            raise PathError(
                f"step {report['step']}: sampled target {target} is not a "
                f"branch of the matched transition from {current}"
            )
        current = target
        visited.append(current)
    return visited
